#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace rgbd {

// Rounding convention used across the library: round half away from zero.
inline long round_half_away(double v) { return std::lround(v); }

inline std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Axis-aligned square image window; (x, y) is the top-left pixel.
struct Box {
  int x = 0;
  int y = 0;
  int side = 0;

  bool operator==(const Box&) const = default;
};

}  // namespace rgbd

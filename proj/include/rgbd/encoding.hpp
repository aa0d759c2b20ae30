#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "rgbd/depth_image.hpp"

namespace rgbd {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major RGB triples

  RgbImage() = default;
  RgbImage(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, 0) {}

  const std::uint8_t* px(int x, int y) const {
    return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
  std::uint8_t* px(int x, int y) {
    return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
};

// The four three-channel depth encodings: depth-gray, contrast-enhanced
// depth-gray, color-depth, contrast-enhanced color-depth.
enum class EncodingScheme { DG, CE, CD, CECD };

std::optional<EncodingScheme> parse_scheme(std::string_view name);
std::string_view scheme_name(EncodingScheme scheme);

// Reversed jet colormap sample for t in [0, 1]: t = 0 renders dark red
// (near), t = 1 dark blue (far). Channel c at u = 1 - t is
// clamp(1.5 - |4u - a_c|, 0, 1) with a = 3, 2, 1 for R, G, B; this exact
// formula is normative for the golden tests. Out-of-range t is rejected.
std::array<std::uint8_t, 3> reversed_jet(double t);

// Full encoding from a depth frame (per-frame min-max normalization).
// Invalid pixels are (0,0,0) in every scheme.
RgbImage encode(const DepthImage& img, EncodingScheme scheme);

// Applies the scheme's equalization/colormap stages to an already
// normalized gray image with its validity mask. Lets callers substitute a
// fixed-range normalization.
RgbImage encode_gray(const GrayImage& gray,
                     std::span<const std::uint8_t> valid,
                     EncodingScheme scheme);

namespace serial {
RgbImage encode(const DepthImage& img, EncodingScheme scheme);
RgbImage encode_gray(const GrayImage& gray,
                     std::span<const std::uint8_t> valid,
                     EncodingScheme scheme);
}

}  // namespace rgbd

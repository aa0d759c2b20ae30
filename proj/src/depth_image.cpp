#include "rgbd/depth_image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rgbd {

namespace {

// Rounded mean of valid neighbors in the (2r+1)^2 window, or 0 when none.
float filled_value(const DepthImage& in, int x, int y, int r) {
  double sum = 0.0;
  int count = 0;
  int y0 = std::max(0, y - r), y1 = std::min(in.height - 1, y + r);
  int x0 = std::max(0, x - r), x1 = std::min(in.width - 1, x + r);
  for (int yy = y0; yy <= y1; ++yy)
    for (int xx = x0; xx <= x1; ++xx) {
      float d = in.at(xx, yy);
      if (d > 0.0f) {
        sum += d;
        ++count;
      }
    }
  if (count == 0) return 0.0f;
  return static_cast<float>(round_half_away(sum / count));
}

struct Range {
  float lo = 0.0f;
  float hi = 0.0f;
  bool any = false;
};

std::uint8_t scale_to_u8(float d, const Range& r) {
  if (d <= 0.0f || !r.any || r.hi <= r.lo) return 0;
  double t = 255.0 * (std::clamp(d, r.lo, r.hi) - r.lo) / (r.hi - r.lo);
  return to_u8(t);
}

// Per-bin output map for CDF equalization. Returns false when the input is
// degenerate (no valid pixels or a single occupied bin) and must pass
// through unchanged.
bool build_equalize_map(const long hist[256], std::uint8_t map[256]) {
  long n_valid = 0;
  for (int b = 0; b < 256; ++b) n_valid += hist[b];
  if (n_valid == 0) return false;

  long cdf = 0, cdf_min = 0;
  bool seen = false;
  long running[256];
  for (int b = 0; b < 256; ++b) {
    cdf += hist[b];
    running[b] = cdf;
    if (!seen && cdf > 0) {
      cdf_min = cdf;
      seen = true;
    }
  }
  long denom = n_valid - cdf_min;
  if (denom <= 0) return false;  // single occupied bin

  for (int b = 0; b < 256; ++b)
    map[b] = to_u8(255.0 * static_cast<double>(running[b] - cdf_min) /
                   static_cast<double>(denom));
  return true;
}

}  // namespace

std::uint32_t ValidityIntegral::count(const Box& box) const {
  int x0 = std::clamp(box.x, 0, width_);
  int y0 = std::clamp(box.y, 0, height_);
  int x1 = std::clamp(box.x + box.side, 0, width_);
  int y1 = std::clamp(box.y + box.side, 0, height_);
  if (x1 <= x0 || y1 <= y0) return 0;
  return sum(x1, y1) - sum(x0, y1) - sum(x1, y0) + sum(x0, y0);
}

long ValidityIntegral::clipped_area(const Box& box) const {
  long x0 = std::clamp(box.x, 0, width_);
  long y0 = std::clamp(box.y, 0, height_);
  long x1 = std::clamp(box.x + box.side, 0, width_);
  long y1 = std::clamp(box.y + box.side, 0, height_);
  return std::max(0L, x1 - x0) * std::max(0L, y1 - y0);
}

DepthImage fill_holes(const DepthImage& img, int kernel_radius,
                      int max_passes) {
  if (kernel_radius < 1)
    throw std::invalid_argument("fill_holes: kernel_radius must be >= 1");
  DepthImage in = img;
  DepthImage out = img;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
#pragma omp parallel for schedule(static) reduction(|| : changed)
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        if (in.at(x, y) > 0.0f) continue;
        float v = filled_value(in, x, y, kernel_radius);
        if (v > 0.0f) {
          out.at(x, y) = v;
          changed = true;
        }
      }
    if (!changed) break;
    in = out;
  }
  return out;
}

GrayImage normalize(const DepthImage& img) {
  float lo = std::numeric_limits<float>::max();
  float hi = std::numeric_limits<float>::lowest();
#pragma omp parallel for schedule(static) reduction(min : lo) reduction(max : hi)
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    float d = img.data[i];
    if (d > 0.0f) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  Range r{lo, hi, hi >= lo};

  GrayImage out(img.width, img.height);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = scale_to_u8(img.data[i], r);
  return out;
}

GrayImage normalize_fixed(const DepthImage& img, float min_mm, float max_mm) {
  if (!(min_mm < max_mm))
    throw std::invalid_argument("normalize_fixed: empty range");
  Range r{min_mm, max_mm, true};
  GrayImage out(img.width, img.height);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = scale_to_u8(img.data[i], r);
  return out;
}

std::vector<std::uint8_t> validity_mask(const DepthImage& img) {
  std::vector<std::uint8_t> mask(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i)
    mask[i] = img.data[i] > 0.0f ? 1 : 0;
  return mask;
}

GrayImage equalize(const GrayImage& img, std::span<const std::uint8_t> valid) {
  if (valid.size() != img.data.size())
    throw std::invalid_argument("equalize: mask size mismatch");

  long hist[256] = {0};
#pragma omp parallel for schedule(static) reduction(+ : hist[:256])
  for (std::size_t i = 0; i < img.data.size(); ++i)
    if (valid[i]) ++hist[img.data[i]];

  std::uint8_t map[256];
  bool mapped = build_equalize_map(hist, map);

  GrayImage out(img.width, img.height);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (!valid[i])
      out.data[i] = 0;
    else
      out.data[i] = mapped ? map[img.data[i]] : img.data[i];
  }
  return out;
}

ValidityIntegral build_validity_integral(const DepthImage& img) {
  ValidityIntegral vi(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    std::uint32_t row = 0;
    for (int x = 0; x < img.width; ++x) {
      row += img.at(x, y) > 0.0f ? 1u : 0u;
      vi.sum(x + 1, y + 1) = vi.sum(x + 1, y) + row;
    }
  }
  return vi;
}

double valid_fraction(const ValidityIntegral& vi, const Box& box) {
  long area = vi.clipped_area(box);
  if (area <= 0)
    throw std::invalid_argument("valid_fraction: box clips to zero area");
  return static_cast<double>(vi.count(box)) / static_cast<double>(area);
}

// Serial reference implementations (plain loops, no OpenMP); kept for the
// consistency tests and as the benchmark baseline.
namespace serial {

DepthImage fill_holes(const DepthImage& img, int kernel_radius,
                      int max_passes) {
  if (kernel_radius < 1)
    throw std::invalid_argument("fill_holes: kernel_radius must be >= 1");
  DepthImage in = img;
  DepthImage out = img;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        if (in.at(x, y) > 0.0f) continue;
        float v = filled_value(in, x, y, kernel_radius);
        if (v > 0.0f) {
          out.at(x, y) = v;
          changed = true;
        }
      }
    if (!changed) break;
    in = out;
  }
  return out;
}

GrayImage normalize(const DepthImage& img) {
  Range r;
  r.lo = std::numeric_limits<float>::max();
  r.hi = std::numeric_limits<float>::lowest();
  for (float d : img.data)
    if (d > 0.0f) {
      r.lo = std::min(r.lo, d);
      r.hi = std::max(r.hi, d);
    }
  r.any = r.hi >= r.lo;

  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = scale_to_u8(img.data[i], r);
  return out;
}

GrayImage equalize(const GrayImage& img, std::span<const std::uint8_t> valid) {
  if (valid.size() != img.data.size())
    throw std::invalid_argument("equalize: mask size mismatch");

  long hist[256] = {0};
  for (std::size_t i = 0; i < img.data.size(); ++i)
    if (valid[i]) ++hist[img.data[i]];

  std::uint8_t map[256];
  bool mapped = build_equalize_map(hist, map);

  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (!valid[i])
      out.data[i] = 0;
    else
      out.data[i] = mapped ? map[img.data[i]] : img.data[i];
  }
  return out;
}

}  // namespace serial

}  // namespace rgbd

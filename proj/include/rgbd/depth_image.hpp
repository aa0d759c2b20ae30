#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rgbd/common.hpp"

namespace rgbd {

// Depth raster in millimeters; 0 marks a pixel with no depth reading.
// Stored as float so synthetic scenes keep sub-millimeter precision;
// file I/O quantizes to 16 bits.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major, width * height

  DepthImage() = default;
  DepthImage(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0f) {}

  float at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  bool valid(int x, int y) const { return at(x, y) > 0.0f; }
  std::size_t pixels() const { return data.size(); }
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

// Summed-area table of the validity mask. sum(i, j) counts valid pixels in
// the rectangle [0, i) x [0, j); the table is one row and column larger
// than the image, with zero first row/column.
class ValidityIntegral {
 public:
  ValidityIntegral() = default;
  ValidityIntegral(int w, int h)
      : width_(w),
        height_(h),
        sum_(static_cast<std::size_t>(w + 1) * (h + 1), 0) {}

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint32_t sum(int x, int y) const {
    return sum_[static_cast<std::size_t>(y) * (width_ + 1) + x];
  }
  std::uint32_t& sum(int x, int y) {
    return sum_[static_cast<std::size_t>(y) * (width_ + 1) + x];
  }

  // Count of valid pixels inside the box clipped to the image (4 lookups).
  std::uint32_t count(const Box& box) const;
  // Pixel area of the box after clipping to the image.
  long clipped_area(const Box& box) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> sum_;
};

// Mean-filter hole filling: every invalid pixel with at least one valid
// neighbor in its (2r+1)^2 window becomes the rounded mean of those
// neighbors. Repeats until nothing changes or max_passes is reached.
// Valid pixels are never modified.
DepthImage fill_holes(const DepthImage& img, int kernel_radius = 2,
                      int max_passes = 3);

// Per-frame min-max stretch of valid depths to 0..255; invalid pixels map
// to 0, as does everything when the frame has no depth range.
GrayImage normalize(const DepthImage& img);

// Fixed-range variant for temporal stability across a sequence; depths are
// clamped to [min_mm, max_mm] before the stretch.
GrayImage normalize_fixed(const DepthImage& img, float min_mm, float max_mm);

std::vector<std::uint8_t> validity_mask(const DepthImage& img);

// 256-bin CDF histogram equalization over valid pixels only. Invalid pixels
// map to 0; an all-invalid or single-level input passes through unchanged.
GrayImage equalize(const GrayImage& img, std::span<const std::uint8_t> valid);

ValidityIntegral build_validity_integral(const DepthImage& img);

// Fraction of valid pixels in the box after clipping; throws
// std::invalid_argument when the clipped box is empty.
double valid_fraction(const ValidityIntegral& vi, const Box& box);

namespace serial {
DepthImage fill_holes(const DepthImage& img, int kernel_radius = 2,
                      int max_passes = 3);
GrayImage normalize(const DepthImage& img);
GrayImage equalize(const GrayImage& img, std::span<const std::uint8_t> valid);
}

}  // namespace rgbd

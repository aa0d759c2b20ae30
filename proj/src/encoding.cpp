#include "rgbd/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace rgbd {

namespace {

double tent(double u, double a) {
  return std::clamp(1.5 - std::fabs(4.0 * u - a), 0.0, 1.0);
}

void write_pixel(std::uint8_t* px, const GrayImage& gray,
                 std::span<const std::uint8_t> valid, std::size_t i,
                 EncodingScheme scheme) {
  if (!valid[i]) {
    px[0] = px[1] = px[2] = 0;
    return;
  }
  std::uint8_t v = gray.data[i];
  switch (scheme) {
    case EncodingScheme::DG:
    case EncodingScheme::CE:
      px[0] = px[1] = px[2] = v;
      break;
    case EncodingScheme::CD:
    case EncodingScheme::CECD: {
      auto rgb = reversed_jet(static_cast<double>(v) / 255.0);
      px[0] = rgb[0];
      px[1] = rgb[1];
      px[2] = rgb[2];
      break;
    }
  }
}

bool needs_equalize(EncodingScheme scheme) {
  return scheme == EncodingScheme::CE || scheme == EncodingScheme::CECD;
}

}  // namespace

std::optional<EncodingScheme> parse_scheme(std::string_view name) {
  if (name == "dg") return EncodingScheme::DG;
  if (name == "ce") return EncodingScheme::CE;
  if (name == "cd") return EncodingScheme::CD;
  if (name == "cecd") return EncodingScheme::CECD;
  return std::nullopt;
}

std::string_view scheme_name(EncodingScheme scheme) {
  switch (scheme) {
    case EncodingScheme::DG:
      return "dg";
    case EncodingScheme::CE:
      return "ce";
    case EncodingScheme::CD:
      return "cd";
    case EncodingScheme::CECD:
      return "cecd";
  }
  return "?";
}

std::array<std::uint8_t, 3> reversed_jet(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("reversed_jet: t outside [0,1]");
  double u = 1.0 - t;
  return {to_u8(255.0 * tent(u, 3.0)), to_u8(255.0 * tent(u, 2.0)),
          to_u8(255.0 * tent(u, 1.0))};
}

RgbImage encode_gray(const GrayImage& gray, std::span<const std::uint8_t> valid,
                     EncodingScheme scheme) {
  GrayImage stage =
      needs_equalize(scheme) ? equalize(gray, valid) : gray;
  RgbImage out(gray.width, gray.height);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < stage.data.size(); ++i)
    write_pixel(out.data.data() + 3 * i, stage, valid, i, scheme);
  return out;
}

RgbImage encode(const DepthImage& img, EncodingScheme scheme) {
  return encode_gray(normalize(img), validity_mask(img), scheme);
}

namespace serial {

RgbImage encode_gray(const GrayImage& gray, std::span<const std::uint8_t> valid,
                     EncodingScheme scheme) {
  GrayImage stage =
      needs_equalize(scheme) ? serial::equalize(gray, valid) : gray;
  RgbImage out(gray.width, gray.height);
  for (std::size_t i = 0; i < stage.data.size(); ++i)
    write_pixel(out.data.data() + 3 * i, stage, valid, i, scheme);
  return out;
}

RgbImage encode(const DepthImage& img, EncodingScheme scheme) {
  return serial::encode_gray(serial::normalize(img), validity_mask(img),
                             scheme);
}

}  // namespace serial

}  // namespace rgbd

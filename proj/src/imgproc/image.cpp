#include "tslam/imgproc/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tslam::imgproc {

ThermalImage::ThermalImage(Image<std::uint16_t> c, Timestamp s) : counts(std::move(c)), stamp(s) {
  const auto& d = counts.data();
  const auto it = std::find_if(d.begin(), d.end(), [](std::uint16_t v) { return v > kMaxRawCount; });
  if (it != d.end()) {
    throw std::invalid_argument("thermal image: count " + std::to_string(*it) +
                                " exceeds 14-bit range");
  }
}

FloatImage ThermalImage::to_float() const {
  std::vector<float> out(counts.data().begin(), counts.data().end());
  return FloatImage(counts.width(), counts.height(), std::move(out));
}

namespace {

inline bool inside_cell_domain(const FloatImage& img, double x, double y) {
  return x >= 0.0 && y >= 0.0 && x < img.width() - 1 && y < img.height() - 1;
}

inline double bilinear_unchecked(const FloatImage& img, double x, double y) {
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const double ax = x - x0;
  const double ay = y - y0;
  const float* r0 = img.row(y0) + x0;
  const float* r1 = r0 + img.width();
  const double top = r0[0] + ax * (static_cast<double>(r0[1]) - r0[0]);
  const double bottom = r1[0] + ax * (static_cast<double>(r1[1]) - r1[0]);
  return top + ay * (bottom - top);
}

}  // namespace

std::optional<double> sample_bilinear(const FloatImage& img, const Vec2& u) {
  if (!inside_cell_domain(img, u.x(), u.y())) return std::nullopt;
  return bilinear_unchecked(img, u.x(), u.y());
}

std::optional<Vec2> sample_gradient(const FloatImage& img, const Vec2& u) {
  const double x = u.x();
  const double y = u.y();
  if (!inside_cell_domain(img, x - 0.5, y - 0.5) || !inside_cell_domain(img, x + 0.5, y + 0.5)) {
    return std::nullopt;
  }
  return Vec2(bilinear_unchecked(img, x + 0.5, y) - bilinear_unchecked(img, x - 0.5, y),
              bilinear_unchecked(img, x, y + 0.5) - bilinear_unchecked(img, x, y - 0.5));
}

std::optional<SampleWithGradient> sample_with_gradient(const FloatImage& img, const Vec2& u) {
  const double x = u.x();
  const double y = u.y();
  if (!inside_cell_domain(img, x - 0.5, y - 0.5) || !inside_cell_domain(img, x + 0.5, y + 0.5)) {
    return std::nullopt;
  }
  return SampleWithGradient{
      bilinear_unchecked(img, x, y),
      Vec2(bilinear_unchecked(img, x + 0.5, y) - bilinear_unchecked(img, x - 0.5, y),
           bilinear_unchecked(img, x, y + 0.5) - bilinear_unchecked(img, x, y - 0.5))};
}

FloatImage downsample(const FloatImage& img) {
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const float* r0 = img.row(2 * y);
    const float* r1 = img.row(2 * y + 1);
    for (int x = 0; x < w; ++x) {
      const double sum = static_cast<double>(r0[2 * x]) + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1];
      out.at(x, y) = static_cast<float>(sum * 0.25);
    }
  }
  return out;
}

Pyramid build_pyramid(const FloatImage& img, int levels) {
  if (levels < 1) throw std::invalid_argument("pyramid: need at least one level");
  const int coarse_w = img.width() >> (levels - 1);
  const int coarse_h = img.height() >> (levels - 1);
  if (coarse_w < 8 || coarse_h < 8) {
    throw std::invalid_argument("pyramid: " + std::to_string(img.width()) + "x" +
                                std::to_string(img.height()) + " too small for " +
                                std::to_string(levels) + " levels");
  }
  Pyramid pyr;
  pyr.levels.reserve(static_cast<std::size_t>(levels));
  pyr.levels.push_back(img);
  for (int l = 1; l < levels; ++l) pyr.levels.push_back(downsample(pyr.levels.back()));
  return pyr;
}

Pyramid build_pyramid(const ThermalImage& img, int levels) {
  return build_pyramid(img.to_float(), levels);
}

std::uint8_t rescale_count(std::uint16_t raw, double t_low, double t_high,
                           const RawToCelsius& conv) {
  if (!(t_low < t_high)) throw std::invalid_argument("rescale: t_low must be below t_high");
  const double t = conv.to_celsius(raw);
  const double v = std::round(255.0 * (t - t_low) / (t_high - t_low));
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

Image8 rescale_to_8bit(const ThermalImage& img, double t_low, double t_high,
                       const RawToCelsius& conv) {
  if (!(t_low < t_high)) throw std::invalid_argument("rescale: t_low must be below t_high");
  // 14-bit lookup table
  std::vector<std::uint8_t> lut(kMaxRawCount + 1);
  for (int r = 0; r <= kMaxRawCount; ++r) {
    lut[r] = rescale_count(static_cast<std::uint16_t>(r), t_low, t_high, conv);
  }
  Image8 out(img.width(), img.height());
  const auto& src = img.counts.data();
  auto& dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[std::min(src[i], kMaxRawCount)];
  return out;
}

}  // namespace tslam::imgproc

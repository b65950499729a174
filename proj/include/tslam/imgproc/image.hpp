#pragma once

#include "tslam/geom/se3.hpp"
#include "tslam/geom/trajectory.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tslam::imgproc {

using geom::Timestamp;

inline constexpr std::uint16_t kMaxRawCount = 16383;  // 14-bit

/// Row-major 2-D grid.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}
  Image(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(checked_area(width, height))) {
      throw std::invalid_argument("image: data length does not match width*height");
    }
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] bool empty() const { return data_.empty(); }
  [[nodiscard]] const std::vector<T>& data() const { return data_; }
  [[nodiscard]] std::vector<T>& data() { return data_; }

  [[nodiscard]] const T& at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  [[nodiscard]] T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  [[nodiscard]] const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

  bool operator==(const Image&) const = default;

 private:
  static long checked_area(int w, int h) {
    if (w < 0 || h < 0) throw std::invalid_argument("image: negative size");
    return static_cast<long>(w) * h;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using FloatImage = Image<float>;
using Image8 = Image<std::uint8_t>;

/// 14-bit radiometric counts plus capture time.
struct ThermalImage {
  Image<std::uint16_t> counts;
  Timestamp stamp = 0;

  ThermalImage() = default;
  /// Throws std::invalid_argument when any count exceeds 14 bits.
  ThermalImage(Image<std::uint16_t> counts, Timestamp stamp);

  [[nodiscard]] int width() const { return counts.width(); }
  [[nodiscard]] int height() const { return counts.height(); }
  [[nodiscard]] FloatImage to_float() const;
};

/// Linear raw -> Celsius map.
struct RawToCelsius {
  double scale = 0.04;
  double offset = -273.15;

  [[nodiscard]] double to_celsius(double raw) const { return scale * raw + offset; }
  [[nodiscard]] double to_raw(double celsius) const { return (celsius - offset) / scale; }
};

/// Bilinear sample; std::nullopt outside [0, w-1) x [0, h-1).
[[nodiscard]] std::optional<double> sample_bilinear(const FloatImage& img, const Vec2& u);

/// (dI/du, dI/dv) by central differences of bilinear samples at half-pixel
/// offsets; std::nullopt when any of those samples falls outside the image.
[[nodiscard]] std::optional<Vec2> sample_gradient(const FloatImage& img, const Vec2& u);

/// Value and gradient together (one bounds check, shared weights).
struct SampleWithGradient {
  double value;
  Vec2 gradient;
};
[[nodiscard]] std::optional<SampleWithGradient> sample_with_gradient(const FloatImage& img,
                                                                     const Vec2& u);

/// Float levels, level 0 = full resolution raw counts.
struct Pyramid {
  std::vector<FloatImage> levels;

  [[nodiscard]] std::size_t size() const { return levels.size(); }
  [[nodiscard]] const FloatImage& level(std::size_t l) const { return levels.at(l); }
};

/// 2x2 box-average pyramid. Throws std::invalid_argument when the coarsest
/// level would fall below 8x8 or levels < 1.
[[nodiscard]] Pyramid build_pyramid(const FloatImage& img, int levels);
[[nodiscard]] Pyramid build_pyramid(const ThermalImage& img, int levels);

/// 2x2 box average, floor division of dimensions.
[[nodiscard]] FloatImage downsample(const FloatImage& img);

/// Fixed-window 14-bit -> 8-bit rescale. Throws when t_low >= t_high.
[[nodiscard]] Image8 rescale_to_8bit(const ThermalImage& img, double t_low, double t_high,
                                     const RawToCelsius& conv = {});
/// One count through the same map. Throws when t_low >= t_high.
[[nodiscard]] std::uint8_t rescale_count(std::uint16_t raw, double t_low, double t_high,
                                         const RawToCelsius& conv = {});

}  // namespace tslam::imgproc

namespace tslam {
using imgproc::FloatImage;
using imgproc::Image8;
using imgproc::Pyramid;
using imgproc::RawToCelsius;
using imgproc::ThermalImage;
}  // namespace tslam

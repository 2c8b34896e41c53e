#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evconv {

// Error hierarchy. Every failure surfaced by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class TemporalOrderError : public Error {
 public:
  using Error::Error;
};

// Precondition violated by the caller (bad parameter, mismatched geometry).
class ContractError : public Error {
 public:
  using Error::Error;
};

struct SensorGeometry {
  int width = 0;
  int height = 0;

  SensorGeometry() = default;
  SensorGeometry(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) {
      throw ContractError("sensor geometry must be at least 1x1, got " + std::to_string(w) + "x" +
                          std::to_string(h));
    }
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
  // Row-major (y, x) ordering.
  friend bool operator<(const Pixel& a, const Pixel& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  }
};

enum class Polarity : std::int8_t { Negative = -1, Positive = 1 };

inline double sign(Polarity p) { return p == Polarity::Positive ? 1.0 : -1.0; }

struct Event {
  double t = 0.0;  // seconds
  int x = 0;
  int y = 0;
  Polarity polarity = Polarity::Positive;

  Pixel pixel() const { return {x, y}; }
  friend bool operator==(const Event&, const Event&) = default;
};

// Log-intensity step that triggers one event.
class ContrastThreshold {
 public:
  explicit ContrastThreshold(double c) : c_(c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ContractError("contrast threshold must be positive and finite");
    }
  }
  double value() const { return c_; }

 private:
  double c_;
};

// Dense row-major image of doubles.
class ImageF {
 public:
  ImageF() = default;
  explicit ImageF(SensorGeometry g, double fill = 0.0) : geom_(g), data_(g.pixel_count(), fill) {}
  ImageF(int width, int height, double fill = 0.0) : ImageF(SensorGeometry(width, height), fill) {}
  ImageF(SensorGeometry g, std::vector<double> data) : geom_(g), data_(std::move(data)) {
    if (data_.size() != g.pixel_count()) {
      throw ContractError("image data length does not match geometry");
    }
  }

  const SensorGeometry& geometry() const { return geom_; }
  int width() const { return geom_.width; }
  int height() const { return geom_.height; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int x, int y) { return data_[geom_.index(x, y)]; }
  double operator()(int x, int y) const { return data_[geom_.index(x, y)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }

  friend bool operator==(const ImageF&, const ImageF&) = default;

 private:
  SensorGeometry geom_;
  std::vector<double> data_;
};

inline void require_same_geometry(const ImageF& a, const ImageF& b, const char* what) {
  if (!(a.geometry() == b.geometry())) {
    throw ContractError(std::string(what) + ": geometry mismatch (" + std::to_string(a.width()) +
                        "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                        "x" + std::to_string(b.height()) + ")");
  }
}

}  // namespace evconv

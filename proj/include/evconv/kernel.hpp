#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evconv/types.hpp"

namespace evconv {

// Finite-support 2D kernel, (2*radius_y+1) x (2*radius_x+1) coefficients,
// row-major, centre at (radius_x, radius_y).
class Kernel {
 public:
  Kernel(int radius_x, int radius_y, std::vector<double> coeffs, std::string name = "custom");

  int radius_x() const { return rx_; }
  int radius_y() const { return ry_; }
  int width() const { return 2 * rx_ + 1; }
  int height() const { return 2 * ry_ + 1; }
  const std::string& name() const { return name_; }

  // Coefficient at offset (dx, dy) from the centre, |dx| <= radius_x, |dy| <= radius_y.
  double at(int dx, int dy) const { return coeffs_[(dy + ry_) * width() + (dx + rx_)]; }
  std::span<const double> coeffs() const { return coeffs_; }

  double sum() const;
  std::size_t nonzero_count() const;

 private:
  int rx_;
  int ry_;
  std::vector<double> coeffs_;
  std::string name_;
};

// Built-in catalog: identity, gaussian3, sobel_x, sobel_y, laplacian, box3.
Kernel make_kernel(std::string_view name);
const std::vector<std::string>& builtin_kernel_names();

// Text format: "w h" on the first line, then h rows of w coefficients; w, h odd.
Kernel parse_kernel_text(std::string_view text, std::string name = "custom");
Kernel load_kernel_file(const std::string& path);

struct PixelIncrement {
  Pixel p;
  double value;
};

// One event spread through a kernel: simultaneous increments at nearby pixels.
struct ConvolvedEvent {
  double t = 0.0;
  std::vector<PixelIncrement> entries;
};

// Increment at p is sigma*c*K(p - p_i), i.e. the kernel reflected through its
// centre. Off-sensor taps and zero coefficients are dropped.
ConvolvedEvent expand_event(const Event& e, const Kernel& k, ContrastThreshold c,
                            const SensorGeometry& geom);

// Allocation-free variant used on the hot path. Calls fn(x, y, coefficient)
// for every in-bounds nonzero tap of the event's footprint.
template <typename Fn>
inline void for_each_tap(const Kernel& k, int ex, int ey, const SensorGeometry& geom, Fn&& fn) {
  const int rx = k.radius_x();
  const int ry = k.radius_y();
  const int y0 = std::max(ey - ry, 0);
  const int y1 = std::min(ey + ry, geom.height - 1);
  const int x0 = std::max(ex - rx, 0);
  const int x1 = std::min(ex + rx, geom.width - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double w = k.at(x - ex, y - ey);
      if (w != 0.0) fn(x, y, w);
    }
  }
}

// out(p) = sum_q K(q) img(p - q); out-of-bounds samples contribute zero.
// OpenMP-parallel over rows.
ImageF convolve_dense(const ImageF& img, const Kernel& k);

namespace reference {
// Single-threaded scatter formulation of convolve_dense, kept for testing.
ImageF convolve_dense(const ImageF& img, const Kernel& k);
}  // namespace reference

}  // namespace evconv

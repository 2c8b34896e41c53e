#pragma once

#include <span>
#include <vector>

#include "evconv/filter.hpp"
#include "evconv/kernel.hpp"
#include "evconv/types.hpp"

namespace evconv {

// Symmetric 2x2 structure tensor.
struct Mat2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
};

struct HarrisParams {
  double gamma = 0.04;
  Kernel smoothing = make_kernel("box3");
  double response_threshold = 1.0;
  int nms_radius = 1;
  double alpha = 10.0;  // rad/s, shared by both gradient channels

  void validate() const;
};

// M(p) = sum_q W(q) [gx^2, gx gy; gx gy, gy^2](p - q), off-sensor taps dropped.
Mat2 harris_matrix_at(const ImageF& gx, const ImageF& gy, const Kernel& w, Pixel p);

// det(M) - gamma * trace(M)^2
inline double harris_response(const Mat2& m, double gamma) {
  const double trace = m.xx + m.yy;
  return (m.xx * m.yy - m.xy * m.xy) - gamma * trace * trace;
}

// Full-frame response from gradient images: three dense convolutions of the
// gradient products, then R per pixel. OpenMP-parallel.
ImageF harris_response_dense(const ImageF& gx, const ImageF& gy, const Kernel& w, double gamma);

// Sobel gradients of a dense image followed by harris_response_dense.
ImageF harris_response_of_image(const ImageF& image, const Kernel& w, double gamma);

namespace reference {
// Per-pixel harris_matrix_at evaluation. Serial.
ImageF harris_response_dense(const ImageF& gx, const ImageF& gy, const Kernel& w, double gamma);
}  // namespace reference

struct Corner {
  Pixel p;
  double t = 0.0;
  double score = 0.0;
};

// Threshold (strict >) then non-maximum suppression over a Chebyshev window.
// Equal maxima keep the smallest (y, x). Sorted by descending score, then (y, x).
std::vector<Corner> detect_corners(const ImageF& response, double t, double threshold,
                                   int nms_radius);

// 99th percentile (nearest rank) of |R|, floored at the smallest positive double.
double percentile99_threshold(const ImageF& response);

// Event-driven Harris response state on top of Sobel x/y filter channels.
//
// R is recomputed eagerly over the pixels an event can influence (gradient
// footprint grown by the smoothing radius). Between recomputes a pixel's R
// decays exactly as exp(-4 alpha dt) because it is quartic in the gradients,
// so reads at any later time are exact without touching the state.
class HarrisState {
 public:
  HarrisState(SensorGeometry geom, ContrastThreshold c, HarrisParams params,
              OrderPolicy policy = OrderPolicy::Strict);

  const SensorGeometry& geometry() const { return geom_; }
  const HarrisParams& params() const { return params_; }
  const FilterState& gx() const { return gx_; }
  const FilterState& gy() const { return gy_; }

  // R as of response_t, per pixel.
  const ImageF& response() const { return response_; }
  const std::vector<double>& response_t() const { return response_t_; }

  // Feeds e through both gradient channels and recomputes R around it, with
  // every contributing gradient decayed to e.t. Returns the recomputed pixels
  // in row-major order.
  std::vector<Pixel> update_on_event(const Event& e);

  // Response image at t (every pixel brought to t). Pure.
  ImageF response_snapshot(double t) const;

  std::vector<Corner> detect_corners(double t) const;

 private:
  SensorGeometry geom_;
  HarrisParams params_;
  FilterState gx_;
  FilterState gy_;
  ImageF response_;
  std::vector<double> response_t_;
  // Scratch for the decayed gradient patch around an event.
  std::vector<double> patch_gx_;
  std::vector<double> patch_gy_;
};

struct ChecSample {
  double t = 0.0;
  ImageF response;
  std::vector<Corner> corners;
};

enum class ThresholdRule {
  Fixed,                  // use params.response_threshold
  FirstSamplePercentile,  // percentile99_threshold of the first sample's response
};

struct ChecResult {
  double threshold = 0.0;
  std::vector<ChecSample> samples;
};

ChecResult chec_pipeline(std::span<const Event> events, const SensorGeometry& geom,
                         ContrastThreshold c, const HarrisParams& params,
                         std::span<const double> sample_times,
                         OrderPolicy policy = OrderPolicy::Strict,
                         ThresholdRule rule = ThresholdRule::Fixed);

}  // namespace evconv

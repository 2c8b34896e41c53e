#include "evconv/harris.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evconv/io.hpp"

namespace evconv {

void HarrisParams::validate() const {
  if (!(gamma > 0.0 && gamma < 0.25)) throw ContractError("harris gamma must lie in (0, 0.25)");
  if (nms_radius < 1) throw ContractError("nms radius must be >= 1");
  if (!(response_threshold > 0.0)) throw ContractError("response threshold must be > 0");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ContractError("harris alpha must be > 0");
}

Mat2 harris_matrix_at(const ImageF& gx, const ImageF& gy, const Kernel& w, Pixel p) {
  require_same_geometry(gx, gy, "harris_matrix_at");
  Mat2 m;
  for (int dy = -w.radius_y(); dy <= w.radius_y(); ++dy) {
    for (int dx = -w.radius_x(); dx <= w.radius_x(); ++dx) {
      const int x = p.x - dx;
      const int y = p.y - dy;
      if (!gx.geometry().contains(x, y)) continue;
      const double k = w.at(dx, dy);
      const double a = gx(x, y);
      const double b = gy(x, y);
      m.xx += k * a * a;
      m.xy += k * a * b;
      m.yy += k * b * b;
    }
  }
  return m;
}

ImageF harris_response_dense(const ImageF& gx, const ImageF& gy, const Kernel& w, double gamma) {
  require_same_geometry(gx, gy, "harris_response_dense");
  const std::size_t n = gx.size();
  ImageF xx(gx.geometry());
  ImageF xy(gx.geometry());
  ImageF yy(gx.geometry());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const double a = gx[i];
    const double b = gy[i];
    xx[i] = a * a;
    xy[i] = a * b;
    yy[i] = b * b;
  }
  const ImageF mxx = convolve_dense(xx, w);
  const ImageF mxy = convolve_dense(xy, w);
  const ImageF myy = convolve_dense(yy, w);
  ImageF out(gx.geometry());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    out[i] = harris_response({mxx[i], mxy[i], myy[i]}, gamma);
  }
  return out;
}

ImageF harris_response_of_image(const ImageF& image, const Kernel& w, double gamma) {
  return harris_response_dense(convolve_dense(image, make_kernel("sobel_x")),
                               convolve_dense(image, make_kernel("sobel_y")), w, gamma);
}

namespace reference {

ImageF harris_response_dense(const ImageF& gx, const ImageF& gy, const Kernel& w, double gamma) {
  ImageF out(gx.geometry());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out(x, y) = harris_response(harris_matrix_at(gx, gy, w, {x, y}), gamma);
    }
  }
  return out;
}

}  // namespace reference

std::vector<Corner> detect_corners(const ImageF& response, double t, double threshold,
                                   int nms_radius) {
  if (nms_radius < 1) throw ContractError("nms radius must be >= 1");
  const int w = response.width();
  const int h = response.height();
  std::vector<std::vector<Corner>> rows(static_cast<std::size_t>(h));
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = response(x, y);
      if (!(r > threshold)) continue;
      bool keep = true;
      for (int qy = std::max(0, y - nms_radius); keep && qy <= std::min(h - 1, y + nms_radius);
           ++qy) {
        for (int qx = std::max(0, x - nms_radius); qx <= std::min(w - 1, x + nms_radius); ++qx) {
          const double q = response(qx, qy);
          // Equal neighbours earlier in (y, x) order win the tie.
          if (q > r || (q == r && Pixel{qx, qy} < Pixel{x, y})) {
            keep = false;
            break;
          }
        }
      }
      if (keep) rows[static_cast<std::size_t>(y)].push_back({{x, y}, t, r});
    }
  }
  std::vector<Corner> out;
  for (auto& row : rows) out.insert(out.end(), row.begin(), row.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const Corner& a, const Corner& b) { return a.score > b.score; });
  return out;
}

double percentile99_threshold(const ImageF& response) {
  std::vector<double> mags(response.size());
  for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::abs(response[i]);
  if (mags.empty()) return std::numeric_limits<double>::min();
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * mags.size()));
  const std::size_t idx = std::min(mags.size() - 1, rank == 0 ? 0 : rank - 1);
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(idx), mags.end());
  return std::max(mags[idx], std::numeric_limits<double>::min());
}

HarrisState::HarrisState(SensorGeometry geom, ContrastThreshold c, HarrisParams params,
                         OrderPolicy policy)
    : geom_(geom),
      params_(std::move(params)),
      gx_(geom, make_kernel("sobel_x"), FilterParams(params_.alpha, c), policy),
      gy_(geom, make_kernel("sobel_y"), FilterParams(params_.alpha, c), policy),
      response_(geom),
      response_t_(geom.pixel_count(), 0.0) {
  params_.validate();
}

std::vector<Pixel> HarrisState::update_on_event(const Event& e) {
  if (!geom_.contains(e.x, e.y)) {
    throw BoundsError("event at (" + std::to_string(e.x) + ", " + std::to_string(e.y) +
                      ") outside sensor");
  }
  if (!gx_.admits(e) || !gy_.admits(e)) {
    throw TemporalOrderError("event " + format_event_line(e) +
                             " is older than the gradient state of its footprint");
  }
  gx_.process_event(e);
  gy_.process_event(e);

  const Kernel& w = params_.smoothing;
  const int grad_rx = std::max(gx_.kernel().radius_x(), gy_.kernel().radius_x());
  const int grad_ry = std::max(gx_.kernel().radius_y(), gy_.kernel().radius_y());
  // Pixels whose R can change.
  const int rx = grad_rx + w.radius_x();
  const int ry = grad_ry + w.radius_y();
  const int x0 = std::max(0, e.x - rx);
  const int x1 = std::min(geom_.width - 1, e.x + rx);
  const int y0 = std::max(0, e.y - ry);
  const int y1 = std::min(geom_.height - 1, e.y + ry);
  // Gradient pixels those R values read.
  const int gx0 = std::max(0, x0 - w.radius_x());
  const int gx1 = std::min(geom_.width - 1, x1 + w.radius_x());
  const int gy0 = std::max(0, y0 - w.radius_y());
  const int gy1 = std::min(geom_.height - 1, y1 + w.radius_y());
  const int pw = gx1 - gx0 + 1;
  const int ph = gy1 - gy0 + 1;

  patch_gx_.resize(static_cast<std::size_t>(pw) * ph);
  patch_gy_.resize(patch_gx_.size());
  for (int y = gy0; y <= gy1; ++y) {
    for (int x = gx0; x <= gx1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y - gy0) * pw + (x - gx0);
      patch_gx_[i] = gx_.decay_pixel({x, y}, e.t);
      patch_gy_[i] = gy_.decay_pixel({x, y}, e.t);
    }
  }

  std::vector<Pixel> touched;
  touched.reserve(static_cast<std::size_t>(x1 - x0 + 1) * (y1 - y0 + 1));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      Mat2 m;
      for (int dy = -w.radius_y(); dy <= w.radius_y(); ++dy) {
        const int sy = y - dy;
        if (sy < 0 || sy >= geom_.height) continue;
        for (int dx = -w.radius_x(); dx <= w.radius_x(); ++dx) {
          const int sx = x - dx;
          if (sx < 0 || sx >= geom_.width) continue;
          const double k = w.at(dx, dy);
          const std::size_t i = static_cast<std::size_t>(sy - gy0) * pw + (sx - gx0);
          const double a = patch_gx_[i];
          const double b = patch_gy_[i];
          m.xx += k * a * a;
          m.xy += k * a * b;
          m.yy += k * b * b;
        }
      }
      const std::size_t idx = geom_.index(x, y);
      response_[idx] = harris_response(m, params_.gamma);
      response_t_[idx] = e.t;
      touched.push_back({x, y});
    }
  }
  return touched;
}

ImageF HarrisState::response_snapshot(double t) const {
  const bool strict = gx_.policy() == OrderPolicy::Strict;
  const double rate = 4.0 * params_.alpha;
  ImageF out(geom_);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out.size());
  bool early = false;
#pragma omp parallel for schedule(static) reduction(|| : early)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double r = response_[i];
    const double rt = response_t_[static_cast<std::size_t>(i)];
    if (t < rt) {
      early = early || strict;
      out[i] = r;
    } else {
      out[i] = r == 0.0 ? 0.0 : decay_factor(rate, t, rt) * r;
    }
  }
  if (early) {
    throw TemporalOrderError("response snapshot at t=" + std::to_string(t) +
                             " precedes the latest response update");
  }
  return out;
}

std::vector<Corner> HarrisState::detect_corners(double t) const {
  return evconv::detect_corners(response_snapshot(t), t, params_.response_threshold,
                                params_.nms_radius);
}

ChecResult chec_pipeline(std::span<const Event> events, const SensorGeometry& geom,
                         ContrastThreshold c, const HarrisParams& params,
                         std::span<const double> sample_times, OrderPolicy policy,
                         ThresholdRule rule) {
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) {
    throw ContractError("sample times must be sorted ascending");
  }
  validate_stream(events, geom, policy);
  HarrisState state(geom, c, params, policy);

  ChecResult result;
  result.threshold = params.response_threshold;
  bool threshold_set = rule == ThresholdRule::Fixed;
  std::size_t cursor = 0;
  for (double ts : sample_times) {
    while (cursor < events.size() && events[cursor].t <= ts) {
      state.update_on_event(events[cursor]);
      ++cursor;
    }
    ChecSample s;
    s.t = ts;
    s.response = state.response_snapshot(ts);
    if (!threshold_set) {
      result.threshold = percentile99_threshold(s.response);
      threshold_set = true;
    }
    s.corners = detect_corners(s.response, ts, result.threshold, params.nms_radius);
    result.samples.push_back(std::move(s));
  }
  return result;
}

}  // namespace evconv

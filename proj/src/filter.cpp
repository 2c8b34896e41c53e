#include "evconv/filter.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "evconv/io.hpp"

namespace evconv {
namespace {

std::string pixel_str(int x, int y) {
  return "(" + std::to_string(x) + ", " + std::to_string(y) + ")";
}

}  // namespace

FilterParams::FilterParams(double alpha_rad_s, ContrastThreshold contrast)
    : alpha(alpha_rad_s), c(contrast) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ContractError("filter cutoff alpha must be positive and finite");
  }
}

FilterState::FilterState(SensorGeometry geom, Kernel kernel, FilterParams params,
                         OrderPolicy policy)
    : geom_(geom),
      kernel_(std::move(kernel)),
      params_(params),
      policy_(policy),
      values_(geom),
      last_t_(geom.pixel_count(), 0.0) {
  for (int dy = -kernel_.radius_y(); dy <= kernel_.radius_y(); ++dy) {
    for (int dx = -kernel_.radius_x(); dx <= kernel_.radius_x(); ++dx) {
      const double w = kernel_.at(dx, dy);
      if (w == 0.0) continue;
      tap_offsets_.push_back(static_cast<std::ptrdiff_t>(dy) * geom_.width + dx);
      tap_weights_.push_back(w);
    }
  }
}

template <typename Fn>
void FilterState::for_each_footprint_pixel(const Event& e, Fn&& fn) {
  const int rx = kernel_.radius_x();
  const int ry = kernel_.radius_y();
  if (e.x >= rx && e.y >= ry && e.x + rx < geom_.width && e.y + ry < geom_.height) {
    const auto centre = static_cast<std::ptrdiff_t>(geom_.index(e.x, e.y));
    const std::size_t n = tap_offsets_.size();
    for (std::size_t k = 0; k < n; ++k) {
      fn(static_cast<std::size_t>(centre + tap_offsets_[k]), tap_weights_[k]);
    }
  } else {
    for_each_tap(kernel_, e.x, e.y, geom_,
                 [&](int x, int y, double w) { fn(geom_.index(x, y), w); });
  }
}

double FilterState::decay_pixel(Pixel p, double t) const {
  if (!geom_.contains(p.x, p.y)) {
    throw BoundsError("pixel " + pixel_str(p.x, p.y) + " outside sensor");
  }
  const std::size_t i = geom_.index(p.x, p.y);
  const double tp = last_t_[i];
  if (t < tp) {
    if (policy_ == OrderPolicy::Strict) {
      throw TemporalOrderError("query time " + std::to_string(t) + " precedes last update " +
                               std::to_string(tp) + " at pixel " + pixel_str(p.x, p.y));
    }
    return values_[i];
  }
  return decay_factor(params_.alpha, t, tp) * values_[i];
}

bool FilterState::admits(const Event& e) const {
  if (!geom_.contains(e.x, e.y)) return false;
  if (policy_ == OrderPolicy::Lenient || e.t >= max_last_t_) return true;
  bool ok = true;
  for_each_tap(kernel_, e.x, e.y, geom_, [&](int x, int y, double) {
    ok = ok && e.t >= last_t_[geom_.index(x, y)];
  });
  return ok;
}

void FilterState::process_event(const Event& e) {
  if (!geom_.contains(e.x, e.y)) {
    throw BoundsError("event at " + pixel_str(e.x, e.y) + " outside sensor");
  }
  const double t = e.t;
  bool regressed = false;
  if (t < max_last_t_) {
    // Slow path only when some pixel might be newer than the event.
    for_each_tap(kernel_, e.x, e.y, geom_, [&](int x, int y, double) {
      regressed = regressed || t < last_t_[geom_.index(x, y)];
    });
    if (regressed && policy_ == OrderPolicy::Strict) {
      throw TemporalOrderError("event " + format_event_line(e) +
                               " is older than the state of its footprint");
    }
  }

  const double inc = sign(e.polarity) * params_.c.value();
  const double alpha = params_.alpha;
  double* values = values_.data();
  double* stamps = last_t_.data();
  for_each_footprint_pixel(e, [&](std::size_t i, double w) {
    const double tp = stamps[i];
    if (t >= tp) {
      values[i] = decay_factor(alpha, t, tp) * values[i] + inc * w;
      stamps[i] = t;
    } else {
      values[i] += inc * w;  // lenient: simultaneous with the newer state
    }
  });
  max_last_t_ = std::max(max_last_t_, t);
  ++stats_.events;
  if (regressed) ++stats_.regressions_clamped;
}

void FilterState::check_query_time(double t_query) const {
  if (policy_ != OrderPolicy::Strict || t_query >= max_last_t_) return;
  for (int y = 0; y < geom_.height; ++y) {
    for (int x = 0; x < geom_.width; ++x) {
      if (t_query < last_t_[geom_.index(x, y)]) {
        throw TemporalOrderError("snapshot time " + std::to_string(t_query) +
                                 " precedes last update " +
                                 std::to_string(last_t_[geom_.index(x, y)]) + " at pixel " +
                                 pixel_str(x, y));
      }
    }
  }
}

ImageF FilterState::snapshot(double t_query) const {
  check_query_time(t_query);
  ImageF out(geom_);
  const double alpha = params_.alpha;
  const int w = geom_.width;
  const int h = geom_.height;
  const double* values = values_.data();
  const double* stamps = last_t_.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const std::size_t i = row + x;
      const double v = values[i];
      dst[i] = (v == 0.0 || t_query < stamps[i]) ? v : decay_factor(alpha, t_query, stamps[i]) * v;
    }
  }
  return out;
}

namespace reference {

ImageF snapshot(const FilterState& state, double t_query) {
  ImageF out(state.geometry());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) out(x, y) = state.decay_pixel({x, y}, t_query);
  }
  return out;
}

ImageF closed_form_oracle(std::span<const Event> events, const Kernel& k, const FilterParams& params,
                          const SensorGeometry& geom, double t_query) {
  ImageF out(geom);
  const double c = params.c.value();
  for (const Event& e : events) {
    if (e.t > t_query) continue;
    const double amp = sign(e.polarity) * c * std::exp(-params.alpha * (t_query - e.t));
    for (int dy = -k.radius_y(); dy <= k.radius_y(); ++dy) {
      for (int dx = -k.radius_x(); dx <= k.radius_x(); ++dx) {
        const int x = e.x + dx;
        const int y = e.y + dy;
        if (!geom.contains(x, y)) continue;
        out(x, y) += amp * k.at(dx, dy);
      }
    }
  }
  return out;
}

}  // namespace reference

ImageF closed_form_oracle(std::span<const Event> events, const Kernel& k, const FilterParams& params,
                          const SensorGeometry& geom, double t_query) {
  // Bucket contributing events by row so output rows can be summed independently.
  std::vector<std::vector<std::size_t>> by_row(static_cast<std::size_t>(geom.height));
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.t > t_query) continue;
    if (!geom.contains(e.x, e.y)) {
      throw BoundsError("oracle event " + std::to_string(i) + " outside sensor");
    }
    by_row[static_cast<std::size_t>(e.y)].push_back(i);
  }
  ImageF out(geom);
  const double c = params.c.value();
  const double alpha = params.alpha;
  const int ry = k.radius_y();
  const int rx = k.radius_x();
#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < geom.height; ++y) {
    for (int ey = std::max(0, y - ry); ey <= std::min(geom.height - 1, y + ry); ++ey) {
      const int dy = y - ey;
      for (std::size_t idx : by_row[static_cast<std::size_t>(ey)]) {
        const Event& e = events[idx];
        const double amp = sign(e.polarity) * c * std::exp(-alpha * (t_query - e.t));
        const int x0 = std::max(0, e.x - rx);
        const int x1 = std::min(geom.width - 1, e.x + rx);
        for (int x = x0; x <= x1; ++x) out(x, y) += amp * k.at(x - e.x, dy);
      }
    }
  }
  return out;
}

FilterBank::FilterBank(SensorGeometry geom, ContrastThreshold c, OrderPolicy policy)
    : geom_(geom), c_(c), policy_(policy) {}

FilterState& FilterBank::add_channel(Kernel k, double alpha) {
  channels_.emplace_back(geom_, std::move(k), FilterParams(alpha, c_), policy_);
  return channels_.back();
}

void FilterBank::process(std::span<const Event> events) {
  const int n = static_cast<int>(channels_.size());
  std::vector<std::exception_ptr> errors(channels_.size());
#pragma omp parallel for schedule(static, 1)
  for (int ch = 0; ch < n; ++ch) {
    try {
      auto& state = channels_[static_cast<std::size_t>(ch)];
      for (const Event& e : events) state.process_event(e);
    } catch (...) {
      errors[static_cast<std::size_t>(ch)] = std::current_exception();
    }
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

void validate_stream(std::span<const Event> events, const SensorGeometry& geom,
                     OrderPolicy policy) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!geom.contains(e.x, e.y)) {
      throw BoundsError("event " + std::to_string(i) + " at " + pixel_str(e.x, e.y) +
                        " outside the " + std::to_string(geom.width) + "x" +
                        std::to_string(geom.height) + " sensor");
    }
    if (!std::isfinite(e.t) || e.t < 0.0) {
      throw ContractError("event " + std::to_string(i) + " has an invalid timestamp");
    }
    if (policy == OrderPolicy::Strict && i > 0 && e.t < events[i - 1].t) {
      throw TemporalOrderError("event " + std::to_string(i) + " timestamp regression (" +
                               std::to_string(e.t) + " after " + std::to_string(events[i - 1].t) +
                               ")");
    }
  }
}

std::vector<Sample> process_stream(FilterBank& bank, std::span<const Event> events,
                                   std::span<const double> sample_times) {
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) {
    throw ContractError("sample times must be sorted ascending");
  }
  validate_stream(events, bank.geometry(), bank.policy());

  std::vector<Sample> samples;
  samples.reserve(sample_times.size());
  std::size_t cursor = 0;
  for (double ts : sample_times) {
    std::size_t end = cursor;
    // Lenient streams may be out of order; take the contiguous prefix up to ts.
    while (end < events.size() && events[end].t <= ts) ++end;
    bank.process(events.subspan(cursor, end - cursor));
    cursor = end;

    Sample s;
    s.t = ts;
    s.channels.resize(bank.size());
    for (std::size_t ch = 0; ch < bank.size(); ++ch) s.channels[ch] = bank[ch].snapshot(ts);
    samples.push_back(std::move(s));
  }
  bank.process(events.subspan(cursor));
  return samples;
}

}  // namespace evconv

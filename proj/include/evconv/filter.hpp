#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evconv/kernel.hpp"
#include "evconv/types.hpp"

namespace evconv {

struct FilterParams {
  double alpha;          // high-pass cutoff, rad/s
  ContrastThreshold c;

  FilterParams(double alpha_rad_s, ContrastThreshold contrast);
};

inline constexpr double kDefaultAlpha = 6.283185307179586;  // 2*pi rad/s

enum class OrderPolicy {
  Strict,   // timestamp regressions throw TemporalOrderError
  Lenient,  // regressions are treated as simultaneous and counted
};

namespace detail {

// Error-free product: a*b == p + err exactly.
inline void two_product(double a, double b, double& p, double& err) {
  p = a * b;
#ifdef __FP_FAST_FMA
  err = std::fma(a, b, -p);
#else
  // Veltkamp split; avoids a libm fma call on targets built without FMA.
  constexpr double kSplit = 134217729.0;  // 2^27 + 1
  const double ca = kSplit * a;
  const double ah = ca - (ca - a);
  const double al = a - ah;
  const double cb = kSplit * b;
  const double bh = cb - (cb - b);
  const double bl = b - bh;
  err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
#endif
}

}  // namespace detail

// exp(-alpha * (t_to - t_from)) with the exponent formed without rounding
// error, so decays compose to within a few ulp regardless of elapsed time.
inline double decay_factor(double alpha, double t_to, double t_from) {
  // TwoSum: elapsed == s + e exactly.
  const double s = t_to - t_from;
  const double bv = s - t_to;
  const double e = (t_to - (s - bv)) + (-t_from - bv);
  double p;
  double perr;
  detail::two_product(alpha, s, p, perr);
  const double tail = perr + alpha * e;
  return std::exp(-p) * (1.0 - tail);
}

struct FilterStats {
  std::uint64_t events = 0;
  std::uint64_t regressions_clamped = 0;
};

// Per-pixel continuous-time high-pass state for one kernel channel.
// Each pixel holds its value as of its own last update time; reads decay
// values to the query time without touching the state.
//
// Single writer. Concurrent snapshot() calls are fine while no writer runs.
class FilterState {
 public:
  FilterState(SensorGeometry geom, Kernel kernel, FilterParams params,
              OrderPolicy policy = OrderPolicy::Strict);

  const SensorGeometry& geometry() const { return geom_; }
  const Kernel& kernel() const { return kernel_; }
  const FilterParams& params() const { return params_; }
  OrderPolicy policy() const { return policy_; }
  const FilterStats& stats() const { return stats_; }

  // Raw state: value as of last_t, per pixel.
  const ImageF& values() const { return values_; }
  const std::vector<double>& last_t() const { return last_t_; }
  double max_last_t() const { return max_last_t_; }

  // Value at pixel p decayed to time t. Pure.
  double decay_pixel(Pixel p, double t) const;

  // Whether process_event(e) would succeed: in bounds and, under Strict, not
  // older than any pixel of its footprint.
  bool admits(const Event& e) const;

  // Decay every footprint pixel to e.t, add sigma*c*K(p - p_e), stamp e.t.
  void process_event(const Event& e);

  // Whole-sensor read-out at t_query. Pure; OpenMP-parallel over rows.
  ImageF snapshot(double t_query) const;

 private:
  void check_query_time(double t_query) const;
  template <typename Fn>
  void for_each_footprint_pixel(const Event& e, Fn&& fn);


  SensorGeometry geom_;
  Kernel kernel_;
  FilterParams params_;
  OrderPolicy policy_;
  ImageF values_;
  std::vector<double> last_t_;
  double max_last_t_ = 0.0;
  // Nonzero taps as linear offsets from the event pixel, for interior events.
  std::vector<std::ptrdiff_t> tap_offsets_;
  std::vector<double> tap_weights_;
  FilterStats stats_;
};

namespace reference {
// Serial snapshot, kept for testing the parallel read-out.
ImageF snapshot(const FilterState& state, double t_query);

// Direct superposition over events, one event at a time. Serial.
ImageF closed_form_oracle(std::span<const Event> events, const Kernel& k, const FilterParams& params,
                          const SensorGeometry& geom, double t_query);
}  // namespace reference

// High-pass state built from scratch as a sum of decayed kernel impulses:
//   out(p) = sum_i sigma_i c K(p - p_i) exp(-alpha (t_query - t_i))
// over events with t_i <= t_query. No incremental state. Parallel over rows.
ImageF closed_form_oracle(std::span<const Event> events, const Kernel& k, const FilterParams& params,
                          const SensorGeometry& geom, double t_query);

// Channels sharing a geometry and contrast threshold; independent kernels and
// cutoffs. Channels may be driven by separate workers.
class FilterBank {
 public:
  FilterBank(SensorGeometry geom, ContrastThreshold c, OrderPolicy policy = OrderPolicy::Strict);

  // Adds a channel; alpha defaults to 2*pi rad/s.
  FilterState& add_channel(Kernel k, double alpha = kDefaultAlpha);

  std::size_t size() const { return channels_.size(); }
  FilterState& operator[](std::size_t i) { return channels_[i]; }
  const FilterState& operator[](std::size_t i) const { return channels_[i]; }
  const SensorGeometry& geometry() const { return geom_; }
  ContrastThreshold contrast() const { return c_; }
  OrderPolicy policy() const { return policy_; }

  // Feeds the events to every channel, channels in parallel. Callers validate
  // the stream first; see validate_stream.
  void process(std::span<const Event> events);

 private:
  SensorGeometry geom_;
  ContrastThreshold c_;
  OrderPolicy policy_;
  std::vector<FilterState> channels_;
};

struct Sample {
  double t = 0.0;
  std::vector<ImageF> channels;  // one snapshot per bank channel
};

// Interleaves events with sample times. A sample at t sees every event with
// t_i <= t. Events past the last sample are still consumed.
std::vector<Sample> process_stream(FilterBank& bank, std::span<const Event> events,
                                   std::span<const double> sample_times);

// Validates bounds (and ordering under Strict) for a whole stream, naming the
// offending event index. Used before parallel processing.
void validate_stream(std::span<const Event> events, const SensorGeometry& geom, OrderPolicy policy);

}  // namespace evconv

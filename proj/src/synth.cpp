#include "evconv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace evconv {
namespace {

// Crossings closer than this fraction of c to a level still fire, so a step
// of exactly n*c produces n events despite rounding in log().
constexpr double kLevelSlack = 1e-9;

ImageF log_image(const ImageF& intensity) {
  ImageF out(intensity.geometry());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(intensity[i]);
  return out;
}

// Index j of the interval [t_j, t_{j+1}] holding t.
std::size_t interval_of(const FrameSequence& seq, double t) {
  const auto& f = seq.frames;
  auto it = std::upper_bound(f.begin(), f.end(), t,
                             [](double v, const Frame& fr) { return v < fr.t; });
  std::size_t j = it == f.begin() ? 0 : static_cast<std::size_t>(it - f.begin()) - 1;
  return std::min(j, f.size() - 2);
}

}  // namespace

void FrameSequence::validate() const {
  if (frames.size() < 2) throw ContractError("frame sequence needs at least 2 frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!(frames[i].intensity.geometry() == geom)) {
      throw ContractError("frame " + std::to_string(i) + " geometry differs from the sequence");
    }
    if (i > 0 && !(frames[i].t > frames[i - 1].t)) {
      throw ContractError("frame timestamps must be strictly increasing");
    }
    for (double v : frames[i].intensity.values()) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ContractError("frame " + std::to_string(i) + " has a non-positive intensity");
      }
    }
  }
}

std::vector<Event> generate_events(const FrameSequence& seq, ContrastThreshold contrast) {
  seq.validate();
  const double c = contrast.value();
  const int w = seq.geom.width;
  const int h = seq.geom.height;

  std::vector<ImageF> logs;
  logs.reserve(seq.frames.size());
  for (const auto& f : seq.frames) logs.push_back(log_image(f.intensity));

  std::vector<std::vector<Event>> rows(static_cast<std::size_t>(h));
#pragma omp parallel for schedule(dynamic, 1)
  for (int y = 0; y < h; ++y) {
    auto& out = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      const double base = logs.front()(x, y);
      long long level = 0;  // reference = base + level * c
      for (std::size_t j = 0; j + 1 < logs.size(); ++j) {
        const double a = logs[j](x, y);
        const double b = logs[j + 1](x, y);
        const double t0 = seq.frames[j].t;
        const double t1 = seq.frames[j + 1].t;
        if (b == a) continue;
        const Polarity pol = b > a ? Polarity::Positive : Polarity::Negative;
        const int dir = b > a ? 1 : -1;
        while (true) {
          const double target = base + static_cast<double>(level + dir) * c;
          const bool crossed = dir > 0 ? b >= target - kLevelSlack * c
                                       : b <= target + kLevelSlack * c;
          if (!crossed) break;
          double frac = (target - a) / (b - a);
          frac = std::clamp(frac, 0.0, 1.0);
          out.push_back({t0 + frac * (t1 - t0), x, y, pol});
          level += dir;
        }
      }
    }
  }

  std::vector<Event> events;
  for (auto& r : rows) events.insert(events.end(), r.begin(), r.end());
  std::sort(events.begin(), events.end(), [](const Event& l, const Event& r) {
    return std::make_tuple(l.t, l.y, l.x, static_cast<int>(l.polarity)) <
           std::make_tuple(r.t, r.y, r.x, static_cast<int>(r.polarity));
  });
  return events;
}

const std::vector<std::string>& test_sequence_names() {
  static const std::vector<std::string> names{"ramp", "translating_checkerboard",
                                              "gaussian_blob_orbit"};
  return names;
}

FrameSequence make_test_sequence(std::string_view name, const SensorGeometry& geom, int n_frames,
                                 double duration) {
  if (n_frames < 2) throw ContractError("test sequences need at least 2 frames");
  if (!(duration > 0.0)) throw ContractError("sequence duration must be positive");

  FrameSequence seq;
  seq.geom = geom;
  seq.frames.reserve(static_cast<std::size_t>(n_frames));
  const int w = geom.width;
  const int h = geom.height;

  for (int j = 0; j < n_frames; ++j) {
    const double t = duration * j / (n_frames - 1);
    const double phase = static_cast<double>(j) / (n_frames - 1);
    ImageF img(geom);
    if (name == "ramp") {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double base = 0.25 + 0.5 * (x + y) / static_cast<double>(w + h);
          img(x, y) = base * std::exp(phase);
        }
      }
    } else if (name == "translating_checkerboard") {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          // Floor division keeps the pattern continuous across x - j < 0.
          const int cx = static_cast<int>(std::floor((x - j) / static_cast<double>(kCheckerSquare)));
          const int cy = y / kCheckerSquare;
          img(x, y) = ((cx + cy) % 2 == 0) ? 0.8 : 0.2;
        }
      }
    } else if (name == "gaussian_blob_orbit") {
      const double m = std::min(w, h);
      const double sigma = std::max(1.0, m / 10.0);
      const double radius = m / 4.0;
      const double angle = 2.0 * std::numbers::pi * phase;
      const double cx = (w - 1) / 2.0 + radius * std::cos(angle);
      const double cy = (h - 1) / 2.0 + radius * std::sin(angle);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          img(x, y) = 0.3 + std::exp(-r2 / (2.0 * sigma * sigma));
        }
      }
    } else {
      std::string valid;
      for (const auto& n : test_sequence_names()) valid += (valid.empty() ? "" : ", ") + n;
      throw ContractError("unknown test sequence '" + std::string(name) + "'; valid: " + valid);
    }
    seq.frames.push_back({t, std::move(img)});
  }
  return seq;
}

std::vector<Pixel> checkerboard_crossings(const SensorGeometry& geom, int frame_index) {
  std::vector<Pixel> out;
  const int s = kCheckerSquare;
  const int first_x = ((frame_index % s) + s) % s;
  for (int y = s; y < geom.height; y += s) {
    for (int x = first_x; x < geom.width; x += s) {
      if (x > 0) out.push_back({x, y});
    }
  }
  return out;
}

ImageF log_intensity_at(const FrameSequence& seq, double t) {
  seq.validate();
  t = std::clamp(t, seq.frames.front().t, seq.frames.back().t);
  const std::size_t j = interval_of(seq, t);
  const auto& f0 = seq.frames[j];
  const auto& f1 = seq.frames[j + 1];
  const double u = (t - f0.t) / (f1.t - f0.t);
  ImageF out(seq.geom);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = std::log(f0.intensity[i]);
    const double b = std::log(f1.intensity[i]);
    out[i] = a + u * (b - a);
  }
  return out;
}

ImageF high_pass_log_at(const FrameSequence& seq, double alpha, double t) {
  seq.validate();
  if (!(alpha > 0.0)) throw ContractError("alpha must be positive");
  ImageF g(seq.geom);
  if (t <= seq.frames.front().t) return g;
  // Within an interval of length dt the input slope s is constant, so
  //   g(t0 + dt) = exp(-alpha dt) g(t0) + s (1 - exp(-alpha dt)) / alpha.
  ImageF prev_log = log_image(seq.frames.front().intensity);
  for (std::size_t j = 0; j + 1 < seq.frames.size(); ++j) {
    const double t0 = seq.frames[j].t;
    const double t1 = seq.frames[j + 1].t;
    if (t <= t0) break;
    const double end = std::min(t, t1);
    const double dt = end - t0;
    const double decay = std::exp(-alpha * dt);
    const double gain = -std::expm1(-alpha * dt) / alpha;
    ImageF next_log = log_image(seq.frames[j + 1].intensity);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double slope = (next_log[i] - prev_log[i]) / (t1 - t0);
      g[i] = decay * g[i] + slope * gain;
    }
    prev_log = std::move(next_log);
  }
  return g;
}

}  // namespace evconv

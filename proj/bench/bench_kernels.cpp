// Serial reference vs OpenMP kernels, plus per-event update cost by kernel.
//
//   evconv_bench [width height events]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "evconv/filter.hpp"
#include "evconv/harris.hpp"
#include "evconv/kernel.hpp"

using namespace evconv;
using Clock = std::chrono::steady_clock;

namespace {

template <typename Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto start = Clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - start).count());
  }
  return best;
}

std::vector<Event> random_events(const SensorGeometry& g, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ux(0, g.width - 1);
  std::uniform_int_distribution<int> uy(0, g.height - 1);
  std::bernoulli_distribution pol(0.5);
  std::vector<Event> ev(n);
  double t = 0.0;
  for (auto& e : ev) {
    t += 1e-6;
    e = {t, ux(rng), uy(rng), pol(rng) ? Polarity::Positive : Polarity::Negative};
  }
  return ev;
}

void report(const char* what, double serial, double parallel) {
  std::printf("%-22s serial %9.3f ms   openmp %9.3f ms   speedup %5.2fx\n", what, serial * 1e3,
              parallel * 1e3, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int width = argc > 1 ? std::atoi(argv[1]) : 640;
  const int height = argc > 2 ? std::atoi(argv[2]) : 480;
  const std::size_t n_events = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 2000000;
  const SensorGeometry geom(width, height);
  const FilterParams params(kDefaultAlpha, ContrastThreshold(0.1));
  const auto events = random_events(geom, n_events, 7);
  const double t_end = events.empty() ? 1.0 : events.back().t;

  std::printf("sensor %dx%d, %zu events, %d OpenMP threads\n\n", width, height, n_events,
              omp_get_max_threads());

  std::printf("per-event update (single writer)\n");
  double identity_ns = 0.0;
  for (const char* name : {"identity", "sobel_x", "laplacian", "gaussian3", "box3"}) {
    const Kernel k = make_kernel(name);
    const double secs = best_of(3, [&] {
      FilterState s(geom, k, params);
      for (const Event& e : events) s.process_event(e);
    });
    const double ns = secs * 1e9 / static_cast<double>(n_events);
    if (identity_ns == 0.0) identity_ns = ns;
    std::printf("  %-10s nnz %zu  %7.2f ns/event  %6.2f ns/event/nnz  %6.2f Mev/s  x%.2f vs identity\n",
                name, k.nonzero_count(), ns, ns / static_cast<double>(k.nonzero_count()),
                1e3 / ns, ns / identity_ns);
  }
  std::printf("\n");

  FilterState state(geom, make_kernel("sobel_x"), params);
  for (const Event& e : events) state.process_event(e);
  report("snapshot", best_of(5, [&] { (void)reference::snapshot(state, t_end + 0.5); }),
         best_of(5, [&] { (void)state.snapshot(t_end + 0.5); }));

  const ImageF img = state.snapshot(t_end + 0.5);
  const Kernel g3 = make_kernel("gaussian3");
  report("convolve_dense 3x3", best_of(5, [&] { (void)reference::convolve_dense(img, g3); }),
         best_of(5, [&] { (void)convolve_dense(img, g3); }));

  const ImageF gy = convolve_dense(img, make_kernel("sobel_y"));
  const Kernel box = make_kernel("box3");
  report("harris dense",
         best_of(5, [&] { (void)reference::harris_response_dense(img, gy, box, 0.04); }),
         best_of(5, [&] { (void)harris_response_dense(img, gy, box, 0.04); }));

  const std::span<const Event> head(events.data(), std::min<std::size_t>(events.size(), 200000));
  const double t_head = head.empty() ? 0.0 : head.back().t;
  report("closed-form oracle",
         best_of(2, [&] { (void)reference::closed_form_oracle(head, g3, params, geom, t_head); }),
         best_of(2, [&] { (void)closed_form_oracle(head, g3, params, geom, t_head); }));
  return 0;
}

#include "evconv/poisson.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

namespace evconv {
namespace {

// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(double* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<double, FftwFree>;

FftwBuffer fftw_buffer(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer(p);
}

// 2D real-to-real transform of kind `kind` on both axes, row-major h x w.
void r2r_2d(int h, int w, double* in, double* out, fftw_r2r_kind kind) {
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_r2r_2d(h, w, in, out, kind, kind, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

double mean_of(const ImageF& img) {
  double s = 0.0;
  for (double v : img.values()) s += v;
  return s / static_cast<double>(img.size());
}

}  // namespace

GradientField forward_gradients(const ImageF& u) {
  GradientField g{ImageF(u.geometry()), ImageF(u.geometry())};
  for (int y = 0; y < u.height(); ++y) {
    for (int x = 0; x < u.width(); ++x) {
      if (x + 1 < u.width()) g.gx(x, y) = u(x + 1, y) - u(x, y);
      if (y + 1 < u.height()) g.gy(x, y) = u(x, y + 1) - u(x, y);
    }
  }
  return g;
}

ImageF divergence(const ImageF& gx, const ImageF& gy) {
  require_same_geometry(gx, gy, "divergence");
  const int w = gx.width();
  const int h = gx.height();
  ImageF out(gx.geometry());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double east = x + 1 < w ? gx(x, y) : 0.0;
      const double west = x > 0 ? gx(x - 1, y) : 0.0;
      const double south = y + 1 < h ? gy(x, y) : 0.0;
      const double north = y > 0 ? gy(x, y - 1) : 0.0;
      out(x, y) = (east - west) + (south - north);
    }
  }
  return out;
}

ImageF laplacian_neumann(const ImageF& u) {
  const int w = u.width();
  const int h = u.height();
  ImageF out(u.geometry());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = u(x, y);
      const double l = x > 0 ? u(x - 1, y) : c;
      const double r = x + 1 < w ? u(x + 1, y) : c;
      const double t = y > 0 ? u(x, y - 1) : c;
      const double b = y + 1 < h ? u(x, y + 1) : c;
      out(x, y) = (l - c) + (r - c) + (t - c) + (b - c);
    }
  }
  return out;
}

ImageF solve_poisson(const ImageF& rhs) {
  const int w = rhs.width();
  const int h = rhs.height();
  const std::size_t n = rhs.size();
  auto in = fftw_buffer(n);
  auto spec = fftw_buffer(n);
  std::copy(rhs.values().begin(), rhs.values().end(), in.get());

  r2r_2d(h, w, in.get(), spec.get(), FFTW_REDFT10);

  // Eigenvalues of the 1D Neumann second difference: -4 sin^2(pi k / 2n).
  std::vector<double> lx(static_cast<std::size_t>(w));
  std::vector<double> ly(static_cast<std::size_t>(h));
  for (int k = 0; k < w; ++k) {
    const double s = std::sin(std::numbers::pi * k / (2.0 * w));
    lx[static_cast<std::size_t>(k)] = -4.0 * s * s;
  }
  for (int k = 0; k < h; ++k) {
    const double s = std::sin(std::numbers::pi * k / (2.0 * h));
    ly[static_cast<std::size_t>(k)] = -4.0 * s * s;
  }
  // REDFT10 followed by REDFT01 scales by 4*w*h.
  const double norm = 1.0 / (4.0 * static_cast<double>(w) * h);
  double* s = spec.get();
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      const std::size_t i = static_cast<std::size_t>(ky) * w + kx;
      const double lambda = lx[static_cast<std::size_t>(kx)] + ly[static_cast<std::size_t>(ky)];
      s[i] = (kx == 0 && ky == 0) ? 0.0 : s[i] * norm / lambda;
    }
  }

  r2r_2d(h, w, spec.get(), in.get(), FFTW_REDFT01);

  ImageF u(rhs.geometry(), std::vector<double>(in.get(), in.get() + n));
  const double m = mean_of(u);
  for (double& v : u.values()) v -= m;
  return u;
}

ImageF reconstruct_from_gradients(const ImageF& gx, const ImageF& gy) {
  return solve_poisson(divergence(gx, gy));
}

ImageF curl(const ImageF& gx, const ImageF& gy) {
  require_same_geometry(gx, gy, "curl");
  ImageF out(gx.geometry());
  for (int y = 0; y + 1 < gx.height(); ++y) {
    for (int x = 0; x + 1 < gx.width(); ++x) {
      out(x, y) = (gy(x + 1, y) - gy(x, y)) - (gx(x, y + 1) - gx(x, y));
    }
  }
  return out;
}

double gradient_misfit_rms(const ImageF& u, const ImageF& gx, const ImageF& gy) {
  require_same_geometry(u, gx, "gradient_misfit_rms");
  require_same_geometry(gx, gy, "gradient_misfit_rms");
  const GradientField g = forward_gradients(u);
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < u.height(); ++y) {
    for (int x = 0; x < u.width(); ++x) {
      if (x + 1 < u.width()) {
        const double d = g.gx(x, y) - gx(x, y);
        sum += d * d;
        ++count;
      }
      if (y + 1 < u.height()) {
        const double d = g.gy(x, y) - gy(x, y);
        sum += d * d;
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(count));
}

}  // namespace evconv

#include "evconv/kernel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace evconv {

Kernel::Kernel(int radius_x, int radius_y, std::vector<double> coeffs, std::string name)
    : rx_(radius_x), ry_(radius_y), coeffs_(std::move(coeffs)), name_(std::move(name)) {
  if (rx_ < 0 || ry_ < 0) throw ContractError("kernel radii must be non-negative");
  if (coeffs_.size() != static_cast<std::size_t>(width()) * height()) {
    throw ContractError("kernel '" + name_ + "' has " + std::to_string(coeffs_.size()) +
                        " coefficients, expected " + std::to_string(width() * height()));
  }
  bool any_nonzero = false;
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw ContractError("kernel '" + name_ + "' has a non-finite coefficient");
    any_nonzero = any_nonzero || c != 0.0;
  }
  if (!any_nonzero) throw ContractError("kernel '" + name_ + "' is identically zero");
}

double Kernel::sum() const {
  double s = 0.0;
  for (double c : coeffs_) s += c;
  return s;
}

std::size_t Kernel::nonzero_count() const {
  std::size_t n = 0;
  for (double c : coeffs_) n += c != 0.0;
  return n;
}

const std::vector<std::string>& builtin_kernel_names() {
  static const std::vector<std::string> names{"identity", "gaussian3", "sobel_x",
                                              "sobel_y",  "laplacian", "box3"};
  return names;
}

Kernel make_kernel(std::string_view name) {
  if (name == "identity") return Kernel(0, 0, {1.0}, "identity");
  if (name == "gaussian3") {
    std::vector<double> c{1, 2, 1, 2, 4, 2, 1, 2, 1};
    for (double& v : c) v /= 16.0;
    return Kernel(1, 1, std::move(c), "gaussian3");
  }
  if (name == "sobel_x") return Kernel(1, 1, {-1, 0, 1, -2, 0, 2, -1, 0, 1}, "sobel_x");
  if (name == "sobel_y") return Kernel(1, 1, {-1, -2, -1, 0, 0, 0, 1, 2, 1}, "sobel_y");
  if (name == "laplacian") return Kernel(1, 1, {0, 1, 0, 1, -4, 1, 0, 1, 0}, "laplacian");
  if (name == "box3") return Kernel(1, 1, std::vector<double>(9, 1.0 / 9.0), "box3");

  std::string valid;
  for (const auto& n : builtin_kernel_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ContractError("unknown kernel '" + std::string(name) + "'; valid kernels: " + valid);
}

Kernel parse_kernel_text(std::string_view text, std::string name) {
  std::istringstream in{std::string(text)};
  int w = 0;
  int h = 0;
  if (!(in >> w >> h)) throw ParseError("kernel file: missing 'w h' header");
  if (w < 1 || h < 1 || w % 2 == 0 || h % 2 == 0) {
    throw ParseError("kernel file: dimensions must be odd and positive, got " + std::to_string(w) +
                     "x" + std::to_string(h));
  }
  std::vector<double> coeffs;
  coeffs.reserve(static_cast<std::size_t>(w) * h);
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ParseError("kernel file: bad coefficient '" + tok + "'");
    }
    coeffs.push_back(v);
  }
  if (coeffs.size() != static_cast<std::size_t>(w) * h) {
    throw ParseError("kernel file: expected " + std::to_string(w * h) + " coefficients, got " +
                     std::to_string(coeffs.size()));
  }
  return Kernel(w / 2, h / 2, std::move(coeffs), std::move(name));
}

Kernel load_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open kernel file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto stem = path.substr(path.find_last_of('/') + 1);
  stem = stem.substr(0, stem.find('.'));
  return parse_kernel_text(buf.str(), stem);
}

ConvolvedEvent expand_event(const Event& e, const Kernel& k, ContrastThreshold c,
                            const SensorGeometry& geom) {
  if (!geom.contains(e.x, e.y)) {
    throw BoundsError("event at (" + std::to_string(e.x) + ", " + std::to_string(e.y) +
                      ") outside sensor");
  }
  ConvolvedEvent out;
  out.t = e.t;
  const double scale = sign(e.polarity) * c.value();
  out.entries.reserve(k.nonzero_count());
  for_each_tap(k, e.x, e.y, geom, [&](int x, int y, double w) {
    out.entries.push_back({{x, y}, scale * w});
  });
  return out;
}

ImageF convolve_dense(const ImageF& img, const Kernel& k) {
  const int w = img.width();
  const int h = img.height();
  const int rx = k.radius_x();
  const int ry = k.radius_y();
  ImageF out(img.geometry());
  // Gather form: out(x, y) = sum over d of K(d) * img(x - dx, y - dy).
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -ry; dy <= ry; ++dy) {
        const int sy = y - dy;
        if (sy < 0 || sy >= h) continue;
        for (int dx = -rx; dx <= rx; ++dx) {
          const int sx = x - dx;
          if (sx < 0 || sx >= w) continue;
          acc += k.at(dx, dy) * img(sx, sy);
        }
      }
      out(x, y) = acc;
    }
  }
  return out;
}

namespace reference {

ImageF convolve_dense(const ImageF& img, const Kernel& k) {
  // Scatter every source pixel through the kernel, same rule as expand_event.
  ImageF out(img.geometry());
  const auto& geom = img.geometry();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double v = img(x, y);
      if (v == 0.0) continue;
      for_each_tap(k, x, y, geom, [&](int px, int py, double w) { out(px, py) += w * v; });
    }
  }
  return out;
}

}  // namespace reference
}  // namespace evconv

#include <catch_amalgamated.hpp>

#include <map>
#include <random>

#include "evconv/kernel.hpp"
#include "test_util.hpp"

using namespace evconv;
using Catch::Matchers::WithinAbs;

namespace {

// out(p) = sum_q K(q) img(p - q) written out literally over every (p, q) pair.
ImageF brute_force_convolve(const ImageF& img, const Kernel& k) {
  ImageF out(img.geometry());
  for (int py = 0; py < img.height(); ++py) {
    for (int px = 0; px < img.width(); ++px) {
      double acc = 0.0;
      for (int qy = -k.radius_y(); qy <= k.radius_y(); ++qy) {
        for (int qx = -k.radius_x(); qx <= k.radius_x(); ++qx) {
          const int sx = px - qx;
          const int sy = py - qy;
          if (sx >= 0 && sy >= 0 && sx < img.width() && sy < img.height()) {
            acc += k.at(qx, qy) * img(sx, sy);
          }
        }
      }
      out(px, py) = acc;
    }
  }
  return out;
}

std::map<std::pair<int, int>, double> as_map(const ConvolvedEvent& ce) {
  std::map<std::pair<int, int>, double> m;
  for (const auto& e : ce.entries) m[{e.p.x, e.p.y}] = e.value;
  return m;
}

}  // namespace

TEST_CASE("built-in kernels", "[kernels]") {
  const Kernel id = make_kernel("identity");
  CHECK(id.width() == 1);
  CHECK(id.height() == 1);
  CHECK(id.at(0, 0) == 1.0);

  CHECK_THAT(make_kernel("gaussian3").sum(), WithinAbs(1.0, 1e-15));
  CHECK_THAT(make_kernel("box3").sum(), WithinAbs(1.0, 1e-15));
  CHECK(make_kernel("sobel_x").sum() == 0.0);
  CHECK(make_kernel("sobel_y").sum() == 0.0);
  CHECK(make_kernel("laplacian").sum() == 0.0);
  CHECK(make_kernel("laplacian").at(0, 0) == -4.0);
  CHECK(make_kernel("gaussian3").nonzero_count() == 9);
  CHECK(make_kernel("sobel_x").nonzero_count() == 6);
  CHECK(make_kernel("laplacian").nonzero_count() == 5);

  const Kernel sx = make_kernel("sobel_x");
  const Kernel sy = make_kernel("sobel_y");
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) CHECK(sy.at(dx, dy) == sx.at(dy, dx));
  }
}

TEST_CASE("unknown kernel lists valid names", "[kernels]") {
  CHECK_THROWS_AS(make_kernel("sharpen"), ContractError);
  CHECK_THROWS_WITH(make_kernel("sharpen"), Catch::Matchers::ContainsSubstring("gaussian3"));
  CHECK_THROWS_WITH(make_kernel("sharpen"), Catch::Matchers::ContainsSubstring("laplacian"));
}

TEST_CASE("kernel construction invariants and file format", "[kernels]") {
  CHECK_THROWS_AS(Kernel(1, 1, std::vector<double>(9, 0.0)), ContractError);
  CHECK_THROWS_AS(Kernel(1, 1, std::vector<double>(8, 1.0)), ContractError);

  const Kernel k = parse_kernel_text("3 1\n1 -2 1\n", "dxx");
  CHECK(k.radius_x() == 1);
  CHECK(k.radius_y() == 0);
  CHECK(k.at(-1, 0) == 1.0);
  CHECK(k.at(0, 0) == -2.0);
  CHECK(k.name() == "dxx");
  CHECK_THROWS_AS(parse_kernel_text("2 2\n1 1\n1 1\n"), ParseError);
  CHECK_THROWS_AS(parse_kernel_text("3 1\n1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_kernel_text("3 1\n1 x 2\n"), ParseError);
}

TEST_CASE("expand_event with the identity kernel", "[kernels]") {
  const auto ce = expand_event({1.0, 10, 20, Polarity::Positive}, make_kernel("identity"),
                               ContrastThreshold(0.1), SensorGeometry(64, 64));
  REQUIRE(ce.entries.size() == 1);
  CHECK(ce.t == 1.0);
  CHECK(ce.entries[0].p == Pixel{10, 20});
  CHECK(ce.entries[0].value == 0.1);
}

TEST_CASE("expand_event with sobel_x matches the brute-force delta convolution", "[kernels]") {
  const SensorGeometry g(11, 11);
  const Kernel sx = make_kernel("sobel_x");
  const auto ce = expand_event({0.0, 5, 5, Polarity::Positive}, sx, ContrastThreshold(1.0), g);

  // Frozen from brute_force_convolve of a unit impulse at (5, 5).
  const std::map<std::pair<int, int>, double> frozen{
      {{4, 4}, -1.0}, {{6, 4}, 1.0}, {{4, 5}, -2.0}, {{6, 5}, 2.0}, {{4, 6}, -1.0}, {{6, 6}, 1.0}};
  CHECK(as_map(ce) == frozen);

  ImageF delta(g);
  delta(5, 5) = 1.0;
  const ImageF oracle = brute_force_convolve(delta, sx);
  std::map<std::pair<int, int>, double> nonzero;
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 11; ++x) {
      if (oracle(x, y) != 0.0) nonzero[{x, y}] = oracle(x, y);
    }
  }
  CHECK(nonzero == frozen);
}

TEST_CASE("expand_event truncates at the sensor border", "[kernels]") {
  const SensorGeometry g(16, 12);
  for (const auto& name : builtin_kernel_names()) {
    const Kernel k = make_kernel(name);
    for (const Pixel corner : {Pixel{0, 0}, Pixel{15, 0}, Pixel{0, 11}, Pixel{15, 11}}) {
      const auto ce = expand_event({0.0, corner.x, corner.y, Polarity::Negative}, k,
                                   ContrastThreshold(0.2), g);
      CHECK(ce.entries.size() <= 4);
      for (const auto& e : ce.entries) {
        CHECK(g.contains(e.p.x, e.p.y));
        CHECK(e.value != 0.0);
      }
    }
  }
  CHECK_THROWS_AS(expand_event({0.0, 16, 0, Polarity::Positive}, make_kernel("identity"),
                               ContrastThreshold(0.1), g),
                  BoundsError);
}

TEST_CASE("expand_event scatter equals dense convolution of a scaled delta", "[kernels][property]") {
  std::mt19937_64 rng(99);
  const SensorGeometry g(9, 7);
  std::uniform_int_distribution<int> ux(0, 8);
  std::uniform_int_distribution<int> uy(0, 6);
  for (const auto& name : builtin_kernel_names()) {
    const Kernel k = make_kernel(name);
    for (int trial = 0; trial < 40; ++trial) {
      const Event e{0.5, ux(rng), uy(rng), (rng() & 1) ? Polarity::Positive : Polarity::Negative};
      const ContrastThreshold c(0.137);
      ImageF scattered(g);
      for (const auto& entry : expand_event(e, k, c, g).entries) scattered(entry.p.x, entry.p.y) += entry.value;
      ImageF delta(g);
      delta(e.x, e.y) = sign(e.polarity) * c.value();
      CHECK(scattered == convolve_dense(delta, k));
    }
  }
}

TEST_CASE("interior expansion sums to sigma*c*sum(K)", "[kernels]") {
  const SensorGeometry g(20, 20);
  for (const auto& name : builtin_kernel_names()) {
    const Kernel k = make_kernel(name);
    const auto ce = expand_event({0.0, 10, 10, Polarity::Negative}, k, ContrastThreshold(0.25), g);
    double s = 0.0;
    for (const auto& e : ce.entries) s += e.value;
    CHECK_THAT(s, WithinAbs(-0.25 * k.sum(), 1e-15));
    CHECK(ce.entries.size() == k.nonzero_count());
  }
}

TEST_CASE("convolve_dense impulse response and identity", "[kernels]") {
  const ImageF img = test::random_image(SensorGeometry(13, 9), 4);
  CHECK(convolve_dense(img, make_kernel("identity")) == img);

  ImageF delta(16, 16);
  delta(8, 8) = 1.0;
  const Kernel g3 = make_kernel("gaussian3");
  const ImageF out = convolve_dense(delta, g3);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const bool inside = std::abs(x - 8) <= 1 && std::abs(y - 8) <= 1;
      CHECK(out(x, y) == (inside ? g3.at(x - 8, y - 8) : 0.0));
    }
  }
}

TEST_CASE("convolve_dense is linear", "[kernels][property]") {
  for (int trial = 0; trial < 20; ++trial) {
    const ImageF a = test::random_image(SensorGeometry(8, 8), 100 + trial);
    const ImageF b = test::random_image(SensorGeometry(8, 8), 200 + trial);
    const double sa = 0.3 + trial;
    const double sb = -1.7;
    ImageF mix(a.geometry());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = sa * a[i] + sb * b[i];
    for (const auto& name : builtin_kernel_names()) {
      const Kernel k = make_kernel(name);
      const ImageF lhs = convolve_dense(mix, k);
      const ImageF ca = convolve_dense(a, k);
      const ImageF cb = convolve_dense(b, k);
      for (std::size_t i = 0; i < lhs.size(); ++i) {
        CHECK_THAT(lhs[i], WithinAbs(sa * ca[i] + sb * cb[i], 1e-12 * (1.0 + std::abs(lhs[i]))));
      }
    }
  }
}

TEST_CASE("parallel, scatter and brute-force convolutions agree", "[kernels]") {
  const ImageF img = test::random_image(SensorGeometry(37, 23), 8);
  for (const auto& name : builtin_kernel_names()) {
    const Kernel k = make_kernel(name);
    const ImageF fast = convolve_dense(img, k);
    const ImageF ref = reference::convolve_dense(img, k);
    const ImageF brute = brute_force_convolve(img, k);
    CHECK(test::max_abs_diff(fast, brute) == 0.0);
    CHECK(test::max_abs_diff(fast, ref) <= 1e-14);
  }
}

TEST_CASE("sobel_x on I equals transposed sobel_y on transposed I", "[kernels][property]") {
  const ImageF img = test::random_image(SensorGeometry(12, 7), 21);
  const ImageF gx = convolve_dense(img, make_kernel("sobel_x"));
  const ImageF gyt = convolve_dense(test::transpose(img), make_kernel("sobel_y"));
  // Same products, different summation order.
  CHECK(test::max_abs_diff(gx, test::transpose(gyt)) <= 1e-14);
}

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "evconv/cli.hpp"
#include "evconv/io.hpp"
#include "evconv/synth.hpp"
#include "test_util.hpp"

using namespace evconv;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("evconv_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "evconv");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_synth(const fs::path& dir, const std::string& name, int w, int h, int frames) {
  cli::SynthConfig cfg;
  cfg.name = name;
  cfg.width = w;
  cfg.height = h;
  cfg.frames = frames;
  cfg.output = (dir / (name + ".txt")).string();
  std::ostringstream log;
  cli::run_synth(cfg, log);
  return cfg.output;
}

}  // namespace

TEST_CASE("sample time resolution", "[cli]") {
  cli::RunConfig cfg;
  cfg.sample_rate = 10.0;
  const std::vector<Event> ev{{0.25, 0, 0, Polarity::Positive}};
  CHECK(cli::resolve_sample_times(cfg, ev) == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(cli::resolve_sample_times(cfg, {}) == std::vector<double>{0.1});
  cfg.sample_times = {0.5, 0.2};
  CHECK_THROWS_AS(cli::resolve_sample_times(cfg, ev), ContractError);
}

TEST_CASE("auto normalisation and corner line format", "[cli]") {
  ImageF img(2, 1);
  img(0, 0) = -0.5;
  img(1, 0) = 0.25;
  CHECK(cli::auto_norm(img) == std::pair{-0.5, 0.5});
  CHECK(cli::auto_norm(ImageF(3, 3)) == std::pair{-1.0, 1.0});
  CHECK(cli::format_corner_line({{12, 34}, 0.5, 1.0 / 3.0}) == "0.5 12 34 0.333333333");
}

TEST_CASE("filter on a ramp matches the closed form", "[cli]") {
  const auto dir = scratch_dir("ramp");
  const auto events_path = write_synth(dir, "ramp", 24, 16, 11);
  const int rc = run_cli({"filter", "--input", events_path.string(), "--output-dir", (dir / "out").string(),
                          "--width", "24", "--height", "16", "--kernel", "identity", "--sample-times",
                          "0.5,1.0"});
  REQUIRE(rc == 0);
  const auto events = read_event_file(events_path.string(), SensorGeometry(24, 16));
  const FilterParams params(kDefaultAlpha, ContrastThreshold(0.1));
  const std::vector<double> times{0.5, 1.0};
  for (std::size_t s = 0; s < times.size(); ++s) {
    const ImageF raw = read_snapshot_raw_file((dir / "out" / ("identity_" + std::to_string(s) + ".evcr")).string());
    std::vector<Event> prefix;
    for (const Event& e : events) {
      if (e.t <= times[s]) prefix.push_back(e);
    }
    const ImageF oracle = closed_form_oracle(prefix, make_kernel("identity"), params, SensorGeometry(24, 16), times[s]);
    CHECK(test::max_abs(oracle) > 0.0);
    // Raw snapshots hold 32-bit floats.
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double tol = 1e-9 + std::abs(oracle[i]) * std::numeric_limits<float>::epsilon();
      CHECK(std::abs(raw[i] - oracle[i]) <= tol);
    }
    CHECK(fs::exists(dir / "out" / ("identity_" + std::to_string(s) + ".pgm")));
  }
}

TEST_CASE("empty event file gives zero snapshots", "[cli]") {
  const auto dir = scratch_dir("empty");
  std::ofstream(dir / "empty.txt") << "# nothing\n";
  REQUIRE(run_cli({"filter", "--input", (dir / "empty.txt").string(), "--output-dir", dir.string(),
                   "--width", "8", "--height", "6", "--kernel", "sobel_x", "--kernel", "laplacian"}) == 0);
  for (const char* name : {"sobel_x_0.evcr", "laplacian_0.evcr"}) {
    const ImageF raw = read_snapshot_raw_file((dir / name).string());
    CHECK(raw == ImageF(8, 6));
  }
}

TEST_CASE("unknown kernel fails with the valid list", "[cli]") {
  const auto dir = scratch_dir("badkernel");
  std::ofstream(dir / "e.txt") << "0.1 1 1 1\n";
  std::ostringstream err;
  auto* old = std::cerr.rdbuf(err.rdbuf());
  const int rc = run_cli({"filter", "--input", (dir / "e.txt").string(), "--output-dir", dir.string(),
                          "--width", "8", "--height", "8", "--kernel", "emboss"});
  std::cerr.rdbuf(old);
  CHECK(rc != 0);
  CHECK(err.str().find("gaussian3") != std::string::npos);
  CHECK(err.str().find("sobel_y") != std::string::npos);
}

TEST_CASE("custom kernel file", "[cli]") {
  const auto dir = scratch_dir("kfile");
  std::ofstream(dir / "dxx.txt") << "3 1\n1 -2 1\n";
  const Kernel k = cli::resolve_kernel((dir / "dxx.txt").string());
  CHECK(k.name() == "dxx");
  CHECK(k.at(0, 0) == -2.0);
}

TEST_CASE("corners: infinite threshold gives empty files", "[cli]") {
  const auto dir = scratch_dir("inf");
  const auto events = write_synth(dir, "translating_checkerboard", 32, 32, 10);
  REQUIRE(run_cli({"corners", "--input", events.string(), "--output-dir", dir.string(), "--width", "32",
                   "--height", "32", "--sample-times", "0.5,1", "--threshold", "inf"}) == 0);
  CHECK(fs::file_size(dir / "corners_0.txt") == 0);
  CHECK(fs::file_size(dir / "corners_1.txt") == 0);
  CHECK(fs::exists(dir / "response_1.evcr"));
}

TEST_CASE("corners on a checkerboard are well formed", "[cli]") {
  const auto dir = scratch_dir("corners");
  const auto events = write_synth(dir, "translating_checkerboard", 48, 48, 20);
  REQUIRE(run_cli({"corners", "--input", events.string(), "--output-dir", dir.string(), "--width", "48",
                   "--height", "48", "--sample-times", "0.5,1"}) == 0);
  std::istringstream lines(slurp(dir / "corners_1.txt"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    std::istringstream f(line);
    double t, score;
    int x, y;
    REQUIRE(static_cast<bool>(f >> t >> x >> y >> score));
    CHECK(t == 1.0);
    CHECK(x >= 0);
    CHECK(x < 48);
    CHECK(y >= 0);
    CHECK(y < 48);
    CHECK(score > 0.0);
    ++n;
  }
  CHECK(n > 0);
}

TEST_CASE("reconstruct modes and errors", "[cli]") {
  const auto dir = scratch_dir("recon");
  write_snapshot_raw_file((dir / "zero.evcr").string(), ImageF(10, 8));
  write_snapshot_raw_file((dir / "other.evcr").string(), ImageF(9, 8));
  REQUIRE(run_cli({"reconstruct", "--input", (dir / "zero.evcr").string(), "--output-dir",
                   (dir / "lap").string()}) == 0);
  CHECK(read_snapshot_raw_file((dir / "lap" / "reconstruction.evcr").string()) == ImageF(10, 8));

  std::ostringstream err;
  auto* old = std::cerr.rdbuf(err.rdbuf());
  const int rc = run_cli({"reconstruct", "--mode", "gradients", "--input", (dir / "zero.evcr").string(),
                          "--input", (dir / "other.evcr").string(), "--output-dir", dir.string()});
  const int rc2 = run_cli({"reconstruct", "--mode", "gradients", "--input", (dir / "zero.evcr").string(),
                           "--output-dir", dir.string()});
  std::cerr.rdbuf(old);
  CHECK(rc != 0);
  CHECK(rc2 != 0);
  CHECK(err.str().find("geometry") != std::string::npos);
}

TEST_CASE("reconstruct from blob gradient channels", "[cli]") {
  const auto dir = scratch_dir("blob");
  const auto events = write_synth(dir, "gaussian_blob_orbit", 40, 40, 40);
  REQUIRE(run_cli({"filter", "--input", events.string(), "--output-dir", dir.string(), "--width", "40",
                   "--height", "40", "--kernel", "sobel_x", "--kernel", "sobel_y", "--sample-times", "0.6"}) == 0);
  std::ostringstream log;
  cli::ReconstructConfig rc;
  rc.mode = "gradients";
  rc.inputs = {(dir / "sobel_x_0.evcr").string(), (dir / "sobel_y_0.evcr").string()};
  rc.output_dir = dir.string();
  cli::run_reconstruct(rc, log);
  CHECK(log.str().find("curl") != std::string::npos);

  // The written image satisfies the normal equations of the least-squares fit.
  const ImageF u = read_snapshot_raw_file((dir / "reconstruction.evcr").string());
  CHECK(test::max_abs(u) > 0.0);
  CHECK(std::abs(std::accumulate(u.values().begin(), u.values().end(), 0.0)) / u.size() <= 1e-6);
}

TEST_CASE("bench rows and empty input", "[cli]") {
  cli::RunConfig cfg;
  cfg.width = 16;
  cfg.height = 16;
  cfg.kernels = {"identity", "gaussian3"};
  const auto ev = test::random_stream({SensorGeometry(16, 16), 500, 1.0, true}, 3);
  const auto rows = cli::run_bench(cfg, ev, cli::BenchOptions{3});
  CHECK(rows.size() == 6);
  CHECK(rows[3].kernel == "gaussian3");
  CHECK(rows[3].nonzeros == 9);
  std::ostringstream csv;
  cli::write_bench_csv(rows, csv);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);

  const auto none = cli::run_bench(cfg, {}, cli::BenchOptions{1});
  REQUIRE(none.size() == 2);
  CHECK(none[0].events_per_s == 0.0);
  CHECK(none[0].ns_per_event == 0.0);
}

TEST_CASE("synth output is deterministic", "[cli]") {
  const auto dir = scratch_dir("synth");
  const auto a = dir / "a.txt";
  const auto b = dir / "b.txt";
  for (const auto& p : {a, b}) {
    REQUIRE(run_cli({"synth", "--name", "ramp", "--width", "20", "--height", "10", "--frames", "9",
                     "--output", p.string()}) == 0);
  }
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).size() > 100);
}

TEST_CASE("filter and corners are byte-identical across runs", "[cli]") {
  const auto dir = scratch_dir("determinism");
  const auto events = write_synth(dir, "gaussian_blob_orbit", 32, 24, 20);
  for (const char* run : {"r1", "r2"}) {
    REQUIRE(run_cli({"filter", "--input", events.string(), "--output-dir", (dir / run).string(), "--width",
                     "32", "--height", "24", "--kernel", "laplacian", "--sample-rate", "4"}) == 0);
    REQUIRE(run_cli({"corners", "--input", events.string(), "--output-dir", (dir / run).string(), "--width",
                     "32", "--height", "24", "--sample-rate", "4"}) == 0);
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "r1")) {
    CHECK(slurp(entry.path()) == slurp(dir / "r2" / entry.path().filename()));
    ++compared;
  }
  CHECK(compared >= 12);
}

TEST_CASE("bad arguments exit nonzero", "[cli]") {
  std::ostringstream err;
  auto* old = std::cerr.rdbuf(err.rdbuf());
  CHECK(run_cli({"filter", "--input", "/nonexistent/events.txt", "--kernel", "identity"}) != 0);
  CHECK(run_cli({"corners", "--input", "/nonexistent/events.txt", "--smoothing", "median"}) != 0);
  std::cerr.rdbuf(old);
  CHECK(err.str().find("evconv:") != std::string::npos);
}

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evconv/filter.hpp"
#include "evconv/harris.hpp"
#include "evconv/types.hpp"

namespace evconv::cli {

struct RunConfig {
  std::string input;
  std::string output_dir = ".";
  int width = 240;
  int height = 180;
  std::vector<std::string> kernels;   // built-in names or kernel file paths
  std::optional<double> alpha;        // rad/s; command-specific default
  double contrast = 0.1;
  double sample_rate = 10.0;          // Hz, used when sample_times is empty
  std::vector<double> sample_times;
  bool strict = true;
  std::optional<std::pair<double, double>> norm;  // PGM bounds; nullopt = symmetric auto
};

struct CornerOptions {
  std::optional<double> threshold;  // nullopt = 99th percentile of |R| at the first sample
  int nms_radius = 1;
  double gamma = 0.04;
  std::string smoothing = "box3";
};

struct ReconstructConfig {
  std::vector<std::string> inputs;
  std::string mode = "laplacian";  // laplacian | gradients
  std::string output_dir = ".";
  double gradient_scale = -0.125;   // maps Sobel channel snapshots to unit derivatives
  std::optional<std::pair<double, double>> norm;
};

struct BenchOptions {
  int repetitions = 3;
};

struct SynthConfig {
  std::string name;
  int width = 128;
  int height = 128;
  int frames = 100;
  double duration = 1.0;
  double contrast = 0.1;
  std::string output = "events.txt";
  std::string frames_dir;  // ground-truth log-intensity dumps; empty = skip
};

struct RunSummary {
  std::size_t events = 0;
  std::size_t samples = 0;
  double seconds = 0.0;
  double events_per_s = 0.0;
};

struct BenchRow {
  std::string kernel;
  int repetition = 0;
  std::size_t events = 0;
  std::size_t nonzeros = 0;
  double process_seconds = 0.0;
  double events_per_s = 0.0;
  double ns_per_event = 0.0;
  double ns_per_event_per_nonzero = 0.0;
  std::size_t oracle_samples = 0;
  double oracle_seconds_per_sample = 0.0;
};

// Sample instants for a run: the explicit list, or k / rate for k = 1..ceil(t_last * rate)
// (at least one).
std::vector<double> resolve_sample_times(const RunConfig& cfg, const std::vector<Event>& events);

// Loads a built-in kernel by name, or a kernel file when the argument names one.
Kernel resolve_kernel(const std::string& name_or_path);

// Symmetric +/- max|v| bounds (+/-1 for an all-zero image).
std::pair<double, double> auto_norm(const ImageF& img);

RunSummary run_filter(const RunConfig& cfg, std::ostream& log);
RunSummary run_corners(const RunConfig& cfg, const CornerOptions& opts, std::ostream& log);
void run_reconstruct(const ReconstructConfig& cfg, std::ostream& log);
std::vector<BenchRow> run_bench(const RunConfig& cfg, const std::vector<Event>& events,
                                const BenchOptions& opts);
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);
std::size_t run_synth(const SynthConfig& cfg, std::ostream& log);

// "t x y score", 9 significant digits.
std::string format_corner_line(const Corner& c);

// Full command-line entry point. Returns the process exit status.
int main(int argc, char** argv);

}  // namespace evconv::cli

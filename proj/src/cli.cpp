#include "evconv/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "evconv/io.hpp"
#include "evconv/kernel.hpp"
#include "evconv/poisson.hpp"
#include "evconv/synth.hpp"

namespace evconv::cli {
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

void write_snapshot_pair(const std::string& dir, const std::string& stem, const ImageF& img,
                         const std::optional<std::pair<double, double>>& norm) {
  const auto [lo, hi] = norm ? *norm : auto_norm(img);
  write_snapshot_pgm_file(join_path(dir, stem + ".pgm"), img, lo, hi);
  write_snapshot_raw_file(join_path(dir, stem + ".evcr"), img);
}

std::vector<Event> load_events(const RunConfig& cfg) {
  const SensorGeometry geom(cfg.width, cfg.height);
  return read_event_file(cfg.input, geom, ReadOptions{cfg.strict});
}

OrderPolicy policy_of(const RunConfig& cfg) {
  return cfg.strict ? OrderPolicy::Strict : OrderPolicy::Lenient;
}

std::pair<double, double> parse_norm(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ContractError("--norm expects 'auto' or 'lo,hi'");
  const double lo = std::stod(text.substr(0, comma));
  const double hi = std::stod(text.substr(comma + 1));
  if (!(hi > lo)) throw ContractError("--norm requires hi > lo");
  return {lo, hi};
}

std::vector<double> parse_time_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

}  // namespace

std::vector<double> resolve_sample_times(const RunConfig& cfg, const std::vector<Event>& events) {
  if (!cfg.sample_times.empty()) {
    if (!std::is_sorted(cfg.sample_times.begin(), cfg.sample_times.end())) {
      throw ContractError("sample times must be sorted ascending");
    }
    return cfg.sample_times;
  }
  if (!(cfg.sample_rate > 0.0)) throw ContractError("sample rate must be positive");
  double t_last = 0.0;
  for (const Event& e : events) t_last = std::max(t_last, e.t);
  const auto count = std::max<long long>(1, static_cast<long long>(std::ceil(t_last * cfg.sample_rate)));
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(count));
  for (long long k = 1; k <= count; ++k) times.push_back(static_cast<double>(k) / cfg.sample_rate);
  // k / rate can round just below t_last; the last sample must see every event.
  if (times.back() < t_last) times.back() = t_last;
  return times;
}

Kernel resolve_kernel(const std::string& name_or_path) {
  const auto& names = builtin_kernel_names();
  if (std::find(names.begin(), names.end(), name_or_path) == names.end()) {
    std::error_code ec;
    if (fs::is_regular_file(name_or_path, ec)) return load_kernel_file(name_or_path);
  }
  return make_kernel(name_or_path);
}

std::pair<double, double> auto_norm(const ImageF& img) {
  double m = 0.0;
  for (double v : img.values()) m = std::max(m, std::abs(v));
  if (!(m > 0.0) || !std::isfinite(m)) m = 1.0;
  return {-m, m};
}

std::string format_corner_line(const Corner& c) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.9g %d %d %.9g", c.t, c.p.x, c.p.y, c.score);
  return buf;
}

RunSummary run_filter(const RunConfig& cfg, std::ostream& log) {
  if (cfg.kernels.empty()) throw ContractError("at least one --kernel is required");
  std::vector<Kernel> kernels;
  for (const auto& k : cfg.kernels) kernels.push_back(resolve_kernel(k));
  const SensorGeometry geom(cfg.width, cfg.height);
  const ContrastThreshold c(cfg.contrast);
  const double alpha = cfg.alpha.value_or(kDefaultAlpha);

  const auto events = load_events(cfg);
  const auto times = resolve_sample_times(cfg, events);
  ensure_dir(cfg.output_dir);

  FilterBank bank(geom, c, policy_of(cfg));
  for (auto& k : kernels) bank.add_channel(k, alpha);

  const auto start = Clock::now();
  const auto samples = process_stream(bank, events, times);
  const double elapsed = seconds_since(start);

  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (std::size_t ch = 0; ch < bank.size(); ++ch) {
      write_snapshot_pair(cfg.output_dir, bank[ch].kernel().name() + "_" + std::to_string(s),
                          samples[s].channels[ch], cfg.norm);
    }
  }

  RunSummary summary{events.size(), samples.size(), elapsed,
                     elapsed > 0.0 ? static_cast<double>(events.size()) / elapsed : 0.0};
  log << "events: " << summary.events << "\nsamples: " << summary.samples
      << "\nwall time: " << summary.seconds << " s\nthroughput: " << summary.events_per_s
      << " events/s\n";
  if (!cfg.strict) {
    log << "regressions clamped: " << bank[0].stats().regressions_clamped << '\n';
  }
  return summary;
}

RunSummary run_corners(const RunConfig& cfg, const CornerOptions& opts, std::ostream& log) {
  if (opts.smoothing != "box3" && opts.smoothing != "gaussian3") {
    throw ContractError("--smoothing must be box3 or gaussian3");
  }
  const SensorGeometry geom(cfg.width, cfg.height);
  const ContrastThreshold c(cfg.contrast);

  HarrisParams params;
  params.gamma = opts.gamma;
  params.smoothing = make_kernel(opts.smoothing);
  params.nms_radius = opts.nms_radius;
  params.alpha = cfg.alpha.value_or(10.0);
  params.response_threshold = opts.threshold.value_or(1.0);
  params.validate();

  const auto events = load_events(cfg);
  const auto times = resolve_sample_times(cfg, events);
  ensure_dir(cfg.output_dir);

  const auto start = Clock::now();
  const auto result =
      chec_pipeline(events, geom, c, params, times, policy_of(cfg),
                    opts.threshold ? ThresholdRule::Fixed : ThresholdRule::FirstSamplePercentile);
  const double elapsed = seconds_since(start);

  std::size_t total = 0;
  for (std::size_t s = 0; s < result.samples.size(); ++s) {
    const auto& sample = result.samples[s];
    std::ofstream out(join_path(cfg.output_dir, "corners_" + std::to_string(s) + ".txt"),
                      std::ios::binary);
    if (!out) throw Error("cannot create corner file in '" + cfg.output_dir + "'");
    for (const auto& corner : sample.corners) out << format_corner_line(corner) << '\n';
    if (!out) throw Error("I/O failure writing corner file");
    total += sample.corners.size();
    write_snapshot_pair(cfg.output_dir, "response_" + std::to_string(s), sample.response, cfg.norm);
  }

  RunSummary summary{events.size(), result.samples.size(), elapsed,
                     elapsed > 0.0 ? static_cast<double>(events.size()) / elapsed : 0.0};
  char thr[64];
  std::snprintf(thr, sizeof thr, "%.9g", result.threshold);
  log << "events: " << summary.events << "\nsamples: " << summary.samples
      << "\nresponse threshold: " << thr << "\ncorners: " << total
      << "\nwall time: " << summary.seconds << " s\nthroughput: " << summary.events_per_s
      << " events/s\n";
  return summary;
}

void run_reconstruct(const ReconstructConfig& cfg, std::ostream& log) {
  ImageF result;
  if (cfg.mode == "laplacian") {
    if (cfg.inputs.size() != 1) throw ContractError("laplacian mode takes exactly one --input");
    result = solve_poisson(read_snapshot_raw_file(cfg.inputs[0]));
  } else if (cfg.mode == "gradients") {
    if (cfg.inputs.size() != 2) {
      throw ContractError("gradients mode takes two --input snapshots (x then y)");
    }
    ImageF gx = read_snapshot_raw_file(cfg.inputs[0]);
    ImageF gy = read_snapshot_raw_file(cfg.inputs[1]);
    require_same_geometry(gx, gy, "reconstruct");
    for (double& v : gx.values()) v *= cfg.gradient_scale;
    for (double& v : gy.values()) v *= cfg.gradient_scale;
    result = reconstruct_from_gradients(gx, gy);
    double max_curl = 0.0;
    for (double v : curl(gx, gy).values()) max_curl = std::max(max_curl, std::abs(v));
    log << "max |curl|: " << max_curl << '\n'
        << "gradient misfit rms: " << gradient_misfit_rms(result, gx, gy) << '\n';
  } else {
    throw ContractError("unknown reconstruct mode '" + cfg.mode + "' (laplacian, gradients)");
  }
  ensure_dir(cfg.output_dir);
  write_snapshot_pair(cfg.output_dir, "reconstruction", result, cfg.norm);
  log << "wrote " << join_path(cfg.output_dir, "reconstruction.{pgm,evcr}") << '\n';
}

std::vector<BenchRow> run_bench(const RunConfig& cfg, const std::vector<Event>& events,
                                const BenchOptions& opts) {
  if (opts.repetitions < 1) throw ContractError("repetitions must be >= 1");
  if (cfg.kernels.empty()) throw ContractError("at least one --kernel is required");
  const SensorGeometry geom(cfg.width, cfg.height);
  const FilterParams params(cfg.alpha.value_or(kDefaultAlpha), ContrastThreshold(cfg.contrast));
  validate_stream(events, geom, policy_of(cfg));
  const auto times = resolve_sample_times(cfg, events);

  std::vector<BenchRow> rows;
  for (const auto& name : cfg.kernels) {
    const Kernel k = resolve_kernel(name);
    for (int rep = 0; rep < opts.repetitions; ++rep) {
      FilterState state(geom, k, params, policy_of(cfg));
      const auto start = Clock::now();
      for (const Event& e : events) state.process_event(e);
      const double secs = seconds_since(start);

      double checksum = 0.0;
      const auto ostart = Clock::now();
      for (double t : times) checksum += closed_form_oracle(events, k, params, geom, t)[0];
      const double osecs = seconds_since(ostart);
      (void)checksum;

      BenchRow row;
      row.kernel = k.name();
      row.repetition = rep;
      row.events = events.size();
      row.nonzeros = k.nonzero_count();
      row.process_seconds = secs;
      if (!events.empty() && secs > 0.0) {
        row.events_per_s = static_cast<double>(events.size()) / secs;
        row.ns_per_event = secs * 1e9 / static_cast<double>(events.size());
        row.ns_per_event_per_nonzero = row.ns_per_event / static_cast<double>(row.nonzeros);
      }
      row.oracle_samples = times.size();
      row.oracle_seconds_per_sample = times.empty() ? 0.0 : osecs / static_cast<double>(times.size());
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << "kernel,repetition,events,nonzeros,process_seconds,events_per_s,ns_per_event,"
         "ns_per_event_per_nonzero,oracle_samples,oracle_seconds_per_sample\n";
  for (const auto& r : rows) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%d,%zu,%zu,%.9g,%.9g,%.9g,%.9g,%zu,%.9g\n", r.kernel.c_str(),
                  r.repetition, r.events, r.nonzeros, r.process_seconds, r.events_per_s,
                  r.ns_per_event, r.ns_per_event_per_nonzero, r.oracle_samples,
                  r.oracle_seconds_per_sample);
    out << buf;
  }
}

std::size_t run_synth(const SynthConfig& cfg, std::ostream& log) {
  const SensorGeometry geom(cfg.width, cfg.height);
  const auto seq = make_test_sequence(cfg.name, geom, cfg.frames, cfg.duration);
  const auto events = generate_events(seq, ContrastThreshold(cfg.contrast));

  const auto parent = fs::path(cfg.output).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
  std::ofstream out(cfg.output, std::ios::binary);
  if (!out) throw Error("cannot create '" + cfg.output + "'");
  char contrast[64];
  std::snprintf(contrast, sizeof contrast, "%.9g", cfg.contrast);
  out << "# evconv synth " << cfg.name << " width=" << cfg.width << " height=" << cfg.height
      << " frames=" << cfg.frames << " contrast=" << contrast << '\n';
  write_event_stream(out, events);

  if (!cfg.frames_dir.empty()) {
    ensure_dir(cfg.frames_dir);
    for (std::size_t j = 0; j < seq.frames.size(); ++j) {
      ImageF log_frame(geom);
      for (std::size_t i = 0; i < log_frame.size(); ++i) {
        log_frame[i] = std::log(seq.frames[j].intensity[i]);
      }
      write_snapshot_raw_file(join_path(cfg.frames_dir, "frame_" + std::to_string(j) + ".evcr"),
                              log_frame);
    }
  }
  log << "events: " << events.size() << '\n';
  return events.size();
}

int main(int argc, char** argv) {
  CLI::App app{"Event-camera convolution filters, Harris corners and Poisson reconstruction"};
  app.require_subcommand(1);

  RunConfig run;
  std::string norm = "auto";
  std::string sample_times;
  bool strict_flag = false;
  bool lenient_flag = false;
  double alpha = 0.0;
  std::vector<CLI::Option*> alpha_opts;

  auto add_run_options = [&](CLI::App* sub, bool needs_kernels) {
    sub->add_option("--input", run.input, "Event text file (t x y p per line)")->required();
    sub->add_option("--output-dir", run.output_dir, "Directory for snapshots");
    sub->add_option("--width", run.width, "Sensor width in pixels");
    sub->add_option("--height", run.height, "Sensor height in pixels");
    if (needs_kernels) {
      sub->add_option("--kernel", run.kernels,
                      "Kernel name or kernel file; repeatable (identity, gaussian3, sobel_x, "
                      "sobel_y, laplacian, box3)")
          ->required();
    }
    alpha_opts.push_back(sub->add_option("--alpha", alpha, "High-pass cutoff in rad/s"));
    sub->add_option("--contrast", run.contrast, "Contrast threshold c");
    sub->add_option("--sample-rate", run.sample_rate, "Snapshot rate in Hz");
    sub->add_option("--sample-times", sample_times, "Comma-separated snapshot times (s)");
    sub->add_flag("--strict", strict_flag, "Reject timestamp regressions (default)");
    sub->add_flag("--lenient", lenient_flag, "Clamp timestamp regressions");
    sub->add_option("--norm", norm, "PGM bounds: auto or lo,hi");
  };

  auto* filter = app.add_subcommand("filter", "Run a bank of kernel filters over an event stream");
  add_run_options(filter, true);

  CornerOptions corner_opts;
  std::string threshold;
  auto* corners = app.add_subcommand("corners", "Continuous Harris corners from an event stream");
  add_run_options(corners, false);
  corners->add_option("--threshold", threshold, "Absolute response threshold (default: auto)");
  corners->add_option("--nms-radius", corner_opts.nms_radius, "Non-maximum suppression radius");
  corners->add_option("--gamma", corner_opts.gamma, "Harris gamma");
  corners->add_option("--smoothing", corner_opts.smoothing, "box3 or gaussian3");

  ReconstructConfig recon;
  std::string recon_norm = "auto";
  auto* reconstruct = app.add_subcommand("reconstruct", "Poisson reconstruction of raw snapshots");
  reconstruct->add_option("--input", recon.inputs, "Raw snapshot(s): Laplacian, or gx then gy")
      ->required();
  reconstruct->add_option("--mode", recon.mode, "laplacian or gradients");
  reconstruct->add_option("--output-dir", recon.output_dir, "Output directory");
  reconstruct->add_option("--gradient-scale", recon.gradient_scale,
                          "Factor applied to gradient inputs (default maps Sobel channels to "
                          "unit derivatives)");
  reconstruct->add_option("--norm", recon_norm, "PGM bounds: auto or lo,hi");

  BenchOptions bench_opts;
  std::string csv_path;
  auto* bench = app.add_subcommand("bench", "Time incremental filtering against the direct sum");
  add_run_options(bench, true);
  bench->add_option("--repetitions", bench_opts.repetitions, "Timed runs per kernel");
  bench->add_option("--csv", csv_path, "Also write the CSV to this file");

  SynthConfig synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic event stream");
  synth_cmd->add_option("--name", synth.name, "ramp, translating_checkerboard, gaussian_blob_orbit")
      ->required();
  synth_cmd->add_option("--width", synth.width, "Sensor width");
  synth_cmd->add_option("--height", synth.height, "Sensor height");
  synth_cmd->add_option("--frames", synth.frames, "Number of frames");
  synth_cmd->add_option("--duration", synth.duration, "Sequence duration in seconds");
  synth_cmd->add_option("--contrast", synth.contrast, "Contrast threshold c");
  synth_cmd->add_option("--output", synth.output, "Event file to write");
  synth_cmd->add_option("--frames-dir", synth.frames_dir, "Directory for ground-truth log frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    run.strict = !lenient_flag;
    if (strict_flag && lenient_flag) throw ContractError("--strict and --lenient are exclusive");
    for (const auto* opt : alpha_opts) {
      if (opt->count() > 0) run.alpha = alpha;
    }
    if (norm != "auto") run.norm = parse_norm(norm);
    if (!sample_times.empty()) run.sample_times = parse_time_list(sample_times);

    if (*filter) {
      run_filter(run, std::cout);
    } else if (*corners) {
      if (!threshold.empty()) corner_opts.threshold = std::stod(threshold);
      run_corners(run, corner_opts, std::cout);
    } else if (*reconstruct) {
      if (recon_norm != "auto") recon.norm = parse_norm(recon_norm);
      run_reconstruct(recon, std::cout);
    } else if (*bench) {
      const auto events = load_events(run);
      const auto rows = run_bench(run, events, bench_opts);
      write_bench_csv(rows, std::cout);
      if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw Error("cannot create '" + csv_path + "'");
        write_bench_csv(rows, out);
      }
    } else if (*synth_cmd) {
      run_synth(synth, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "evconv: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace evconv::cli

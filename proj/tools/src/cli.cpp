#include "bq/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "bq/bench.hpp"
#include "bq/bqn.hpp"
#include "bq/checks.hpp"
#include "bq/disentangle.hpp"
#include "bq/error.hpp"
#include "bq/io.hpp"
#include "bq/kernels.hpp"
#include "bq/mbpm.hpp"
#include "bq/report.hpp"
#include "bq/toy.hpp"

namespace fs = std::filesystem;

namespace bq {

namespace {

const std::map<std::string, NormMode> kNorms{{"sum1", NormMode::sum1}, {"l1", NormMode::l1}, {"none", NormMode::none}};

Shape parse_shape(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) throw ConfigError("bad shape '" + text + "', expected T,C,H,W");
    dims.push_back(static_cast<std::size_t>(v));
  }
  if (dims.size() != 4) throw ConfigError("bad shape '" + text + "', expected T,C,H,W");
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError("shape extents must be >= 1");
  }
  return Shape{dims[0], dims[1], dims[2], dims[3]};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::string gmacs(std::uint64_t macs) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f GMACs", static_cast<double>(macs) / 1e9);
  return buf;
}

// ---------------------------------------------------------------------------

struct DisentangleArgs {
  std::string in;
  std::string out_busy;
  std::string out_quiet;
  double sigma = 1.1;
  std::size_t k = 9;
  std::size_t quiet_size = 160;
  std::size_t busy_size = 0;
  std::string norm = "sum1";
  std::string format = "ppm";
  std::string pattern;
  std::size_t segments = 0;
  std::string vis = "per-frame";
  bool emit_quiet_raw = false;
};

void run_disentangle(const DisentangleArgs& a, std::ostream& out) {
  const FrameFormat format = a.format == "png" ? FrameFormat::png : FrameFormat::ppm;
  const VideoClip clip = load_frames(FrameSequenceSource{a.in, a.pattern, format, 3});

  DisentangleConfig config;
  config.sigma = a.sigma;
  config.k = a.k;
  config.norm = kNorms.at(a.norm);
  config.quiet_h = a.quiet_size;
  config.quiet_w = a.quiet_size;
  if (a.busy_size > 0) config.busy_resize = ResizePolicy{a.busy_size, a.busy_size};
  config.segments = a.segments;

  const MbpmParams params = busy_params(config, clip.channels());
  const DisentangledPair pair = disentangle(clip, config, params);

  const VisualizationMode mode =
      a.vis == "global" ? VisualizationMode::global_minmax : VisualizationMode::per_frame_minmax;
  fs::create_directories(a.out_busy);
  fs::create_directories(a.out_quiet);
  save_raw(pair.busy, fs::path(a.out_busy) / "busy.bqc", RawDtype::real64);
  save_raw(pair.quiet, fs::path(a.out_quiet) / "quiet.bqc", RawDtype::real64);
  export_visualization(pair.busy, a.out_busy, VisualizationOptions{mode, true});
  export_visualization(pair.quiet, a.out_quiet, VisualizationOptions{mode, false});
  if (a.emit_quiet_raw) {
    const VideoClip input = config.busy_resize ? bilinear_resize(clip, *config.busy_resize) : clip;
    save_raw(quiet_raw(input, pair.busy), fs::path(a.out_quiet) / "quiet_raw.bqc", RawDtype::real64);
  }
  out << "input " << to_string(clip.shape()) << "\n"
      << "busy  " << to_string(pair.busy.shape()) << " -> " << a.out_busy << "\n"
      << "quiet " << to_string(pair.quiet.shape()) << " -> " << a.out_quiet << "\n";
}

struct KernelArgs {
  double sigma = 1.1;
  std::size_t k = 9;
  std::size_t channels = 3;
  std::string norm = "sum1";
  std::string exported;
  std::string format;
  bool temporal = false;
};

void run_kernel(const KernelArgs& a, std::ostream& out) {
  std::string format = a.format;
  if (format.empty()) format = fs::path(a.exported).extension() == ".pgm" ? "pgm" : "json";
  const KernelFormat kf = parse_kernel_format(format);
  if (a.temporal) {
    export_kernel(temporal_highpass_kernel(a.channels, 3), a.exported, kf);
    out << "temporal kernel, " << a.channels << " channels -> " << a.exported << "\n";
    return;
  }
  const SpatialKernel kernel = log_kernel(a.sigma, a.k, a.channels, kNorms.at(a.norm));
  export_kernel(kernel, a.exported, kf);
  out << a.k << "x" << a.k << "x" << a.channels << " LoG kernel (sigma " << a.sigma << ", " << to_string(kernel.norm)
      << ") -> " << a.exported << "\n";
}

struct FlopsArgs {
  std::string shape;
  std::size_t k = 9;
  std::size_t stride = 3;
  std::string report;
};

void run_flops(const FlopsArgs& a, std::ostream& out) {
  const Shape shape = parse_shape(a.shape);
  const MbpmParams params = MbpmParams::init(shape.c, 1.0, a.k, a.stride, NormMode::none);
  if (shape.t % a.stride != 0) {
    throw DimensionError("frame count " + std::to_string(shape.t) + " is not a multiple of the stride");
  }
  const auto macs = count_macs(params, shape);
  const auto n = count_params(params);
  out << gmacs(macs) << ", " << n << " params\n";
  if (!a.report.empty()) {
    MbpmReport report;
    report.params = n;
    report.macs = macs;
    write_text(a.report, to_json(report));
  }
}

int run_check(std::uint64_t seed, std::ostream& out) {
  bool all = true;
  for (const auto& r : run_checks(seed)) {
    char time[32];
    std::snprintf(time, sizeof(time), "%.2fs", r.seconds);
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " [" << time << "]\n";
    all = all && r.passed;
  }
  out << (all ? "all suites passed" : "some suites failed") << "\n";
  return all ? 0 : 1;
}

struct BenchArgs {
  std::vector<std::string> shapes{"24,3,224,224"};
  std::size_t repeats = 5;
  double sigma = 1.1;
  std::size_t k = 9;
  std::uint64_t seed = 0;
  std::string out;
};

int run_bench_cmd(const BenchArgs& a, std::ostream& out) {
  std::vector<Shape> shapes;
  for (const auto& s : a.shapes) shapes.push_back(parse_shape(s));
  BenchOptions options;
  options.sigma = a.sigma;
  options.k = a.k;
  options.seed = a.seed;
  const BenchReport report = run_bench(shapes, a.repeats, options);
  for (const auto& r : report.results) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-18s separable %9.4fs  direct %9.4fs  %s  max|diff| %.2e  %s faster\n",
                  to_string(r.shape).c_str(), r.separable.median_seconds, r.direct.median_seconds,
                  gmacs(r.separable.macs).c_str(), r.max_abs_diff, r.faster.c_str());
    out << line;
  }
  if (!a.out.empty()) write_text(a.out, to_json(report));
  if (!report.all_match()) {
    out << "separable and direct outputs differ by more than 1e-5\n";
    return 1;
  }
  return 0;
}

struct ToyArgs {
  std::size_t steps = 500;
  double lr = 0.05;
  std::uint64_t seed = 0;
  std::size_t grid = 4;
  std::size_t clips = 200;
  std::size_t k = 5;
  double sigma = 1.1;
  std::string report;
};

void run_train_toy(const ToyArgs& a, std::ostream& out) {
  ToyTask task;
  task.clips = a.clips;
  task.sigma = a.sigma;
  task.k = a.k;
  task.seed = a.seed;
  task.train = TrainConfig{a.steps, a.lr, a.grid};
  const TrainReport tr = run_toy_task(task);

  const auto params = MbpmParams::init(task.shape.c, task.sigma, task.k, 3, task.norm);
  MbpmReport report;
  report.params = count_params(params);
  report.macs = count_macs(params, task.shape);
  report.loss_curve = tr.loss_curve;
  report.accuracy = tr.accuracy;
  char line[160];
  std::snprintf(line, sizeof(line), "steps %zu  loss %.4f -> %.4f  accuracy %.1f%%\n", a.steps, tr.initial_loss,
                tr.final_loss, 100 * tr.accuracy);
  out << line;
  if (!a.report.empty()) write_text(a.report, to_json(report));
}

struct GraphArgs {
  std::string config;
  std::string in;
  std::string scores;
  double sigma = 1.1;
  std::size_t k = 9;
  std::size_t quiet_size = 0;
};

void run_graph(const GraphArgs& a, std::ostream& out) {
  const BqnConfig config = load_bqn_config(a.config);
  const VideoClip clip = load_raw(a.in);
  DisentangleConfig dc;
  dc.sigma = a.sigma;
  dc.k = a.k;
  // Default quiet size keeps the 160/224 ratio of the busy size.
  dc.quiet_h = a.quiet_size > 0 ? a.quiet_size : std::max<std::size_t>(1, clip.height() * 160 / 224);
  dc.quiet_w = a.quiet_size > 0 ? a.quiet_size : std::max<std::size_t>(1, clip.width() * 160 / 224);
  const DisentangledPair pair = disentangle(clip, dc);
  const BqnGraph graph = build_bqn(config);
  const auto scores = forward(graph, pair);
  const auto best = static_cast<std::size_t>(std::ranges::max_element(scores) - scores.begin());

  nlohmann::json plan = nlohmann::json::array();
  for (const auto& site : fusion_plan(graph)) {
    plan.push_back({{"i", site.index}, {"into_busy", site.into_busy}, {"into_quiet", site.into_quiet}});
  }
  const nlohmann::json doc{{"scores", scores},
                           {"predicted", best},
                           {"fusion", std::string(to_string(config.fusion))},
                           {"laterals", plan},
                           {"busy_shape", to_string(pair.busy.shape())},
                           {"quiet_shape", to_string(pair.quiet.shape())}};
  write_text(a.scores, doc.dump(2));
  out << scores.size() << " scores, predicted class " << best << " -> " << a.scores << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Busy/quiet video decomposition and motion band-pass tools", "bq"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  DisentangleArgs dis;
  auto* c_dis = app.add_subcommand("disentangle", "Split a frame sequence into busy and quiet streams");
  c_dis->add_option("--in", dis.in, "Directory of frames")->required();
  c_dis->add_option("--out-busy", dis.out_busy, "Output directory for the busy stream")->required();
  c_dis->add_option("--out-quiet", dis.out_quiet, "Output directory for the quiet stream")->required();
  c_dis->add_option("--sigma", dis.sigma, "LoG scale")->capture_default_str();
  c_dis->add_option("--k", dis.k, "LoG kernel size")->capture_default_str();
  c_dis->add_option("--quiet-size", dis.quiet_size, "Quiet stream side length")->capture_default_str();
  c_dis->add_option("--busy-size", dis.busy_size, "Resize frames to this side first (0 = keep)")->capture_default_str();
  c_dis->add_option("--log-norm", dis.norm, "LoG normalization")
      ->check(CLI::IsMember({"sum1", "l1", "none"}))
      ->capture_default_str();
  c_dis->add_option("--format", dis.format, "Input frame format")
      ->check(CLI::IsMember({"ppm", "png"}))
      ->capture_default_str();
  c_dis->add_option("--pattern", dis.pattern, "Only read frames whose name contains this");
  c_dis->add_option("--segments", dis.segments, "Expected segment count N (3N frames, 0 = any)");
  c_dis->add_option("--vis", dis.vis, "Visualization scaling")
      ->check(CLI::IsMember({"per-frame", "global"}))
      ->capture_default_str();
  c_dis->add_flag("--emit-quiet-raw", dis.emit_quiet_raw, "Also write the quiet residual before resizing");

  KernelArgs ker;
  auto* c_ker = app.add_subcommand("kernel", "Export a LoG (or temporal) kernel");
  c_ker->add_option("--sigma", ker.sigma, "LoG scale")->capture_default_str();
  c_ker->add_option("--k", ker.k, "Kernel size")->capture_default_str();
  c_ker->add_option("--channels", ker.channels, "Channel count")->capture_default_str();
  c_ker->add_option("--norm", ker.norm, "Normalization")
      ->check(CLI::IsMember({"sum1", "l1", "none"}))
      ->capture_default_str();
  c_ker->add_option("--export", ker.exported, "Output path")->required();
  c_ker->add_option("--format", ker.format, "json or pgm (default from extension)")
      ->check(CLI::IsMember({"json", "pgm"}));
  c_ker->add_flag("--temporal", ker.temporal, "Export the 3-tap temporal kernel instead");

  FlopsArgs flo;
  auto* c_flo = app.add_subcommand("flops", "Count MBPM parameters and multiply-accumulates");
  c_flo->add_option("--shape", flo.shape, "Input shape T,C,H,W")->required();
  c_flo->add_option("--k", flo.k, "LoG kernel size")->capture_default_str();
  c_flo->add_option("--stride", flo.stride, "Temporal stride (1 or 3)")->capture_default_str();
  c_flo->add_option("--report", flo.report, "Write a JSON report");

  std::uint64_t check_seed = 0;
  auto* c_chk = app.add_subcommand("check", "Run the equivalence, gradient and init-identity suites");
  c_chk->add_option("--seed", check_seed, "Seed for random inputs")->capture_default_str();

  BenchArgs ben;
  auto* c_ben = app.add_subcommand("bench", "Time separable against direct filtering");
  c_ben->add_option("--shapes", ben.shapes, "Input shapes, each T,C,H,W")->capture_default_str();
  c_ben->add_option("--repeats", ben.repeats, "Timed runs per case (>= 3)")->capture_default_str();
  c_ben->add_option("--sigma", ben.sigma, "LoG scale")->capture_default_str();
  c_ben->add_option("--k", ben.k, "LoG kernel size")->capture_default_str();
  c_ben->add_option("--seed", ben.seed, "Seed for random inputs")->capture_default_str();
  c_ben->add_option("--out", ben.out, "Write the JSON report here");

  ToyArgs toy;
  auto* c_toy = app.add_subcommand("train-toy", "Train MBPM and a linear head on moving squares");
  c_toy->add_option("--steps", toy.steps, "Gradient steps")->capture_default_str();
  c_toy->add_option("--lr", toy.lr, "Learning rate")->capture_default_str();
  c_toy->add_option("--seed", toy.seed, "Dataset seed")->capture_default_str();
  c_toy->add_option("--grid", toy.grid, "Pooling grid per side")->capture_default_str();
  c_toy->add_option("--clips", toy.clips, "Dataset size")->capture_default_str();
  c_toy->add_option("--k", toy.k, "LoG kernel size")->capture_default_str();
  c_toy->add_option("--sigma", toy.sigma, "LoG scale")->capture_default_str();
  c_toy->add_option("--report", toy.report, "Write the JSON report here");

  GraphArgs gra;
  auto* c_gra = app.add_subcommand("graph", "Run a BQN forward pass on a raw clip");
  c_gra->add_option("--config", gra.config, "Graph config (JSON)")->required();
  c_gra->add_option("--in", gra.in, "Raw clip (BQC1)")->required();
  c_gra->add_option("--scores", gra.scores, "Output JSON")->required();
  c_gra->add_option("--sigma", gra.sigma, "LoG scale of the busy stream")->capture_default_str();
  c_gra->add_option("--k", gra.k, "LoG kernel size of the busy stream")->capture_default_str();
  c_gra->add_option("--quiet-size", gra.quiet_size, "Quiet side length (default 160/224 of the input)");

  std::vector<const char*> argv{"bq"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_dis->parsed()) run_disentangle(dis, out);
    if (c_ker->parsed()) run_kernel(ker, out);
    if (c_flo->parsed()) run_flops(flo, out);
    if (c_chk->parsed()) return run_check(check_seed, out);
    if (c_ben->parsed()) return run_bench_cmd(ben, out);
    if (c_toy->parsed()) run_train_toy(toy, out);
    if (c_gra->parsed()) run_graph(gra, out);
  } catch (const Error& e) {
    err << "bq: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "bq: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace bq

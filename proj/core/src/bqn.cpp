#include "bq/bqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bq/error.hpp"
#include "bq/parallel.hpp"
#include "bq/resample.hpp"

namespace bq {

using nlohmann::json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::res2:
      return "res2";
    case Stage::res3:
      return "res3";
    case Stage::res4:
      return "res4";
    case Stage::res5:
      return "res5";
  }
  return "?";
}

std::string_view to_string(LateralDesign design) {
  switch (design) {
    case LateralDesign::bplc:
      return "BPLC";
    case LateralDesign::lc1:
      return "LC-I";
    case LateralDesign::lc2:
      return "LC-II";
    case LateralDesign::lc3:
      return "LC-III";
    case LateralDesign::lc5:
      return "LC-V";
  }
  return "?";
}

std::string_view to_string(Fusion fusion) {
  switch (fusion) {
    case Fusion::avg_after_fc:
      return "avg-after-fc";
    case Fusion::avg_before_fc:
      return "avg-before-fc";
    case Fusion::max_after_fc:
      return "max-after-fc";
    case Fusion::concat_before_fc:
      return "concat-before-fc";
  }
  return "?";
}

LateralDesign parse_lateral_design(std::string_view text) {
  for (auto d : {LateralDesign::bplc, LateralDesign::lc1, LateralDesign::lc2, LateralDesign::lc3, LateralDesign::lc5}) {
    if (text == to_string(d)) return d;
  }
  throw ConfigError("unknown lateral design '" + std::string(text) + "'");
}

Fusion parse_fusion(std::string_view text) {
  for (auto f : {Fusion::avg_after_fc, Fusion::avg_before_fc, Fusion::max_after_fc, Fusion::concat_before_fc}) {
    if (text == to_string(f)) return f;
  }
  throw ConfigError("unknown fusion method '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Layers

BnState BnState::identity(std::size_t channels) {
  return BnState{std::vector<real>(channels, 1.0), std::vector<real>(channels, 0.0), std::vector<real>(channels, 0.0),
                 std::vector<real>(channels, 1.0)};
}

BnState BnState::zero_scale(std::size_t channels) {
  BnState bn = identity(channels);
  std::ranges::fill(bn.gamma, 0.0);
  return bn;
}

BnState BnState::exact_identity(std::size_t channels) {
  BnState bn = identity(channels);
  bn.eps = 0;
  return bn;
}

VideoClip BnState::apply(const VideoClip& x) const {
  if (x.channels() != channels()) throw DimensionError("batch norm channel mismatch");
  VideoClip out(x.shape());
  for (std::size_t t = 0; t < x.frames(); ++t) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const real scale = gamma[c] / std::sqrt(var[c] + eps);
      const auto src = x.plane(t, c);
      auto dst = out.plane(t, c);
      for (std::size_t p = 0; p < src.size(); ++p) dst[p] = scale * (src[p] - mean[c]) + beta[c];
    }
  }
  return out;
}

namespace {

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t stride) {
  const std::size_t pad = k / 2;
  return (in + 2 * pad - k) / stride + 1;
}

VideoClip relu(VideoClip x) {
  for (real& v : x.data()) v = std::max(v, real{0});
  return x;
}

void add_inplace(VideoClip& dst, const VideoClip& src) {
  if (dst.shape() != src.shape()) {
    throw DimensionError("cannot add " + to_string(src.shape()) + " to " + to_string(dst.shape()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

}  // namespace

VideoClip Conv2d::apply(const VideoClip& x) const {
  if (x.channels() != in) {
    throw DimensionError("conv expects " + std::to_string(in) + " channels, got " + std::to_string(x.channels()));
  }
  const long ih = static_cast<long>(x.height());
  const long iw = static_cast<long>(x.width());
  const std::size_t oh = conv_out(x.height(), k, stride);
  const std::size_t ow = conv_out(x.width(), k, stride);
  const long pad = static_cast<long>(k / 2);
  const long ks = static_cast<long>(k);
  const long st = static_cast<long>(stride);

  VideoClip y(Shape{x.frames(), out, oh, ow});
  parallel_for(x.frames() * out, [&](std::size_t task) {
    const std::size_t t = task / out;
    const std::size_t o = task % out;
    auto dst = y.plane(t, o);
    for (std::size_t ci = 0; ci < in; ++ci) {
      const auto src = x.plane(t, ci);
      const real* wts = weights.data() + (o * in + ci) * k * k;
      for (long i = 0; i < ks; ++i) {
        for (long j = 0; j < ks; ++j) {
          const real wv = wts[i * ks + j];
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const long iy = static_cast<long>(oy) * st + i - pad;
            if (iy < 0 || iy >= ih) continue;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const long ix = static_cast<long>(ox) * st + j - pad;
              if (ix < 0 || ix >= iw) continue;
              dst[oy * ow + ox] += wv * src[iy * iw + ix];
            }
          }
        }
      }
    }
  });
  return y;
}

std::uint64_t Conv2d::macs(const Shape& input) const {
  return static_cast<std::uint64_t>(input.t) * out * in * k * k * conv_out(input.h, k, stride) *
         conv_out(input.w, k, stride);
}

VideoClip ResidualBlock::apply(const VideoClip& x) const {
  VideoClip y = bn2.apply(conv2.apply(relu(bn1.apply(conv1.apply(x)))));
  if (projection) {
    add_inplace(y, projection_bn->apply(projection->apply(x)));
  } else {
    add_inplace(y, x);
  }
  return relu(std::move(y));
}

std::vector<real> Classifier::apply(const std::vector<real>& x) const {
  if (x.size() != features) throw DimensionError("classifier expects " + std::to_string(features) + " features");
  std::vector<real> scores(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    real acc = bias[k];
    for (std::size_t f = 0; f < features; ++f) acc += weights[k * features + f] * x[f];
    scores[k] = acc;
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Lateral connections

VideoClip pointwise_mix(const VideoClip& x, const std::vector<real>& phi, std::size_t channels) {
  if (x.channels() != channels || phi.size() != channels * channels) {
    throw ConfigError("pointwise mixing needs a " + std::to_string(x.channels()) + "x" +
                      std::to_string(x.channels()) + " matrix");
  }
  VideoClip out(x.shape());
  for (std::size_t t = 0; t < x.frames(); ++t) {
    for (std::size_t o = 0; o < channels; ++o) {
      auto dst = out.plane(t, o);
      for (std::size_t c = 0; c < channels; ++c) {
        const real wv = phi[o * channels + c];
        const auto src = x.plane(t, c);
        for (std::size_t p = 0; p < src.size(); ++p) dst[p] += wv * src[p];
      }
    }
  }
  return out;
}

namespace {

bool fuses_into_busy(LateralDesign design, std::size_t i) {
  switch (design) {
    case LateralDesign::bplc:
    case LateralDesign::lc5:
      return i % 2 == 0;
    case LateralDesign::lc1:
    case LateralDesign::lc3:
      return true;
    case LateralDesign::lc2:
      return false;
  }
  return false;
}

bool fuses_into_quiet(LateralDesign design, std::size_t i) {
  switch (design) {
    case LateralDesign::bplc:
    case LateralDesign::lc5:
      return i % 2 == 1;
    case LateralDesign::lc2:
    case LateralDesign::lc3:
      return true;
    case LateralDesign::lc1:
      return false;
  }
  return false;
}

VideoClip match_size(const VideoClip& src, const VideoClip& like) {
  return bilinear_resize(src, ResizePolicy{like.height(), like.width()});
}

}  // namespace

FeaturePair lc_variant(const VideoClip& busy, const VideoClip& quiet, std::size_t i, LateralDesign design,
                       const LateralParams& params) {
  if (i == 0) throw ConfigError("lateral block index is 1-based");
  if (busy.channels() != params.channels || quiet.channels() != params.channels) {
    throw ConfigError("lateral connection built for " + std::to_string(params.channels) + " channels, got " +
                      std::to_string(busy.channels()) + " and " + std::to_string(quiet.channels()));
  }
  if (busy.frames() != quiet.frames()) throw DimensionError("pathways disagree on frame count");

  VideoClip y_busy = busy;
  VideoClip y_quiet = quiet;
  if (fuses_into_busy(design, i)) {
    const VideoClip aligned = match_size(quiet, busy);
    const VideoClip branch = design == LateralDesign::lc5 ? aligned : mbpm_forward(aligned, params.mbpm);
    add_inplace(y_busy, params.bn_to_busy.apply(branch));
  }
  if (fuses_into_quiet(design, i)) {
    const VideoClip aligned = match_size(busy, quiet);
    add_inplace(y_quiet, params.bn_to_quiet.apply(pointwise_mix(aligned, params.phi, params.channels)));
  }
  return {std::move(y_busy), std::move(y_quiet)};
}

FeaturePair bplc(const VideoClip& busy, const VideoClip& quiet, std::size_t i, const LateralParams& params) {
  return lc_variant(busy, quiet, i, LateralDesign::bplc, params);
}

// ---------------------------------------------------------------------------
// Configuration

std::size_t BqnConfig::block_count() const {
  std::size_t n = 0;
  for (std::size_t b : blocks_per_stage) n += b;
  return n;
}

Stage BqnConfig::stage_of(std::size_t index) const {
  std::size_t end = 0;
  for (std::size_t s = 0; s < blocks_per_stage.size(); ++s) {
    end += blocks_per_stage[s];
    if (index <= end) return static_cast<Stage>(s);
  }
  throw ConfigError("block index " + std::to_string(index) + " beyond the last block");
}

void BqnConfig::validate() const {
  if (blocks_per_stage.empty() || blocks_per_stage.size() > 4) throw ConfigError("between 1 and 4 stages required");
  if (widths.size() != blocks_per_stage.size()) throw ConfigError("one width per stage required");
  for (std::size_t b : blocks_per_stage) {
    if (b == 0) throw ConfigError("every stage needs at least one block");
  }
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("channel widths must be > 0");
  }
  if (in_channels == 0) throw ConfigError("in_channels must be > 0");
  if (classes == 0) throw ConfigError("classes must be > 0");
  std::set<std::size_t> seen;
  for (const auto& l : laterals) {
    if (l.index == 0 || l.index > block_count()) {
      throw ConfigError("lateral index " + std::to_string(l.index) + " outside [1, " + std::to_string(block_count()) +
                        "]");
    }
    if (!seen.insert(l.index).second) throw ConfigError("two laterals at block " + std::to_string(l.index));
    if (!(l.sigma > 0)) throw ConfigError("lateral sigma must be > 0");
    if (l.k < 3 || l.k % 2 == 0) throw ConfigError("lateral k must be odd and >= 3");
  }
}

LateralSpec default_lateral(const BqnConfig& config, std::size_t index, LateralDesign design) {
  LateralSpec spec;
  spec.index = index;
  spec.design = design;
  spec.sigma = 0.9;
  spec.k = config.stage_of(index) == Stage::res5 ? 3 : 7;
  return spec;
}

std::vector<LateralSpec> laterals_at_every_block(const BqnConfig& config, LateralDesign design) {
  std::vector<LateralSpec> out;
  for (std::size_t i = 1; i <= config.block_count(); ++i) out.push_back(default_lateral(config, i, design));
  return out;
}

BqnConfig parse_bqn_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("graph config: ") + e.what());
  }
  BqnConfig cfg;
  try {
    if (doc.contains("blocks")) cfg.blocks_per_stage = doc.at("blocks").get<std::vector<std::size_t>>();
    if (doc.contains("widths")) cfg.widths = doc.at("widths").get<std::vector<std::size_t>>();
    if (doc.contains("in_channels")) cfg.in_channels = doc.at("in_channels").get<std::size_t>();
    if (doc.contains("fusion")) cfg.fusion = parse_fusion(doc.at("fusion").get<std::string>());
    if (doc.contains("shared_fc")) cfg.shared_fc = doc.at("shared_fc").get<bool>();
    if (doc.contains("classes")) cfg.classes = doc.at("classes").get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("laterals")) {
      const json& lats = doc.at("laterals");
      if (lats.is_string()) {
        const auto text = lats.get<std::string>();
        if (text == "all") {
          cfg.laterals = laterals_at_every_block(cfg);
        } else if (text != "none") {
          throw ConfigError("laterals must be an array, \"all\" or \"none\"");
        }
      } else {
        for (const json& l : lats) {
          const auto index = l.at("i").get<std::size_t>();
          const auto design = l.contains("design") ? parse_lateral_design(l.at("design").get<std::string>())
                                                   : LateralDesign::bplc;
          LateralSpec spec = default_lateral(cfg, index, design);
          if (l.contains("sigma")) spec.sigma = l.at("sigma").get<real>();
          if (l.contains("k")) spec.k = l.at("k").get<std::size_t>();
          if (l.contains("norm")) spec.norm = parse_norm_mode(l.at("norm").get<std::string>());
          cfg.laterals.push_back(spec);
        }
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("graph config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

BqnConfig load_bqn_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_bqn_config(buffer.str());
}

std::string to_json(const BqnConfig& config) {
  json lats = json::array();
  for (const auto& l : config.laterals) {
    lats.push_back({{"i", l.index},
                    {"design", to_string(l.design)},
                    {"sigma", l.sigma},
                    {"k", l.k},
                    {"norm", to_string(l.norm)}});
  }
  const json doc{{"blocks", config.blocks_per_stage}, {"widths", config.widths},
                 {"in_channels", config.in_channels}, {"laterals", std::move(lats)},
                 {"fusion", to_string(config.fusion)}, {"shared_fc", config.shared_fc},
                 {"classes", config.classes},        {"seed", config.seed}};
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Graph

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
  return std::mt19937_64(seq);
}

Conv2d make_conv(std::size_t in, std::size_t out, std::size_t k, std::size_t stride, std::mt19937_64& rng) {
  std::normal_distribution<real> dist(0.0, std::sqrt(2.0 / static_cast<real>(in * k * k)));
  Conv2d conv{in, out, k, stride, std::vector<real>(out * in * k * k)};
  for (real& w : conv.weights) w = dist(rng);
  return conv;
}

Classifier make_classifier(std::size_t classes, std::size_t features, std::mt19937_64& rng) {
  std::normal_distribution<real> dist(0.0, 0.01);
  Classifier fc{classes, features, std::vector<real>(classes * features), std::vector<real>(classes, 0.0)};
  for (real& w : fc.weights) w = dist(rng);
  return fc;
}

PathwayNet make_pathway(const BqnConfig& cfg, std::mt19937_64& rng) {
  PathwayNet net;
  net.stem = make_conv(cfg.in_channels, cfg.widths.front(), 3, 1, rng);
  net.stem_bn = BnState::identity(cfg.widths.front());
  std::size_t channels = cfg.widths.front();
  for (std::size_t s = 0; s < cfg.blocks_per_stage.size(); ++s) {
    for (std::size_t b = 0; b < cfg.blocks_per_stage[s]; ++b) {
      ResidualBlock block;
      block.spec.stage = static_cast<Stage>(s);
      block.spec.in_channels = channels;
      block.spec.out_channels = cfg.widths[s];
      block.spec.stride = (b == 0 && s > 0) ? 2 : 1;
      block.conv1 = make_conv(channels, cfg.widths[s], 3, block.spec.stride, rng);
      block.bn1 = BnState::identity(cfg.widths[s]);
      block.conv2 = make_conv(cfg.widths[s], cfg.widths[s], 3, 1, rng);
      block.bn2 = BnState::identity(cfg.widths[s]);
      if (block.spec.stride != 1 || channels != cfg.widths[s]) {
        block.projection = make_conv(channels, cfg.widths[s], 1, block.spec.stride, rng);
        block.projection_bn = BnState::identity(cfg.widths[s]);
      }
      channels = cfg.widths[s];
      net.blocks.push_back(std::move(block));
    }
  }
  return net;
}

LateralParams make_lateral(const LateralSpec& spec, std::size_t channels, std::mt19937_64& rng) {
  LateralParams params;
  params.spec = spec;
  params.channels = channels;
  params.mbpm = MbpmParams::init(channels, spec.sigma, spec.k, 1, spec.norm);
  std::normal_distribution<real> dist(0.0, std::sqrt(1.0 / static_cast<real>(channels)));
  params.phi.resize(channels * channels);
  for (real& w : params.phi) w = dist(rng);
  params.bn_to_busy = BnState::zero_scale(channels);
  params.bn_to_quiet = BnState::zero_scale(channels);
  return params;
}

}  // namespace

std::size_t BqnGraph::lateral_count() const {
  return static_cast<std::size_t>(std::ranges::count_if(laterals, [](const auto& l) { return l.has_value(); }));
}

BqnGraph build_bqn(const BqnConfig& config) {
  config.validate();
  BqnGraph graph;
  graph.config = config;
  auto busy_rng = stream(config.seed, 1);
  auto quiet_rng = stream(config.seed, 2);
  auto head_rng = stream(config.seed, 3);
  graph.busy = make_pathway(config, busy_rng);
  graph.quiet = make_pathway(config, quiet_rng);

  const std::size_t width = config.widths.back();
  switch (config.fusion) {
    case Fusion::avg_after_fc:
    case Fusion::max_after_fc:
      graph.fc_busy = make_classifier(config.classes, width, head_rng);
      if (!config.shared_fc) graph.fc_quiet = make_classifier(config.classes, width, head_rng);
      break;
    case Fusion::avg_before_fc:
      graph.fc_busy = make_classifier(config.classes, width, head_rng);
      break;
    case Fusion::concat_before_fc:
      graph.fc_busy = make_classifier(config.classes, 2 * width, head_rng);
      break;
  }

  graph.laterals.resize(config.block_count());
  for (const auto& spec : config.laterals) {
    auto rng = stream(config.seed, 1000 + spec.index);
    const std::size_t channels = graph.busy.blocks[spec.index - 1].spec.out_channels;
    graph.laterals[spec.index - 1] = make_lateral(spec, channels, rng);
  }
  return graph;
}

std::vector<FusionSite> fusion_plan(const BqnGraph& graph) {
  std::vector<FusionSite> plan;
  for (std::size_t b = 0; b < graph.laterals.size(); ++b) {
    if (!graph.laterals[b]) continue;
    const std::size_t i = b + 1;
    const LateralDesign design = graph.laterals[b]->spec.design;
    plan.push_back(FusionSite{i, fuses_into_busy(design, i), fuses_into_quiet(design, i)});
  }
  return plan;
}

std::vector<real> global_average_pool(const VideoClip& x) {
  std::vector<real> pooled(x.channels(), 0.0);
  const real inv = 1.0 / static_cast<real>(x.frames() * x.height() * x.width());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    real acc = 0;
    for (std::size_t t = 0; t < x.frames(); ++t) {
      for (real v : x.plane(t, c)) acc += v;
    }
    pooled[c] = acc * inv;
  }
  return pooled;
}

namespace {

VideoClip run_stem(const PathwayNet& net, const VideoClip& input) {
  return relu(net.stem_bn.apply(net.stem.apply(input)));
}

}  // namespace

std::vector<real> run_pathway(const BqnGraph& graph, Pathway which, const VideoClip& input) {
  const PathwayNet& net = which == Pathway::busy ? graph.busy : graph.quiet;
  VideoClip x = run_stem(net, input);
  for (const auto& block : net.blocks) x = block.apply(x);
  return global_average_pool(x);
}

std::vector<real> fuse_scores(const std::vector<real>& busy, const std::vector<real>& quiet, Fusion method) {
  if (busy.size() != quiet.size()) throw ConfigError("score vectors differ in length");
  std::vector<real> out(busy.size());
  switch (method) {
    case Fusion::avg_after_fc:
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = 0.5 * (busy[k] + quiet[k]);
      return out;
    case Fusion::max_after_fc:
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(busy[k], quiet[k]);
      return out;
    case Fusion::avg_before_fc:
    case Fusion::concat_before_fc:
      break;
  }
  throw ConfigError(std::string(to_string(method)) + " fuses features, not scores");
}

std::vector<real> fuse_features(const BqnGraph& graph, const std::vector<real>& busy, const std::vector<real>& quiet) {
  if (busy.size() != quiet.size()) throw DimensionError("pooled features differ in width");
  switch (graph.config.fusion) {
    case Fusion::avg_after_fc:
    case Fusion::max_after_fc: {
      const Classifier& quiet_fc = graph.fc_quiet ? *graph.fc_quiet : graph.fc_busy;
      return fuse_scores(graph.fc_busy.apply(busy), quiet_fc.apply(quiet), graph.config.fusion);
    }
    case Fusion::avg_before_fc: {
      std::vector<real> mean(busy.size());
      for (std::size_t f = 0; f < mean.size(); ++f) mean[f] = 0.5 * (busy[f] + quiet[f]);
      return graph.fc_busy.apply(mean);
    }
    case Fusion::concat_before_fc: {
      std::vector<real> joined = busy;
      joined.insert(joined.end(), quiet.begin(), quiet.end());
      return graph.fc_busy.apply(joined);
    }
  }
  throw ConfigError("unknown fusion method");
}

std::vector<real> forward(const BqnGraph& graph, const DisentangledPair& pair) {
  if (pair.busy.channels() != graph.config.in_channels || pair.quiet.channels() != graph.config.in_channels) {
    throw DimensionError("graph expects " + std::to_string(graph.config.in_channels) + " input channels");
  }
  if (pair.busy.frames() != pair.quiet.frames()) throw DimensionError("busy and quiet frame counts differ");

  VideoClip busy = run_stem(graph.busy, pair.busy);
  VideoClip quiet = run_stem(graph.quiet, pair.quiet);
  for (std::size_t b = 0; b < graph.busy.blocks.size(); ++b) {
    busy = graph.busy.blocks[b].apply(busy);
    quiet = graph.quiet.blocks[b].apply(quiet);
    if (const auto& lateral = graph.laterals[b]) {
      auto fused = lc_variant(busy, quiet, b + 1, lateral->spec.design, *lateral);
      busy = std::move(fused.first);
      quiet = std::move(fused.second);
    }
  }
  return fuse_features(graph, global_average_pool(busy), global_average_pool(quiet));
}

}  // namespace bq

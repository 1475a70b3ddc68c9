#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bq/clip.hpp"
#include "bq/disentangle.hpp"
#include "bq/mbpm.hpp"

namespace bq {

enum class Stage { res2, res3, res4, res5 };
enum class LateralDesign { bplc, lc1, lc2, lc3, lc5 };
enum class Fusion { avg_after_fc, avg_before_fc, max_after_fc, concat_before_fc };
enum class Pathway { busy, quiet };

std::string_view to_string(Stage stage);
std::string_view to_string(LateralDesign design);
std::string_view to_string(Fusion fusion);
LateralDesign parse_lateral_design(std::string_view text);
Fusion parse_fusion(std::string_view text);

/// Inference-mode batch norm: y = gamma * (x - mean) / sqrt(var + eps) + beta,
/// per channel, using the stored statistics only.
struct BnState {
  std::vector<real> gamma;
  std::vector<real> beta;
  std::vector<real> mean;
  std::vector<real> var;
  real eps = 1e-5;

  static BnState identity(std::size_t channels);
  /// gamma = 0, which makes the normalized branch output beta (= 0).
  static BnState zero_scale(std::size_t channels);
  /// gamma = 1, beta = 0, mean = 0, var = 1 and eps = 0, so apply() is exact identity.
  static BnState exact_identity(std::size_t channels);

  std::size_t channels() const noexcept { return gamma.size(); }
  VideoClip apply(const VideoClip& x) const;
};

/// Dense per-frame 2D convolution without bias, zero padding k/2.
struct Conv2d {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t k = 1;
  std::size_t stride = 1;
  std::vector<real> weights;  ///< [out][in][k][k]

  VideoClip apply(const VideoClip& x) const;
  std::uint64_t macs(const Shape& input) const;
};

struct BlockSpec {
  Stage stage = Stage::res2;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;
};

/// conv3x3 -> BN -> ReLU -> conv3x3 -> BN, plus the (projected) shortcut, then ReLU.
struct ResidualBlock {
  BlockSpec spec;
  Conv2d conv1;
  BnState bn1;
  Conv2d conv2;
  BnState bn2;
  std::optional<Conv2d> projection;
  std::optional<BnState> projection_bn;

  VideoClip apply(const VideoClip& x) const;
};

struct LateralSpec {
  std::size_t index = 1;  ///< 1-based residual block index
  LateralDesign design = LateralDesign::bplc;
  real sigma = 0.9;
  std::size_t k = 7;
  NormMode norm = NormMode::sum1;
};

/// Parameters of one lateral connection between block outputs of width c.
struct LateralParams {
  LateralSpec spec;
  MbpmParams mbpm;           ///< stride 1, used on the quiet -> busy branch
  std::vector<real> phi;     ///< c x c pointwise channel mixing, [out][in]
  BnState bn_to_busy;        ///< zero-initialized scale
  BnState bn_to_quiet;       ///< zero-initialized scale
  std::size_t channels = 0;
};

/// Result of one lateral connection: (busy, quiet).
using FeaturePair = std::pair<VideoClip, VideoClip>;

/// Pointwise channel mixing: out(c') = sum_c phi[c'][c] * x(c).
VideoClip pointwise_mix(const VideoClip& x, const std::vector<real>& phi, std::size_t channels);

/// Band-pass lateral connection with 1-based block index i:
///   i even: busy += BN(MBPM_s1(quiet)), quiet unchanged
///   i odd:  quiet += BN(phi(busy)),     busy unchanged
/// The source is bilinearly resized to the target's spatial size first.
FeaturePair bplc(const VideoClip& busy, const VideoClip& quiet, std::size_t i, const LateralParams& params);

/// Same plumbing with a selectable design:
///   LC-I   quiet -> busy (MBPM branch) at every block
///   LC-II  busy -> quiet (phi branch) at every block
///   LC-III both directions at every block, both computed from the inputs
///   LC-V   BPLC alternation with the MBPM replaced by identity
///   BPLC   as bplc()
FeaturePair lc_variant(const VideoClip& busy, const VideoClip& quiet, std::size_t i, LateralDesign design,
                       const LateralParams& params);

struct Classifier {
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<real> weights;  ///< [class][feature]
  std::vector<real> bias;

  std::vector<real> apply(const std::vector<real>& x) const;
};

struct BqnConfig {
  std::vector<std::size_t> blocks_per_stage{1, 1, 1, 1};
  std::vector<std::size_t> widths{16, 32, 64, 128};
  std::size_t in_channels = 3;
  std::vector<LateralSpec> laterals;
  Fusion fusion = Fusion::avg_after_fc;
  bool shared_fc = true;
  std::size_t classes = 10;
  std::uint64_t seed = 0;

  std::size_t block_count() const;
  /// Stage of a 1-based block index.
  Stage stage_of(std::size_t index) const;
  void validate() const;
};

/// One BPLC after every block with the per-stage defaults: sigma 0.9, k = 7
/// for res2-res4 and k = 3 for res5.
std::vector<LateralSpec> laterals_at_every_block(const BqnConfig& config,
                                                 LateralDesign design = LateralDesign::bplc);

LateralSpec default_lateral(const BqnConfig& config, std::size_t index, LateralDesign design = LateralDesign::bplc);

BqnConfig parse_bqn_config(std::string_view json_text);
BqnConfig load_bqn_config(const std::filesystem::path& path);
std::string to_json(const BqnConfig& config);

struct PathwayNet {
  Conv2d stem;
  BnState stem_bn;
  std::vector<ResidualBlock> blocks;
};

struct BqnGraph {
  BqnConfig config;
  PathwayNet busy;
  PathwayNet quiet;
  /// Indexed by 0-based block; empty where no lateral is placed.
  std::vector<std::optional<LateralParams>> laterals;
  /// Busy (or shared, or fused) classifier.
  Classifier fc_busy;
  /// Separate quiet classifier when shared_fc is false and fusion is after fc.
  std::optional<Classifier> fc_quiet;

  std::size_t lateral_count() const;
};

/// Deterministic initialization from config.seed. Backbone weights, classifiers
/// and lateral parameters are drawn from separate streams, so adding or
/// removing laterals leaves the backbone unchanged.
BqnGraph build_bqn(const BqnConfig& config);

/// Where each placed lateral fuses information.
struct FusionSite {
  std::size_t index = 0;
  bool into_busy = false;
  bool into_quiet = false;
};

std::vector<FusionSite> fusion_plan(const BqnGraph& graph);

/// Stem and blocks of one pathway with no laterals, then global average pool
/// over time and space.
std::vector<real> run_pathway(const BqnGraph& graph, Pathway which, const VideoClip& input);

/// Global average pool over frames and pixels: one value per channel.
std::vector<real> global_average_pool(const VideoClip& x);

/// After-fc fusion of two score vectors (avg or max). Before-fc methods are a
/// ConfigError here; use fuse_features.
std::vector<real> fuse_scores(const std::vector<real>& busy, const std::vector<real>& quiet, Fusion method);

/// Pooled features of both pathways to class scores under the graph's fusion
/// method and classifier sharing.
std::vector<real> fuse_features(const BqnGraph& graph, const std::vector<real>& busy, const std::vector<real>& quiet);

/// Full two-pathway forward with laterals applied in block order.
std::vector<real> forward(const BqnGraph& graph, const DisentangledPair& pair);

}  // namespace bq

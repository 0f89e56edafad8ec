#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lc2/projection.hpp"

namespace lc2 {

/// Channel-major (CHW) tensor. The encoder output f(x) is an H_e x W_e x D map stored as D planes.
struct Tensor3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
  std::size_t plane() const { return height * width; }
};

using FeatureMap = Tensor3;

enum class Branch : std::uint8_t { Range = 0, Disparity = 1 };
enum class PoolingHead : std::uint8_t { Gem = 0, NetVlad = 1 };

struct ConvLayer {
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t pad = 1;
  bool rectify = true;
  std::vector<double> weight;  // [out_ch][in_ch][kernel][kernel]
  std::vector<double> bias;    // [out_ch]
};

// How valid grid cells are mapped before scaling. Inverse turns ranges into disparity-like values.
enum class InputEncoding : std::uint8_t { Linear = 0, Inverse = 1 };

struct BranchParams {
  std::vector<ConvLayer> layers;
  InputEncoding encoding = InputEncoding::Linear;
  double input_scale = 1.0;  // multiplies every valid (encoded) input cell before the first layer
};

struct GemParams {
  double p = 3.0;
};

struct NetVladParams {
  std::size_t clusters = 0;
  std::size_t dim = 0;
  std::vector<double> centers;        // [K][D]
  std::vector<double> assign_weight;  // [K][D]
  std::vector<double> assign_bias;    // [K]
};

struct EncoderArch {
  std::vector<std::size_t> channels{16, 32, 64, 64};
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t input_height = 64;
  std::size_t input_width = 256;
  std::size_t vlad_clusters = 16;
  InputEncoding range_encoding = InputEncoding::Inverse;
  double range_input_scale = 4.0;
  double disparity_input_scale = 4.0;
};

/// Two distinct branches (same architecture, separate weights) plus the pooling heads.
struct ModelParams {
  BranchParams range;
  BranchParams disparity;
  GemParams gem;
  NetVladParams netvlad;
  PoolingHead head = PoolingHead::Gem;
  std::size_t input_height = 64;
  std::size_t input_width = 256;

  BranchParams& branch(Branch b) { return b == Branch::Range ? range : disparity; }
  const BranchParams& branch(Branch b) const { return b == Branch::Range ? range : disparity; }
  std::size_t feature_dim() const { return range.layers.empty() ? 0 : range.layers.back().out_ch; }
  std::size_t descriptor_dim() const;
};

/// He-initialized parameters; NetVLAD head is allocated but zero until initialized from data.
ModelParams make_model(const EncoderArch& arch, std::uint64_t seed);

/// Same structure as `p` with every learnable value zeroed.
ModelParams zeros_like(const ModelParams& p);

/// Visits every learnable tensor as (name, values). Order is fixed.
void for_each_learnable(ModelParams& p, const std::function<void(const std::string&, std::span<double>)>& f);
void for_each_learnable(const ModelParams& p,
                        const std::function<void(const std::string&, std::span<const double>)>& f);

/// Resize, replace sentinels by 0, encode and apply the branch input scale.
Tensor3 prepare_input(const Grid& grid, const ModelParams& params, Branch branch);

// ---- encoder ----------------------------------------------------------------

struct EncoderCache {
  std::vector<Tensor3> inputs;  // input of each layer
  std::vector<Tensor3> preact;  // conv output before rectification
};

FeatureMap encode(const BranchParams& params, const Tensor3& input, EncoderCache* cache = nullptr);

/// Accumulates parameter gradients into `grads`; returns the gradient w.r.t. the input.
Tensor3 encode_backward(const BranchParams& params, const EncoderCache& cache, const FeatureMap& dmap,
                        BranchParams& grads);

// ---- normalization ----------------------------------------------------------

inline constexpr double kNormEps = 1e-12;

/// y = v / max(|v|, eps). Returns |v|.
double l2_normalize(std::span<const double> v, std::span<double> y);
/// dv for y = l2_normalize(v); `norm` is the value returned by the forward pass.
void l2_normalize_backward(std::span<const double> y, double norm, std::span<const double> dy, std::span<double> dv);

// ---- GeM --------------------------------------------------------------------

inline constexpr double kGemEps = 1e-6;

struct GemCache {
  double p = 0.0;
  std::vector<double> mean_pow;  // per channel mean(clamp(x)^p)
  std::vector<double> pooled;    // per channel, before normalization
  std::vector<double> output;    // normalized
  double norm = 0.0;
};

/// Per-channel generalized mean, unnormalized.
std::vector<double> gem_pool_raw(const FeatureMap& map, double p, GemCache* cache = nullptr);
/// Generalized mean followed by L2 normalization.
std::vector<double> gem_pool(const FeatureMap& map, double p, GemCache* cache = nullptr);
/// Backward of gem_pool. Overwrites dmap, adds to dp.
void gem_backward(const GemCache& cache, const FeatureMap& map, std::span<const double> dy, FeatureMap& dmap,
                  double& dp);

// ---- NetVLAD ----------------------------------------------------------------

struct NetVladCache {
  std::vector<double> assign;      // [N][K]
  std::vector<double> residual;    // V, [K][D]
  std::vector<double> block_norm;  // [K]
  std::vector<double> intra;       // intra-normalized, [K][D]
  std::vector<double> output;
  double norm = 0.0;
};

/// Soft-assignment aggregation V(k) before any normalization, [K][D].
std::vector<double> netvlad_aggregate(const FeatureMap& map, const NetVladParams& params,
                                      std::vector<double>* assign = nullptr);
/// Full NetVLAD: aggregate, intra-normalize, flatten, L2-normalize. Throws Numerical on a zero descriptor.
std::vector<double> netvlad_pool(const FeatureMap& map, const NetVladParams& params, NetVladCache* cache = nullptr);
void netvlad_backward(const NetVladParams& params, const NetVladCache& cache, const FeatureMap& map,
                      std::span<const double> dy, FeatureMap& dmap, NetVladParams& grads);

/// Initializes centers and assignment weights from local features (k-means, seeded).
void init_netvlad(NetVladParams& params, const std::vector<std::vector<double>>& local_features,
                  std::size_t clusters, std::uint64_t seed);

// ---- full descriptor path ---------------------------------------------------

struct DescribeCache {
  EncoderCache encoder;
  FeatureMap map;
  GemCache gem;
  NetVladCache vlad;
};

std::vector<double> describe(const ModelParams& params, Branch branch, const Tensor3& input,
                             DescribeCache* cache = nullptr);

/// Backpropagates dL/d(descriptor) into `grads` (encoder branch + active head). Returns dL/d(input).
Tensor3 describe_backward(const ModelParams& params, Branch branch, const DescribeCache& cache,
                          std::span<const double> ddesc, ModelParams& grads);

struct LocalFeature {
  std::size_t row;
  std::size_t col;
  std::vector<double> values;
};

/// Per-location L2-normalized feature columns in row-major order.
std::vector<LocalFeature> extract_local_features(const FeatureMap& map);

// ---- model file ---------------------------------------------------------------

void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace lc2

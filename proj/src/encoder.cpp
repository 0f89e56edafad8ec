#include "lc2/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "lc2/binary_io.hpp"
#include "lc2/error.hpp"
#include "lc2/kernels.hpp"

namespace lc2 {

std::size_t ModelParams::descriptor_dim() const {
  return head == PoolingHead::Gem ? feature_dim() : netvlad.clusters * netvlad.dim;
}

namespace {

BranchParams make_branch(const EncoderArch& arch, InputEncoding encoding, double input_scale, std::mt19937_64& rng) {
  BranchParams b;
  b.encoding = encoding;
  b.input_scale = input_scale;
  std::size_t in_ch = 1;
  for (std::size_t out_ch : arch.channels) {
    ConvLayer l;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.kernel = arch.kernel;
    l.stride = arch.stride;
    l.pad = arch.kernel / 2;
    l.weight.resize(out_ch * in_ch * arch.kernel * arch.kernel);
    l.bias.assign(out_ch, 0.0);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in_ch * arch.kernel * arch.kernel)));
    for (double& w : l.weight) w = dist(rng);
    b.layers.push_back(std::move(l));
    in_ch = out_ch;
  }
  return b;
}

}  // namespace

ModelParams make_model(const EncoderArch& arch, std::uint64_t seed) {
  require(!arch.channels.empty(), "make_model: need at least one layer");
  require(arch.vlad_clusters >= 1, "make_model: NetVLAD needs K >= 1");
  ModelParams m;
  std::mt19937_64 range_rng(seed);
  std::mt19937_64 disp_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  m.range = make_branch(arch, arch.range_encoding, arch.range_input_scale, range_rng);
  m.disparity = make_branch(arch, InputEncoding::Linear, arch.disparity_input_scale, disp_rng);
  m.input_height = arch.input_height;
  m.input_width = arch.input_width;
  m.netvlad.clusters = arch.vlad_clusters;
  m.netvlad.dim = arch.channels.back();
  m.netvlad.centers.assign(m.netvlad.clusters * m.netvlad.dim, 0.0);
  m.netvlad.assign_weight.assign(m.netvlad.clusters * m.netvlad.dim, 0.0);
  m.netvlad.assign_bias.assign(m.netvlad.clusters, 0.0);
  return m;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for_each_learnable(z, [](const std::string&, std::span<double> v) { std::fill(v.begin(), v.end(), 0.0); });
  return z;
}

namespace {

template <typename Params, typename Fn>
void visit_learnable(Params& p, Fn&& f) {
  auto branch = [&](auto& b, const std::string& prefix) {
    for (std::size_t i = 0; i < b.layers.size(); ++i) {
      const std::string base = prefix + ".conv" + std::to_string(i);
      f(base + ".weight", std::span(b.layers[i].weight));
      f(base + ".bias", std::span(b.layers[i].bias));
    }
  };
  branch(p.range, "range");
  branch(p.disparity, "disparity");
  f(std::string("gem.p"), std::span(&p.gem.p, 1));
  f(std::string("netvlad.centers"), std::span(p.netvlad.centers));
  f(std::string("netvlad.weight"), std::span(p.netvlad.assign_weight));
  f(std::string("netvlad.bias"), std::span(p.netvlad.assign_bias));
}

}  // namespace

void for_each_learnable(ModelParams& p, const std::function<void(const std::string&, std::span<double>)>& f) {
  visit_learnable(p, f);
}

void for_each_learnable(const ModelParams& p,
                        const std::function<void(const std::string&, std::span<const double>)>& f) {
  visit_learnable(p, [&](const std::string& n, auto s) { f(n, std::span<const double>(s.data(), s.size())); });
}

Tensor3 prepare_input(const Grid& grid, const ModelParams& params, Branch branch) {
  const Grid resized = resize_to_input(grid, params.input_height, params.input_width);
  const BranchParams& b = params.branch(branch);
  Tensor3 t(1, resized.height, resized.width);
  for (std::size_t i = 0; i < resized.size(); ++i) {
    double v = resized.cells[i];
    if (is_sentinel(v)) {
      v = 0.0;
    } else if (b.encoding == InputEncoding::Inverse) {
      v = v > 0.0 ? 1.0 / v : 0.0;
    }
    t.data[i] = v * b.input_scale;
  }
  return t;
}

// ---- encoder ----------------------------------------------------------------

FeatureMap encode(const BranchParams& params, const Tensor3& input, EncoderCache* cache) {
  require(!params.layers.empty(), "encode: empty branch");
  require(input.channels == params.layers.front().in_ch, "encode: input channel count does not match parameters");
  if (cache) {
    cache->inputs.clear();
    cache->preact.clear();
  }
  Tensor3 x = input;
  for (const ConvLayer& l : params.layers) {
    require(x.channels == l.in_ch, "encode: layer shape mismatch");
    const auto s = kernels::conv_shape(l.in_ch, x.height, x.width, l.out_ch, l.kernel, l.stride, l.pad);
    Tensor3 z(s.out_ch, s.out_h, s.out_w);
    kernels::conv2d_forward(s, x.data, l.weight, l.bias, z.data);
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->preact.push_back(z);
    }
    if (l.rectify) {
      for (double& v : z.data) v = v > 0.0 ? v : 0.0;
    }
    x = std::move(z);
  }
  return x;
}

Tensor3 encode_backward(const BranchParams& params, const EncoderCache& cache, const FeatureMap& dmap,
                        BranchParams& grads) {
  require(cache.inputs.size() == params.layers.size(), "encode_backward: cache does not match parameters");
  Tensor3 g = dmap;
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const ConvLayer& l = params.layers[li];
    const Tensor3& in = cache.inputs[li];
    if (l.rectify) {
      const auto& z = cache.preact[li].data;
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        if (!(z[i] > 0.0)) g.data[i] = 0.0;
      }
    }
    const auto s = kernels::conv_shape(l.in_ch, in.height, in.width, l.out_ch, l.kernel, l.stride, l.pad);
    ConvLayer& gl = grads.layers[li];
    kernels::conv2d_backward_params(s, in.data, g.data, gl.weight, gl.bias);
    Tensor3 din(in.channels, in.height, in.width);
    kernels::conv2d_backward_input(s, l.weight, g.data, din.data);
    g = std::move(din);
  }
  return g;
}

// ---- normalization ----------------------------------------------------------

double l2_normalize(std::span<const double> v, std::span<double> y) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double n = std::sqrt(sq);
  const double d = std::max(n, kNormEps);
  for (std::size_t i = 0; i < v.size(); ++i) y[i] = v[i] / d;
  return n;
}

void l2_normalize_backward(std::span<const double> y, double norm, std::span<const double> dy, std::span<double> dv) {
  if (norm < kNormEps) {
    for (std::size_t i = 0; i < dy.size(); ++i) dv[i] = dy[i] / kNormEps;
    return;
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * dy[i];
  for (std::size_t i = 0; i < y.size(); ++i) dv[i] = (dy[i] - y[i] * dot) / norm;
}

// ---- GeM --------------------------------------------------------------------

std::vector<double> gem_pool_raw(const FeatureMap& map, double p, GemCache* cache) {
  require(p > 0.0, "gem_pool: p must be positive");
  const std::size_t n = map.plane();
  require(n > 0, "gem_pool: empty feature map");
  std::vector<double> pooled(map.channels), mean_pow(map.channels);
  for (std::size_t c = 0; c < map.channels; ++c) {
    const double* x = map.data.data() + c * n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::pow(std::max(x[i], kGemEps), p);
    mean_pow[c] = acc / static_cast<double>(n);
    pooled[c] = std::pow(mean_pow[c], 1.0 / p);
  }
  if (cache) {
    cache->p = p;
    cache->mean_pow = mean_pow;
    cache->pooled = pooled;
  }
  return pooled;
}

std::vector<double> gem_pool(const FeatureMap& map, double p, GemCache* cache) {
  GemCache local;
  GemCache& c = cache ? *cache : local;
  gem_pool_raw(map, p, &c);
  c.output.assign(c.pooled.size(), 0.0);
  c.norm = l2_normalize(c.pooled, c.output);
  return c.output;
}

void gem_backward(const GemCache& cache, const FeatureMap& map, std::span<const double> dy, FeatureMap& dmap,
                  double& dp) {
  const std::size_t n = map.plane();
  const double p = cache.p;
  std::vector<double> dpooled(cache.pooled.size());
  l2_normalize_backward(cache.output, cache.norm, dy, dpooled);

  dmap = FeatureMap(map.channels, map.height, map.width);
  for (std::size_t c = 0; c < map.channels; ++c) {
    const double s = cache.mean_pow[c];
    const double y = cache.pooled[c];
    const double* x = map.data.data() + c * n;
    double* dx = dmap.data.data() + c * n;
    // dy/dx_i = s^(1/p - 1) * x_i^(p-1) / n
    const double coef = dpooled[c] * std::pow(s, 1.0 / p - 1.0) / static_cast<double>(n);
    double xlogx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double xc = std::max(x[i], kGemEps);
      dx[i] = x[i] > kGemEps ? coef * std::pow(xc, p - 1.0) : 0.0;
      xlogx += std::pow(xc, p) * std::log(xc);
    }
    xlogx /= static_cast<double>(n);
    // y = exp(log(s) / p)
    dp += dpooled[c] * y * (-std::log(s) / (p * p) + xlogx / (p * s));
  }
}

// ---- NetVLAD ----------------------------------------------------------------

namespace {

void soft_assign(const FeatureMap& map, const NetVladParams& params, std::vector<double>& assign) {
  const std::size_t n = map.plane(), K = params.clusters, D = params.dim;
  assign.assign(n * K, 0.0);
  std::vector<double> score(K);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      double s = params.assign_bias[k];
      const double* w = params.assign_weight.data() + k * D;
      for (std::size_t d = 0; d < D; ++d) s += w[d] * map.data[d * n + i];
      score[k] = s;
      mx = std::max(mx, s);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      score[k] = std::exp(score[k] - mx);
      z += score[k];
    }
    for (std::size_t k = 0; k < K; ++k) assign[i * K + k] = score[k] / z;
  }
}

}  // namespace

std::vector<double> netvlad_aggregate(const FeatureMap& map, const NetVladParams& params,
                                      std::vector<double>* assign_out) {
  require(params.clusters >= 1, "netvlad: K must be >= 1");
  require(map.channels == params.dim, "netvlad: feature dimension does not match parameters");
  const std::size_t n = map.plane(), K = params.clusters, D = params.dim;
  std::vector<double> assign;
  soft_assign(map, params, assign);
  std::vector<double> V(K * D, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double* v = V.data() + k * D;
    const double* c = params.centers.data() + k * D;
    for (std::size_t d = 0; d < D; ++d) {
      const double* x = map.data.data() + d * n;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += assign[i * K + k] * (x[i] - c[d]);
      v[d] = acc;
    }
  }
  if (assign_out) *assign_out = std::move(assign);
  return V;
}

std::vector<double> netvlad_pool(const FeatureMap& map, const NetVladParams& params, NetVladCache* cache) {
  NetVladCache local;
  NetVladCache& c = cache ? *cache : local;
  const std::size_t K = params.clusters, D = params.dim;
  c.residual = netvlad_aggregate(map, params, &c.assign);
  c.intra.assign(K * D, 0.0);
  c.block_norm.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    c.block_norm[k] = l2_normalize(std::span(c.residual).subspan(k * D, D), std::span(c.intra).subspan(k * D, D));
  }
  c.output.assign(K * D, 0.0);
  c.norm = l2_normalize(c.intra, c.output);
  if (c.norm < kNormEps) fail(ErrorKind::Numerical, "netvlad: zero descriptor");
  return c.output;
}

void netvlad_backward(const NetVladParams& params, const NetVladCache& cache, const FeatureMap& map,
                      std::span<const double> dy, FeatureMap& dmap, NetVladParams& grads) {
  const std::size_t n = map.plane(), K = params.clusters, D = params.dim;
  std::vector<double> dintra(K * D), dV(K * D);
  l2_normalize_backward(cache.output, cache.norm, dy, dintra);
  for (std::size_t k = 0; k < K; ++k) {
    l2_normalize_backward(std::span(cache.intra).subspan(k * D, D), cache.block_norm[k],
                          std::span<const double>(dintra).subspan(k * D, D), std::span(dV).subspan(k * D, D));
  }

  dmap = FeatureMap(map.channels, map.height, map.width);
  std::vector<double> da(K), ds(K), xi(D);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < D; ++d) xi[d] = map.data[d * n + i];
    const double* a = cache.assign.data() + i * K;
    double weighted = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double* c = params.centers.data() + k * D;
      const double* g = dV.data() + k * D;
      double dot = 0.0;
      for (std::size_t d = 0; d < D; ++d) dot += g[d] * (xi[d] - c[d]);
      da[k] = dot;
      weighted += a[k] * dot;
    }
    for (std::size_t k = 0; k < K; ++k) {
      ds[k] = a[k] * (da[k] - weighted);
      const double* g = dV.data() + k * D;
      const double* w = params.assign_weight.data() + k * D;
      double* dc = grads.centers.data() + k * D;
      double* dw = grads.assign_weight.data() + k * D;
      grads.assign_bias[k] += ds[k];
      for (std::size_t d = 0; d < D; ++d) {
        dmap.data[d * n + i] += a[k] * g[d] + ds[k] * w[d];
        dc[d] -= a[k] * g[d];
        dw[d] += ds[k] * xi[d];
      }
    }
  }
}

void init_netvlad(NetVladParams& params, const std::vector<std::vector<double>>& local_features,
                  std::size_t clusters, std::uint64_t seed) {
  require(clusters >= 1, "init_netvlad: K must be >= 1");
  require(local_features.size() >= clusters, "init_netvlad: fewer local features than clusters");
  const std::size_t D = local_features.front().size();
  const std::size_t N = local_features.size();
  params.clusters = clusters;
  params.dim = D;

  auto sqdist = [D](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t d = 0; d < D; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
  };

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<double> centers;
  centers.reserve(clusters * D);
  {
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    const auto& first = local_features[pick(rng)];
    centers.insert(centers.end(), first.begin(), first.end());
    std::vector<double> best(N, std::numeric_limits<double>::infinity());
    while (centers.size() < clusters * D) {
      const double* last = centers.data() + centers.size() - D;
      double total = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        best[i] = std::min(best[i], sqdist(local_features[i].data(), last));
        total += best[i];
      }
      std::size_t chosen = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double r = u(rng);
        for (chosen = 0; chosen + 1 < N; ++chosen) {
          r -= best[chosen];
          if (r <= 0.0) break;
        }
      } else {
        chosen = pick(rng);
      }
      centers.insert(centers.end(), local_features[chosen].begin(), local_features[chosen].end());
    }
  }

  // Lloyd iterations.
  std::vector<std::size_t> label(N, 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < N; ++i) {
      std::size_t arg = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < clusters; ++k) {
        const double dd = sqdist(local_features[i].data(), centers.data() + k * D);
        if (dd < bd) {
          bd = dd;
          arg = k;
        }
      }
      if (label[i] != arg || iter == 0) changed = true;
      label[i] = arg;
    }
    if (!changed) break;
    std::vector<double> sum(clusters * D, 0.0);
    std::vector<std::size_t> count(clusters, 0);
    for (std::size_t i = 0; i < N; ++i) {
      ++count[label[i]];
      for (std::size_t d = 0; d < D; ++d) sum[label[i] * D + d] += local_features[i][d];
    }
    for (std::size_t k = 0; k < clusters; ++k) {
      if (count[k] == 0) continue;  // keep the previous centre for an empty cluster
      for (std::size_t d = 0; d < D; ++d) centers[k * D + d] = sum[k * D + d] / static_cast<double>(count[k]);
    }
  }

  // Sharpness from the gap between the two nearest centres: softmax(-alpha * |x - c_k|^2).
  double alpha = 1.0;
  if (clusters >= 2) {
    double gap = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
      for (std::size_t k = 0; k < clusters; ++k) {
        const double dd = sqdist(local_features[i].data(), centers.data() + k * D);
        if (dd < d1) {
          d2 = d1;
          d1 = dd;
        } else if (dd < d2) {
          d2 = dd;
        }
      }
      gap += d2 - d1;
    }
    gap /= static_cast<double>(N);
    if (gap > 0.0) alpha = -std::log(0.01) / gap;
  }

  params.centers = centers;
  params.assign_weight.assign(clusters * D, 0.0);
  params.assign_bias.assign(clusters, 0.0);
  for (std::size_t k = 0; k < clusters; ++k) {
    double sq = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      params.assign_weight[k * D + d] = 2.0 * alpha * centers[k * D + d];
      sq += centers[k * D + d] * centers[k * D + d];
    }
    params.assign_bias[k] = -alpha * sq;
  }
}

// ---- full descriptor path ---------------------------------------------------

std::vector<double> describe(const ModelParams& params, Branch branch, const Tensor3& input, DescribeCache* cache) {
  if (!cache) {
    const FeatureMap map = encode(params.branch(branch), input);
    return params.head == PoolingHead::Gem ? gem_pool(map, params.gem.p) : netvlad_pool(map, params.netvlad);
  }
  cache->map = encode(params.branch(branch), input, &cache->encoder);
  return params.head == PoolingHead::Gem ? gem_pool(cache->map, params.gem.p, &cache->gem)
                                         : netvlad_pool(cache->map, params.netvlad, &cache->vlad);
}

Tensor3 describe_backward(const ModelParams& params, Branch branch, const DescribeCache& cache,
                          std::span<const double> ddesc, ModelParams& grads) {
  FeatureMap dmap;
  if (params.head == PoolingHead::Gem) {
    gem_backward(cache.gem, cache.map, ddesc, dmap, grads.gem.p);
  } else {
    netvlad_backward(params.netvlad, cache.vlad, cache.map, ddesc, dmap, grads.netvlad);
  }
  return encode_backward(params.branch(branch), cache.encoder, dmap, grads.branch(branch));
}

std::vector<LocalFeature> extract_local_features(const FeatureMap& map) {
  std::vector<LocalFeature> out;
  out.reserve(map.plane());
  std::vector<double> column(map.channels);
  for (std::size_t r = 0; r < map.height; ++r) {
    for (std::size_t c = 0; c < map.width; ++c) {
      for (std::size_t d = 0; d < map.channels; ++d) column[d] = map.at(d, r, c);
      LocalFeature f{r, c, std::vector<double>(map.channels)};
      l2_normalize(column, f.values);
      out.push_back(std::move(f));
    }
  }
  return out;
}

// ---- model file -------------------------------------------------------------

namespace {

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
};

void put(std::ostream& os, const std::string& name, const std::vector<std::uint32_t>& dims,
         std::span<const double> data) {
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  io::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) io::write_pod<std::uint32_t>(os, d);
  for (double v : data) io::write_pod<double>(os, v);
}

using u32 = std::uint32_t;

}  // namespace

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  std::vector<std::tuple<std::string, std::vector<u32>, std::vector<double>>> tensors;
  const std::string head = params.head == PoolingHead::Gem ? "pooling.gem" : "pooling.netvlad";
  tensors.emplace_back(head, std::vector<u32>{}, std::vector<double>{1.0});
  tensors.emplace_back("input.shape", std::vector<u32>{2},
                       std::vector<double>{static_cast<double>(params.input_height),
                                           static_cast<double>(params.input_width)});
  auto branch = [&](const BranchParams& b, const std::string& prefix) {
    tensors.emplace_back(prefix + ".input_scale", std::vector<u32>{}, std::vector<double>{b.input_scale});
    tensors.emplace_back(prefix + ".input_encoding", std::vector<u32>{},
                         std::vector<double>{static_cast<double>(b.encoding)});
    for (std::size_t i = 0; i < b.layers.size(); ++i) {
      const ConvLayer& l = b.layers[i];
      const std::string base = prefix + ".conv" + std::to_string(i);
      tensors.emplace_back(base + ".weight",
                           std::vector<u32>{static_cast<u32>(l.out_ch), static_cast<u32>(l.in_ch),
                                            static_cast<u32>(l.kernel), static_cast<u32>(l.kernel)},
                           l.weight);
      tensors.emplace_back(base + ".bias", std::vector<u32>{static_cast<u32>(l.out_ch)}, l.bias);
      tensors.emplace_back(base + ".config", std::vector<u32>{3},
                           std::vector<double>{static_cast<double>(l.stride), static_cast<double>(l.pad),
                                               l.rectify ? 1.0 : 0.0});
    }
  };
  branch(params.range, "range");
  branch(params.disparity, "disparity");
  tensors.emplace_back("gem.p", std::vector<u32>{}, std::vector<double>{params.gem.p});
  const auto K = static_cast<u32>(params.netvlad.clusters), D = static_cast<u32>(params.netvlad.dim);
  tensors.emplace_back("netvlad.centers", std::vector<u32>{K, D}, params.netvlad.centers);
  tensors.emplace_back("netvlad.weight", std::vector<u32>{K, D}, params.netvlad.assign_weight);
  tensors.emplace_back("netvlad.bias", std::vector<u32>{K}, params.netvlad.assign_bias);

  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::DataFormat, "cannot open for writing: " + path.string());
  io::write_magic(os, "LC2M");
  io::write_pod<u32>(os, static_cast<u32>(tensors.size()));
  for (const auto& [name, dims, data] : tensors) put(os, name, dims, data);
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::DataFormat, "cannot open: " + path.string());
  io::expect_magic(is, "LC2M");
  const auto count = io::read_pod<u32>(is);
  std::map<std::string, RawTensor> t;
  for (u32 i = 0; i < count; ++i) {
    const auto len = io::read_pod<u32>(is);
    if (len > 4096) fail(ErrorKind::DataFormat, "model: tensor name too long");
    std::string name(len, '\0');
    is.read(name.data(), len);
    RawTensor r;
    const auto rank = io::read_pod<std::uint8_t>(is);
    std::size_t n = 1;
    for (int d = 0; d < rank; ++d) {
      r.dims.push_back(io::read_pod<u32>(is));
      n *= r.dims.back();
    }
    if (n > (1u << 28)) fail(ErrorKind::DataFormat, "model: tensor too large");
    r.data.resize(n);
    for (double& v : r.data) v = io::read_pod<double>(is);
    t.emplace(std::move(name), std::move(r));
  }

  auto get = [&](const std::string& name) -> const RawTensor& {
    auto it = t.find(name);
    if (it == t.end()) fail(ErrorKind::DataFormat, "model: missing tensor " + name);
    return it->second;
  };

  ModelParams m;
  if (t.count("pooling.netvlad")) {
    m.head = PoolingHead::NetVlad;
  } else if (t.count("pooling.gem")) {
    m.head = PoolingHead::Gem;
  } else {
    fail(ErrorKind::DataFormat, "model: missing pooling header entry");
  }
  const auto& shape = get("input.shape");
  m.input_height = static_cast<std::size_t>(shape.data.at(0));
  m.input_width = static_cast<std::size_t>(shape.data.at(1));

  auto branch = [&](BranchParams& b, const std::string& prefix) {
    b.input_scale = get(prefix + ".input_scale").data.at(0);
    if (t.count(prefix + ".input_encoding")) {
      const double e = get(prefix + ".input_encoding").data.at(0);
      if (e != 0.0 && e != 1.0) fail(ErrorKind::DataFormat, "model: unknown input encoding for " + prefix);
      b.encoding = static_cast<InputEncoding>(static_cast<int>(e));
    }
    for (std::size_t i = 0;; ++i) {
      const std::string base = prefix + ".conv" + std::to_string(i);
      if (!t.count(base + ".weight")) break;
      const auto& w = get(base + ".weight");
      const auto& bias = get(base + ".bias");
      const auto& cfg = get(base + ".config");
      if (w.dims.size() != 4 || bias.dims.size() != 1 || bias.dims[0] != w.dims[0] || cfg.data.size() != 3) {
        fail(ErrorKind::DataFormat, "model: malformed layer " + base);
      }
      ConvLayer l;
      l.out_ch = w.dims[0];
      l.in_ch = w.dims[1];
      l.kernel = w.dims[2];
      l.stride = static_cast<std::size_t>(cfg.data[0]);
      l.pad = static_cast<std::size_t>(cfg.data[1]);
      l.rectify = cfg.data[2] != 0.0;
      l.weight = w.data;
      l.bias = bias.data;
      b.layers.push_back(std::move(l));
    }
    if (b.layers.empty()) fail(ErrorKind::DataFormat, "model: branch without layers: " + prefix);
  };
  branch(m.range, "range");
  branch(m.disparity, "disparity");
  m.gem.p = get("gem.p").data.at(0);
  const auto& centers = get("netvlad.centers");
  if (centers.dims.size() != 2) fail(ErrorKind::DataFormat, "model: malformed netvlad.centers");
  m.netvlad.clusters = centers.dims[0];
  m.netvlad.dim = centers.dims[1];
  m.netvlad.centers = centers.data;
  m.netvlad.assign_weight = get("netvlad.weight").data;
  m.netvlad.assign_bias = get("netvlad.bias").data;
  return m;
}

}  // namespace lc2

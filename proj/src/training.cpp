#include "lc2/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>

#include "lc2/error.hpp"
#include "lc2/random.hpp"

namespace lc2 {

// ---- losses -------------------------------------------------------------------

double contrastive_loss(double d, double psi, double tau) {
  const double hinge = std::max(tau - d, 0.0);
  return psi * d * d + (1.0 - psi) * hinge * hinge;
}

double contrastive_loss_grad(double d, double psi, double tau) {
  const double hinge = std::max(tau - d, 0.0);
  return 2.0 * psi * d - 2.0 * (1.0 - psi) * hinge;
}

double triplet_loss(double d_pos, double d_neg, double margin) { return std::max(d_pos - d_neg + margin, 0.0); }

// ---- samples ------------------------------------------------------------------

std::size_t crop_columns(const SensorGeometry& g) { return columns_for_fov(g.camera.horizontal_fov, g.lidar_width); }

FrustumSpec crop_frustum(const SensorGeometry& g, int crop) {
  const std::size_t W = g.lidar_width;
  const CropSpec c = default_crop(crop, W, crop_columns(g));
  const double center = column_azimuth(static_cast<double>(c.start_col) + 0.5 * static_cast<double>(c.width), W);
  const double fov = 2.0 * std::numbers::pi * static_cast<double>(c.width) / static_cast<double>(W);
  return {fov, g.lidar.max_range, center};
}

namespace {

void check_geometry(const SensorGeometry& g) {
  require(g.lidar_width >= kNumCrops, "sensor geometry: LiDAR panorama narrower than the crop count");
  require(g.camera.horizontal_fov > 0.0 && g.camera.max_range > 0.0, "sensor geometry: bad camera frustum");
  require(g.lidar.max_range > 0.0, "sensor geometry: bad LiDAR range");
}

TrainItem camera_item(std::size_t row, const ManifestEntry& e, const SensorGeometry& g) {
  return {row, Branch::Disparity, -1, e.pose, e.geotag, g.camera};
}

}  // namespace

std::vector<TrainItem> phase1_items(const std::vector<ManifestEntry>& manifest, const SensorGeometry& g) {
  check_geometry(g);
  std::vector<TrainItem> items;
  for (std::size_t r = 0; r < manifest.size(); ++r) {
    const ManifestEntry& e = manifest[r];
    if (e.modality == Modality::Lidar) {
      for (int c = 0; c < kNumCrops; ++c) items.push_back({r, Branch::Range, c, e.pose, e.geotag, crop_frustum(g, c)});
    } else {
      items.push_back(camera_item(r, e, g));
    }
  }
  return items;
}

std::vector<TrainItem> phase2_items(const std::vector<ManifestEntry>& manifest, const SensorGeometry& g) {
  check_geometry(g);
  const int crop = crop_for_boresight(g.camera.boresight, g.lidar_width, crop_columns(g));
  std::vector<TrainItem> items;
  for (std::size_t r = 0; r < manifest.size(); ++r) {
    const ManifestEntry& e = manifest[r];
    if (e.modality == Modality::Lidar) {
      items.push_back({r, Branch::Range, crop, e.pose, e.geotag, crop_frustum(g, crop)});
    } else {
      items.push_back(camera_item(r, e, g));
    }
  }
  return items;
}

std::vector<PairSample> mine_phase1_pairs(const std::vector<TrainItem>& items, double grid_pitch, PsiNorm norm) {
  if (items.empty()) fail(ErrorKind::InvalidArgument, "mine_phase1_pairs: empty similarity table");
  std::vector<SensorView> views;
  views.reserve(items.size());
  for (const TrainItem& it : items) views.push_back({it.pose, it.frustum});
  const auto table = pairwise_similarity_table(views, grid_pitch, norm);
  auto modality = [](const TrainItem& it) { return it.branch == Branch::Range ? Modality::Lidar : Modality::Camera; };
  std::vector<PairSample> pairs;
  pairs.reserve(table.size());
  for (const SimilarityEntry& e : table) {
    const TrainItem& a = items[e.a];
    const TrainItem& b = items[e.b];
    pairs.push_back({e.a, e.b, e.psi, modality(a), modality(b), a.crop, b.crop});
  }
  return pairs;
}

TripletMiningResult mine_triplets(const std::vector<Point2>& geotags, const std::vector<Modality>& modalities,
                                  const TripletMiningConfig& config, std::uint64_t seed) {
  require(geotags.size() == modalities.size(), "mine_triplets: one modality per geotag required");
  require(config.positives_per_anchor >= 1 && config.negatives_per_anchor >= 1,
          "mine_triplets: need at least one positive and one negative per anchor");
  require(config.positive_radius > 0.0 && config.negative_radius >= config.positive_radius,
          "mine_triplets: need 0 < positive radius <= negative radius");
  std::mt19937_64 rng(seed);
  TripletMiningResult out;
  std::vector<std::size_t> pos, neg;
  for (std::size_t a = 0; a < geotags.size(); ++a) {
    pos.clear();
    neg.clear();
    for (std::size_t b = 0; b < geotags.size(); ++b) {
      if (b == a) continue;
      if (config.cross_modal && modalities[b] == modalities[a]) continue;
      const double d = distance(geotags[a], geotags[b]);
      if (d < config.positive_radius) pos.push_back(b);
      if (d > config.negative_radius) neg.push_back(b);
    }
    if (pos.empty() || neg.empty()) {
      ++out.skipped_anchors;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1), pick_neg(0, neg.size() - 1);
    for (std::size_t p = 0; p < config.positives_per_anchor; ++p) {
      const std::size_t pi = pos[pick_pos(rng)];
      for (std::size_t n = 0; n < config.negatives_per_anchor; ++n) out.triplets.push_back({a, pi, neg[pick_neg(rng)]});
    }
  }
  if (out.triplets.empty()) fail(ErrorKind::InvalidArgument, "mine_triplets: no anchor has both a positive and a negative");
  return out;
}

// ---- data -----------------------------------------------------------------------

void validate(const TrainConfig& c) {
  require(c.tau > 0.0, "train config: tau must be > 0");
  require(c.margin > 0.0, "train config: margin must be > 0");
  require(c.scale_augment >= 0.0 && c.scale_augment < 100.0, "train config: r must be in [0, 100)");
  require(c.lr_phase1 >= 0.0 && c.lr_phase2 >= 0.0, "train config: learning rates must be >= 0");
  require(c.momentum >= 0.0 && c.momentum < 1.0, "train config: momentum must be in [0, 1)");
  require(c.batch_size >= 1, "train config: batch size must be >= 1");
}

TrainingSet make_training_set(std::vector<TrainItem> items, const ModelParams& params, const GridLoader& load) {
  TrainingSet set;
  set.inputs.reserve(items.size());
  for (const TrainItem& it : items) set.inputs.push_back(prepare_input(load(it), params, it.branch));
  set.items = std::move(items);
  return set;
}

GridLoader manifest_loader(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& root,
                           const SensorGeometry& g) {
  struct State {
    std::size_t frame = static_cast<std::size_t>(-1);
    GridFile file;
  };
  auto state = std::make_shared<State>();
  return [manifest, root, g, state](const TrainItem& it) -> Grid {
    if (it.frame >= manifest.size()) fail(ErrorKind::DataFormat, "training item refers to a missing manifest row");
    if (state->frame != it.frame) {
      state->file = read_grid(root / manifest[it.frame].grid_path);
      state->frame = it.frame;
    }
    const GridFile& f = state->file;
    if (it.branch == Branch::Disparity) {
      if (f.kind != GridKind::Disparity) fail(ErrorKind::DataFormat, "camera frame is not a disparity grid");
      return f.grid;
    }
    if (f.kind != GridKind::Range) fail(ErrorKind::DataFormat, "LiDAR frame is not a range grid");
    if (f.grid.width != g.lidar_width) fail(ErrorKind::DataFormat, "range grid width does not match the LiDAR spec");
    RangeImage img{f.grid, f.fov_up, f.fov_total, {}};
    return crop_range_image(img, default_crop(it.crop, g.lidar_width, crop_columns(g))).grid;
  };
}

// ---- optimizer ------------------------------------------------------------------

namespace {

struct Sgd {
  ModelParams velocity;
  explicit Sgd(const ModelParams& p) : velocity(zeros_like(p)) {}

  void step(ModelParams& params, const ModelParams& grads, double lr, double momentum) {
    std::vector<std::span<double>> p, v;
    std::vector<std::span<const double>> g;
    for_each_learnable(params, [&](const std::string&, std::span<double> s) { p.push_back(s); });
    for_each_learnable(velocity, [&](const std::string&, std::span<double> s) { v.push_back(s); });
    for_each_learnable(grads, [&](const std::string&, std::span<const double> s) { g.push_back(s); });
    for (std::size_t t = 0; t < p.size(); ++t) {
      for (std::size_t i = 0; i < p[t].size(); ++i) {
        v[t][i] = momentum * v[t][i] + g[t][i];
        p[t][i] -= lr * v[t][i];
      }
    }
    params.gem.p = std::max(params.gem.p, 1.0);  // keep GeM between average and max pooling
  }
};

// With shared weights both modalities run through the range branch's layers.
void fold_shared(ModelParams& grads) {
  for (std::size_t l = 0; l < grads.range.layers.size(); ++l) {
    auto& r = grads.range.layers[l];
    auto& d = grads.disparity.layers[l];
    for (std::size_t i = 0; i < r.weight.size(); ++i) r.weight[i] += d.weight[i];
    for (std::size_t i = 0; i < r.bias.size(); ++i) r.bias[i] += d.bias[i];
    std::fill(d.weight.begin(), d.weight.end(), 0.0);
    std::fill(d.bias.begin(), d.bias.end(), 0.0);
  }
}

void tie_branches(ModelParams& params) {
  for (std::size_t l = 0; l < params.range.layers.size(); ++l) {
    params.disparity.layers[l].weight = params.range.layers[l].weight;
    params.disparity.layers[l].bias = params.range.layers[l].bias;
  }
}

void zero(ModelParams& g) {
  for_each_learnable(g, [](const std::string&, std::span<double> s) { std::fill(s.begin(), s.end(), 0.0); });
}

// Per-epoch global scale for every disparity input; 1 for range items.
std::vector<double> augmentation_scales(const TrainingSet& set, const ModelParams& params, double r_percent,
                                        std::uint64_t seed) {
  std::vector<double> scales(set.items.size(), 1.0);
  if (r_percent == 0.0) return scales;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(1.0 - r_percent / 100.0, 1.0 + r_percent / 100.0);
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    if (set.items[i].branch != Branch::Disparity) continue;
    const double c = dist(rng);
    // Disparity cells are multiplied by c before encoding; the input tensor is linear in them.
    scales[i] = params.disparity.encoding == InputEncoding::Inverse ? 1.0 / c : c;
  }
  return scales;
}

Tensor3 scaled(const Tensor3& t, double s) {
  if (s == 1.0) return t;
  Tensor3 out = t;
  for (double& v : out.data) v *= s;
  return out;
}

// Forward pass of every distinct item in a batch, in ascending item order.
struct BatchForward {
  std::vector<std::size_t> ids;
  std::vector<DescribeCache> caches;
  std::vector<std::vector<double>> desc;
  std::vector<std::vector<double>> grad;

  std::size_t slot(std::size_t item) const {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), item) - ids.begin());
  }
};

BatchForward forward_batch(const ModelParams& params, const TrainingSet& set, std::vector<std::size_t> ids,
                           const std::vector<double>& scales) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  BatchForward b;
  b.ids = std::move(ids);
  b.caches.resize(b.ids.size());
  b.desc.resize(b.ids.size());
  b.grad.resize(b.ids.size());
  for (std::size_t k = 0; k < b.ids.size(); ++k) {
    const std::size_t it = b.ids[k];
    b.desc[k] = describe(params, set.items[it].branch, scaled(set.inputs[it], scales[it]), &b.caches[k]);
    b.grad[k].assign(b.desc[k].size(), 0.0);
  }
  return b;
}

// Gradient reduction in ascending item order keeps runs bit-reproducible.
void backward_batch(const ModelParams& params, const TrainingSet& set, const BatchForward& b, ModelParams& grads) {
  for (std::size_t k = 0; k < b.ids.size(); ++k) {
    const bool any = std::any_of(b.grad[k].begin(), b.grad[k].end(), [](double v) { return v != 0.0; });
    if (!any) continue;
    describe_backward(params, set.items[b.ids[k]].branch, b.caches[k], b.grad[k], grads);
  }
}

// Adds s * d|a - b| / da to ga and the negation to gb.
void distance_grad(const std::vector<double>& a, const std::vector<double>& b, double d, double s,
                   std::vector<double>& ga, std::vector<double>& gb) {
  if (d <= 0.0 || s == 0.0) return;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double g = s * (a[i] - b[i]) / d;
    ga[i] += g;
    gb[i] -= g;
  }
}

void check_finite(double loss, int phase, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    fail(ErrorKind::Numerical, "training diverged: non-finite loss in phase " + std::to_string(phase) + ", epoch " +
                                   std::to_string(epoch) + ", batch " + std::to_string(batch) +
                                   " (lower the learning rate)");
  }
}

std::vector<std::vector<double>> describe_all(const ModelParams& params, const TrainingSet& set) {
  std::vector<std::vector<double>> out(set.items.size());
  for (std::size_t i = 0; i < set.items.size(); ++i) out[i] = describe(params, set.items[i].branch, set.inputs[i]);
  return out;
}

template <typename T>
std::vector<T> epoch_order(const std::vector<T>& samples, std::size_t limit, std::uint64_t seed) {
  std::vector<T> order = samples;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (limit > 0 && limit < order.size()) order.resize(limit);
  return order;
}

}  // namespace

double phase1_loss(const ModelParams& params, const TrainingSet& set, const std::vector<PairSample>& pairs,
                   double tau) {
  const auto desc = describe_all(params, set);
  double total = 0.0;
  for (const PairSample& p : pairs) total += contrastive_loss(euclidean(desc[p.i], desc[p.j]), p.psi, tau);
  return total;
}

std::vector<LossPoint> train_phase1(ModelParams& params, const TrainingSet& set, const std::vector<PairSample>& pairs,
                                    const TrainConfig& config, const EpochCallback& on_epoch) {
  validate(config);
  if (pairs.empty()) fail(ErrorKind::InvalidArgument, "train_phase1: no training pairs");
  for (const PairSample& p : pairs) {
    require(p.i < set.items.size() && p.j < set.items.size() && p.i != p.j, "train_phase1: bad pair indices");
  }
  params.head = PoolingHead::Gem;
  if (config.share_weights) tie_branches(params);

  std::vector<LossPoint> curve;
  auto record = [&](LossPoint lp) {
    curve.push_back(lp);
    if (on_epoch) on_epoch(lp);
  };
  // Curve points are mean loss per pair, so epoch 0 (all pairs) and subsampled epochs compare.
  const double initial = phase1_loss(params, set, pairs, config.tau);
  check_finite(initial, 1, 0, 0);
  record({0, 1, initial / static_cast<double>(pairs.size())});

  Sgd sgd(params);
  ModelParams grads = zeros_like(params);
  for (std::size_t epoch = 1; epoch <= config.epochs_phase1; ++epoch) {
    const auto scales = augmentation_scales(set, params, config.scale_augment, derive_seed(config.seed, 1000 + epoch));
    const auto order = epoch_order(pairs, config.pairs_per_epoch, derive_seed(config.seed, 2000 + epoch));
    double epoch_loss = 0.0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<std::size_t> ids;
      for (std::size_t s = start; s < end; ++s) {
        ids.push_back(order[s].i);
        ids.push_back(order[s].j);
      }
      BatchForward b = forward_batch(params, set, ids, scales);
      double loss = 0.0;
      for (std::size_t s = start; s < end; ++s) {
        const PairSample& p = order[s];
        const std::size_t ki = b.slot(p.i), kj = b.slot(p.j);
        const double d = euclidean(b.desc[ki], b.desc[kj]);
        loss += contrastive_loss(d, p.psi, config.tau);
        distance_grad(b.desc[ki], b.desc[kj], d, contrastive_loss_grad(d, p.psi, config.tau), b.grad[ki], b.grad[kj]);
      }
      check_finite(loss, 1, epoch, batch);
      epoch_loss += loss;
      zero(grads);
      backward_batch(params, set, b, grads);
      if (config.share_weights) fold_shared(grads);
      sgd.step(params, grads, config.lr_phase1, config.momentum);
      if (config.share_weights) tie_branches(params);
    }
    record({epoch, 1, epoch_loss / static_cast<double>(order.size())});
  }
  return curve;
}

void initialize_netvlad(ModelParams& params, const TrainingSet& set, std::size_t samples, std::uint64_t seed) {
  require(!set.items.empty(), "initialize_netvlad: empty training set");
  std::vector<std::size_t> order(set.items.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (samples > 0 && samples < order.size()) order.resize(samples);
  std::sort(order.begin(), order.end());

  std::vector<std::vector<double>> features;
  for (std::size_t i : order) {
    const FeatureMap map = encode(params.branch(set.items[i].branch), set.inputs[i]);
    for (std::size_t n = 0; n < map.plane(); ++n) {
      std::vector<double> f(map.channels);
      for (std::size_t c = 0; c < map.channels; ++c) f[c] = map.data[c * map.plane() + n];
      features.push_back(std::move(f));
    }
  }
  const std::size_t K = params.netvlad.clusters;
  init_netvlad(params.netvlad, features, K, derive_seed(seed, 1));
  params.head = PoolingHead::NetVlad;
}

double triplet_set_loss(const ModelParams& params, const TrainingSet& set, const std::vector<Triplet>& triplets,
                        double margin) {
  const auto desc = describe_all(params, set);
  double total = 0.0;
  for (const Triplet& t : triplets) {
    total += triplet_loss(euclidean(desc[t.anchor], desc[t.positive]), euclidean(desc[t.anchor], desc[t.negative]),
                          margin);
  }
  return total;
}

namespace {

// One epoch of triplet SGD over `order`; returns the mean hinge loss per triplet.
double triplet_epoch(ModelParams& params, const TrainingSet& set, const std::vector<Triplet>& order,
                     const std::vector<double>& scales, const TrainConfig& config, Sgd& sgd, ModelParams& grads,
                     std::size_t epoch) {
  double epoch_loss = 0.0;
  for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    std::vector<std::size_t> ids;
    for (std::size_t s = start; s < end; ++s) {
      ids.insert(ids.end(), {order[s].anchor, order[s].positive, order[s].negative});
    }
    BatchForward b = forward_batch(params, set, ids, scales);
    double loss = 0.0;
    for (std::size_t s = start; s < end; ++s) {
      const Triplet& t = order[s];
      const std::size_t ka = b.slot(t.anchor), kp = b.slot(t.positive), kn = b.slot(t.negative);
      const double dp = euclidean(b.desc[ka], b.desc[kp]);
      const double dn = euclidean(b.desc[ka], b.desc[kn]);
      const double l = triplet_loss(dp, dn, config.margin);
      loss += l;
      if (l > 0.0) {
        distance_grad(b.desc[ka], b.desc[kp], dp, 1.0, b.grad[ka], b.grad[kp]);
        distance_grad(b.desc[ka], b.desc[kn], dn, -1.0, b.grad[ka], b.grad[kn]);
      }
    }
    check_finite(loss, 2, epoch, batch);
    epoch_loss += loss;
    zero(grads);
    backward_batch(params, set, b, grads);
    if (config.share_weights) fold_shared(grads);
    sgd.step(params, grads, config.lr_phase2, config.momentum);
    if (config.share_weights) tie_branches(params);
  }
  return order.empty() ? 0.0 : epoch_loss / static_cast<double>(order.size());
}

}  // namespace

std::vector<LossPoint> train_triplets(ModelParams& params, const TrainingSet& set,
                                      const std::vector<Triplet>& triplets, const TrainConfig& config,
                                      std::size_t epochs, const EpochCallback& on_epoch) {
  validate(config);
  require(params.head == PoolingHead::NetVlad, "train_triplets: NetVLAD head required");
  if (triplets.empty()) fail(ErrorKind::InvalidArgument, "train_triplets: no triplets");
  std::vector<LossPoint> curve;
  Sgd sgd(params);
  ModelParams grads = zeros_like(params);
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    const auto scales = augmentation_scales(set, params, config.scale_augment, derive_seed(config.seed, 3000 + epoch));
    const auto order = epoch_order(triplets, 0, derive_seed(config.seed, 4000 + epoch));
    const double loss = triplet_epoch(params, set, order, scales, config, sgd, grads, epoch);
    curve.push_back({epoch, 2, loss});
    if (on_epoch) on_epoch(curve.back());
    if (config.early_stop && loss == 0.0) break;
  }
  return curve;
}

std::vector<LossPoint> train_phase2(ModelParams& params, const TrainingSet& set, const TrainConfig& config,
                                    const EpochCallback& on_epoch) {
  validate(config);
  require(!set.items.empty(), "train_phase2: empty training set");
  if (config.share_weights) tie_branches(params);
  initialize_netvlad(params, set, config.vlad_init_samples, derive_seed(config.seed, 5000));

  std::vector<Point2> geotags;
  std::vector<Modality> modalities;
  for (const TrainItem& it : set.items) {
    geotags.push_back(it.geotag);
    modalities.push_back(it.branch == Branch::Range ? Modality::Lidar : Modality::Camera);
  }

  std::vector<LossPoint> curve;
  Sgd sgd(params);
  ModelParams grads = zeros_like(params);
  for (std::size_t epoch = 1; epoch <= config.epochs_phase2; ++epoch) {
    const auto mined = mine_triplets(geotags, modalities, config.mining, derive_seed(config.seed, 6000 + epoch));
    const std::size_t per_anchor = config.mining.positives_per_anchor * config.mining.negatives_per_anchor;
    const std::size_t limit = config.anchors_per_epoch * per_anchor;
    const auto order = epoch_order(mined.triplets, limit, derive_seed(config.seed, 4000 + epoch));
    const auto scales = augmentation_scales(set, params, config.scale_augment, derive_seed(config.seed, 3000 + epoch));
    const double loss = triplet_epoch(params, set, order, scales, config, sgd, grads, epoch);
    curve.push_back({epoch, 2, loss});
    if (on_epoch) on_epoch(curve.back());
    if (config.early_stop && loss == 0.0) break;
  }
  return curve;
}

SensorGeometry dataset_geometry(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& root,
                                const FrustumSpec& lidar, const FrustumSpec& camera) {
  SensorGeometry g{lidar, camera, 0};
  for (const ManifestEntry& e : manifest) {
    if (e.modality != Modality::Lidar) continue;
    g.lidar_width = read_grid(root / e.grid_path).grid.width;
    break;
  }
  return g;
}

TrainingRun train_two_phase(const std::vector<ManifestEntry>& manifest, const GridLoader& load,
                            const SensorGeometry& g, const EncoderArch& arch, const TrainConfig& config,
                            double grid_pitch, const EpochCallback& on_epoch) {
  validate(config);
  TrainingRun run{make_model(arch, derive_seed(config.seed, 0)), {}};
  if (config.epochs_phase1 > 0) {
    std::vector<TrainItem> items = phase1_items(manifest, g);
    std::vector<PairSample> pairs = mine_phase1_pairs(items, grid_pitch);
    TrainingSet set = make_training_set(std::move(items), run.params, load);
    run.curve = train_phase1(run.params, set, pairs, config, on_epoch);
  }
  TrainingSet set = make_training_set(phase2_items(manifest, g), run.params, load);
  std::vector<LossPoint> curve = train_phase2(run.params, set, config, on_epoch);
  run.curve.insert(run.curve.end(), curve.begin(), curve.end());
  return run;
}

std::vector<Descriptor> embed_items(const ModelParams& params, const TrainingSet& set,
                                    const std::vector<ManifestEntry>& manifest) {
  std::vector<Descriptor> out;
  out.reserve(set.items.size());
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    const TrainItem& it = set.items[i];
    require(it.frame < manifest.size(), "embed_items: item refers to a missing manifest row");
    out.push_back({manifest[it.frame].frame_id, it.geotag, manifest[it.frame].modality,
                   describe(params, it.branch, set.inputs[i])});
  }
  return out;
}

void write_loss_curve(const std::filesystem::path& path, const std::vector<LossPoint>& curve) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::DataFormat, "cannot open for writing: " + path.string());
  os << "epoch,phase,loss\n";
  char buf[128];
  for (const LossPoint& p : curve) {
    std::snprintf(buf, sizeof(buf), "%zu,%d,%.9g\n", p.epoch, p.phase, p.loss);
    os << buf;
  }
}

}  // namespace lc2

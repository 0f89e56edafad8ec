#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>

#include "gradcheck.hpp"
#include "lc2/error.hpp"
#include "lc2/random.hpp"
#include "lc2/training.hpp"
#include "support.hpp"

using namespace lc2;
using namespace lc2::test;

namespace {

constexpr double kPi = std::numbers::pi;

EncoderArch toy_arch() {
  EncoderArch a;
  a.channels = {4, 8};
  a.input_height = 8;
  a.input_width = 16;
  a.vlad_clusters = 2;
  return a;
}

// Grid whose content is a smooth function of the place (x) plus small per-item noise.
Grid place_grid(double x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Grid g(8, 16);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 16; ++c) {
      const double base = 5.0 + 3.0 * std::sin(0.07 * x * static_cast<double>(c + 1) + 0.5 * static_cast<double>(r));
      g.cells[r * 16 + c] = base + uniform(rng, -0.1, 0.1);
    }
  return g;
}

// Alternating range / disparity items at geotags 0, 3, 6, ... along the x axis.
TrainingSet toy_set(const ModelParams& params, std::size_t n) {
  std::vector<TrainItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 3.0 * static_cast<double>(i / 2);
    const Branch b = i % 2 == 0 ? Branch::Range : Branch::Disparity;
    items.push_back({i, b, b == Branch::Range ? 3 : -1, {x, 0, 0}, {x, 0}, {kPi / 2, 30, 0}});
  }
  return make_training_set(items, params, [](const TrainItem& it) {
    Grid g = place_grid(it.geotag.x, it.frame + 1);
    if (it.branch == Branch::Disparity)
      for (double& v : g.cells) v = 1.0 / v;
    return g;
  });
}

std::vector<std::vector<double>> learnables(const ModelParams& m) {
  std::vector<std::vector<double>> out;
  for_each_learnable(m, [&](const std::string&, std::span<const double> v) { out.emplace_back(v.begin(), v.end()); });
  return out;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("loss examples") {
  CHECK(contrastive_loss(0.0, 1.0, 0.5) == 0.0);
  CHECK(contrastive_loss(0.3, 1.0, 0.5) == doctest::Approx(0.09));
  CHECK(contrastive_loss(0.2, 0.0, 0.5) == doctest::Approx(0.09));
  CHECK(contrastive_loss(0.5, 0.0, 0.5) == 0.0);
  CHECK(contrastive_loss(0.7, 0.0, 0.5) == 0.0);
  CHECK(triplet_loss(0.3, 0.2, 0.1) == doctest::Approx(0.2));
  CHECK(triplet_loss(0.1, 0.2, 0.1) == 0.0);
  CHECK(triplet_loss(0.1, 0.5, 0.1) == 0.0);
}

TEST_CASE("losses match a hand oracle on random inputs") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 10000; ++i) {
    const double tau = uniform(rng, 0.1, 2.0), psi = uniform(rng, 0.0, 1.0);
    const double d = i % 10 == 0 ? tau : uniform(rng, 0.0, 2.5);
    const double h = d < tau ? tau - d : 0.0;
    CHECK(std::abs(contrastive_loss(d, psi, tau) - (psi * d * d + (1.0 - psi) * h * h)) <= 1e-12);
    const double dp = uniform(rng, 0.0, 2.0), m = uniform(rng, 0.01, 0.5);
    const double dn = i % 10 == 0 ? dp + m : uniform(rng, 0.0, 2.0);
    const double t = dp - dn + m;
    CHECK(std::abs(triplet_loss(dp, dn, m) - (t > 0.0 ? t : 0.0)) <= 1e-12);
  }
}

TEST_CASE("contrastive gradient matches finite differences away from the hinge") {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 200; ++i) {
    const double tau = uniform(rng, 0.2, 1.0), psi = uniform(rng, 0.0, 1.0);
    double d = uniform(rng, 0.0, 1.5);
    if (std::abs(d - tau) < 1e-3) continue;
    const double num = (contrastive_loss(d + 1e-6, psi, tau) - contrastive_loss(d - 1e-6, psi, tau)) / 2e-6;
    CHECK(contrastive_loss_grad(d, psi, tau) == doctest::Approx(num).epsilon(1e-6));
  }
  // Continuous at the hinge from both sides.
  CHECK(std::abs(contrastive_loss(0.5 - 1e-9, 0.0, 0.5)) < 1e-15);
  CHECK(contrastive_loss_grad(0.5, 0.0, 0.5) == 0.0);
}

TEST_CASE("crop geometry and item expansion") {
  SensorGeometry g{{2 * kPi, 30, 0}, {kPi / 2, 30, 0}, 512};
  CHECK(crop_columns(g) == 128);
  CHECK(std::abs(crop_frustum(g, 3).boresight) < 1e-12);
  CHECK(crop_frustum(g, 3).horizontal_fov == doctest::Approx(kPi / 2));
  CHECK(crop_frustum(g, 3).max_range == 30);

  std::vector<ManifestEntry> m{{0, Modality::Lidar, "a", {0, 0, 0}, {0, 0}, 0},
                               {1, Modality::Camera, "b", {1, 0, 0}, {1, 0}, 0},
                               {2, Modality::Lidar, "c", {2, 0, 0}, {2, 0}, 0}};
  auto p1 = phase1_items(m, g);
  CHECK(p1.size() == 17);
  CHECK(p1[8].branch == Branch::Disparity);
  CHECK(p1[8].frame == 1);
  auto p2 = phase2_items(m, g);
  REQUIRE(p2.size() == 3);
  CHECK(p2[0].crop == 3);
  CHECK(p2[1].crop == -1);

  g.lidar_width = 4;
  CHECK_THROWS_AS(phase1_items(m, g), Error);
}

TEST_CASE("phase-1 pairs carry psi of their interest areas") {
  SensorGeometry g{{2 * kPi, 20, 0}, {kPi / 2, 20, 0}, 512};
  std::vector<ManifestEntry> m{{0, Modality::Lidar, "a", {0, 0, 0}, {0, 0}, 0},
                               {1, Modality::Camera, "b", {5, 0, 0.2}, {5, 0}, 0}};
  auto items = phase1_items(m, g);
  auto pairs = mine_phase1_pairs(items, 0.5);
  CHECK(!pairs.empty());
  for (const PairSample& p : pairs) {
    CHECK(p.i < p.j);
    const double psi = degree_of_similarity(items[p.i].pose, items[p.i].frustum, items[p.j].pose, items[p.j].frustum, 0.5);
    CHECK(p.psi == psi);
    CHECK(p.crop_i == items[p.i].crop);
    CHECK(p.modality_j == (items[p.j].branch == Branch::Range ? Modality::Lidar : Modality::Camera));
  }
  CHECK_THROWS_AS(mine_phase1_pairs({}, 0.5), Error);
}

TEST_CASE("triplet mining respects radii and modality") {
  std::vector<Point2> tags;
  std::vector<Modality> mods;
  for (int i = 0; i < 40; ++i) {
    tags.push_back({2.0 * i, 0});
    mods.push_back(i % 2 ? Modality::Camera : Modality::Lidar);
  }
  TripletMiningConfig c;
  c.positives_per_anchor = 2;
  c.negatives_per_anchor = 3;
  auto r = mine_triplets(tags, mods, c, 7);
  CHECK(r.skipped_anchors == 0);
  CHECK(r.triplets.size() == 40 * 6);
  for (const Triplet& t : r.triplets) {
    CHECK(distance(tags[t.anchor], tags[t.positive]) < c.positive_radius);
    CHECK(distance(tags[t.anchor], tags[t.negative]) > c.negative_radius);
    CHECK(mods[t.anchor] != mods[t.positive]);
    CHECK(mods[t.anchor] != mods[t.negative]);
  }
  auto again = mine_triplets(tags, mods, c, 7);
  for (std::size_t i = 0; i < r.triplets.size(); ++i) CHECK(again.triplets[i].positive == r.triplets[i].positive);

  // Single modality with cross-modal mining leaves nothing to mine.
  std::vector<Modality> lidar(40, Modality::Lidar);
  CHECK_THROWS_AS(mine_triplets(tags, lidar, c, 7), Error);
  c.cross_modal = false;
  CHECK_NOTHROW(mine_triplets(tags, lidar, c, 7));
  c.negative_radius = 5.0;
  CHECK_THROWS_AS(mine_triplets(tags, mods, c, 7), Error);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(validate(c));
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& x) { x.tau = 0; }, [](TrainConfig& x) { x.margin = -1; },
           [](TrainConfig& x) { x.scale_augment = 100; }, [](TrainConfig& x) { x.lr_phase1 = -1e-3; },
           [](TrainConfig& x) { x.momentum = 1.0; }, [](TrainConfig& x) { x.batch_size = 0; }}) {
    TrainConfig bad;
    mutate(bad);
    CHECK_THROWS_AS(validate(bad), Error);
  }
}

TEST_CASE("phase-1 epoch-0 loss equals a direct re-evaluation") {
  ModelParams m = make_model(toy_arch(), 3);
  TrainingSet set = toy_set(m, 8);
  std::vector<PairSample> pairs{{0, 1, 1.0}, {0, 2, 0.4}, {3, 7, 0.0}, {4, 5, 0.75}};
  TrainConfig c;
  c.epochs_phase1 = 1;
  ModelParams gem = m;
  gem.head = PoolingHead::Gem;
  double oracle = 0.0;
  for (const PairSample& p : pairs) {
    const auto a = describe(gem, set.items[p.i].branch, set.inputs[p.i]);
    const auto b = describe(gem, set.items[p.j].branch, set.inputs[p.j]);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    const double d = std::sqrt(s), h = std::max(c.tau - d, 0.0);
    oracle += p.psi * d * d + (1.0 - p.psi) * h * h;
  }
  auto curve = train_phase1(m, set, pairs, c);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].epoch == 0);
  CHECK(curve[0].loss == doctest::Approx(oracle / 4.0).epsilon(1e-12));
  CHECK_THROWS_AS(train_phase1(m, set, {}, c), Error);
  CHECK_THROWS_AS(train_phase1(m, set, {{2, 2, 1.0}}, c), Error);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  ModelParams m = make_model(toy_arch(), 4);
  TrainingSet set = toy_set(m, 12);
  TrainConfig c;
  c.lr_phase1 = 0.0;
  c.lr_phase2 = 0.0;
  c.scale_augment = 0.0;
  c.epochs_phase1 = 3;
  c.epochs_phase2 = 3;
  c.early_stop = false;
  c.mining.positive_radius = 4.0;
  c.mining.negative_radius = 8.0;
  ModelParams before = m;
  auto curve = train_phase1(m, set, {{0, 1, 1.0}, {2, 9, 0.0}, {4, 5, 0.6}}, c);
  CHECK(learnables(m) == learnables(before));
  for (const LossPoint& lp : curve) CHECK(lp.loss == doctest::Approx(curve[0].loss).epsilon(1e-12));

  ModelParams init = m;
  initialize_netvlad(init, set, c.vlad_init_samples, derive_seed(c.seed, 5000));
  train_phase2(m, set, c);
  CHECK(m.head == PoolingHead::NetVlad);
  CHECK(m.netvlad.centers == init.netvlad.centers);
  CHECK(m.netvlad.assign_weight == init.netvlad.assign_weight);
  CHECK(learnables(m) == learnables(init));
}

TEST_CASE("a single similar pair is pulled together") {
  ModelParams m = make_model(toy_arch(), 5);
  TrainingSet set = toy_set(m, 4);
  const std::vector<PairSample> pair{{0, 2, 1.0}};
  TrainConfig c;
  c.epochs_phase1 = 1;
  double prev = phase1_loss(m, set, pair, c.tau);
  for (int epoch = 0; epoch < 10; ++epoch) {
    train_phase1(m, set, pair, c);
    const double now = phase1_loss(m, set, pair, c.tau);
    CHECK(now <= prev);
    prev = now;
  }
}

TEST_CASE("phase-2 loss decreases on a toy set") {
  ModelParams m = make_model(toy_arch(), 6);
  TrainingSet set = toy_set(m, 40);
  TrainConfig c;
  c.epochs_phase2 = 8;
  c.lr_phase2 = 1e-2;
  c.early_stop = false;
  c.scale_augment = 0.0;
  c.mining.positive_radius = 4.0;
  c.mining.negative_radius = 12.0;
  c.mining.negatives_per_anchor = 4;
  auto curve = train_phase2(m, set, c);
  REQUIRE(curve.size() == 8);
  CHECK(curve.back().loss < curve.front().loss);
  for (const LossPoint& lp : curve) CHECK(lp.phase == 2);
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto run = [] {
    ModelParams m = make_model(toy_arch(), 7);
    TrainingSet set = toy_set(m, 16);
    TrainConfig c;
    c.epochs_phase1 = 2;
    c.epochs_phase2 = 2;
    c.batch_size = 3;
    c.mining.positive_radius = 4.0;
    c.mining.negative_radius = 8.0;
    std::vector<PairSample> pairs;
    for (std::size_t i = 0; i + 1 < 16; ++i) pairs.push_back({i, i + 1, i % 3 == 0 ? 1.0 : 0.2});
    auto curve = train_phase1(m, set, pairs, c);
    auto more = train_phase2(m, set, c);
    curve.insert(curve.end(), more.begin(), more.end());
    std::vector<double> losses;
    for (const LossPoint& lp : curve) losses.push_back(lp.loss);
    return std::make_pair(learnables(m), losses);
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("loss curve CSV") {
  TempDir dir("curve");
  write_loss_curve(dir / "c.csv", {{0, 1, 2.5}, {1, 2, 0.125}});
  std::ifstream f(dir / "c.csv");
  std::string header, a, b;
  std::getline(f, header);
  std::getline(f, a);
  std::getline(f, b);
  CHECK(header == "epoch,phase,loss");
  CHECK(a.rfind("0,1,2.5", 0) == 0);
  CHECK(b.rfind("1,2,0.125", 0) == 0);
}

}  // TEST_SUITE

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "lc2/error.hpp"
#include "lc2/loopgraph.hpp"
#include "lc2/synth.hpp"
#include "support.hpp"

using namespace lc2;
using lc2::test::uniform;

namespace {

constexpr double kPi = std::numbers::pi;

// Square-ish loop of ground-truth poses.
std::vector<Pose2> loop_truth(std::size_t n) {
  std::vector<Pose2> poses;
  Pose2 p{0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    poses.push_back(p);
    p = p.compose({2.0, 0.0, 2.0 * kPi / static_cast<double>(n)});
  }
  return poses;
}

// Graph with exact odometry and exact geotag loops at every third pose.
LoopGraph consistent_graph(const std::vector<Pose2>& truth, std::mt19937_64& rng, double init_noise) {
  LoopGraph g;
  std::vector<std::size_t> kf;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Pose2& t = truth[i];
    kf.push_back(g.add_keyframe(i, {t.x + uniform(rng, -init_noise, init_noise),
                                    t.y + uniform(rng, -init_noise, init_noise),
                                    t.theta + uniform(rng, -init_noise, init_noise) * 0.1}));
  }
  g.add_pose_prior(kf[0], truth[0], Eigen::Matrix3d::Identity() * 1e-2);
  for (std::size_t i = 0; i + 1 < truth.size(); ++i) {
    g.add_odometry(kf[i], kf[i + 1], truth[i].between(truth[i + 1]), Eigen::Matrix3d::Identity() * 1e-2);
  }
  for (std::size_t i = 0; i < truth.size(); i += 3) {
    const Point2 tag{truth[i].x + 1.0, truth[i].y - 0.5};
    const std::size_t node = g.add_geotag(1000 + i, {tag.x + 0.3, tag.y - 0.2});
    g.add_geotag_prior(node, tag, Eigen::Matrix2d::Identity() * 0.5);
    g.add_loop(kf[i], node, truth[i].transform_to(tag), Eigen::Matrix2d::Identity() * 0.1);
  }
  return g;
}

// Plain Gauss-Newton on the dense normal equations until the step vanishes.
Eigen::VectorXd dense_gauss_newton(const LoopGraph& g) {
  Eigen::VectorXd x = g.state();
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd H;
    Eigen::VectorXd grad;
    g.dense_system(x, H, grad);
    const Eigen::VectorXd delta = H.ldlt().solve(-grad);
    x = g.retract(x, delta);
    if (delta.norm() < 1e-14) break;
  }
  return x;
}

LmConfig tight() {
  LmConfig c;
  c.relative_tolerance = 1e-16;
  c.max_iterations = 500;
  return c;
}

}  // namespace

TEST_SUITE("loopgraph") {

TEST_CASE("graph construction counts") {
  const auto truth = loop_truth(6);
  BuiltGraph none = build_graph(truth, {});
  CHECK(none.graph.nodes().size() == 6);
  CHECK(none.graph.factors().size() == 1 + 5);
  CHECK(none.graph.loop_factors().empty());

  BuiltGraph one = build_graph(truth, {{2, {1, 1}, 0.05}});
  CHECK(one.graph.nodes().size() == 7);
  CHECK(one.graph.factors().size() == 1 + 5 + 2);
  CHECK(one.graph.loop_factors().size() == 1);
  CHECK(one.loop_factor_of_candidate[0] == one.graph.loop_factors()[0]);
  CHECK_THROWS_AS(build_graph(truth, {{6, {1, 1}, 0.05}}), Error);
}

TEST_CASE("noise-free graph recovers the ground truth") {
  std::mt19937_64 rng(1);
  const auto truth = loop_truth(24);
  LoopGraph g = consistent_graph(truth, rng, 0.5);
  const LmResult r = optimize_lm(g);
  CHECK(r.final_chi2 < 1e-12);
  const auto poses = g.keyframe_poses();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    CHECK(std::abs(poses[i].x - truth[i].x) <= 1e-6);
    CHECK(std::abs(poses[i].y - truth[i].y) <= 1e-6);
    CHECK(std::abs(wrap_angle(poses[i].theta - truth[i].theta)) <= 1e-6);
  }
}

TEST_CASE("single node with a prior lands on the prior mean") {
  LoopGraph g;
  const auto n = g.add_keyframe(0, {5, -3, 1});
  g.add_pose_prior(n, {1, 2, 0.5}, Eigen::Matrix3d::Identity());
  optimize_lm(g);
  CHECK(g.keyframe_pose(n).x == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g.keyframe_pose(n).y == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(g.keyframe_pose(n).theta == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("sparse LM agrees with a dense Gauss-Newton oracle and chi2 never rises") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    // 7 keyframes + 3 geotags = 27 variables, with inconsistent measurements.
    const auto truth = loop_truth(7);
    LoopGraph g;
    std::vector<std::size_t> kf;
    for (std::size_t i = 0; i < truth.size(); ++i) kf.push_back(g.add_keyframe(i, truth[i]));
    g.add_pose_prior(kf[0], truth[0], Eigen::Matrix3d::Identity() * 0.1);
    for (std::size_t i = 0; i + 1 < truth.size(); ++i) {
      Pose2 rel = truth[i].between(truth[i + 1]);
      rel = {rel.x + uniform(rng, -0.2, 0.2), rel.y + uniform(rng, -0.2, 0.2), rel.theta + uniform(rng, -0.1, 0.1)};
      g.add_odometry(kf[i], kf[i + 1], rel, Eigen::Matrix3d::Identity() * 0.05);
    }
    for (std::size_t k : {1, 3, 5}) {
      const Point2 tag{truth[k].x + uniform(rng, -2, 2), truth[k].y + uniform(rng, -2, 2)};
      const auto node = g.add_geotag(100 + k, tag);
      g.add_geotag_prior(node, tag, Eigen::Matrix2d::Identity() * 0.3);
      g.add_loop(kf[k], node, {0, 0}, Eigen::Matrix2d::Identity() * 1.0);
    }
    REQUIRE(g.dimension() <= 30);
    const Eigen::VectorXd oracle = dense_gauss_newton(g);
    const LmResult r = optimize_lm(g, tight());
    CHECK((g.state() - oracle).cwiseAbs().maxCoeff() <= 1e-9);
    double prev = r.initial_chi2;
    for (double c : r.accepted_chi2) {
      CHECK(c <= prev);
      prev = c;
    }
    CHECK(r.final_chi2 <= r.initial_chi2);
  }
}

TEST_CASE("loop information equals the Schur complement on a three-node graph") {
  LoopGraph g;
  const auto a = g.add_keyframe(0, {0, 0, 0});
  const auto b = g.add_keyframe(1, {2, 0, 0.1});
  const auto t = g.add_geotag(2, {2.5, 1.0});
  g.add_pose_prior(a, {0, 0, 0}, Eigen::Matrix3d::Identity() * 1e2);
  g.add_odometry(a, b, {2, 0, 0.1}, Eigen::Matrix3d::Identity() * 1e-2);
  g.add_geotag_prior(t, {2.5, 1.0}, Eigen::Matrix2d::Identity() * 1e-4);
  const auto loop = g.add_loop(b, t, {0, 0}, Eigen::Matrix2d::Identity() * 1e4);

  Eigen::MatrixXd H;
  Eigen::VectorXd grad;
  g.dense_system(g.state(), H, grad);
  REQUIRE(H.rows() == 8);
  // Loop variables are keyframe b (3..5) and the geotag (6..7); eliminate keyframe a (0..2).
  const Eigen::MatrixXd Hkk = H.block(3, 3, 5, 5), Hka = H.block(3, 0, 5, 3), Haa = H.block(0, 0, 3, 3);
  const Eigen::MatrixXd schur = Hkk - Hka * Haa.inverse() * Hka.transpose();
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  g.linearize(g.factors()[loop], g.state(), r, J);
  const Eigen::Matrix2d info = (J * schur.inverse() * J.transpose()).inverse();

  const auto infos = edge_information(g);
  REQUIRE(infos.size() == 1);
  CHECK_FALSE(infos[0].singular);
  CHECK((infos[0].information - info).cwiseAbs().maxCoeff() <= 1e-9 * info.cwiseAbs().maxCoeff());
  CHECK(infos[0].score == doctest::Approx(std::hypot(info(0, 0), info(1, 1))).epsilon(1e-12));
  CHECK(information_score(info, ScoreMode::Trace) == doctest::Approx(info.trace()));
}

TEST_CASE("degenerate residual Jacobian is reported as singular") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(5, 5);
  CHECK_FALSE(residual_information(cov, Eigen::MatrixXd::Zero(2, 5)).has_value());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, 5);
  J(0, 0) = J(1, 1) = 1.0;
  CHECK(residual_information(cov, J).has_value());
}

TEST_CASE("filter thresholds and monotonicity") {
  std::vector<LoopCandidate> c{{0, {0, 0}, 0.01}, {1, {0, 0}, 0.5}, {2, {0, 0}, 0.05}};
  std::vector<double> s{0.5, 0.7, 0.01};
  CHECK(filter_loops(c, s, 0.0, std::numeric_limits<double>::infinity()).size() == 3);
  CHECK(filter_loops(c, s, std::numeric_limits<double>::infinity()).empty());
  CHECK(filter_loops(c, s, 0.1).size() == 1);
  std::size_t prev = 4;
  for (double th : {0.0, 0.01, 0.3, 0.6, 1.0}) {
    const std::size_t n = filter_loops(c, s, th, 1.0).size();
    CHECK(n <= prev);
    prev = n;
  }
  CHECK_THROWS_AS(filter_loops(c, {1.0}, 0.0), Error);
}

TEST_CASE("RMSE cases") {
  const auto truth = loop_truth(10);
  CHECK(trajectory_rmse(truth, truth) == 0.0);
  std::vector<Pose2> all = truth, rest = truth;
  for (auto& p : all) p.x += 3.0;
  for (std::size_t i = 1; i < rest.size(); ++i) rest[i].x += 3.0;
  CHECK(trajectory_rmse(all, truth) <= 1e-12);
  CHECK(trajectory_rmse(rest, truth) == doctest::Approx(3.0 * std::sqrt(0.9)).epsilon(1e-12));
  CHECK_THROWS_AS(trajectory_rmse(truth, {truth[0]}), Error);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Pose2> gt, est;
  for (int i = 0; i < 10000; ++i) {
    gt.emplace_back(uniform(rng, -100, 100), uniform(rng, -100, 100), 0.0);
    est.push_back(gt.back());
    if (i > 0) {
      est.back().x += n(rng);
      est.back().y += n(rng);
    }
  }
  CHECK(std::abs(trajectory_rmse(est, gt) - std::sqrt(2.0)) <= 0.05 * std::sqrt(2.0));
}

TEST_CASE("optimum is gauge consistent") {
  std::mt19937_64 rng(6);
  const auto truth = loop_truth(12);
  const Pose2 T{7, -4, 0.8};
  auto build = [&](bool moved) {
    std::mt19937_64 local(9);
    LoopGraph g;
    std::vector<std::size_t> kf;
    auto tf = [&](const Pose2& p) { return moved ? T.compose(p) : p; };
    for (std::size_t i = 0; i < truth.size(); ++i) kf.push_back(g.add_keyframe(i, tf(truth[i])));
    g.add_pose_prior(kf[0], tf(truth[0]), Eigen::Matrix3d::Identity() * 0.1);
    for (std::size_t i = 0; i + 1 < truth.size(); ++i) {
      Pose2 rel = truth[i].between(truth[i + 1]);
      rel = {rel.x + uniform(local, -0.3, 0.3), rel.y, rel.theta + uniform(local, -0.05, 0.05)};
      g.add_odometry(kf[i], kf[i + 1], rel, Eigen::Matrix3d::Identity() * 0.05);
    }
    // Closure back to the start keeps the problem non-trivial.
    g.add_odometry(kf.back(), kf[0], truth.back().between(truth[0]), Eigen::Matrix3d::Identity() * 0.05);
    optimize_lm(g, tight());
    return g.keyframe_poses();
  };
  const auto base = build(false), moved = build(true);
  for (std::size_t i = 0; i < base.size(); ++i) {
    const Pose2 expect = T.compose(base[i]);
    CHECK(std::abs(moved[i].x - expect.x) <= 1e-8);
    CHECK(std::abs(moved[i].y - expect.y) <= 1e-8);
    CHECK(std::abs(wrap_angle(moved[i].theta - expect.theta)) <= 1e-8);
  }
  (void)rng;
}

TEST_CASE("ill-posed inputs are rejected") {
  LoopGraph g;
  const auto a = g.add_keyframe(0, {0, 0, 0});
  const auto b = g.add_keyframe(1, {1, 0, 0});
  g.add_odometry(a, b, {1, 0, 0}, Eigen::Matrix3d::Identity());
  CHECK_THROWS_AS(optimize_lm(g), Error);
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(g.add_pose_prior(a, {0, 0, 0}, bad), Error);
  CHECK_THROWS_AS(g.add_geotag_prior(a, {0, 0}, Eigen::Matrix2d::Identity()), Error);
}

TEST_CASE("loop filter recovers from heading noise on the synthetic scenario") {
  LoopScenarioSpec spec;
  const LoopScenario s = make_loop_scenario(spec, 101);
  const auto res = run_loop_filter(s.odometry, s.candidates);
  CHECK(res.scores.size() == s.candidates.size());
  CHECK(trajectory_rmse(res.optimized, s.truth) < trajectory_rmse(s.odometry, s.truth));
}

TEST_CASE("TUM and candidate files round trip") {
  lc2::test::TempDir dir("loops");
  const std::vector<Pose2> poses{{1.5, -2.25, 0.3}, {0, 0, -3.0}};
  write_tum(dir / "t.txt", poses);
  const auto back = read_tum(dir / "t.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[1].theta == doctest::Approx(-3.0).epsilon(1e-8));
  CHECK(back[0].x == 1.5);

  const std::vector<LoopCandidate> c{{3, {1.25, 2.5}, 0.0625}, {0, {-4, 8}, 1.0}};
  write_candidates(dir / "c.csv", c);
  const auto cb = read_candidates(dir / "c.csv");
  REQUIRE(cb.size() == 2);
  CHECK(cb[0].keyframe == 3);
  CHECK(cb[0].geotag.y == 2.5);
  CHECK(cb[1].descriptor_distance == 1.0);

  write_accepted(dir / "a.csv", c, {{1, 0.5}});
  std::ifstream f(dir / "a.csv");
  std::string header, row;
  std::getline(f, header);
  std::getline(f, row);
  CHECK(header == "keyframe_id,geotag_x,geotag_y,descriptor_distance,info_score");
  CHECK(row.rfind("0,-4.000000,8.000000,", 0) == 0);

  {
    std::ofstream bad(dir / "bad.txt");
    bad << "0 1 2\n";
  }
  CHECK_THROWS_AS(read_tum(dir / "bad.txt"), Error);
}

}  // TEST_SUITE

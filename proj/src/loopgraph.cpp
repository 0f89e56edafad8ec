#include "lc2/loopgraph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "lc2/error.hpp"

namespace lc2 {

namespace {

template <typename Mat>
Eigen::MatrixXd information_from(const Mat& covariance) {
  if (!covariance.allFinite() || !covariance.isApprox(covariance.transpose(), 1e-12)) {
    fail(ErrorKind::InvalidArgument, "covariance must be finite and symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) fail(ErrorKind::InvalidArgument, "covariance is not positive definite");
  const auto n = covariance.rows();
  Eigen::MatrixXd info = llt.solve(Eigen::MatrixXd::Identity(n, n));
  return 0.5 * (info + info.transpose());
}

}  // namespace

std::size_t LoopGraph::add_node(std::uint64_t id, NodeKind kind, std::size_t dof) {
  for (const auto& n : nodes_) {
    if (n.id == id) fail(ErrorKind::InvalidArgument, "duplicate node id " + std::to_string(id));
  }
  nodes_.push_back({id, kind, dim_});
  dim_ += dof;
  state_.conservativeResize(static_cast<Eigen::Index>(dim_));
  return nodes_.size() - 1;
}

void LoopGraph::check_node(std::size_t node, NodeKind kind) const {
  if (node >= nodes_.size() || nodes_[node].kind != kind) {
    fail(ErrorKind::InvalidArgument, "factor endpoint has the wrong node kind");
  }
}

std::size_t LoopGraph::add_keyframe(std::uint64_t id, const Pose2& initial) {
  const std::size_t n = add_node(id, NodeKind::Keyframe, 3);
  const auto o = static_cast<Eigen::Index>(nodes_[n].offset);
  state_.segment<3>(o) << initial.x, initial.y, initial.theta;
  return n;
}

std::size_t LoopGraph::add_geotag(std::uint64_t id, const Point2& initial) {
  const std::size_t n = add_node(id, NodeKind::Geotag, 2);
  const auto o = static_cast<Eigen::Index>(nodes_[n].offset);
  state_.segment<2>(o) << initial.x, initial.y;
  return n;
}

void LoopGraph::add_pose_prior(std::size_t node, const Pose2& mean, const Eigen::Matrix3d& covariance) {
  check_node(node, NodeKind::Keyframe);
  Factor f;
  f.kind = FactorKind::PosePrior;
  f.a = node;
  f.pose = mean;
  f.information = information_from(covariance);
  factors_.push_back(std::move(f));
}

void LoopGraph::add_odometry(std::size_t from, std::size_t to, const Pose2& relative,
                             const Eigen::Matrix3d& covariance) {
  check_node(from, NodeKind::Keyframe);
  check_node(to, NodeKind::Keyframe);
  Factor f;
  f.kind = FactorKind::Odometry;
  f.a = from;
  f.b = to;
  f.pose = relative;
  f.information = information_from(covariance);
  factors_.push_back(std::move(f));
}

void LoopGraph::add_geotag_prior(std::size_t node, const Point2& mean, const Eigen::Matrix2d& covariance) {
  check_node(node, NodeKind::Geotag);
  Factor f;
  f.kind = FactorKind::GeotagPrior;
  f.a = node;
  f.point = mean;
  f.information = information_from(covariance);
  factors_.push_back(std::move(f));
}

std::size_t LoopGraph::add_loop(std::size_t keyframe, std::size_t geotag, const Point2& offset,
                                const Eigen::Matrix2d& covariance) {
  check_node(keyframe, NodeKind::Keyframe);
  check_node(geotag, NodeKind::Geotag);
  Factor f;
  f.kind = FactorKind::Loop;
  f.a = keyframe;
  f.b = geotag;
  f.point = offset;
  f.information = information_from(covariance);
  factors_.push_back(std::move(f));
  return factors_.size() - 1;
}

std::vector<std::size_t> LoopGraph::loop_factors() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i].kind == FactorKind::Loop) out.push_back(i);
  }
  return out;
}

void LoopGraph::set_state(const Eigen::VectorXd& x) {
  require(x.size() == static_cast<Eigen::Index>(dim_), "set_state: dimension mismatch");
  state_ = x;
}

Pose2 LoopGraph::keyframe_pose(std::size_t node) const {
  check_node(node, NodeKind::Keyframe);
  const auto o = static_cast<Eigen::Index>(nodes_[node].offset);
  return {state_[o], state_[o + 1], state_[o + 2]};
}

Point2 LoopGraph::geotag_position(std::size_t node) const {
  check_node(node, NodeKind::Geotag);
  const auto o = static_cast<Eigen::Index>(nodes_[node].offset);
  return {state_[o], state_[o + 1]};
}

std::vector<Pose2> LoopGraph::keyframe_poses() const {
  std::vector<Pose2> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == NodeKind::Keyframe) out.push_back(keyframe_pose(i));
  }
  return out;
}

std::vector<std::size_t> LoopGraph::factor_columns(const Factor& f) const {
  std::vector<std::size_t> cols;
  auto push = [&](std::size_t node, std::size_t dof) {
    for (std::size_t k = 0; k < dof; ++k) cols.push_back(nodes_[node].offset + k);
  };
  switch (f.kind) {
    case FactorKind::PosePrior:
      push(f.a, 3);
      break;
    case FactorKind::Odometry:
      push(f.a, 3);
      push(f.b, 3);
      break;
    case FactorKind::GeotagPrior:
      push(f.a, 2);
      break;
    case FactorKind::Loop:
      push(f.a, 3);
      push(f.b, 2);
      break;
  }
  return cols;
}

void LoopGraph::linearize(const Factor& f, const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& J) const {
  auto seg = [&](std::size_t node) { return static_cast<Eigen::Index>(nodes_[node].offset); };
  switch (f.kind) {
    case FactorKind::PosePrior: {
      const auto o = seg(f.a);
      r.resize(3);
      r << x[o] - f.pose.x, x[o + 1] - f.pose.y, wrap_angle(x[o + 2] - f.pose.theta);
      J = Eigen::MatrixXd::Identity(3, 3);
      break;
    }
    case FactorKind::Odometry: {
      const auto oa = seg(f.a), ob = seg(f.b);
      const double c = std::cos(x[oa + 2]), s = std::sin(x[oa + 2]);
      const double dx = x[ob] - x[oa], dy = x[ob + 1] - x[oa + 1];
      r.resize(3);
      r << c * dx + s * dy - f.pose.x, -s * dx + c * dy - f.pose.y,
          wrap_angle(x[ob + 2] - x[oa + 2] - f.pose.theta);
      J = Eigen::MatrixXd::Zero(3, 6);
      J.block<2, 2>(0, 0) << -c, -s, s, -c;
      J(0, 2) = -s * dx + c * dy;
      J(1, 2) = -c * dx - s * dy;
      J.block<2, 2>(0, 3) << c, s, -s, c;
      J(2, 2) = -1.0;
      J(2, 5) = 1.0;
      break;
    }
    case FactorKind::GeotagPrior: {
      const auto o = seg(f.a);
      r.resize(2);
      r << x[o] - f.point.x, x[o + 1] - f.point.y;
      J = Eigen::MatrixXd::Identity(2, 2);
      break;
    }
    case FactorKind::Loop: {
      const auto ok = seg(f.a), og = seg(f.b);
      const double c = std::cos(x[ok + 2]), s = std::sin(x[ok + 2]);
      const double dx = x[og] - x[ok], dy = x[og + 1] - x[ok + 1];
      r.resize(2);
      r << c * dx + s * dy - f.point.x, -s * dx + c * dy - f.point.y;
      J = Eigen::MatrixXd::Zero(2, 5);
      J.block<2, 2>(0, 0) << -c, -s, s, -c;
      J(0, 2) = -s * dx + c * dy;
      J(1, 2) = -c * dx - s * dy;
      J.block<2, 2>(0, 3) << c, s, -s, c;
      break;
    }
  }
}

double LoopGraph::chi2(const Eigen::VectorXd& x) const {
  double total = 0.0;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  for (const Factor& f : factors_) {
    linearize(f, x, r, J);
    total += r.dot(f.information * r);
  }
  return total;
}

void LoopGraph::dense_system(const Eigen::VectorXd& x, Eigen::MatrixXd& H, Eigen::VectorXd& g) const {
  const auto n = static_cast<Eigen::Index>(dim_);
  H = Eigen::MatrixXd::Zero(n, n);
  g = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  for (const Factor& f : factors_) {
    linearize(f, x, r, J);
    const auto cols = factor_columns(f);
    const Eigen::MatrixXd JtL = J.transpose() * f.information;
    const Eigen::MatrixXd h = JtL * J;
    const Eigen::VectorXd gl = JtL * r;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      g[static_cast<Eigen::Index>(cols[i])] += gl[static_cast<Eigen::Index>(i)];
      for (std::size_t j = 0; j < cols.size(); ++j) {
        H(static_cast<Eigen::Index>(cols[i]), static_cast<Eigen::Index>(cols[j])) +=
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
}

Eigen::VectorXd LoopGraph::retract(const Eigen::VectorXd& x, const Eigen::VectorXd& delta) const {
  Eigen::VectorXd out = x + delta;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Keyframe) {
      const auto o = static_cast<Eigen::Index>(n.offset) + 2;
      out[o] = wrap_angle(out[o]);
    }
  }
  return out;
}

void LoopGraph::check_well_posed() const {
  // Union-find over binary factors; each component needs a prior.
  std::vector<std::size_t> parent(nodes_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  bool keyframe_prior = false;
  for (const Factor& f : factors_) {
    if (f.kind == FactorKind::Odometry || f.kind == FactorKind::Loop) parent[find(f.a)] = find(f.b);
    if (f.kind == FactorKind::PosePrior) keyframe_prior = true;
  }
  if (!keyframe_prior) fail(ErrorKind::InvalidArgument, "underdetermined gauge: no keyframe prior");
  std::unordered_set<std::size_t> anchored;
  for (const Factor& f : factors_) {
    if (f.kind == FactorKind::PosePrior || f.kind == FactorKind::GeotagPrior) anchored.insert(find(f.a));
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!anchored.count(find(i))) {
      fail(ErrorKind::InvalidArgument, "underdetermined gauge: node " + std::to_string(nodes_[i].id) +
                                           " is not connected to any prior");
    }
  }
}

namespace {

Eigen::SparseMatrix<double> sparse_system(const LoopGraph& graph, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  const auto n = static_cast<Eigen::Index>(graph.dimension());
  g = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  for (const Factor& f : graph.factors()) {
    graph.linearize(f, x, r, J);
    const auto cols = graph.factor_columns(f);
    const Eigen::MatrixXd JtL = J.transpose() * f.information;
    const Eigen::MatrixXd h = JtL * J;
    const Eigen::VectorXd gl = JtL * r;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      g[static_cast<Eigen::Index>(cols[i])] += gl[static_cast<Eigen::Index>(i)];
      for (std::size_t j = 0; j < cols.size(); ++j) {
        trip.emplace_back(static_cast<Eigen::Index>(cols[i]), static_cast<Eigen::Index>(cols[j]),
                          h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
  }
  Eigen::SparseMatrix<double> H(n, n);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

}  // namespace

LmResult optimize_lm(LoopGraph& graph, const LmConfig& config) {
  graph.check_well_posed();
  LmResult result;
  Eigen::VectorXd x = graph.state();
  double chi2 = graph.chi2(x);
  result.initial_chi2 = chi2;
  double lambda = config.initial_lambda;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    result.iterations = iter + 1;
    if (chi2 <= std::numeric_limits<double>::min()) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd g;
    const Eigen::SparseMatrix<double> H = sparse_system(graph, x, g);
    const Eigen::VectorXd diag = H.diagonal();

    bool accepted = false;
    while (lambda <= config.max_lambda) {
      Eigen::SparseMatrix<double> damped = H;
      for (Eigen::Index i = 0; i < damped.rows(); ++i) {
        damped.coeffRef(i, i) += lambda * std::max(diag[i], 1e-12);
      }
      solver.compute(damped);
      if (solver.info() != Eigen::Success) {
        lambda *= config.lambda_up;
        continue;
      }
      const Eigen::VectorXd delta = solver.solve(-g);
      const Eigen::VectorXd candidate = graph.retract(x, delta);
      const double new_chi2 = graph.chi2(candidate);
      if (std::isfinite(new_chi2) && new_chi2 < chi2) {
        const double rel = (chi2 - new_chi2) / chi2;
        x = candidate;
        chi2 = new_chi2;
        result.accepted_chi2.push_back(chi2);
        lambda = std::max(lambda / config.lambda_down, 1e-15);
        accepted = true;
        if (rel < config.relative_tolerance) result.converged = true;
        break;
      }
      lambda *= config.lambda_up;
    }
    if (!accepted) {
      // No decrease even under heavy damping: at a minimum to machine precision.
      result.converged = true;
      break;
    }
    if (result.converged) break;
  }
  if (!std::isfinite(chi2)) fail(ErrorKind::Numerical, "optimize_lm: non-finite cost");

  // Near the optimum chi2 changes fall below its rounding, so the last digits are settled by
  // undamped Gauss-Newton steps gated on the gradient norm instead.
  {
    Eigen::VectorXd g;
    Eigen::SparseMatrix<double> H = sparse_system(graph, x, g);
    double gnorm = g.norm();
    for (int k = 0; k < 10 && gnorm > 0.0; ++k) {
      solver.compute(H);
      if (solver.info() != Eigen::Success) break;
      const Eigen::VectorXd candidate = graph.retract(x, solver.solve(-g));
      Eigen::VectorXd g_new;
      Eigen::SparseMatrix<double> H_new = sparse_system(graph, candidate, g_new);
      if (!(g_new.norm() < gnorm)) break;
      x = candidate;
      gnorm = g_new.norm();
      H = std::move(H_new);
      g = std::move(g_new);
    }
    chi2 = graph.chi2(x);
  }
  graph.set_state(x);
  result.final_chi2 = chi2;
  return result;
}

BuiltGraph build_graph(const std::vector<Pose2>& odometry_poses, const std::vector<LoopCandidate>& candidates,
                       const LoopGraphConfig& config) {
  require(odometry_poses.size() >= 2, "build_graph: need at least two keyframes");
  BuiltGraph out;
  LoopGraph& g = out.graph;
  const Eigen::Matrix3d odo_cov = Eigen::Matrix3d::Identity() * config.odometry_cov;
  for (std::size_t i = 0; i < odometry_poses.size(); ++i) {
    out.keyframe_nodes.push_back(g.add_keyframe(i, odometry_poses[i]));
  }
  g.add_pose_prior(out.keyframe_nodes[0], odometry_poses[0], Eigen::Matrix3d::Identity() * config.anchor_cov);
  for (std::size_t i = 0; i + 1 < odometry_poses.size(); ++i) {
    g.add_odometry(out.keyframe_nodes[i], out.keyframe_nodes[i + 1], odometry_poses[i].between(odometry_poses[i + 1]),
                   odo_cov);
  }
  const std::uint64_t geotag_base = odometry_poses.size();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const LoopCandidate& cand = candidates[c];
    require(cand.keyframe < odometry_poses.size(), "build_graph: candidate keyframe out of range");
    const std::size_t node = g.add_geotag(geotag_base + c, cand.geotag);
    g.add_geotag_prior(node, cand.geotag, Eigen::Matrix2d::Identity() * config.geotag_prior_cov);
    out.loop_factor_of_candidate.push_back(g.add_loop(out.keyframe_nodes[cand.keyframe], node, Point2{0.0, 0.0},
                                                      Eigen::Matrix2d::Identity() * config.loop_cov));
  }
  return out;
}

double information_score(const Eigen::Matrix2d& information, ScoreMode mode) {
  if (mode == ScoreMode::Trace) return information.trace();
  return std::hypot(information(0, 0), information(1, 1));
}

std::optional<Eigen::Matrix2d> residual_information(const Eigen::MatrixXd& joint_covariance,
                                                    const Eigen::MatrixXd& jacobian) {
  const Eigen::Matrix2d cov = jacobian * joint_covariance * jacobian.transpose();
  const Eigen::Matrix2d sym = 0.5 * (cov + cov.transpose());
  const double scale = std::max(sym.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  Eigen::LLT<Eigen::Matrix2d> llt(sym);
  if (llt.info() != Eigen::Success || sym.determinant() <= 1e-14 * scale * scale) return std::nullopt;
  const Eigen::Matrix2d info = llt.solve(Eigen::Matrix2d::Identity());
  return Eigen::Matrix2d(0.5 * (info + info.transpose()));
}

std::vector<EdgeInformation> edge_information(const LoopGraph& graph, ScoreMode mode) {
  const auto loops = graph.loop_factors();
  std::vector<EdgeInformation> out(loops.size());
  for (std::size_t k = 0; k < loops.size(); ++k) {
    out[k].factor = loops[k];
    out[k].singular = true;
  }
  if (loops.empty()) return out;

  Eigen::VectorXd g;
  const Eigen::SparseMatrix<double> H = sparse_system(graph, graph.state(), g);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(H);
  if (solver.info() != Eigen::Success) return out;
  const Eigen::VectorXd& x = graph.state();

  for (std::size_t k = 0; k < loops.size(); ++k) {
    const Factor& f = graph.factors()[loops[k]];
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    graph.linearize(f, x, r, J);
    const auto cols = graph.factor_columns(f);
    const auto m = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(H.rows(), m);
    for (Eigen::Index c = 0; c < m; ++c) rhs(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(c)]), c) = 1.0;
    const Eigen::MatrixXd sol = solver.solve(rhs);
    Eigen::MatrixXd joint(m, m);
    for (Eigen::Index i = 0; i < m; ++i) joint.row(i) = sol.row(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(i)]));
    const auto info = residual_information(0.5 * (joint + joint.transpose()), J);
    if (!info) continue;
    out[k].information = *info;
    out[k].score = information_score(*info, mode);
    out[k].singular = false;
  }
  return out;
}

std::vector<AcceptedLoop> filter_loops(const std::vector<LoopCandidate>& candidates, const std::vector<double>& scores,
                                       double score_threshold, double prefilter) {
  require(scores.size() == candidates.size(), "filter_loops: one score per candidate required");
  std::vector<AcceptedLoop> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].descriptor_distance <= prefilter && scores[i] >= score_threshold) out.push_back({i, scores[i]});
  }
  return out;
}

LoopFilterResult run_loop_filter(const std::vector<Pose2>& odometry_poses, const std::vector<LoopCandidate>& candidates,
                                 const LoopFilterConfig& config) {
  LoopFilterResult res;
  std::vector<LoopCandidate> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].descriptor_distance <= config.prefilter) {
      res.graph_candidates.push_back(i);
      kept.push_back(candidates[i]);
    }
  }
  BuiltGraph built = build_graph(odometry_poses, kept, config.graph);
  res.lm = optimize_lm(built.graph, config.lm);
  const auto infos = edge_information(built.graph, config.mode);

  res.scores.assign(candidates.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    // Loop factors are added in candidate order, so info k belongs to kept candidate k.
    res.scores[res.graph_candidates[k]] = infos[k].singular ? 0.0 : infos[k].score;
  }
  std::vector<double> scores = res.scores;
  for (double& s : scores) {
    if (std::isnan(s)) s = -std::numeric_limits<double>::infinity();
  }
  res.accepted = filter_loops(candidates, scores, config.score_threshold, config.prefilter);
  res.optimized = built.graph.keyframe_poses();
  return res;
}

double trajectory_rmse(const std::vector<Pose2>& estimated, const std::vector<Pose2>& ground_truth) {
  if (estimated.size() != ground_truth.size()) fail(ErrorKind::InvalidArgument, "trajectory_rmse: length mismatch");
  require(!estimated.empty(), "trajectory_rmse: empty trajectories");
  const Pose2 align = ground_truth.front().compose(estimated.front().inverse());
  double sq = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const Point2 p = align.transform_from(estimated[i].position());
    sq += (p.x - ground_truth[i].x) * (p.x - ground_truth[i].x) + (p.y - ground_truth[i].y) * (p.y - ground_truth[i].y);
  }
  return std::sqrt(sq / static_cast<double>(estimated.size()));
}

// ---- text formats -----------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::DataFormat, "cannot open for writing: " + path.string());
  return os;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::DataFormat, "cannot open: " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::DataFormat, "bad number '" + s + "' in " + path.string());
  }
}

}  // namespace

void write_tum(const std::filesystem::path& path, const std::vector<Pose2>& poses) {
  auto os = open_out(path);
  char buf[256];
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Pose2& p = poses[i];
    std::snprintf(buf, sizeof(buf), "%zu %.9f %.9f 0 0 0 %.9f %.9f\n", i, p.x, p.y, std::sin(0.5 * p.theta),
                  std::cos(0.5 * p.theta));
    os << buf;
  }
}

std::vector<Pose2> read_tum(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::DataFormat, "cannot open: " + path.string());
  std::vector<Pose2> poses;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    double t, x, y, z, qx, qy, qz, qw;
    if (!(ss >> t >> x >> y >> z >> qx >> qy >> qz >> qw)) {
      fail(ErrorKind::DataFormat, "malformed TUM line in " + path.string());
    }
    poses.emplace_back(x, y, 2.0 * std::atan2(qz, qw));
  }
  return poses;
}

void write_candidates(const std::filesystem::path& path, const std::vector<LoopCandidate>& candidates) {
  auto os = open_out(path);
  os << "keyframe_id,geotag_x,geotag_y,descriptor_distance\n";
  char buf[256];
  for (const auto& c : candidates) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.9f\n", c.keyframe, c.geotag.x, c.geotag.y, c.descriptor_distance);
    os << buf;
  }
}

std::vector<LoopCandidate> read_candidates(const std::filesystem::path& path) {
  std::vector<LoopCandidate> out;
  for (const auto& row : read_csv_rows(path)) {
    if (row.size() < 4) fail(ErrorKind::DataFormat, "loop candidate row needs 4 fields in " + path.string());
    if (row[0] == "keyframe_id") continue;
    const double kf = to_double(row[0], path);
    if (kf < 0) fail(ErrorKind::DataFormat, "negative keyframe id in " + path.string());
    out.push_back({static_cast<std::size_t>(kf), {to_double(row[1], path), to_double(row[2], path)},
                   to_double(row[3], path)});
  }
  return out;
}

void write_accepted(const std::filesystem::path& path, const std::vector<LoopCandidate>& candidates,
                    const std::vector<AcceptedLoop>& accepted) {
  auto os = open_out(path);
  os << "keyframe_id,geotag_x,geotag_y,descriptor_distance,info_score\n";
  char buf[256];
  for (const auto& a : accepted) {
    const auto& c = candidates.at(a.candidate);
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.9f,%.9g\n", c.keyframe, c.geotag.x, c.geotag.y,
                  c.descriptor_distance, a.score);
    os << buf;
  }
}

}  // namespace lc2

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "lc2/pose2.hpp"

namespace lc2 {

enum class NodeKind : std::uint8_t { Keyframe, Geotag };

struct GraphNode {
  std::uint64_t id = 0;
  NodeKind kind = NodeKind::Keyframe;
  std::size_t offset = 0;  // first index in the stacked state vector
};

enum class FactorKind : std::uint8_t { PosePrior, Odometry, GeotagPrior, Loop };

struct Factor {
  FactorKind kind = FactorKind::Odometry;
  std::size_t a = 0;  // node index (keyframe for Loop)
  std::size_t b = 0;  // node index (geotag for Loop); unused by priors
  Pose2 pose;         // prior mean or relative odometry measurement
  Point2 point;       // geotag prior mean or loop offset in the keyframe frame
  Eigen::MatrixXd information;
};

/// Factor graph over planar keyframe poses and 2D geotag positions.
class LoopGraph {
 public:
  std::size_t add_keyframe(std::uint64_t id, const Pose2& initial);
  std::size_t add_geotag(std::uint64_t id, const Point2& initial);

  void add_pose_prior(std::size_t node, const Pose2& mean, const Eigen::Matrix3d& covariance);
  void add_odometry(std::size_t from, std::size_t to, const Pose2& relative, const Eigen::Matrix3d& covariance);
  void add_geotag_prior(std::size_t node, const Point2& mean, const Eigen::Matrix2d& covariance);
  /// Returns the factor index of the new loop edge.
  std::size_t add_loop(std::size_t keyframe, std::size_t geotag, const Point2& offset,
                       const Eigen::Matrix2d& covariance);

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<Factor>& factors() const { return factors_; }
  std::vector<std::size_t> loop_factors() const;
  std::size_t dimension() const { return dim_; }

  const Eigen::VectorXd& state() const { return state_; }
  void set_state(const Eigen::VectorXd& x);
  Pose2 keyframe_pose(std::size_t node) const;
  Point2 geotag_position(std::size_t node) const;
  std::vector<Pose2> keyframe_poses() const;

  /// Sum of whitened squared residuals at `x`.
  double chi2(const Eigen::VectorXd& x) const;

  /// Residual and Jacobian of one factor at `x`; Jacobian columns follow `factor_columns`.
  void linearize(const Factor& f, const Eigen::VectorXd& x, Eigen::VectorXd& residual, Eigen::MatrixXd& jacobian) const;
  std::vector<std::size_t> factor_columns(const Factor& f) const;

  /// Dense Gauss-Newton system H = sum J^T L J, g = sum J^T L r at `x`.
  void dense_system(const Eigen::VectorXd& x, Eigen::MatrixXd& H, Eigen::VectorXd& g) const;

  /// Apply a tangent-space increment (angles re-wrapped).
  Eigen::VectorXd retract(const Eigen::VectorXd& x, const Eigen::VectorXd& delta) const;

  /// Throws unless a keyframe prior exists and every connected component holds a prior.
  void check_well_posed() const;

 private:
  std::size_t add_node(std::uint64_t id, NodeKind kind, std::size_t dof);
  void check_node(std::size_t node, NodeKind kind) const;

  std::vector<GraphNode> nodes_;
  std::vector<Factor> factors_;
  Eigen::VectorXd state_;
  std::size_t dim_ = 0;
};

struct LmConfig {
  int max_iterations = 100;
  double relative_tolerance = 1e-9;
  double initial_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double max_lambda = 1e12;
};

struct LmResult {
  int iterations = 0;
  double initial_chi2 = 0.0;
  double final_chi2 = 0.0;
  std::vector<double> accepted_chi2;  // chi2 after every accepted step
  bool converged = false;
};

/// Levenberg-Marquardt with Marquardt (diagonal) damping over a sparse Cholesky solve, finished by a few
/// gradient-gated Gauss-Newton steps. Updates the graph state.
LmResult optimize_lm(LoopGraph& graph, const LmConfig& config = {});

struct LoopCandidate {
  std::size_t keyframe = 0;
  Point2 geotag;
  double descriptor_distance = 0.0;
};

struct LoopGraphConfig {
  double odometry_cov = 1e-2;
  double loop_cov = 1e4;
  double geotag_prior_cov = 1e-4;
  double anchor_cov = 1e2;  // loose: the start pose is itself uncertain; geotags fix the global frame
};

struct BuiltGraph {
  LoopGraph graph;
  std::vector<std::size_t> keyframe_nodes;
  std::vector<std::size_t> loop_factor_of_candidate;  // one per candidate
};

/// Chain of odometry factors between consecutive keyframes, anchor prior on the first, and for every
/// candidate a geotag node (tight prior) joined to its keyframe by a zero-offset loop edge.
BuiltGraph build_graph(const std::vector<Pose2>& odometry_poses, const std::vector<LoopCandidate>& candidates,
                       const LoopGraphConfig& config = {});

enum class ScoreMode { DiagonalL2, Trace };

struct EdgeInformation {
  std::size_t factor = 0;
  Eigen::Matrix2d information = Eigen::Matrix2d::Zero();
  double score = 0.0;
  bool singular = false;
};

double information_score(const Eigen::Matrix2d& information, ScoreMode mode);

/// Information of a residual with Jacobian `jacobian` given the joint marginal covariance of its variables.
/// Empty when the residual covariance is singular.
std::optional<Eigen::Matrix2d> residual_information(const Eigen::MatrixXd& joint_covariance,
                                                    const Eigen::MatrixXd& jacobian);

/// Marginal information of every loop edge residual at the current state.
std::vector<EdgeInformation> edge_information(const LoopGraph& graph, ScoreMode mode = ScoreMode::DiagonalL2);

inline constexpr double kDefaultPrefilter = 0.1;
// Calibrated on the synthetic loop scenario (seeds 101-120) for the default covariances.
inline constexpr double kDefaultScoreThreshold = 0.018;

struct AcceptedLoop {
  std::size_t candidate = 0;
  double score = 0.0;
};

/// Keep a candidate iff descriptor distance <= prefilter and its score >= threshold.
std::vector<AcceptedLoop> filter_loops(const std::vector<LoopCandidate>& candidates, const std::vector<double>& scores,
                                       double score_threshold, double prefilter = kDefaultPrefilter);

struct LoopFilterConfig {
  LoopGraphConfig graph;
  LmConfig lm;
  ScoreMode mode = ScoreMode::DiagonalL2;
  double score_threshold = kDefaultScoreThreshold;
  double prefilter = kDefaultPrefilter;
};

struct LoopFilterResult {
  std::vector<std::size_t> graph_candidates;  // candidates that passed the prefilter, in order
  std::vector<double> scores;                 // one per candidate; NaN if not scored
  std::vector<AcceptedLoop> accepted;
  std::vector<Pose2> optimized;
  LmResult lm;
};

/// Prefilter, build, optimize, score and filter in one pass.
LoopFilterResult run_loop_filter(const std::vector<Pose2>& odometry_poses, const std::vector<LoopCandidate>& candidates,
                                 const LoopFilterConfig& config = {});

/// Planar position RMSE after rigidly aligning the first estimated pose onto the first ground-truth pose.
double trajectory_rmse(const std::vector<Pose2>& estimated, const std::vector<Pose2>& ground_truth);

// Text formats.
void write_tum(const std::filesystem::path& path, const std::vector<Pose2>& poses);
std::vector<Pose2> read_tum(const std::filesystem::path& path);
void write_candidates(const std::filesystem::path& path, const std::vector<LoopCandidate>& candidates);
std::vector<LoopCandidate> read_candidates(const std::filesystem::path& path);
void write_accepted(const std::filesystem::path& path, const std::vector<LoopCandidate>& candidates,
                    const std::vector<AcceptedLoop>& accepted);

}  // namespace lc2

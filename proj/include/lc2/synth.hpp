#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lc2/loopgraph.hpp"
#include "lc2/pose2.hpp"
#include "lc2/projection.hpp"
#include "lc2/random.hpp"
#include "lc2/similarity.hpp"

namespace lc2 {

/// Axis-aligned obstacle standing on the ground plane z = 0.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double hx = 0.5;  // half extents
  double hy = 0.5;
  double height = 1.0;
};

struct LidarSpec {
  std::size_t height = 32;
  std::size_t width = 512;
  double fov_up = 0.0;     // radians
  double fov_total = 0.0;  // radians
  double max_range = 60.0;
};

struct CameraSpec {
  double hfov = 0.0;  // radians
  std::size_t width = 128;
  std::size_t height = 36;
  double max_range = 60.0;
  double boresight = 0.0;  // yaw offset from the vehicle heading
};

struct SessionSpec {
  std::vector<Point2> waypoints;
  bool closed = false;
  double lateral_offset = 0.0;  // metres, positive to the left of travel
  double start_offset = 0.0;    // arc length at which sampling starts
};

struct NoiseSpec {
  double odometry_heading_deg = 30.0;
  double geotag_sigma = 2.0;
  double disparity_jitter = 0.0;  // per-frame global scale drawn from U[1-j, 1+j]
};

struct WorldSpec {
  std::uint64_t seed = 1;
  double arena_size = 200.0;
  std::size_t box_count = 0;
  double box_half_min = 1.0;
  double box_half_max = 5.0;
  double box_height_min = 2.0;
  double box_height_max = 15.0;
  double clearance = 4.0;  // min gap between random boxes and any route
  double frame_spacing = 3.0;
  double sensor_height = 1.8;
  double lidar_effective_range = 30.0;  // interest-area radii for similarity
  double camera_effective_range = 30.0;
  std::vector<Box> boxes;  // explicit obstacles, kept in addition to random ones
  std::vector<SessionSpec> sessions;
  LidarSpec lidar;
  CameraSpec camera;
  NoiseSpec noise;
};

/// Parses the flat key=value world description. Unknown keys are a format error.
WorldSpec parse_world_spec(const std::string& text);
WorldSpec read_world_spec(const std::filesystem::path& path);
std::string format_world_spec(const WorldSpec& spec);

/// Two-session loop through a cluttered 200 m arena, used by the end-to-end tests.
WorldSpec default_world_spec();

struct World {
  WorldSpec spec;
  std::vector<Box> boxes;
  std::vector<std::vector<Pose2>> sessions;  // ground-truth vehicle poses
};

/// Places random boxes clear of every route and samples poses along each session path.
World generate_world(const WorldSpec& spec);

/// Poses every `spacing` metres along a polyline, heading along the current segment.
std::vector<Pose2> sample_path(const SessionSpec& session, double spacing);

struct Ray3 {
  double ox, oy, oz;
  double dx, dy, dz;  // unit direction
};

/// Distance to the first box surface hit within `max_range`, if any.
std::optional<double> cast_ray(const std::vector<Box>& boxes, const Ray3& ray, double max_range);

/// LiDAR returns in the sensor frame (x forward, z up) over the projection's pixel-centre lattice.
PointCloud render_scan(const World& world, const Pose2& pose, const LidarSpec& lidar);

/// Pinhole z-depth rendered as disparity (1/depth); misses give 0. Disparities are divided by `scale`.
DisparityImage render_disparity(const World& world, const Pose2& pose, const CameraSpec& camera, double scale = 1.0);

/// Relative motions between consecutive poses, headings perturbed per step by U[-sigma, sigma] degrees.
std::vector<Pose2> corrupt_odometry(const std::vector<Pose2>& poses, double sigma_deg, std::uint64_t seed);
std::vector<Pose2> dead_reckon(const Pose2& start, const std::vector<Pose2>& relative);

std::vector<Point2> noisy_geotags(const std::vector<Pose2>& poses, double sigma, std::uint64_t seed);

FrustumSpec lidar_frustum(const WorldSpec& spec);
FrustumSpec camera_frustum(const WorldSpec& spec);

struct DatasetSummary {
  std::size_t frames = 0;
  std::vector<std::size_t> poses_per_session;
};

/// Writes clouds, range and disparity grids, trajectories, geotags and the manifest under `out_dir`.
DatasetSummary write_dataset(const World& world, const std::filesystem::path& out_dir);

// ---- loop-filter scenario -----------------------------------------------------

struct LoopScenarioSpec {
  std::size_t poses = 100;
  double side = 50.0;  // square loop side; poses are spaced evenly along one lap
  double heading_noise_deg = 30.0;
  double geotag_sigma = 2.0;
  std::size_t candidates = 80;
  double false_fraction = 0.53;
  double false_min_distance = 25.0;
  double true_radius = 10.0;
};

struct LoopScenario {
  std::vector<Pose2> truth;
  std::vector<Pose2> odometry;  // dead-reckoned initial estimate
  std::vector<LoopCandidate> candidates;
  std::vector<bool> is_true;  // candidate geotag within true_radius of the true keyframe position
};

LoopScenario make_loop_scenario(const LoopScenarioSpec& spec, std::uint64_t seed);

}  // namespace lc2

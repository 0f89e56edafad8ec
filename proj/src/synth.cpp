#include "lc2/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "lc2/error.hpp"
#include "lc2/manifest.hpp"

namespace lc2 {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty() && std::isfinite(d)) return d;
  } catch (const std::logic_error&) {
  }
  fail(ErrorKind::DataFormat, "world spec: bad number for '" + key + "': " + v);
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  const double d = parse_number(key, v);
  if (d < 0 || d != std::floor(d)) fail(ErrorKind::DataFormat, "world spec: '" + key + "' must be a count");
  return static_cast<std::size_t>(d);
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::string s = v;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::replace(s.begin(), s.end(), ';', ' ');
  std::stringstream ss(s);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(parse_number(key, tok));
  return out;
}

// "session.3.waypoints" -> (3, "waypoints")
bool indexed_key(const std::string& key, const std::string& prefix, std::size_t& index, std::string& field) {
  if (key.rfind(prefix + ".", 0) != 0) return false;
  const std::string rest = key.substr(prefix.size() + 1);
  const auto dot = rest.find('.');
  const std::string idx = rest.substr(0, dot);
  if (idx.empty() || !std::all_of(idx.begin(), idx.end(), ::isdigit)) return false;
  index = std::stoul(idx);
  field = dot == std::string::npos ? "" : rest.substr(dot + 1);
  return true;
}

double rect_point_distance(const Box& b, const Point2& p) {
  const double dx = std::max(std::abs(p.x - b.cx) - b.hx, 0.0);
  const double dy = std::max(std::abs(p.y - b.cy) - b.hy, 0.0);
  return std::hypot(dx, dy);
}

bool inside_footprint(const Box& b, const Point2& p) {
  return std::abs(p.x - b.cx) <= b.hx && std::abs(p.y - b.cy) <= b.hy;
}

}  // namespace

WorldSpec parse_world_spec(const std::string& text) {
  WorldSpec spec;
  spec.lidar.fov_up = 15.0 * kDeg;
  spec.lidar.fov_total = 30.0 * kDeg;
  spec.camera.hfov = 90.0 * kDeg;

  std::map<std::size_t, SessionSpec> sessions;
  std::map<std::size_t, Box> boxes;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::DataFormat, "world spec line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    std::size_t idx = 0;
    std::string field;
    if (indexed_key(key, "session", idx, field)) {
      SessionSpec& s = sessions[idx];
      if (field == "waypoints") {
        const auto xs = parse_list(key, val);
        if (xs.size() % 2 != 0 || xs.empty()) fail(ErrorKind::DataFormat, "world spec: waypoints need x y pairs");
        s.waypoints.clear();
        for (std::size_t i = 0; i < xs.size(); i += 2) s.waypoints.push_back({xs[i], xs[i + 1]});
      } else if (field == "closed") {
        s.closed = parse_number(key, val) != 0.0;
      } else if (field == "lateral_offset") {
        s.lateral_offset = parse_number(key, val);
      } else if (field == "start_offset") {
        s.start_offset = parse_number(key, val);
      } else {
        fail(ErrorKind::DataFormat, "world spec: unknown key '" + key + "'");
      }
      continue;
    }
    if (indexed_key(key, "box", idx, field) && field.empty()) {
      const auto xs = parse_list(key, val);
      if (xs.size() != 5) fail(ErrorKind::DataFormat, "world spec: box needs cx cy hx hy height");
      boxes[idx] = {xs[0], xs[1], xs[2], xs[3], xs[4]};
      continue;
    }

    if (key == "seed") {
      const double d = parse_number(key, val);
      if (d < 0 || d != std::floor(d)) fail(ErrorKind::DataFormat, "world spec: seed must be a non-negative integer");
      spec.seed = std::stoull(val);
    } else if (key == "arena_size") spec.arena_size = parse_number(key, val);
    else if (key == "box_count") spec.box_count = parse_count(key, val);
    else if (key == "box_half_min") spec.box_half_min = parse_number(key, val);
    else if (key == "box_half_max") spec.box_half_max = parse_number(key, val);
    else if (key == "box_height_min") spec.box_height_min = parse_number(key, val);
    else if (key == "box_height_max") spec.box_height_max = parse_number(key, val);
    else if (key == "clearance") spec.clearance = parse_number(key, val);
    else if (key == "frame_spacing") spec.frame_spacing = parse_number(key, val);
    else if (key == "sensor_height") spec.sensor_height = parse_number(key, val);
    else if (key == "lidar.effective_range") spec.lidar_effective_range = parse_number(key, val);
    else if (key == "camera.effective_range") spec.camera_effective_range = parse_number(key, val);
    else if (key == "lidar.height") spec.lidar.height = parse_count(key, val);
    else if (key == "lidar.width") spec.lidar.width = parse_count(key, val);
    else if (key == "lidar.fov_up_deg") spec.lidar.fov_up = parse_number(key, val) * kDeg;
    else if (key == "lidar.fov_total_deg") spec.lidar.fov_total = parse_number(key, val) * kDeg;
    else if (key == "lidar.max_range") spec.lidar.max_range = parse_number(key, val);
    else if (key == "camera.hfov_deg") spec.camera.hfov = parse_number(key, val) * kDeg;
    else if (key == "camera.width") spec.camera.width = parse_count(key, val);
    else if (key == "camera.height") spec.camera.height = parse_count(key, val);
    else if (key == "camera.max_range") spec.camera.max_range = parse_number(key, val);
    else if (key == "camera.boresight_deg") spec.camera.boresight = parse_number(key, val) * kDeg;
    else if (key == "noise.odometry_heading_deg") spec.noise.odometry_heading_deg = parse_number(key, val);
    else if (key == "noise.geotag_sigma") spec.noise.geotag_sigma = parse_number(key, val);
    else if (key == "noise.disparity_jitter") spec.noise.disparity_jitter = parse_number(key, val);
    else fail(ErrorKind::DataFormat, "world spec: unknown key '" + key + "'");
  }
  for (auto& [i, s] : sessions) {
    if (i != spec.sessions.size()) fail(ErrorKind::DataFormat, "world spec: session indices must be 0..n-1");
    if (s.waypoints.empty()) fail(ErrorKind::DataFormat, "world spec: session " + std::to_string(i) + " has no waypoints");
    spec.sessions.push_back(s);
  }
  for (auto& [i, b] : boxes) spec.boxes.push_back(b);
  return spec;
}

WorldSpec read_world_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::InvalidArgument, "cannot open world spec: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_world_spec(ss.str());
}

std::string format_world_spec(const WorldSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "seed = " << spec.seed << "\n"
     << "arena_size = " << spec.arena_size << "\n"
     << "box_count = " << spec.box_count << "\n"
     << "box_half_min = " << spec.box_half_min << "\n"
     << "box_half_max = " << spec.box_half_max << "\n"
     << "box_height_min = " << spec.box_height_min << "\n"
     << "box_height_max = " << spec.box_height_max << "\n"
     << "clearance = " << spec.clearance << "\n"
     << "frame_spacing = " << spec.frame_spacing << "\n"
     << "sensor_height = " << spec.sensor_height << "\n"
     << "lidar.height = " << spec.lidar.height << "\n"
     << "lidar.width = " << spec.lidar.width << "\n"
     << "lidar.fov_up_deg = " << spec.lidar.fov_up / kDeg << "\n"
     << "lidar.fov_total_deg = " << spec.lidar.fov_total / kDeg << "\n"
     << "lidar.max_range = " << spec.lidar.max_range << "\n"
     << "lidar.effective_range = " << spec.lidar_effective_range << "\n"
     << "camera.hfov_deg = " << spec.camera.hfov / kDeg << "\n"
     << "camera.width = " << spec.camera.width << "\n"
     << "camera.height = " << spec.camera.height << "\n"
     << "camera.max_range = " << spec.camera.max_range << "\n"
     << "camera.boresight_deg = " << spec.camera.boresight / kDeg << "\n"
     << "camera.effective_range = " << spec.camera_effective_range << "\n"
     << "noise.odometry_heading_deg = " << spec.noise.odometry_heading_deg << "\n"
     << "noise.geotag_sigma = " << spec.noise.geotag_sigma << "\n"
     << "noise.disparity_jitter = " << spec.noise.disparity_jitter << "\n";
  for (std::size_t i = 0; i < spec.boxes.size(); ++i) {
    const Box& b = spec.boxes[i];
    os << "box." << i << " = " << b.cx << " " << b.cy << " " << b.hx << " " << b.hy << " " << b.height << "\n";
  }
  for (std::size_t i = 0; i < spec.sessions.size(); ++i) {
    const SessionSpec& s = spec.sessions[i];
    os << "session." << i << ".waypoints =";
    for (const auto& w : s.waypoints) os << " " << w.x << "," << w.y;
    os << "\nsession." << i << ".closed = " << (s.closed ? 1 : 0) << "\n"
       << "session." << i << ".lateral_offset = " << s.lateral_offset << "\n"
       << "session." << i << ".start_offset = " << s.start_offset << "\n";
  }
  return os.str();
}

WorldSpec default_world_spec() {
  WorldSpec spec = parse_world_spec("");
  spec.seed = 7;
  spec.arena_size = 200.0;
  spec.box_count = 160;
  spec.box_half_min = 1.5;
  spec.box_half_max = 6.0;
  spec.box_height_min = 3.0;
  spec.box_height_max = 18.0;
  spec.clearance = 4.0;
  spec.frame_spacing = 3.0;
  spec.noise.disparity_jitter = 0.1;
  SessionSpec a;
  a.waypoints = {{20, 20}, {180, 20}, {180, 180}, {20, 180}};
  a.closed = true;
  SessionSpec b = a;
  b.lateral_offset = 1.0;
  b.start_offset = 1.5;
  spec.sessions = {a, b};
  return spec;
}

std::vector<Pose2> sample_path(const SessionSpec& session, double spacing) {
  require(spacing > 0.0, "sample_path: spacing must be positive");
  std::vector<Point2> pts = session.waypoints;
  require(!pts.empty(), "sample_path: no waypoints");
  if (session.closed && pts.size() > 1) pts.push_back(pts.front());
  if (pts.size() == 1) return {Pose2(pts[0].x, pts[0].y, 0.0)};

  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) cum.push_back(cum.back() + distance(pts[i - 1], pts[i]));
  const double total = cum.back();
  require(total > 0.0, "sample_path: degenerate path");

  std::vector<Pose2> out;
  const auto count = static_cast<std::size_t>(
      session.closed ? std::floor(total / spacing) : std::floor((total - session.start_offset) / spacing) + 1);
  for (std::size_t k = 0; k < count; ++k) {
    double s = session.start_offset + static_cast<double>(k) * spacing;
    if (session.closed) s = std::fmod(s, total);
    if (s < 0.0 || s > total) continue;
    std::size_t seg = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), s) - cum.begin());
    seg = std::clamp<std::size_t>(seg, 1, pts.size() - 1);
    while (seg + 1 < pts.size() && cum[seg] - cum[seg - 1] == 0.0) ++seg;
    const Point2 a = pts[seg - 1], b = pts[seg];
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    const double heading = std::atan2(b.y - a.y, b.x - a.x);
    const double x = a.x + t * (b.x - a.x) - session.lateral_offset * std::sin(heading);
    const double y = a.y + t * (b.y - a.y) + session.lateral_offset * std::cos(heading);
    out.emplace_back(x, y, heading);
  }
  return out;
}

World generate_world(const WorldSpec& spec) {
  require(spec.arena_size > 0.0, "world spec: arena size must be positive");
  require(spec.lidar.max_range > 0.0 && spec.camera.max_range > 0.0, "world spec: max ranges must be positive");
  require(spec.box_half_min > 0.0 && spec.box_half_min <= spec.box_half_max, "world spec: bad box extents");
  require(spec.box_height_min > 0.0 && spec.box_height_min <= spec.box_height_max, "world spec: bad box heights");
  require(!spec.sessions.empty(), "world spec: at least one session required");
  for (const Box& b : spec.boxes) {
    if (b.cx - b.hx < 0 || b.cy - b.hy < 0 || b.cx + b.hx > spec.arena_size || b.cy + b.hy > spec.arena_size) {
      fail(ErrorKind::InvalidArgument, "world spec: explicit box outside the arena");
    }
  }

  World w;
  w.spec = spec;
  w.boxes = spec.boxes;

  std::vector<Point2> route;  // dense route samples for the clearance test
  for (std::size_t s = 0; s < spec.sessions.size(); ++s) {
    for (const Point2& p : spec.sessions[s].waypoints) {
      if (p.x < 0 || p.y < 0 || p.x > spec.arena_size || p.y > spec.arena_size) {
        fail(ErrorKind::InvalidArgument, "infeasible waypoint outside the arena in session " + std::to_string(s));
      }
      for (const Box& b : spec.boxes) {
        if (inside_footprint(b, p)) {
          fail(ErrorKind::InvalidArgument, "infeasible waypoint inside an obstacle in session " + std::to_string(s));
        }
      }
    }
    w.sessions.push_back(sample_path(spec.sessions[s], spec.frame_spacing));
    for (const Pose2& p : w.sessions.back()) {
      for (const Box& b : spec.boxes) {
        if (inside_footprint(b, p.position())) {
          fail(ErrorKind::InvalidArgument, "infeasible path through an obstacle in session " + std::to_string(s));
        }
      }
    }
    SessionSpec fine = spec.sessions[s];
    fine.start_offset = 0.0;
    const auto dense = sample_path(fine, 0.5);
    for (const Pose2& p : dense) route.push_back(p.position());
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> pos(0.0, spec.arena_size);
  std::uniform_real_distribution<double> half(spec.box_half_min, spec.box_half_max);
  std::uniform_real_distribution<double> height(spec.box_height_min, spec.box_height_max);
  std::size_t placed = 0;
  for (std::size_t attempt = 0; placed < spec.box_count && attempt < 200 * spec.box_count + 1000; ++attempt) {
    Box b;
    b.cx = pos(rng);
    b.cy = pos(rng);
    b.hx = half(rng);
    b.hy = half(rng);
    b.height = height(rng);
    if (b.cx - b.hx < 0 || b.cy - b.hy < 0 || b.cx + b.hx > spec.arena_size || b.cy + b.hy > spec.arena_size) continue;
    const bool clear = std::all_of(route.begin(), route.end(),
                                   [&](const Point2& p) { return rect_point_distance(b, p) >= spec.clearance; });
    if (!clear) continue;
    w.boxes.push_back(b);
    ++placed;
  }
  return w;
}

std::optional<double> cast_ray(const std::vector<Box>& boxes, const Ray3& r, double max_range) {
  double best = std::numeric_limits<double>::infinity();
  for (const Box& b : boxes) {
    double t0 = 0.0, t1 = max_range;
    const double lo[3] = {b.cx - b.hx, b.cy - b.hy, 0.0};
    const double hi[3] = {b.cx + b.hx, b.cy + b.hy, b.height};
    const double o[3] = {r.ox, r.oy, r.oz};
    const double d[3] = {r.dx, r.dy, r.dz};
    bool hit = true;
    for (int k = 0; k < 3 && hit; ++k) {
      if (d[k] == 0.0) {
        if (o[k] < lo[k] || o[k] > hi[k]) hit = false;
        continue;
      }
      double ta = (lo[k] - o[k]) / d[k], tb = (hi[k] - o[k]) / d[k];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) hit = false;
    }
    if (hit && t0 < best) best = t0;
  }
  if (best <= max_range) return best;
  return std::nullopt;
}

namespace {

// Boxes whose footprint comes within `reach` of the sensor position.
std::vector<Box> nearby_boxes(const std::vector<Box>& boxes, const Point2& p, double reach) {
  std::vector<Box> out;
  for (const Box& b : boxes) {
    if (rect_point_distance(b, p) <= reach) out.push_back(b);
  }
  return out;
}

}  // namespace

PointCloud render_scan(const World& world, const Pose2& pose, const LidarSpec& lidar) {
  const auto boxes = nearby_boxes(world.boxes, pose.position(), lidar.max_range);
  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  PointCloud cloud;
  for (std::size_t row = 0; row < lidar.height; ++row) {
    for (std::size_t col = 0; col < lidar.width; ++col) {
      const PixelAngles a = pixel_center_angles(row, col, lidar.height, lidar.width, lidar.fov_up, lidar.fov_total);
      // Inverse of the projection: horizontal unit vector, z / d = sin(elevation).
      double lx = std::cos(a.azimuth), ly = std::sin(a.azimuth), lz = std::sin(a.elevation);
      const double n = std::sqrt(lx * lx + ly * ly + lz * lz);
      lx /= n;
      ly /= n;
      lz /= n;
      const Ray3 ray{pose.x, pose.y, world.spec.sensor_height, c * lx - s * ly, s * lx + c * ly, lz};
      const auto t = cast_ray(boxes, ray, lidar.max_range);
      if (t) cloud.points.push_back({*t * lx, *t * ly, *t * lz});
    }
  }
  return cloud;
}

DisparityImage render_disparity(const World& world, const Pose2& pose, const CameraSpec& camera, double scale) {
  require(camera.hfov > 0.0 && camera.hfov < std::numbers::pi, "render_disparity: h-FoV must be in (0, pi)");
  require(scale > 0.0, "render_disparity: scale must be positive");
  const auto boxes = nearby_boxes(world.boxes, pose.position(), camera.max_range);
  const double yaw = pose.theta + camera.boresight;
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double f = 0.5 * static_cast<double>(camera.width) / std::tan(0.5 * camera.hfov);
  DisparityImage img{Grid(camera.height, camera.width, 0.0)};
  for (std::size_t row = 0; row < camera.height; ++row) {
    for (std::size_t col = 0; col < camera.width; ++col) {
      // Camera frame: forward, left, up; the image x axis points right.
      const double right = (static_cast<double>(col) + 0.5 - 0.5 * static_cast<double>(camera.width)) / f;
      const double up = (0.5 * static_cast<double>(camera.height) - static_cast<double>(row) - 0.5) / f;
      const double n = std::sqrt(1.0 + right * right + up * up);
      const double fx = 1.0 / n, lx = -right / n, uz = up / n;
      const Ray3 ray{pose.x, pose.y, world.spec.sensor_height, c * fx - s * lx, s * fx + c * lx, uz};
      const auto t = cast_ray(boxes, ray, camera.max_range);
      if (!t) continue;
      const double depth = *t * fx;
      img.grid.at(row, col) = 1.0 / (depth * scale);
    }
  }
  return img;
}

std::vector<Pose2> corrupt_odometry(const std::vector<Pose2>& poses, double sigma_deg, std::uint64_t seed) {
  require(sigma_deg >= 0.0, "corrupt_odometry: sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-sigma_deg * kDeg, sigma_deg * kDeg);
  std::vector<Pose2> rel;
  for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
    Pose2 r = poses[i].between(poses[i + 1]);
    const double noise = sigma_deg > 0.0 ? u(rng) : 0.0;
    rel.emplace_back(r.x, r.y, r.theta + noise);
  }
  return rel;
}

std::vector<Pose2> dead_reckon(const Pose2& start, const std::vector<Pose2>& relative) {
  std::vector<Pose2> out{start};
  for (const Pose2& r : relative) out.push_back(out.back().compose(r));
  return out;
}

std::vector<Point2> noisy_geotags(const std::vector<Pose2>& poses, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0, "noisy_geotags: sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Point2> out;
  for (const Pose2& p : poses) {
    const double ex = n(rng), ey = n(rng);
    out.push_back({p.x + sigma * ex, p.y + sigma * ey});
  }
  return out;
}

FrustumSpec lidar_frustum(const WorldSpec& spec) {
  return {2.0 * std::numbers::pi, spec.lidar_effective_range, 0.0};
}

FrustumSpec camera_frustum(const WorldSpec& spec) {
  return {spec.camera.hfov, spec.camera_effective_range, spec.camera.boresight};
}

DatasetSummary write_dataset(const World& world, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "clouds");
  fs::create_directories(out_dir / "grids");
  const WorldSpec& spec = world.spec;

  DatasetSummary summary;
  std::vector<ManifestEntry> manifest;
  std::uint64_t global = 0;
  for (std::size_t s = 0; s < world.sessions.size(); ++s) {
    const auto& poses = world.sessions[s];
    const auto geotags = noisy_geotags(poses, spec.noise.geotag_sigma, derive_seed(spec.seed, 100 + s));
    const auto rel = corrupt_odometry(poses, spec.noise.odometry_heading_deg, derive_seed(spec.seed, 200 + s));
    std::mt19937_64 jitter_rng(derive_seed(spec.seed, 300 + s));
    std::uniform_real_distribution<double> jitter(1.0 - spec.noise.disparity_jitter, 1.0 + spec.noise.disparity_jitter);

    std::vector<std::string> geo_lines;
    for (std::size_t k = 0; k < poses.size(); ++k, ++global) {
      char stem[64];
      std::snprintf(stem, sizeof(stem), "s%zu_%05zu", s, k);
      const std::string cloud_rel = std::string("clouds/") + stem + ".lc2p";
      const std::string range_rel = std::string("grids/") + stem + "_range.lc2i";
      const std::string disp_rel = std::string("grids/") + stem + "_disp.lc2i";

      const PointCloud cloud = render_scan(world, poses[k], spec.lidar);
      write_cloud(out_dir / cloud_rel, cloud);
      const RangeImage range =
          project_cloud(cloud, spec.lidar.height, spec.lidar.width, spec.lidar.fov_up, spec.lidar.fov_total);
      write_grid(out_dir / range_rel, {GridKind::Range, range.grid, range.fov_up, range.fov_total});

      const double scale = spec.noise.disparity_jitter > 0.0 ? jitter(jitter_rng) : 1.0;
      const DisparityImage disp = render_disparity(world, poses[k], spec.camera, scale);
      write_grid(out_dir / disp_rel, {GridKind::Disparity, disp.grid, 0.0, 0.0});

      manifest.push_back({2 * global, Modality::Lidar, range_rel, poses[k], geotags[k], static_cast<std::uint32_t>(s)});
      manifest.push_back(
          {2 * global + 1, Modality::Camera, disp_rel, poses[k], geotags[k], static_cast<std::uint32_t>(s)});
      summary.frames += 2;
    }
    summary.poses_per_session.push_back(poses.size());

    write_tum(out_dir / ("truth_s" + std::to_string(s) + ".tum"), poses);
    write_tum(out_dir / ("odometry_s" + std::to_string(s) + ".tum"), dead_reckon(poses.front(), rel));
    std::ofstream geo(out_dir / ("geotags_s" + std::to_string(s) + ".csv"));
    if (!geo) fail(ErrorKind::DataFormat, "cannot write geotags under " + out_dir.string());
    geo << "pose_index,geotag_x,geotag_y\n";
    char buf[128];
    for (std::size_t k = 0; k < poses.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%zu,%.9f,%.9f\n", k, geotags[k].x, geotags[k].y);
      geo << buf;
    }
  }
  write_manifest(out_dir / "manifest.csv", manifest);
  std::ofstream os(out_dir / "world.spec");
  os << format_world_spec(spec);
  return summary;
}

LoopScenario make_loop_scenario(const LoopScenarioSpec& spec, std::uint64_t seed) {
  require(spec.poses >= 4 && spec.side > 0.0, "loop scenario: need >= 4 poses and a positive side");
  require(spec.candidates <= spec.poses, "loop scenario: at most one candidate per keyframe");
  SessionSpec square;
  square.waypoints = {{0, 0}, {spec.side, 0}, {spec.side, spec.side}, {0, spec.side}};
  square.closed = true;
  LoopScenario sc;
  sc.truth = sample_path(square, 4.0 * spec.side / static_cast<double>(spec.poses));
  sc.truth.resize(std::min(sc.truth.size(), spec.poses));
  sc.odometry = dead_reckon(sc.truth.front(), corrupt_odometry(sc.truth, spec.heading_noise_deg, derive_seed(seed, 1)));

  std::mt19937_64 rng(derive_seed(seed, 2));
  std::vector<std::size_t> keyframes(sc.truth.size());
  std::iota(keyframes.begin(), keyframes.end(), 0);
  std::shuffle(keyframes.begin(), keyframes.end(), rng);
  keyframes.resize(spec.candidates);
  std::sort(keyframes.begin(), keyframes.end());

  const auto n_false = static_cast<std::size_t>(std::lround(spec.false_fraction * static_cast<double>(spec.candidates)));
  std::vector<bool> corrupt(spec.candidates, false);
  std::fill(corrupt.begin(), corrupt.begin() + static_cast<std::ptrdiff_t>(n_false), true);
  std::shuffle(corrupt.begin(), corrupt.end(), rng);

  std::normal_distribution<double> noise(0.0, spec.geotag_sigma);
  std::uniform_real_distribution<double> desc(0.02, 0.1);
  std::uniform_int_distribution<std::size_t> pick(0, sc.truth.size() - 1);
  for (std::size_t c = 0; c < spec.candidates; ++c) {
    const std::size_t kf = keyframes[c];
    Point2 place = sc.truth[kf].position();
    if (corrupt[c]) {
      // Wrong retrieval: the geotag of some far-away place.
      for (int tries = 0; tries < 1000; ++tries) {
        const Point2 other = sc.truth[pick(rng)].position();
        if (distance(other, place) > spec.false_min_distance) {
          place = other;
          break;
        }
      }
    }
    const double ex = noise(rng), ey = noise(rng);
    const Point2 geotag{place.x + ex, place.y + ey};
    sc.candidates.push_back({kf, geotag, desc(rng)});
    sc.is_true.push_back(distance(geotag, sc.truth[kf].position()) <= spec.true_radius);
  }
  return sc;
}

}  // namespace lc2

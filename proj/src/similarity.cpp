#include "lc2/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "lc2/error.hpp"

namespace lc2 {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

bool Sector::full_disk() const { return half_fov >= kPi; }

bool Sector::contains(const Point2& p) const {
  const double dx = p.x - center.x, dy = p.y - center.y;
  if (dx * dx + dy * dy > radius * radius) return false;
  if (full_disk() || (dx == 0.0 && dy == 0.0)) return true;
  return std::abs(wrap_angle(std::atan2(dy, dx) - bisector)) <= half_fov;
}

double Sector::area() const { return half_fov * radius * radius; }

Sector interest_area(const Pose2& pose, const FrustumSpec& spec) {
  require(spec.horizontal_fov > 0.0 && spec.horizontal_fov <= kTwoPi + 1e-12,
          "interest_area: fov must lie in (0, 2pi]");
  require(spec.max_range >= 0.0, "interest_area: negative range");
  Sector s;
  s.center = pose.position();
  s.bisector = wrap_angle(pose.theta + spec.boresight);
  s.half_fov = std::min(0.5 * spec.horizontal_fov, kPi);
  s.radius = spec.max_range;
  return s;
}

SectorRaster::SectorRaster(const Sector& sector, double pitch) {
  require(pitch > 0.0, "SectorRaster: grid pitch must be positive");
  if (!(sector.radius > 0.0)) fail(ErrorKind::InvalidArgument, "degenerate interest area (zero range)");

  // Bounding box: centre, arc end points, and any circle extreme inside the sector.
  double minx = sector.center.x, maxx = minx, miny = sector.center.y, maxy = miny;
  auto grow = [&](double ang) {
    const double x = sector.center.x + sector.radius * std::cos(ang);
    const double y = sector.center.y + sector.radius * std::sin(ang);
    minx = std::min(minx, x);
    maxx = std::max(maxx, x);
    miny = std::min(miny, y);
    maxy = std::max(maxy, y);
  };
  if (sector.full_disk()) {
    for (int k = 0; k < 4; ++k) grow(k * 0.5 * kPi);
  } else {
    grow(sector.bisector - sector.half_fov);
    grow(sector.bisector + sector.half_fov);
    for (int k = 0; k < 4; ++k) {
      const double ang = k * 0.5 * kPi;
      if (std::abs(wrap_angle(ang - sector.bisector)) <= sector.half_fov) grow(ang);
    }
  }

  auto first_index = [pitch](double lo) { return static_cast<std::int64_t>(std::floor(lo / pitch - 0.5)); };
  auto last_index = [pitch](double hi) { return static_cast<std::int64_t>(std::ceil(hi / pitch - 0.5)); };
  const std::int64_t c_lo = first_index(minx), c_hi = last_index(maxx);
  const std::int64_t r_lo = first_index(miny), r_hi = last_index(maxy);

  row0_ = r_lo;
  spans_.resize(static_cast<std::size_t>(r_hi - r_lo + 1));
  for (std::int64_t r = r_lo; r <= r_hi; ++r) {
    auto& row = spans_[static_cast<std::size_t>(r - r_lo)];
    const double y = (static_cast<double>(r) + 0.5) * pitch;
    std::int64_t open = 0;
    bool inside = false;
    for (std::int64_t c = c_lo; c <= c_hi; ++c) {
      const bool in = sector.contains({(static_cast<double>(c) + 0.5) * pitch, y});
      if (in && !inside) open = c;
      if (!in && inside) row.emplace_back(open, c);
      inside = in;
    }
    if (inside) row.emplace_back(open, c_hi + 1);
    for (const auto& [a, b] : row) count_ += b - a;
  }
}

std::int64_t SectorRaster::overlap(const SectorRaster& other) const {
  const std::int64_t lo = std::max(row0_, other.row0_);
  const std::int64_t hi = std::min(row0_ + static_cast<std::int64_t>(spans_.size()),
                                   other.row0_ + static_cast<std::int64_t>(other.spans_.size()));
  std::int64_t total = 0;
  for (std::int64_t r = lo; r < hi; ++r) {
    const auto& a = spans_[static_cast<std::size_t>(r - row0_)];
    const auto& b = other.spans_[static_cast<std::size_t>(r - other.row0_)];
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      const std::int64_t s = std::max(a[i].first, b[j].first);
      const std::int64_t e = std::min(a[i].second, b[j].second);
      if (e > s) total += e - s;
      if (a[i].second < b[j].second) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  return total;
}

double psi_from_counts(std::int64_t n_a, std::int64_t n_b, std::int64_t n_ab, PsiNorm norm) {
  if (n_a == 0 || n_b == 0) fail(ErrorKind::InvalidArgument, "degree of similarity undefined: empty interest area");
  const double denom = norm == PsiNorm::Min ? static_cast<double>(std::min(n_a, n_b))
                                            : static_cast<double>(n_a + n_b - n_ab);
  return std::clamp(static_cast<double>(n_ab) / denom, 0.0, 1.0);
}

double degree_of_similarity(const Pose2& pose_a, const FrustumSpec& spec_a, const Pose2& pose_b,
                            const FrustumSpec& spec_b, double grid_pitch, PsiNorm norm) {
  require(grid_pitch > 0.0, "degree_of_similarity: grid pitch must be positive");
  const SectorRaster a(interest_area(pose_a, spec_a), grid_pitch);
  const SectorRaster b(interest_area(pose_b, spec_b), grid_pitch);
  return psi_from_counts(a.cell_count(), b.cell_count(), a.overlap(b), norm);
}

namespace {

std::vector<SectorRaster> rasterize_all(const std::vector<SensorView>& views, double pitch) {
  std::vector<SectorRaster> rasters(views.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < views.size(); ++i) {
    rasters[i] = SectorRaster(interest_area(views[i].pose, views[i].spec), pitch);
  }
  return rasters;
}

void row_entries(const std::vector<SensorView>& views, const std::vector<SectorRaster>& rasters, std::size_t i,
                 PsiNorm norm, std::vector<SimilarityEntry>& out) {
  for (std::size_t j = i + 1; j < views.size(); ++j) {
    const double reach = views[i].spec.max_range + views[j].spec.max_range;
    if (distance(views[i].pose.position(), views[j].pose.position()) > reach) continue;
    const std::int64_t n_ab = rasters[i].overlap(rasters[j]);
    if (n_ab == 0) continue;
    out.push_back({i, j, psi_from_counts(rasters[i].cell_count(), rasters[j].cell_count(), n_ab, norm)});
  }
}

}  // namespace

std::vector<SimilarityEntry> pairwise_similarity_table(const std::vector<SensorView>& views, double grid_pitch,
                                                       PsiNorm norm) {
  require(views.size() >= 2, "pairwise_similarity_table: need at least two views");
  require(grid_pitch > 0.0, "pairwise_similarity_table: grid pitch must be positive");
  const auto rasters = rasterize_all(views, grid_pitch);

  std::vector<std::vector<SimilarityEntry>> rows(views.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < views.size(); ++i) row_entries(views, rasters, i, norm, rows[i]);

  std::vector<SimilarityEntry> table;
  for (auto& r : rows) table.insert(table.end(), r.begin(), r.end());
  return table;
}

namespace serial {

std::vector<SimilarityEntry> pairwise_similarity_table(const std::vector<SensorView>& views, double grid_pitch,
                                                       PsiNorm norm) {
  require(views.size() >= 2, "pairwise_similarity_table: need at least two views");
  std::vector<SimilarityEntry> table;
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (std::size_t j = i + 1; j < views.size(); ++j) {
      const double psi =
          degree_of_similarity(views[i].pose, views[i].spec, views[j].pose, views[j].spec, grid_pitch, norm);
      if (psi != 0.0) table.push_back({i, j, psi});
    }
  }
  return table;
}

}  // namespace serial

void write_similarity_csv(const std::filesystem::path& path, const std::vector<SimilarityEntry>& table) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::DataFormat, "cannot open for writing: " + path.string());
  char buf[96];
  for (const auto& e : table) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.6f\n", e.a, e.b, e.psi);
    os << buf;
  }
}

}  // namespace lc2

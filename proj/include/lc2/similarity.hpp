#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "lc2/pose2.hpp"

namespace lc2 {

/// Planar interest area of a sensor: a circular sector. A 2*pi FoV is a full disk.
struct FrustumSpec {
  double horizontal_fov = 0.0;
  double max_range = 0.0;
  double boresight = 0.0;  // offset of the sector bisector from the pose heading
};

struct Sector {
  Point2 center;
  double bisector = 0.0;
  double half_fov = 0.0;
  double radius = 0.0;

  bool full_disk() const;
  bool contains(const Point2& p) const;
  double area() const;
};

Sector interest_area(const Pose2& pose, const FrustumSpec& spec);

enum class PsiNorm { Min, Union };

/// Cells of the global lattice (pitch-aligned, centres at (i+0.5)*pitch) whose centre lies in a
/// sector, stored as per-row column spans.
class SectorRaster {
 public:
  SectorRaster() = default;
  SectorRaster(const Sector& sector, double pitch);

  std::int64_t cell_count() const { return count_; }
  std::int64_t overlap(const SectorRaster& other) const;

 private:
  std::int64_t row0_ = 0;
  std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> spans_;  // half-open [c0, c1)
  std::int64_t count_ = 0;
};

struct SensorView {
  Pose2 pose;
  FrustumSpec spec;
};

double psi_from_counts(std::int64_t n_a, std::int64_t n_b, std::int64_t n_ab, PsiNorm norm);

/// Degree of similarity in [0, 1] from rasterized interest-area overlap.
double degree_of_similarity(const Pose2& pose_a, const FrustumSpec& spec_a, const Pose2& pose_b,
                            const FrustumSpec& spec_b, double grid_pitch, PsiNorm norm = PsiNorm::Min);

struct SimilarityEntry {
  std::size_t a;
  std::size_t b;
  double psi;
};

/// All pairs i < j with psi != 0, ordered by (i, j). Parallel over i; result is order-independent.
std::vector<SimilarityEntry> pairwise_similarity_table(const std::vector<SensorView>& views, double grid_pitch,
                                                       PsiNorm norm = PsiNorm::Min);

namespace serial {
std::vector<SimilarityEntry> pairwise_similarity_table(const std::vector<SensorView>& views, double grid_pitch,
                                                       PsiNorm norm = PsiNorm::Min);
}

void write_similarity_csv(const std::filesystem::path& path, const std::vector<SimilarityEntry>& table);

}  // namespace lc2

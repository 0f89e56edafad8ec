#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lc2/pose2.hpp"

namespace lc2 {

enum class Modality : std::uint8_t { Lidar = 0, Camera = 1 };

struct Descriptor {
  std::uint64_t frame_id = 0;
  Point2 geotag;
  Modality modality = Modality::Lidar;
  std::vector<double> values;
};

/// Ordered, geotagged descriptor store. Entries share one dimension and are unit-norm.
class DescriptorDb {
 public:
  explicit DescriptorDb(std::size_t dim = 0) : dim_(dim) {}

  void insert(Descriptor d);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Descriptor& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Descriptor>& entries() const { return entries_; }
  std::size_t count(Modality m) const;

 private:
  std::size_t dim_;
  std::vector<Descriptor> entries_;
};

struct MatchResult {
  std::uint64_t query_id = 0;
  std::vector<std::size_t> indices;  // database positions, closest first
  std::vector<double> distances;     // ascending
};

double euclidean(const std::vector<double>& a, const std::vector<double>& b);

/// Exact top-N by exhaustive scan; ties go to the lower database index.
MatchResult knn_query(const DescriptorDb& db, const Descriptor& query, std::size_t n);

namespace serial {
MatchResult knn_query(const DescriptorDb& db, const Descriptor& query, std::size_t n);
}

inline constexpr double kDefaultGeoThreshold = 10.0;

/// Fraction of queries whose top-N holds an entry within `geo_threshold` metres of the query geotag.
double recall_at_n(const DescriptorDb& db, const std::vector<Descriptor>& queries, std::size_t n,
                   double geo_threshold = kDefaultGeoThreshold);

/// recall_at_n for every N in [1, max_n], computed from one ranking per query.
std::vector<double> recall_curve(const DescriptorDb& db, const std::vector<Descriptor>& queries, std::size_t max_n,
                                 double geo_threshold = kDefaultGeoThreshold);

std::size_t top1pct_n(std::size_t db_size);
double recall_at_top1pct(const DescriptorDb& db, const std::vector<Descriptor>& queries,
                         double geo_threshold = kDefaultGeoThreshold);

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

/// Top-1 match declared positive iff its distance <= threshold. Empty declared set has precision 1.
std::vector<PrPoint> precision_recall_curve(const DescriptorDb& db, const std::vector<Descriptor>& queries,
                                            double geo_threshold, std::size_t num_thresholds);

/// Same metric at explicit thresholds.
std::vector<PrPoint> precision_recall_at(const DescriptorDb& db, const std::vector<Descriptor>& queries,
                                         double geo_threshold, const std::vector<double>& thresholds);

void write_descriptors(const std::filesystem::path& path, const std::vector<Descriptor>& descriptors);
std::vector<Descriptor> read_descriptors(const std::filesystem::path& path);

}  // namespace lc2

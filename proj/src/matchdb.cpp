#include "lc2/matchdb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "lc2/binary_io.hpp"
#include "lc2/error.hpp"

namespace lc2 {

namespace {
// Descriptors read back from disk carry float32 rounding.
constexpr double kUnitNormTolerance = 1e-4;
}  // namespace

void DescriptorDb::insert(Descriptor d) {
  if (dim_ == 0 && entries_.empty()) dim_ = d.values.size();
  if (d.values.size() != dim_) fail(ErrorKind::InvalidArgument, "descriptor dimension mismatch");
  double sq = 0.0;
  for (double v : d.values) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "descriptor has non-finite values");
    sq += v * v;
  }
  if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) {
    fail(ErrorKind::InvalidArgument, "descriptor is not unit-norm");
  }
  entries_.push_back(std::move(d));
}

std::size_t DescriptorDb::count(Modality m) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [m](const Descriptor& d) { return d.modality == m; }));
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

void check_query(const DescriptorDb& db, const Descriptor& query, std::size_t n) {
  if (db.empty()) fail(ErrorKind::InvalidArgument, "knn_query: empty database");
  if (query.values.size() != db.dim()) fail(ErrorKind::InvalidArgument, "knn_query: dimension mismatch");
  require(n >= 1 && n <= db.size(), "knn_query: N must be in [1, |db|]");
}

MatchResult select_top(const std::vector<double>& dist, std::uint64_t query_id, std::size_t n) {
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  auto closer = [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), closer);
  MatchResult r;
  r.query_id = query_id;
  r.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i : r.indices) r.distances.push_back(dist[i]);
  return r;
}

}  // namespace

MatchResult knn_query(const DescriptorDb& db, const Descriptor& query, std::size_t n) {
  check_query(db, query, n);
  std::vector<double> dist(db.size());
  const auto& entries = db.entries();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < entries.size(); ++i) dist[i] = euclidean(entries[i].values, query.values);
  return select_top(dist, query.frame_id, n);
}

namespace serial {

MatchResult knn_query(const DescriptorDb& db, const Descriptor& query, std::size_t n) {
  check_query(db, query, n);
  std::vector<double> dist;
  dist.reserve(db.size());
  for (const auto& e : db.entries()) dist.push_back(euclidean(e.values, query.values));
  return select_top(dist, query.frame_id, n);
}

}  // namespace serial

namespace {

bool has_ground_truth(const DescriptorDb& db, const Descriptor& q, double geo_threshold) {
  return std::any_of(db.entries().begin(), db.entries().end(),
                     [&](const Descriptor& e) { return distance(e.geotag, q.geotag) <= geo_threshold; });
}

// Rank (0-based) of the first geographically correct entry, or |db| if none.
std::vector<std::size_t> first_correct_ranks(const DescriptorDb& db, const std::vector<Descriptor>& queries,
                                             std::size_t max_n, double geo_threshold) {
  std::vector<std::size_t> ranks(queries.size(), db.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const MatchResult m = knn_query(db, queries[q], max_n);
    for (std::size_t r = 0; r < m.indices.size(); ++r) {
      if (distance(db[m.indices[r]].geotag, queries[q].geotag) <= geo_threshold) {
        ranks[q] = r;
        break;
      }
    }
  }
  return ranks;
}

}  // namespace

std::vector<double> recall_curve(const DescriptorDb& db, const std::vector<Descriptor>& queries, std::size_t max_n,
                                 double geo_threshold) {
  require(!queries.empty(), "recall: no queries");
  const auto ranks = first_correct_ranks(db, queries, max_n, geo_threshold);
  std::vector<double> curve(max_n, 0.0);
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [n](std::size_t r) { return r < n; });
    curve[n - 1] = static_cast<double>(hits) / static_cast<double>(queries.size());
  }
  return curve;
}

double recall_at_n(const DescriptorDb& db, const std::vector<Descriptor>& queries, std::size_t n,
                   double geo_threshold) {
  return recall_curve(db, queries, n, geo_threshold).back();
}

std::size_t top1pct_n(std::size_t db_size) {
  require(db_size >= 1, "top-1% recall needs a non-empty database");
  return (db_size + 99) / 100;
}

double recall_at_top1pct(const DescriptorDb& db, const std::vector<Descriptor>& queries, double geo_threshold) {
  return recall_at_n(db, queries, top1pct_n(db.size()), geo_threshold);
}

std::vector<PrPoint> precision_recall_at(const DescriptorDb& db, const std::vector<Descriptor>& queries,
                                         double geo_threshold, const std::vector<double>& thresholds) {
  struct Top1 {
    double dist;
    bool correct;
    bool has_gt;
  };
  std::vector<Top1> top(queries.size());
  std::size_t with_gt = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const MatchResult m = knn_query(db, queries[q], 1);
    top[q] = {m.distances[0], distance(db[m.indices[0]].geotag, queries[q].geotag) <= geo_threshold,
              has_ground_truth(db, queries[q], geo_threshold)};
    if (top[q].has_gt) ++with_gt;
  }
  std::vector<PrPoint> curve;
  for (double t : thresholds) {
    std::size_t declared = 0, correct = 0;
    for (const Top1& r : top) {
      if (r.dist <= t) {
        ++declared;
        if (r.correct) ++correct;
      }
    }
    const double precision = declared == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(declared);
    const double recall = with_gt == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(with_gt);
    curve.push_back({t, precision, recall});
  }
  return curve;
}

std::vector<PrPoint> precision_recall_curve(const DescriptorDb& db, const std::vector<Descriptor>& queries,
                                            double geo_threshold, std::size_t num_thresholds) {
  require(num_thresholds >= 1, "precision_recall_curve: need at least one threshold");
  require(!queries.empty(), "precision_recall_curve: no queries");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& q : queries) {
    const double d = knn_query(db, q, 1).distances[0];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  std::vector<double> thresholds;
  if (num_thresholds == 1) {
    thresholds.push_back(hi);
  } else {
    for (std::size_t k = 0; k < num_thresholds; ++k) {
      thresholds.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(num_thresholds - 1));
    }
    thresholds.back() = hi;
  }
  return precision_recall_at(db, queries, geo_threshold, thresholds);
}

void write_descriptors(const std::filesystem::path& path, const std::vector<Descriptor>& descriptors) {
  const std::size_t dim = descriptors.empty() ? 0 : descriptors.front().values.size();
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::DataFormat, "cannot open for writing: " + path.string());
  io::write_magic(os, "LC2D");
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(descriptors.size()));
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(dim));
  for (const auto& d : descriptors) {
    if (d.values.size() != dim) fail(ErrorKind::InvalidArgument, "write_descriptors: mixed dimensions");
    io::write_pod<std::uint64_t>(os, d.frame_id);
    io::write_pod<double>(os, d.geotag.x);
    io::write_pod<double>(os, d.geotag.y);
    io::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(d.modality));
    for (double v : d.values) io::write_pod<float>(os, static_cast<float>(v));
  }
}

std::vector<Descriptor> read_descriptors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::DataFormat, "cannot open: " + path.string());
  io::expect_magic(is, "LC2D");
  const auto count = io::read_pod<std::uint32_t>(is);
  const auto dim = io::read_pod<std::uint32_t>(is);
  std::vector<Descriptor> out(count);
  for (auto& d : out) {
    d.frame_id = io::read_pod<std::uint64_t>(is);
    d.geotag.x = io::read_pod<double>(is);
    d.geotag.y = io::read_pod<double>(is);
    const auto m = io::read_pod<std::uint8_t>(is);
    if (m > 1) fail(ErrorKind::DataFormat, "descriptor file: unknown modality");
    d.modality = static_cast<Modality>(m);
    d.values.resize(dim);
    for (double& v : d.values) v = io::read_pod<float>(is);
  }
  return out;
}

}  // namespace lc2

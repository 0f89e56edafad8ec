#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lc2/matchdb.hpp"
#include "lc2/pose2.hpp"

namespace lc2 {

/// One frame of a dataset. `grid_path` is relative to the manifest's directory.
struct ManifestEntry {
  std::uint64_t frame_id = 0;
  Modality modality = Modality::Lidar;
  std::string grid_path;
  Pose2 pose;
  Point2 geotag;
  std::uint32_t session = 0;
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

const char* modality_name(Modality m);
Modality parse_modality(const std::string& s);

}  // namespace lc2

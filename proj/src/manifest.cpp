#include "lc2/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lc2/error.hpp"

namespace lc2 {

const char* modality_name(Modality m) { return m == Modality::Lidar ? "lidar" : "camera"; }

Modality parse_modality(const std::string& s) {
  if (s == "lidar") return Modality::Lidar;
  if (s == "camera") return Modality::Camera;
  fail(ErrorKind::DataFormat, "unknown modality '" + s + "'");
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::DataFormat, "cannot open for writing: " + path.string());
  os << "frame_id,modality,grid_path,pose_x,pose_y,pose_theta,geotag_x,geotag_y,session\n";
  char buf[512];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof(buf), "%llu,%s,%s,%.9f,%.9f,%.9f,%.9f,%.9f,%u\n",
                  static_cast<unsigned long long>(e.frame_id), modality_name(e.modality), e.grid_path.c_str(),
                  e.pose.x, e.pose.y, e.pose.theta, e.geotag.x, e.geotag.y, e.session);
    os << buf;
  }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::DataFormat, "cannot open manifest: " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("frame_id,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 9) {
      fail(ErrorKind::DataFormat, path.string() + ":" + std::to_string(lineno) + ": expected 9 fields");
    }
    try {
      ManifestEntry e;
      e.frame_id = std::stoull(f[0]);
      e.modality = parse_modality(f[1]);
      e.grid_path = f[2];
      e.pose = Pose2(std::stod(f[3]), std::stod(f[4]), std::stod(f[5]));
      e.geotag = {std::stod(f[6]), std::stod(f[7])};
      e.session = static_cast<std::uint32_t>(std::stoul(f[8]));
      out.push_back(std::move(e));
    } catch (const std::logic_error&) {
      fail(ErrorKind::DataFormat, path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return out;
}

}  // namespace lc2

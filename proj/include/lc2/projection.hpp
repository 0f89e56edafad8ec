#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace lc2 {

inline constexpr double kSentinel = std::numeric_limits<double>::quiet_NaN();
inline constexpr float kDiskSentinel = -1.0f;

inline bool is_sentinel(double v) { return std::isnan(v); }

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct PointCloud {
  std::vector<Point3> points;
};

/// Dense row-major H x W grid of depth-like scalars; NaN marks "no value".
struct Grid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> cells;

  Grid() = default;
  Grid(std::size_t h, std::size_t w, double fill = kSentinel) : height(h), width(w), cells(h * w, fill) {}

  double& at(std::size_t row, std::size_t col) { return cells[row * width + col]; }
  double at(std::size_t row, std::size_t col) const { return cells[row * width + col]; }
  std::size_t size() const { return cells.size(); }
};

/// Azimuth span covered by an image, in the sensor frame. Width 2*pi is a full panorama.
struct AzimuthInterval {
  double center = 0.0;
  double width = 2.0 * 3.14159265358979323846;
};

struct RangeImage {
  Grid grid;
  double fov_up = 0.0;
  double fov_total = 0.0;
  AzimuthInterval azimuth;
};

struct DisparityImage {
  Grid grid;
};

struct CropSpec {
  int crop_index = 0;
  std::size_t start_col = 0;
  std::size_t width = 0;
};

inline constexpr int kNumCrops = 8;

/// Projects a cloud onto an H x W spherical grid. Stores Euclidean range; nearest point wins.
RangeImage project_cloud(const PointCloud& cloud, std::size_t height, std::size_t width, double fov_up,
                         double fov_total);

/// Angles (azimuth, asin elevation) of a pixel centre: the inverse of the projection.
struct PixelAngles {
  double azimuth;
  double elevation;
};
PixelAngles pixel_center_angles(std::size_t row, std::size_t col, std::size_t height, std::size_t width,
                                double fov_up, double fov_total);

/// Azimuth of column centre `col` (may be fractional) for a panorama of `width` columns.
double column_azimuth(double col, std::size_t width);

Grid disparity_to_depth(const DisparityImage& img, double scale);
DisparityImage depth_to_disparity(const Grid& depth, double scale);

/// Default crop i: starts at column i*W/8 and spans `width` columns.
CropSpec default_crop(int crop_index, std::size_t panorama_width, std::size_t width);

/// Number of columns spanning a horizontal FoV of `fov` radians on a `panorama_width` panorama.
std::size_t columns_for_fov(double fov, std::size_t panorama_width);

/// Index of the default crop whose centre azimuth is closest to `boresight`.
int crop_for_boresight(double boresight, std::size_t panorama_width, std::size_t width);

RangeImage crop_range_image(const RangeImage& img, const CropSpec& spec);

DisparityImage scale_augment(const DisparityImage& img, double r_percent, std::uint64_t seed);

/// Bilinear resize treating sentinel cells as missing.
Grid resize_to_input(const Grid& grid, std::size_t out_h, std::size_t out_w);

// File formats.
enum class GridKind : std::uint8_t { Range = 0, Disparity = 1, Depth = 2 };

struct GridFile {
  GridKind kind = GridKind::Range;
  Grid grid;
  double fov_up = 0.0;
  double fov_total = 0.0;
};

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_cloud(const std::filesystem::path& path);

void write_grid(const std::filesystem::path& path, const GridFile& file);
GridFile read_grid(const std::filesystem::path& path);

}  // namespace lc2

#include "lc2/projection.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <random>

#include "lc2/binary_io.hpp"
#include "lc2/error.hpp"
#include "lc2/pose2.hpp"

namespace lc2 {

namespace {
constexpr double kPi = std::numbers::pi;
}

RangeImage project_cloud(const PointCloud& cloud, std::size_t height, std::size_t width, double fov_up,
                         double fov_total) {
  require(height >= 1 && width >= 1, "project_cloud: H and W must be >= 1");
  require(fov_up > 0.0 && fov_total > 0.0 && fov_up <= fov_total, "project_cloud: need 0 < F_up <= F");

  RangeImage img;
  img.grid = Grid(height, width);
  img.fov_up = fov_up;
  img.fov_total = fov_total;
  img.azimuth = {0.0, 2.0 * kPi};

  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  const double fov_down = fov_up - fov_total;

  for (const Point3& p : cloud.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      fail(ErrorKind::InvalidArgument, "project_cloud: non-finite point");
    }
    const double d = std::sqrt(p.x * p.x + p.y * p.y);
    if (d == 0.0) continue;
    const double true_elevation = std::atan2(p.z, d);
    if (true_elevation < fov_down || true_elevation > fov_up) continue;

    const double ratio = std::clamp(p.z / d, -1.0, 1.0);
    const double uf = 0.5 * w * (1.0 - std::atan2(p.y, p.x) / kPi);
    const double vf = h * (fov_up - std::asin(ratio)) / fov_total;
    if (!(vf >= 0.0 && vf < h)) continue;

    auto u = static_cast<std::size_t>(std::floor(uf));
    if (u >= width) u -= width;  // atan2 == -pi lands on u == W
    const auto v = static_cast<std::size_t>(std::floor(vf));

    const double range = std::sqrt(d * d + p.z * p.z);
    double& cell = img.grid.at(v, u);
    if (is_sentinel(cell) || range < cell) cell = range;
  }
  return img;
}

PixelAngles pixel_center_angles(std::size_t row, std::size_t col, std::size_t height, std::size_t width,
                                double fov_up, double fov_total) {
  const double azimuth = column_azimuth(static_cast<double>(col) + 0.5, width);
  const double elevation = fov_up - (static_cast<double>(row) + 0.5) * fov_total / static_cast<double>(height);
  return {azimuth, elevation};
}

double column_azimuth(double col, std::size_t width) {
  return wrap_angle(kPi * (1.0 - 2.0 * col / static_cast<double>(width)));
}

Grid disparity_to_depth(const DisparityImage& img, double scale) {
  require(scale > 0.0, "disparity_to_depth: scale must be positive");
  Grid out(img.grid.height, img.grid.width);
  for (std::size_t i = 0; i < img.grid.size(); ++i) {
    const double disp = img.grid.cells[i];
    out.cells[i] = (is_sentinel(disp) || disp == 0.0) ? kSentinel : scale / disp;
  }
  return out;
}

DisparityImage depth_to_disparity(const Grid& depth, double scale) {
  require(scale > 0.0, "depth_to_disparity: scale must be positive");
  DisparityImage out{Grid(depth.height, depth.width)};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double z = depth.cells[i];
    out.grid.cells[i] = (is_sentinel(z) || z <= 0.0) ? kSentinel : scale / z;
  }
  return out;
}

CropSpec default_crop(int crop_index, std::size_t panorama_width, std::size_t width) {
  require(crop_index >= 0 && crop_index < kNumCrops, "default_crop: index must be in [0, 8)");
  return {crop_index, static_cast<std::size_t>(crop_index) * panorama_width / kNumCrops, width};
}

std::size_t columns_for_fov(double fov, std::size_t panorama_width) {
  const auto cols = static_cast<std::size_t>(std::lround(fov / (2.0 * kPi) * static_cast<double>(panorama_width)));
  return std::clamp<std::size_t>(cols, 1, panorama_width);
}

int crop_for_boresight(double boresight, std::size_t panorama_width, std::size_t width) {
  int best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kNumCrops; ++i) {
    const CropSpec c = default_crop(i, panorama_width, width);
    const double center =
        column_azimuth(static_cast<double>(c.start_col) + 0.5 * static_cast<double>(c.width), panorama_width);
    const double err = std::abs(wrap_angle(center - boresight));
    if (err < best_err - 1e-12) {
      best_err = err;
      best = i;
    }
  }
  return best;
}

RangeImage crop_range_image(const RangeImage& img, const CropSpec& spec) {
  const std::size_t W = img.grid.width;
  require(spec.width >= 1 && spec.width <= W, "crop_range_image: crop width exceeds panorama width");
  require(spec.start_col < W, "crop_range_image: start column out of range");

  RangeImage out;
  out.fov_up = img.fov_up;
  out.fov_total = img.fov_total;
  out.grid = Grid(img.grid.height, spec.width);
  for (std::size_t r = 0; r < img.grid.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      out.grid.at(r, c) = img.grid.at(r, (spec.start_col + c) % W);
    }
  }
  const double center_col = static_cast<double>(spec.start_col) + 0.5 * static_cast<double>(spec.width);
  out.azimuth.center = column_azimuth(center_col, W);
  out.azimuth.width = 2.0 * kPi * static_cast<double>(spec.width) / static_cast<double>(W);
  return out;
}

DisparityImage scale_augment(const DisparityImage& img, double r_percent, std::uint64_t seed) {
  require(r_percent >= 0.0 && r_percent < 100.0, "scale_augment: r must be in [0, 100)");
  if (r_percent == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(1.0 - r_percent / 100.0, 1.0 + r_percent / 100.0);
  const double c = dist(rng);
  DisparityImage out = img;
  for (double& v : out.grid.cells) {
    if (!is_sentinel(v)) v *= c;
  }
  return out;
}

Grid resize_to_input(const Grid& grid, std::size_t out_h, std::size_t out_w) {
  require(out_h >= 1 && out_w >= 1, "resize_to_input: output dims must be >= 1");
  require(grid.height >= 1 && grid.width >= 1, "resize_to_input: empty input grid");
  if (out_h == grid.height && out_w == grid.width) return grid;

  // Half-pixel centre convention, clamped at the borders.
  auto source = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
    const double s = (static_cast<double>(i) + 0.5) * static_cast<double>(n_in) / static_cast<double>(n_out) - 0.5;
    const double clamped = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(clamped));
    const std::size_t i1 = std::min(i0 + 1, n_in - 1);
    return std::tuple{i0, i1, clamped - static_cast<double>(i0)};
  };

  Grid out(out_h, out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const auto [r0, r1, fr] = source(r, out_h, grid.height);
    for (std::size_t c = 0; c < out_w; ++c) {
      const auto [c0, c1, fc] = source(c, out_w, grid.width);
      const double vals[4] = {grid.at(r0, c0), grid.at(r0, c1), grid.at(r1, c0), grid.at(r1, c1)};
      const double wts[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
      double acc = 0.0, wsum = 0.0;
      bool any_valid = false;
      for (int k = 0; k < 4; ++k) {
        if (is_sentinel(vals[k])) continue;
        any_valid = true;
        acc += wts[k] * vals[k];
        wsum += wts[k];
      }
      if (!any_valid) continue;
      if (wsum > 0.0) {
        out.at(r, c) = acc / wsum;
      } else {
        // Only zero-weight neighbours are valid; fall back to their plain mean.
        double s = 0.0;
        int n = 0;
        for (double v : vals) {
          if (!is_sentinel(v)) {
            s += v;
            ++n;
          }
        }
        out.at(r, c) = s / n;
      }
    }
  }
  return out;
}

// --- files -----------------------------------------------------------------

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::DataFormat, "cannot open for writing: " + path.string());
  io::write_magic(os, "LC2P");
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(cloud.points.size()));
  for (const Point3& p : cloud.points) {
    io::write_pod<float>(os, static_cast<float>(p.x));
    io::write_pod<float>(os, static_cast<float>(p.y));
    io::write_pod<float>(os, static_cast<float>(p.z));
  }
}

PointCloud read_cloud(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::DataFormat, "cannot open: " + path.string());
  io::expect_magic(is, "LC2P");
  const auto count = io::read_pod<std::uint32_t>(is);
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto x = io::read_pod<float>(is);
    const auto y = io::read_pod<float>(is);
    const auto z = io::read_pod<float>(is);
    cloud.points.push_back({x, y, z});
  }
  return cloud;
}

void write_grid(const std::filesystem::path& path, const GridFile& file) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::DataFormat, "cannot open for writing: " + path.string());
  io::write_magic(os, "LC2I");
  io::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(file.kind));
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(file.grid.height));
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(file.grid.width));
  io::write_pod<float>(os, static_cast<float>(file.fov_up));
  io::write_pod<float>(os, static_cast<float>(file.fov_total));
  for (double v : file.grid.cells) {
    io::write_pod<float>(os, is_sentinel(v) ? kDiskSentinel : static_cast<float>(v));
  }
}

GridFile read_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::DataFormat, "cannot open: " + path.string());
  io::expect_magic(is, "LC2I");
  GridFile f;
  const auto kind = io::read_pod<std::uint8_t>(is);
  if (kind > 2) fail(ErrorKind::DataFormat, "unknown grid kind in " + path.string());
  f.kind = static_cast<GridKind>(kind);
  const auto h = io::read_pod<std::uint32_t>(is);
  const auto w = io::read_pod<std::uint32_t>(is);
  f.fov_up = io::read_pod<float>(is);
  f.fov_total = io::read_pod<float>(is);
  f.grid = Grid(h, w);
  for (double& v : f.grid.cells) {
    const auto raw = io::read_pod<float>(is);
    v = (raw == kDiskSentinel) ? kSentinel : static_cast<double>(raw);
  }
  return f;
}

}  // namespace lc2

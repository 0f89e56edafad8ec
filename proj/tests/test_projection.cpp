#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "lc2/error.hpp"
#include "lc2/pose2.hpp"
#include "lc2/projection.hpp"
#include "support.hpp"

using namespace lc2;
using lc2::test::uniform;

namespace {

constexpr double kPi = std::numbers::pi;

// Index of the non-sentinel cell of a single-point image.
std::pair<std::size_t, std::size_t> only_cell(const Grid& g) {
  std::pair<std::size_t, std::size_t> found{g.height, g.width};
  int n = 0;
  for (std::size_t r = 0; r < g.height; ++r)
    for (std::size_t c = 0; c < g.width; ++c)
      if (!is_sentinel(g.at(r, c))) {
        found = {r, c};
        ++n;
      }
  REQUIRE(n == 1);
  return found;
}

RangeImage numbered_panorama(std::size_t h, std::size_t w) {
  RangeImage img;
  img.grid = Grid(h, w);
  for (std::size_t i = 0; i < img.grid.size(); ++i) img.grid.cells[i] = static_cast<double>(i + 1);
  img.fov_up = 0.2;
  img.fov_total = 0.4;
  return img;
}

}  // namespace

TEST_SUITE("projection") {

TEST_CASE("point on the x axis lands at the image centre") {
  PointCloud c{{{1.0, 0.0, 0.0}}};
  RangeImage img = project_cloud(c, 64, 1024, 0.2, 0.4);
  auto [v, u] = only_cell(img.grid);
  CHECK(u == 512);
  CHECK(v == 32);
  CHECK(img.grid.at(v, u) == doctest::Approx(1.0));
}

TEST_CASE("point on the y axis lands a quarter turn left of centre") {
  PointCloud c{{{0.0, 1.0, 0.0}}};
  RangeImage img = project_cloud(c, 64, 1024, 0.2, 0.4);
  CHECK(only_cell(img.grid).second == 256);
}

TEST_CASE("stored value is the Euclidean range") {
  PointCloud c{{{3.0, 0.0, 0.4}}};
  RangeImage img = project_cloud(c, 32, 512, 0.3, 0.6);
  auto [v, u] = only_cell(img.grid);
  CHECK(img.grid.at(v, u) == doctest::Approx(std::sqrt(9.0 + 0.16)).epsilon(1e-12));
}

TEST_CASE("round trip through pixel centres stays within one pixel pitch") {
  std::mt19937_64 rng(11);
  const std::size_t H = 32, W = 512;
  const double fov_up = 15.0 * kPi / 180.0, fov = 30.0 * kPi / 180.0;
  for (int i = 0; i < 1000; ++i) {
    const double az = uniform(rng, -kPi, kPi);
    const double el = uniform(rng, fov_up - fov + 1e-9, fov_up - 1e-9);
    // Elevation in the projection's convention, asin(z / d) with d the horizontal distance.
    const double d = uniform(rng, 1.0, 80.0);
    PointCloud c{{{d * std::cos(az), d * std::sin(az), d * std::sin(el)}}};
    RangeImage img = project_cloud(c, H, W, fov_up, fov);
    auto [v, u] = only_cell(img.grid);
    PixelAngles a = pixel_center_angles(v, u, H, W, fov_up, fov);
    CHECK(std::abs(wrap_angle(a.azimuth - az)) <= 2.0 * kPi / W);
    CHECK(std::abs(a.elevation - el) <= fov / H);
  }
}

TEST_CASE("nearest point wins on collisions") {
  PointCloud c{{{5.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, {9.0, 0.0, 0.0}}};
  RangeImage img = project_cloud(c, 16, 128, 0.2, 0.4);
  auto [v, u] = only_cell(img.grid);
  CHECK(img.grid.at(v, u) == doctest::Approx(2.0));
}

TEST_CASE("collision rule holds for random clouds") {
  std::mt19937_64 rng(5);
  PointCloud c;
  for (int i = 0; i < 5000; ++i) c.points.push_back({uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -1, 1)});
  const std::size_t H = 8, W = 32;
  RangeImage img = project_cloud(c, H, W, 0.3, 0.6);
  Grid best(H, W);
  for (const Point3& p : c.points) {
    PointCloud one{{p}};
    RangeImage single = project_cloud(one, H, W, 0.3, 0.6);
    for (std::size_t i = 0; i < single.grid.size(); ++i) {
      double v = single.grid.cells[i];
      if (is_sentinel(v)) continue;
      if (is_sentinel(best.cells[i]) || v < best.cells[i]) best.cells[i] = v;
    }
  }
  for (std::size_t i = 0; i < best.size(); ++i) {
    CHECK(is_sentinel(best.cells[i]) == is_sentinel(img.grid.cells[i]));
    if (!is_sentinel(best.cells[i])) CHECK(best.cells[i] == img.grid.cells[i]);
    if (!is_sentinel(img.grid.cells[i])) CHECK(img.grid.cells[i] > 0.0);
  }
}

TEST_CASE("points outside the vertical FoV or on the axis are dropped") {
  PointCloud c{{{1.0, 0.0, 5.0}, {1.0, 0.0, -5.0}, {0.0, 0.0, 1.0}}};
  RangeImage img = project_cloud(c, 16, 64, 0.2, 0.4);
  for (double v : img.grid.cells) CHECK(is_sentinel(v));
}

TEST_CASE("empty cloud gives an all-sentinel image; non-finite points are rejected") {
  RangeImage img = project_cloud({}, 4, 8, 0.1, 0.2);
  for (double v : img.grid.cells) CHECK(is_sentinel(v));
  PointCloud bad{{{std::nan(""), 0.0, 0.0}}};
  CHECK_THROWS_AS(project_cloud(bad, 4, 8, 0.1, 0.2), Error);
  CHECK_THROWS_AS(project_cloud({}, 4, 8, 0.3, 0.2), Error);
}

TEST_CASE("disparity and depth invert each other") {
  DisparityImage d{Grid(1, 3)};
  d.grid.cells = {0.5, 0.0, kSentinel};
  Grid depth = disparity_to_depth(d, 1.0);
  CHECK(depth.cells[0] == 2.0);
  CHECK(is_sentinel(depth.cells[1]));
  CHECK(is_sentinel(depth.cells[2]));
  CHECK_THROWS_AS(disparity_to_depth(d, 0.0), Error);

  std::mt19937_64 rng(3);
  Grid g(7, 9);
  for (double& v : g.cells) v = uniform(rng, 0.1, 100.0);
  Grid back = disparity_to_depth(depth_to_disparity(g, 2.5), 2.5);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(back.cells[i] - g.cells[i]) <= 1e-12 * g.cells[i]);
}

TEST_CASE("default crops start at i*W/8 and wrap") {
  RangeImage pano = numbered_panorama(2, 1024);
  CropSpec c0 = default_crop(0, 1024, 256);
  CHECK(c0.start_col == 0);
  CropSpec c4 = default_crop(4, 1024, 256);
  CHECK(c4.start_col == 512);
  RangeImage crop7 = crop_range_image(pano, default_crop(7, 1024, 256));
  REQUIRE(crop7.grid.width == 256);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 256; ++c) CHECK(crop7.grid.at(r, c) == pano.grid.at(r, (896 + c) % 1024));
  CHECK_THROWS_AS(crop_range_image(pano, {0, 0, 1025}), Error);
  CHECK_THROWS_AS(default_crop(8, 1024, 256), Error);
}

TEST_CASE("non-overlapping parts of the eight crops rebuild the panorama") {
  RangeImage pano = numbered_panorama(3, 512);
  const std::size_t width = columns_for_fov(kPi / 2, 512);
  CHECK(width == 128);
  Grid rebuilt(3, 512);
  for (int i = 0; i < kNumCrops; ++i) {
    CropSpec s = default_crop(i, 512, width);
    RangeImage crop = crop_range_image(pano, s);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 512 / kNumCrops; ++c) rebuilt.at(r, s.start_col + c) = crop.grid.at(r, c);
  }
  for (std::size_t i = 0; i < pano.grid.size(); ++i) CHECK(rebuilt.cells[i] == pano.grid.cells[i]);
}

TEST_CASE("crop metadata records the azimuth interval; forward boresight selects crop 3") {
  RangeImage pano = numbered_panorama(1, 512);
  RangeImage crop = crop_range_image(pano, default_crop(3, 512, 128));
  CHECK(crop.azimuth.center == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(crop.azimuth.width == doctest::Approx(kPi / 2));
  CHECK(crop_for_boresight(0.0, 512, 128) == 3);
  CHECK(crop_for_boresight(kPi / 2, 512, 128) == 1);
}

TEST_CASE("scale augmentation multiplies valid cells by one constant") {
  DisparityImage d{Grid(4, 5)};
  std::mt19937_64 rng(9);
  for (double& v : d.grid.cells) v = uniform(rng, 0.01, 1.0);
  d.grid.cells[3] = kSentinel;
  DisparityImage same = scale_augment(d, 0.0, 1);
  for (std::size_t i = 0; i < d.grid.size(); ++i)
    CHECK((is_sentinel(same.grid.cells[i]) ? is_sentinel(d.grid.cells[i]) : same.grid.cells[i] == d.grid.cells[i]));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    DisparityImage a = scale_augment(d, 20.0, seed);
    DisparityImage b = scale_augment(d, 20.0, seed);
    const double c = a.grid.cells[0] / d.grid.cells[0];
    CHECK(c >= 0.8);
    CHECK(c <= 1.2);
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
      if (is_sentinel(d.grid.cells[i])) {
        CHECK(is_sentinel(a.grid.cells[i]));
        continue;
      }
      CHECK(a.grid.cells[i] == b.grid.cells[i]);
      CHECK(a.grid.cells[i] / d.grid.cells[i] == doctest::Approx(c).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(scale_augment(d, 100.0, 1), Error);
}

TEST_CASE("bilinear resize") {
  Grid g(2, 2);
  g.cells = {1, 3, 1, 3};
  Grid out = resize_to_input(g, 2, 3);
  CHECK(out.at(0, 1) == doctest::Approx(2.0));
  CHECK(out.at(1, 1) == doctest::Approx(2.0));

  Grid same = resize_to_input(g, 2, 2);
  CHECK(same.cells == g.cells);

  Grid constant(5, 7, 4.25);
  Grid big = resize_to_input(constant, 13, 3);
  for (double v : big.cells) CHECK(v == doctest::Approx(4.25));
}

TEST_CASE("resize treats sentinels as missing") {
  Grid g(2, 2);
  g.cells = {2.0, kSentinel, kSentinel, kSentinel};
  Grid out = resize_to_input(g, 4, 4);
  CHECK(out.at(0, 0) == doctest::Approx(2.0));
  // Cells whose four neighbours are all sentinels stay sentinel.
  CHECK(is_sentinel(out.at(3, 3)));
  for (double v : out.cells)
    if (!is_sentinel(v)) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("cloud and grid files round trip; sentinel stored as -1") {
  lc2::test::TempDir dir("proj");
  PointCloud c{{{1.5, -2.0, 0.25}, {3.0, 4.0, -1.0}}};
  write_cloud(dir / "c.lc2p", c);
  PointCloud back = read_cloud(dir / "c.lc2p");
  REQUIRE(back.points.size() == 2);
  CHECK(back.points[1].y == 4.0f);

  GridFile f{GridKind::Disparity, Grid(2, 3), 0.0, 0.0};
  f.grid.cells = {0.5, kSentinel, 0.25, 1.0, 2.0, kSentinel};
  write_grid(dir / "g.lc2i", f);
  GridFile g = read_grid(dir / "g.lc2i");
  CHECK(g.kind == GridKind::Disparity);
  CHECK(g.grid.height == 2);
  CHECK(g.grid.width == 3);
  CHECK(is_sentinel(g.grid.cells[1]));
  CHECK(g.grid.cells[4] == 2.0);

  std::ifstream raw(dir / "g.lc2i", std::ios::binary);
  raw.seekg(4 + 1 + 4 + 4 + 8 + 4);
  float stored = 0;
  raw.read(reinterpret_cast<char*>(&stored), sizeof stored);
  CHECK(stored == -1.0f);
}

TEST_CASE("malformed files are format errors") {
  lc2::test::TempDir dir("projbad");
  {
    std::ofstream f(dir / "bad.lc2i", std::ios::binary);
    f << "NOPE";
  }
  try {
    read_grid(dir / "bad.lc2i");
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DataFormat);
  }
}

}  // TEST_SUITE

#include <doctest.h>

#include <fstream>

#include "lc2/error.hpp"
#include "lc2/manifest.hpp"
#include "lc2/synth.hpp"
#include "support.hpp"

using namespace lc2;

TEST_SUITE("manifest") {

TEST_CASE("manifest round trip") {
  lc2::test::TempDir dir("manifest");
  const std::vector<ManifestEntry> rows{{0, Modality::Lidar, "grids/a.lc2i", {1.5, -2, 0.25}, {1.25, -2.5}, 0},
                                        {7, Modality::Camera, "grids/b.lc2i", {0, 0, -3}, {0.125, 9}, 1}};
  write_manifest(dir / "m.csv", rows);
  const auto back = read_manifest(dir / "m.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].frame_id == 7);
  CHECK(back[1].modality == Modality::Camera);
  CHECK(back[1].grid_path == "grids/b.lc2i");
  CHECK(back[0].pose.theta == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(back[1].geotag.x == 0.125);
  CHECK(back[1].session == 1);
}

TEST_CASE("modality names") {
  CHECK(parse_modality(modality_name(Modality::Lidar)) == Modality::Lidar);
  CHECK(parse_modality(modality_name(Modality::Camera)) == Modality::Camera);
  CHECK_THROWS_AS(parse_modality("radar"), Error);
}

TEST_CASE("malformed manifests are format errors") {
  lc2::test::TempDir dir("badmanifest");
  {
    std::ofstream f(dir / "short.csv");
    f << "frame_id,modality,grid_path,pose_x,pose_y,pose_theta,geotag_x,geotag_y,session\n0,lidar,a\n";
  }
  {
    std::ofstream f(dir / "num.csv");
    f << "frame_id,modality,grid_path,pose_x,pose_y,pose_theta,geotag_x,geotag_y,session\n0,lidar,a,x,0,0,0,0,0\n";
  }
  for (const char* name : {"short.csv", "num.csv", "missing.csv"}) {
    try {
      read_manifest(dir / name);
      FAIL("expected a format error for " << name);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DataFormat);
    }
  }
}

TEST_CASE("synthetic dataset writes a consistent manifest") {
  lc2::test::TempDir dir("dataset");
  WorldSpec s;
  s.seed = 3;
  s.arena_size = 80;
  s.box_count = 4;
  s.sessions = {{{{20, 40}, {60, 40}}, false, 0.0, 0.0}, {{{60, 40}, {20, 40}}, false, 0.0, 0.0}};
  s.lidar.height = 8;
  s.lidar.width = 64;
  s.lidar.fov_up = 0.25;
  s.lidar.fov_total = 0.5;
  s.camera.hfov = 1.5707963267948966;
  s.camera.width = 16;
  s.camera.height = 6;
  const DatasetSummary sum = write_dataset(generate_world(s), dir.path());
  const auto rows = read_manifest(dir / "manifest.csv");
  CHECK(rows.size() == sum.frames);
  REQUIRE(sum.poses_per_session.size() == 2);
  CHECK(sum.frames == 2 * (sum.poses_per_session[0] + sum.poses_per_session[1]));
  for (const auto& r : rows) {
    const GridFile g = read_grid(dir.path() / r.grid_path);
    if (r.modality == Modality::Lidar) {
      CHECK(g.kind == GridKind::Range);
      CHECK(g.grid.width == 64);
    } else {
      CHECK(g.kind == GridKind::Disparity);
      CHECK(g.grid.width == 16);
    }
  }
  CHECK(std::filesystem::exists(dir / "truth_s1.tum"));
  CHECK(std::filesystem::exists(dir / "odometry_s0.tum"));
  CHECK(std::filesystem::exists(dir / "geotags_s0.csv"));
  CHECK(read_world_spec(dir / "world.spec").seed == 3);
}

}  // TEST_SUITE

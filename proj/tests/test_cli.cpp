#include <doctest.h>

#include <fstream>
#include <sstream>

#include "lc2/matchdb.hpp"
#include "pipeline.hpp"
#include "support.hpp"

using namespace lc2;
using namespace lc2::test;

namespace {

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli({}).code == cli::kExitUsage);
  CHECK(run_cli({"bogus"}).code == cli::kExitUsage);
  CHECK(run_cli({"query", "--n", "2"}).code == cli::kExitUsage);
  CHECK(run_cli({"embed", "--manifest", "/nonexistent/m.csv", "--model", "x", "--out", "y"}).code == cli::kExitUsage);
  const CliResult v = run_cli({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find('.') != std::string::npos);
}

TEST_CASE("bad file contents exit with 3") {
  TempDir dir("cli_bad");
  {
    std::ofstream f(dir / "junk.lc2d", std::ios::binary);
    f << "not a descriptor file";
  }
  const std::string junk = (dir / "junk.lc2d").string();
  const CliResult r = run_cli({"query", "--db", junk, "--queries", junk, "--out", (dir / "m.csv").string()});
  CHECK(r.code == cli::kExitData);
  CHECK(!r.err.empty());
}

TEST_CASE("query output format and config precedence") {
  TempDir dir("cli_query");
  std::vector<Descriptor> db{{0, {0, 0}, Modality::Camera, {1.0, 0.0}},
                             {1, {50, 0}, Modality::Camera, {0.0, 1.0}},
                             {2, {90, 0}, Modality::Camera, {-1.0, 0.0}}};
  std::vector<Descriptor> q{{7, {1, 0}, Modality::Lidar, {0.8, 0.6}}};
  write_descriptors(dir / "db.lc2d", db);
  write_descriptors(dir / "q.lc2d", q);
  const std::string dbp = (dir / "db.lc2d").string(), qp = (dir / "q.lc2d").string();

  CHECK(run_cli({"query", "--db", dbp, "--queries", qp, "--out", (dir / "a.csv").string()}).code == 0);
  const std::string a = slurp(dir / "a.csv");
  CHECK(a.rfind("query_id,rank,db_id,distance\n", 0) == 0);
  CHECK(count_lines(a) == 2);
  CHECK(a.find("7,1,0,") != std::string::npos);

  {
    std::ofstream f(dir / "cfg.toml");
    f << "[query]\nn = 3\n";
  }
  const std::string cfg = (dir / "cfg.toml").string();
  CHECK(run_cli({"--config", cfg, "query", "--db", dbp, "--queries", qp, "--out", (dir / "b.csv").string()}).code == 0);
  CHECK(count_lines(slurp(dir / "b.csv")) == 4);
  CHECK(run_cli({"--config", cfg, "query", "--db", dbp, "--queries", qp, "--out", (dir / "c.csv").string(), "--n",
                 "2"})
            .code == 0);
  CHECK(count_lines(slurp(dir / "c.csv")) == 3);
  const std::string meta = slurp(dir / "run.meta");
  CHECK(meta.find("resolved configuration") != std::string::npos);
  CHECK(meta.find("status") != std::string::npos);
}

TEST_CASE("eval writes recall and precision-recall CSVs") {
  TempDir dir("cli_eval");
  std::vector<Descriptor> db{{0, {0, 0}, Modality::Camera, {1.0, 0.0}}, {1, {50, 0}, Modality::Camera, {0.0, 1.0}}};
  std::vector<Descriptor> q{{5, {0, 0}, Modality::Lidar, {0.8, 0.6}}, {6, {50, 0}, Modality::Lidar, {0.6, 0.8}}};
  write_descriptors(dir / "db.lc2d", db);
  write_descriptors(dir / "q.lc2d", q);
  const CliResult r = run_cli({"eval", "--db", (dir / "db.lc2d").string(), "--queries", (dir / "q.lc2d").string(),
                               "--recall-out", (dir / "r.csv").string(), "--pr-out", (dir / "pr.csv").string(),
                               "--max-n", "2", "--thresholds", "3"});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "r.csv") == "n,recall\n1,1.0\n2,1.0\n");
  const std::string pr = slurp(dir / "pr.csv");
  CHECK(pr.rfind("threshold,precision,recall\n", 0) == 0);
  CHECK(count_lines(pr) == 4);
  CHECK(r.out.find("recall@1 1.0") != std::string::npos);
}

TEST_CASE("full pipeline runs and is idempotent") {
  TempDir dir("cli_pipeline");
  const PipelineOutputs first = run_pipeline(dir.path());
  for (const CliResult& s : first.steps) {
    INFO(s.err);
    CHECK(s.code == 0);
  }
  REQUIRE(first.ok());
  CHECK(first.steps.back().out.find("rmse odometry") != std::string::npos);
  std::vector<std::string> before;
  for (const auto& f : pipeline_artifacts()) {
    INFO(f);
    CHECK(std::filesystem::exists(dir / f));
    before.push_back(slurp(dir / f));
  }
  // Threshold 0 with no prefilter keeps every candidate.
  CHECK(count_lines(slurp(dir / "loops/accepted.csv")) > 1);
  const PipelineOutputs second = run_pipeline(dir.path());
  REQUIRE(second.ok());
  const auto names = pipeline_artifacts();
  for (std::size_t i = 0; i < names.size(); ++i) {
    INFO(names[i]);
    CHECK(slurp(dir / names[i]) == before[i]);
  }
  const std::string d = dir.path().string();
  const CliResult none = run_cli({"loops", "--odometry", d + "/data/odometry_s1.tum", "--candidates",
                                  d + "/match/candidates.csv", "--accepted", d + "/loops/none.csv", "--trajectory",
                                  d + "/loops/none.tum", "--threshold", "inf"});
  CHECK(none.code == 0);
  CHECK(count_lines(slurp(dir / "loops/none.csv")) == 1);
}

}  // TEST_SUITE

#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lc2/error.hpp"
#include "lc2/loopgraph.hpp"
#include "lc2/manifest.hpp"
#include "lc2/matchdb.hpp"
#include "lc2/projection.hpp"
#include "lc2/similarity.hpp"
#include "lc2/synth.hpp"
#include "lc2/training.hpp"

#ifndef LC2_VERSION
#define LC2_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace lc2::cli {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Shortest round-trip decimal, always with a decimal point or exponent ("1.0", "0.25", "1e-07").
std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::ofstream open_out(const fs::path& path) {
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::InvalidArgument, "cannot write " + path.string());
  return f;
}

struct Geometry {
  double lidar_range = 30.0;
  double camera_fov_deg = 90.0;
  double camera_range = 30.0;
  double camera_boresight_deg = 0.0;

  void add(CLI::App* app) {
    app->add_option("--lidar-range", lidar_range, "LiDAR interest-area radius (m)")->check(CLI::PositiveNumber);
    app->add_option("--camera-fov-deg", camera_fov_deg, "camera horizontal FoV (deg)")->check(CLI::Range(1.0, 360.0));
    app->add_option("--camera-range", camera_range, "camera interest-area radius (m)")->check(CLI::PositiveNumber);
    app->add_option("--camera-boresight-deg", camera_boresight_deg, "camera yaw offset from the heading (deg)");
  }
  FrustumSpec lidar() const { return {2.0 * std::numbers::pi, lidar_range, 0.0}; }
  FrustumSpec camera() const { return {camera_fov_deg * kDeg, camera_range, camera_boresight_deg * kDeg}; }
};

const std::map<std::string, PsiNorm> kNorms{{"min", PsiNorm::Min}, {"union", PsiNorm::Union}};
const std::map<std::string, ScoreMode> kScores{{"diag", ScoreMode::DiagonalL2}, {"trace", ScoreMode::Trace}};
const std::map<std::string, InputEncoding> kEncodings{{"inverse", InputEncoding::Inverse},
                                                      {"linear", InputEncoding::Linear}};

// Manifest rows restricted to one session and/or modality; -1 and "all" keep everything.
std::vector<ManifestEntry> select_rows(const std::vector<ManifestEntry>& rows, long session,
                                       const std::string& modality) {
  std::vector<ManifestEntry> out;
  for (const ManifestEntry& e : rows) {
    if (session >= 0 && e.session != static_cast<std::uint32_t>(session)) continue;
    if (modality != "all" && e.modality != parse_modality(modality)) continue;
    out.push_back(e);
  }
  if (out.empty()) fail(ErrorKind::InvalidArgument, "no manifest rows match the selection");
  return out;
}

struct Options {
  std::uint64_t seed = 1;
  int threads = 0;

  // synth
  std::string spec_path, synth_out;
  // project
  std::string cloud_path, grid_out;
  std::size_t proj_height = 32, proj_width = 512;
  double fov_up_deg = 15.0, fov_total_deg = 30.0, crop_fov_deg = 90.0;
  int crop = -1;
  // similarity / train / embed
  std::string manifest_path, sim_out;
  std::string norm = "min";
  double sim_pitch = 0.25;
  double pitch = 1.0;  // pair mining uses a coarser raster to keep Phase 1 setup cheap
  Geometry geometry;
  // train
  std::string model_out, loss_out;
  TrainConfig train;
  EncoderArch arch;
  std::string encoding = "inverse";
  std::vector<long> train_sessions;
  // embed
  std::string model_path, desc_out, modality = "all";
  long session = -1;
  // query / eval
  std::string db_path, queries_path, matches_out, candidates_out, recall_out, pr_out;
  std::size_t knn = 1, max_n = 0, thresholds = 50;
  double radius = kDefaultGeoThreshold;
  // loops
  std::string odometry_path, cand_path, accepted_out, traj_out, truth_path;
  LoopFilterConfig loops;
  std::string score = "diag";
};

int cmd_synth(Options& o, std::ostream& out, bool seed_given) {
  WorldSpec spec = o.spec_path.empty() ? default_world_spec() : read_world_spec(o.spec_path);
  if (seed_given) spec.seed = o.seed;
  o.seed = spec.seed;  // recorded in run.meta
  World world = generate_world(spec);
  DatasetSummary s = write_dataset(world, o.synth_out);
  out << "frames " << s.frames << " sessions " << s.poses_per_session.size() << "\n";
  return 0;
}

int cmd_project(const Options& o, std::ostream& out) {
  PointCloud cloud = read_cloud(o.cloud_path);
  RangeImage img = project_cloud(cloud, o.proj_height, o.proj_width, o.fov_up_deg * kDeg, o.fov_total_deg * kDeg);
  if (o.crop >= 0) {
    std::size_t cols = columns_for_fov(o.crop_fov_deg * kDeg, o.proj_width);
    img = crop_range_image(img, default_crop(o.crop, o.proj_width, cols));
  }
  ensure_parent(o.grid_out);
  write_grid(o.grid_out, {GridKind::Range, img.grid, img.fov_up, img.fov_total});
  out << "grid " << img.grid.height << "x" << img.grid.width << "\n";
  return 0;
}

int cmd_similarity(const Options& o, std::ostream& out) {
  std::vector<ManifestEntry> rows = read_manifest(o.manifest_path);
  std::vector<SensorView> views;
  views.reserve(rows.size());
  for (const ManifestEntry& e : rows)
    views.push_back({e.pose, e.modality == Modality::Lidar ? o.geometry.lidar() : o.geometry.camera()});
  std::vector<SimilarityEntry> table = pairwise_similarity_table(views, o.sim_pitch, kNorms.at(o.norm));
  ensure_parent(o.sim_out);
  write_similarity_csv(o.sim_out, table);
  out << "pairs " << table.size() << "\n";
  return 0;
}

int cmd_train(Options o, std::ostream& out) {
  fs::path root = fs::path(o.manifest_path).parent_path();
  std::vector<ManifestEntry> rows = read_manifest(o.manifest_path);
  if (!o.train_sessions.empty()) {
    std::vector<ManifestEntry> kept;
    for (const ManifestEntry& e : rows)
      for (long s : o.train_sessions)
        if (e.session == static_cast<std::uint32_t>(s)) kept.push_back(e);
    rows = std::move(kept);
    if (rows.empty()) fail(ErrorKind::InvalidArgument, "no manifest rows in the training sessions");
  }
  o.train.seed = o.seed;
  o.arch.range_encoding = kEncodings.at(o.encoding);
  SensorGeometry g = dataset_geometry(rows, root, o.geometry.lidar(), o.geometry.camera());
  auto log = [&](const LossPoint& p) {
    out << "phase " << p.phase << " epoch " << p.epoch << " loss " << number(p.loss) << "\n" << std::flush;
  };
  TrainingRun run = train_two_phase(rows, manifest_loader(rows, root, g), g, o.arch, o.train, o.pitch, log);
  ensure_parent(o.model_out);
  save_model(o.model_out, run.params);
  fs::path curve = o.loss_out.empty() ? fs::path(o.model_out).parent_path() / "loss_curve.csv" : fs::path(o.loss_out);
  ensure_parent(curve);
  write_loss_curve(curve, run.curve);
  return 0;
}

int cmd_embed(const Options& o, std::ostream& out) {
  fs::path root = fs::path(o.manifest_path).parent_path();
  std::vector<ManifestEntry> all = read_manifest(o.manifest_path);
  SensorGeometry g = dataset_geometry(all, root, o.geometry.lidar(), o.geometry.camera());
  std::vector<ManifestEntry> rows = select_rows(all, o.session, o.modality);
  ModelParams model = load_model(o.model_path);
  TrainingSet set = make_training_set(phase2_items(rows, g), model, manifest_loader(rows, root, g));
  std::vector<Descriptor> desc = embed_items(model, set, rows);
  ensure_parent(o.desc_out);
  write_descriptors(o.desc_out, desc);
  out << "descriptors " << desc.size() << "\n";
  return 0;
}

DescriptorDb load_db(const std::string& path) {
  DescriptorDb db;
  for (Descriptor& d : read_descriptors(path)) db.insert(std::move(d));
  if (db.empty()) fail(ErrorKind::DataFormat, "empty descriptor database " + path);
  return db;
}

int cmd_query(const Options& o, std::ostream& out) {
  DescriptorDb db = load_db(o.db_path);
  std::vector<Descriptor> queries = read_descriptors(o.queries_path);
  std::ofstream f = open_out(o.matches_out);
  f << "query_id,rank,db_id,distance\n";
  std::vector<LoopCandidate> candidates;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    MatchResult m = knn_query(db, queries[q], o.knn);
    for (std::size_t r = 0; r < m.indices.size(); ++r)
      f << queries[q].frame_id << ',' << r + 1 << ',' << db[m.indices[r]].frame_id << ',' << number(m.distances[r])
        << '\n';
    if (!m.indices.empty()) candidates.push_back({q, db[m.indices[0]].geotag, m.distances[0]});
  }
  if (!o.candidates_out.empty()) {
    ensure_parent(o.candidates_out);
    write_candidates(o.candidates_out, candidates);
  }
  out << "queries " << queries.size() << "\n";
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  DescriptorDb db = load_db(o.db_path);
  std::vector<Descriptor> queries = read_descriptors(o.queries_path);
  std::size_t top1 = top1pct_n(db.size());
  std::size_t max_n = o.max_n > 0 ? o.max_n : std::max<std::size_t>(top1, 1);
  std::vector<double> recall = recall_curve(db, queries, std::min(max_n, db.size()), o.radius);
  {
    std::ofstream f = open_out(o.recall_out);
    f << "n,recall\n";
    for (std::size_t n = 0; n < recall.size(); ++n) f << n + 1 << ',' << number(recall[n]) << '\n';
  }
  if (!o.pr_out.empty()) {
    std::ofstream f = open_out(o.pr_out);
    f << "threshold,precision,recall\n";
    for (const PrPoint& p : precision_recall_curve(db, queries, o.radius, o.thresholds))
      f << number(p.threshold) << ',' << number(p.precision) << ',' << number(p.recall) << '\n';
  }
  out << "recall@1 " << number(recall.front());
  if (top1 <= recall.size()) out << " recall@top1% " << number(recall[top1 - 1]) << " (N=" << top1 << ")";
  out << "\n";
  return 0;
}

int cmd_loops(Options o, std::ostream& out) {
  std::vector<Pose2> odometry = read_tum(o.odometry_path);
  std::vector<LoopCandidate> candidates = read_candidates(o.cand_path);
  o.loops.mode = kScores.at(o.score);
  LoopFilterResult r = run_loop_filter(odometry, candidates, o.loops);
  ensure_parent(o.accepted_out);
  write_accepted(o.accepted_out, candidates, r.accepted);
  ensure_parent(o.traj_out);
  write_tum(o.traj_out, r.optimized);
  out << "accepted " << r.accepted.size() << " of " << candidates.size() << "\n";
  if (!o.truth_path.empty()) {
    std::vector<Pose2> truth = read_tum(o.truth_path);
    out << "rmse odometry " << number(trajectory_rmse(odometry, truth)) << " optimized "
        << number(trajectory_rmse(r.optimized, truth)) << "\n";
  }
  return 0;
}

void write_meta(const fs::path& dir, const CLI::App& app, const std::string& command, const std::string& argv,
                const Options& o, double seconds, const std::string& status) {
  fs::create_directories(dir);
  std::ofstream f(dir / "run.meta", std::ios::trunc);
  f << "version=" << LC2_VERSION << "\n"
    << "command=" << command << "\n"
    << "argv=" << argv << "\n"
    << "seed=" << o.seed << "\n"
    << "threads=" << omp_get_max_threads() << "\n"
    << "status=" << status << "\n"
    << "elapsed_seconds=" << number(seconds) << "\n"
    << "# resolved configuration (flag > config file > default)\n"
    << app.config_to_str(true, false);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Cross-modal LiDAR/camera place recognition and loop filtering", "lc2"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", LC2_VERSION);
  app.set_config("--config", "", "read options from an INI/TOML file");
  app.add_option("--seed", o.seed, "master random seed");
  app.add_option("--threads", o.threads, "worker cap (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.require_subcommand(1);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic multi-session dataset");
  synth->add_option("--spec", o.spec_path, "world description (default: built-in two-session world)")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", o.synth_out, "dataset directory")->required();

  CLI::App* project = app.add_subcommand("project", "project a point cloud to a range image");
  project->add_option("--cloud", o.cloud_path, "input cloud (.lc2p)")->required()->check(CLI::ExistingFile);
  project->add_option("--out", o.grid_out, "output grid (.lc2i)")->required();
  project->add_option("--height", o.proj_height, "rows")->check(CLI::PositiveNumber);
  project->add_option("--width", o.proj_width, "columns")->check(CLI::PositiveNumber);
  project->add_option("--fov-up-deg", o.fov_up_deg, "upward vertical FoV (deg)")->check(CLI::PositiveNumber);
  project->add_option("--fov-total-deg", o.fov_total_deg, "total vertical FoV (deg)")->check(CLI::PositiveNumber);
  project->add_option("--crop", o.crop, "crop index 0-7 (-1: full panorama)")->check(CLI::Range(-1, 7));
  project->add_option("--crop-fov-deg", o.crop_fov_deg, "crop width as camera FoV (deg)")
      ->check(CLI::Range(1.0, 360.0));

  CLI::App* similarity = app.add_subcommand("similarity", "pairwise interest-area overlap table");
  similarity->add_option("--manifest", o.manifest_path, "dataset manifest")->required()->check(CLI::ExistingFile);
  similarity->add_option("--out", o.sim_out, "output CSV")->required();
  similarity->add_option("--pitch", o.sim_pitch, "raster pitch (m)")->check(CLI::PositiveNumber);
  similarity->add_option("--norm", o.norm, "overlap normalization")->check(CLI::IsMember({"min", "union"}));
  o.geometry.add(similarity);

  CLI::App* train = app.add_subcommand("train", "two-phase encoder training");
  train->add_option("--manifest", o.manifest_path, "dataset manifest")->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.model_out, "model file (.lc2m)")->required();
  train->add_option("--loss-curve", o.loss_out, "loss CSV (default: loss_curve.csv next to the model)");
  train->add_option("--sessions", o.train_sessions, "sessions to train on (default: all)");
  train->add_option("--tau", o.train.tau, "contrastive constant")->check(CLI::PositiveNumber);
  train->add_option("--margin", o.train.margin, "triplet margin")->check(CLI::PositiveNumber);
  train->add_option("--scale-augment", o.train.scale_augment, "disparity scale augmentation r (%)")
      ->check(CLI::Range(0.0, 99.999));
  train->add_option("--lr1", o.train.lr_phase1, "Phase 1 learning rate")->check(CLI::NonNegativeNumber);
  train->add_option("--lr2", o.train.lr_phase2, "Phase 2 learning rate")->check(CLI::NonNegativeNumber);
  train->add_option("--momentum", o.train.momentum, "SGD momentum")->check(CLI::Range(0.0, 0.999999));
  train->add_option("--epochs1", o.train.epochs_phase1, "Phase 1 epochs");
  train->add_option("--epochs2", o.train.epochs_phase2, "Phase 2 epochs");
  train->add_option("--batch", o.train.batch_size, "batch size")->check(CLI::PositiveNumber);
  train->add_option("--pairs-per-epoch", o.train.pairs_per_epoch, "Phase 1 pair subsample per epoch (0: all)");
  train->add_option("--anchors-per-epoch", o.train.anchors_per_epoch, "Phase 2 triplet cap per epoch (0: all)");
  train->add_option("--positives", o.train.mining.positives_per_anchor, "positives per anchor")
      ->check(CLI::PositiveNumber);
  train->add_option("--negatives", o.train.mining.negatives_per_anchor, "negatives per anchor")
      ->check(CLI::PositiveNumber);
  train->add_option("--positive-radius", o.train.mining.positive_radius, "positive radius (m)")
      ->check(CLI::PositiveNumber);
  train->add_option("--negative-radius", o.train.mining.negative_radius, "negative radius (m)")
      ->check(CLI::PositiveNumber);
  train->add_option("--cross-modal", o.train.mining.cross_modal, "mine positives/negatives from the other modality");
  train->add_option("--share-weights", o.train.share_weights, "tie the two encoder branches");
  train->add_option("--early-stop", o.train.early_stop, "stop Phase 2 after a zero-loss epoch");
  train->add_option("--vlad-init-samples", o.train.vlad_init_samples, "k-means sample count")
      ->check(CLI::PositiveNumber);
  train->add_option("--input-height", o.arch.input_height, "network input rows")->check(CLI::PositiveNumber);
  train->add_option("--input-width", o.arch.input_width, "network input columns")->check(CLI::PositiveNumber);
  train->add_option("--channels", o.arch.channels, "conv block channels (last = D)");
  train->add_option("--clusters", o.arch.vlad_clusters, "NetVLAD clusters K")->check(CLI::PositiveNumber);
  train->add_option("--range-encoding", o.encoding, "range input encoding")
      ->check(CLI::IsMember({"inverse", "linear"}));
  train->add_option("--pitch", o.pitch, "raster pitch for pair mining (m)")->check(CLI::PositiveNumber);
  o.geometry.add(train);

  CLI::App* embed = app.add_subcommand("embed", "compute descriptors for manifest frames");
  embed->add_option("--manifest", o.manifest_path, "dataset manifest")->required()->check(CLI::ExistingFile);
  embed->add_option("--model", o.model_path, "model file")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", o.desc_out, "descriptor file (.lc2d)")->required();
  embed->add_option("--modality", o.modality, "frames to embed")->check(CLI::IsMember({"lidar", "camera", "all"}));
  embed->add_option("--session", o.session, "session to embed (-1: all)");
  o.geometry.add(embed);

  CLI::App* query = app.add_subcommand("query", "k-nearest-neighbour search");
  query->add_option("--db", o.db_path, "database descriptors")->required()->check(CLI::ExistingFile);
  query->add_option("--queries", o.queries_path, "query descriptors")->required()->check(CLI::ExistingFile);
  query->add_option("--out", o.matches_out, "matches CSV")->required();
  query->add_option("--n", o.knn, "neighbours per query")->check(CLI::PositiveNumber);
  query->add_option("--candidates", o.candidates_out, "top-1 loop candidates CSV (keyframe = query position)");

  CLI::App* eval = app.add_subcommand("eval", "recall@N and precision-recall");
  eval->add_option("--db", o.db_path, "database descriptors")->required()->check(CLI::ExistingFile);
  eval->add_option("--queries", o.queries_path, "query descriptors")->required()->check(CLI::ExistingFile);
  eval->add_option("--recall-out", o.recall_out, "n,recall CSV")->required();
  eval->add_option("--pr-out", o.pr_out, "threshold,precision,recall CSV");
  eval->add_option("--radius", o.radius, "true-match radius (m)")->check(CLI::PositiveNumber);
  eval->add_option("--max-n", o.max_n, "largest N (0: top 1%)");
  eval->add_option("--thresholds", o.thresholds, "PR curve points")->check(CLI::PositiveNumber);

  CLI::App* loops = app.add_subcommand("loops", "pose-graph loop-candidate filtering");
  loops->add_option("--odometry", o.odometry_path, "odometry trajectory (TUM)")->required()->check(CLI::ExistingFile);
  loops->add_option("--candidates", o.cand_path, "loop candidates CSV")->required()->check(CLI::ExistingFile);
  loops->add_option("--accepted", o.accepted_out, "accepted loops CSV")->required();
  loops->add_option("--trajectory", o.traj_out, "optimized trajectory (TUM)")->required();
  loops->add_option("--ground-truth", o.truth_path, "report RMSE against this trajectory")
      ->check(CLI::ExistingFile);
  loops->add_option("--threshold", o.loops.score_threshold, "information score threshold");
  loops->add_option("--prefilter", o.loops.prefilter, "descriptor distance prefilter");
  loops->add_option("--score", o.score, "information score")->check(CLI::IsMember({"diag", "trace"}));
  loops->add_option("--odometry-cov", o.loops.graph.odometry_cov, "odometry variance")->check(CLI::PositiveNumber);
  loops->add_option("--loop-cov", o.loops.graph.loop_cov, "loop edge variance")->check(CLI::PositiveNumber);
  loops->add_option("--geotag-cov", o.loops.graph.geotag_prior_cov, "geotag prior variance")
      ->check(CLI::PositiveNumber);
  loops->add_option("--anchor-cov", o.loops.graph.anchor_cov, "start pose prior variance")
      ->check(CLI::PositiveNumber);
  loops->add_option("--max-iterations", o.loops.lm.max_iterations, "LM iteration cap")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  if (o.threads > 0) omp_set_num_threads(o.threads);

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  std::string joined;
  for (int i = 0; i < argc; ++i) joined += (i ? " " : "") + std::string(argv[i]);

  const std::map<std::string, std::string> meta_target{
      {"synth", o.synth_out},      {"project", o.grid_out},       {"similarity", o.sim_out},
      {"train", o.model_out},      {"embed", o.desc_out},         {"query", o.matches_out},
      {"eval", o.recall_out},      {"loops", o.accepted_out}};
  fs::path meta_dir = name == "synth" ? fs::path(o.synth_out) : fs::path(meta_target.at(name)).parent_path();
  if (meta_dir.empty()) meta_dir = ".";

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  auto finish = [&](int code, const std::string& status) {
    try {
      write_meta(meta_dir, app, name, joined, o, elapsed(), status);
    } catch (const std::exception&) {
      // metadata is best effort; the command's own status decides the exit code
    }
    return code;
  };

  try {
    write_meta(meta_dir, app, name, joined, o, 0.0, "running");
    int code = 0;
    if (name == "synth") code = cmd_synth(o, out, app.count("--seed") > 0);
    else if (name == "project") code = cmd_project(o, out);
    else if (name == "similarity") code = cmd_similarity(o, out);
    else if (name == "train") code = cmd_train(o, out);
    else if (name == "embed") code = cmd_embed(o, out);
    else if (name == "query") code = cmd_query(o, out);
    else if (name == "eval") code = cmd_eval(o, out);
    else if (name == "loops") code = cmd_loops(o, out);
    return finish(code, "ok");
  } catch (const Error& e) {
    err << "lc2 " << name << ": " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::InvalidArgument: return finish(kExitUsage, "usage error");
      case ErrorKind::DataFormat: return finish(kExitData, "data format error");
      case ErrorKind::Numerical: return finish(kExitNumerical, "numerical failure");
    }
  } catch (const fs::filesystem_error& e) {
    err << "lc2 " << name << ": " << e.what() << "\n";
    return finish(kExitData, "filesystem error");
  } catch (const std::exception& e) {
    err << "lc2 " << name << ": " << e.what() << "\n";
    return finish(1, "error");
  }
  return 1;
}

}  // namespace lc2::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lc2/encoder.hpp"
#include "lc2/manifest.hpp"
#include "lc2/similarity.hpp"

namespace lc2 {

// ---- losses -------------------------------------------------------------------

/// psi * d^2 + (1 - psi) * max(tau - d, 0)^2
double contrastive_loss(double d, double psi, double tau);
/// d/dd of contrastive_loss.
double contrastive_loss_grad(double d, double psi, double tau);

/// max(d_pos - d_neg + m, 0)
double triplet_loss(double d_pos, double d_neg, double margin);

// ---- samples ------------------------------------------------------------------

/// One training image: a range crop or a disparity frame.
struct TrainItem {
  std::size_t frame = 0;  // manifest row
  Branch branch = Branch::Range;
  int crop = -1;  // range crop index, -1 for disparity
  Pose2 pose;
  Point2 geotag;
  FrustumSpec frustum;  // interest area of this image
};

struct PairSample {
  std::size_t i = 0;  // item indices, i < j
  std::size_t j = 0;
  double psi = 0.0;
  Modality modality_i = Modality::Lidar;
  Modality modality_j = Modality::Lidar;
  int crop_i = -1;
  int crop_j = -1;
};

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};

inline constexpr double kPositiveRadius = 10.0;
inline constexpr double kNegativeRadius = 25.0;

struct SensorGeometry {
  FrustumSpec lidar;   // full-panorama interest area (horizontal_fov = 2 pi)
  FrustumSpec camera;  // camera interest area, boresight relative to the vehicle heading
  std::size_t lidar_width = 0;  // panorama columns
};

/// Columns of one camera-FoV crop on the LiDAR panorama.
std::size_t crop_columns(const SensorGeometry& g);

/// Interest area of range crop `crop` (its azimuth interval with the LiDAR's range).
FrustumSpec crop_frustum(const SensorGeometry& g, int crop);

/// Every LiDAR frame expanded into the eight crops, plus every camera frame.
std::vector<TrainItem> phase1_items(const std::vector<ManifestEntry>& manifest, const SensorGeometry& g);

/// LiDAR frames as the single crop matching the camera boresight, plus every camera frame.
std::vector<TrainItem> phase2_items(const std::vector<ManifestEntry>& manifest, const SensorGeometry& g);

/// All item pairs with psi != 0 (range x range, range x disparity, disparity x disparity).
std::vector<PairSample> mine_phase1_pairs(const std::vector<TrainItem>& items, double grid_pitch,
                                          PsiNorm norm = PsiNorm::Min);

struct TripletMiningConfig {
  std::size_t positives_per_anchor = 1;
  std::size_t negatives_per_anchor = 1;
  double positive_radius = kPositiveRadius;
  double negative_radius = kNegativeRadius;
  bool cross_modal = true;  // positives and negatives from the other modality only
};

struct TripletMiningResult {
  std::vector<Triplet> triplets;
  std::size_t skipped_anchors = 0;  // anchors lacking a positive or a negative
};

/// Seeded random positives (< positive_radius) and negatives (> negative_radius) per anchor.
TripletMiningResult mine_triplets(const std::vector<Point2>& geotags, const std::vector<Modality>& modalities,
                                  const TripletMiningConfig& config, std::uint64_t seed);

// ---- optimization -------------------------------------------------------------

struct TrainConfig {
  double tau = 0.5;
  double margin = 0.1;
  double scale_augment = 20.0;  // r, percent
  double lr_phase1 = 1e-3;
  double lr_phase2 = 1e-4;
  double momentum = 0.9;
  std::size_t epochs_phase1 = 10;
  std::size_t epochs_phase2 = 10;
  std::size_t batch_size = 16;
  std::size_t pairs_per_epoch = 0;     // 0: every mined pair each epoch
  std::size_t anchors_per_epoch = 0;   // 0: every anchor each epoch
  std::size_t vlad_init_samples = 512;
  bool share_weights = false;
  bool early_stop = true;  // stop Phase 2 after an epoch with zero hinge loss
  std::uint64_t seed = 1;
  TripletMiningConfig mining;
};

void validate(const TrainConfig& config);

struct LossPoint {
  std::size_t epoch = 0;
  int phase = 1;
  double loss = 0.0;  // mean per pair (Phase 1) or per triplet (Phase 2)
};

/// Input tensors for training items, built once. Disparity tensors are rescaled per epoch.
struct TrainingSet {
  std::vector<TrainItem> items;
  std::vector<Tensor3> inputs;
};

using GridLoader = std::function<Grid(const TrainItem&)>;

/// Loads (and crops) each item's grid and prepares the network input.
TrainingSet make_training_set(std::vector<TrainItem> items, const ModelParams& params, const GridLoader& load);

/// Reads grids from a manifest directory; range crops are cut from the stored panorama.
GridLoader manifest_loader(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& root,
                           const SensorGeometry& g);

using EpochCallback = std::function<void(const LossPoint&)>;

/// Contrastive training with the GeM head. Returns the per-epoch summed loss.
std::vector<LossPoint> train_phase1(ModelParams& params, const TrainingSet& set, const std::vector<PairSample>& pairs,
                                    const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Loss of every pair under the current parameters, without augmentation.
double phase1_loss(const ModelParams& params, const TrainingSet& set, const std::vector<PairSample>& pairs,
                   double tau);

/// Switches to NetVLAD (initialized by k-means over local features) and runs triplet training.
/// Triplets are re-mined every epoch from the item geotags with a per-epoch seed.
std::vector<LossPoint> train_phase2(ModelParams& params, const TrainingSet& set, const TrainConfig& config,
                                    const EpochCallback& on_epoch = {});

/// Triplet training on a fixed list (no re-mining, NetVLAD head must be initialized).
std::vector<LossPoint> train_triplets(ModelParams& params, const TrainingSet& set,
                                      const std::vector<Triplet>& triplets, const TrainConfig& config,
                                      std::size_t epochs, const EpochCallback& on_epoch = {});

double triplet_set_loss(const ModelParams& params, const TrainingSet& set, const std::vector<Triplet>& triplets,
                        double margin);

/// k-means initialization of the NetVLAD head from local features of a seeded item subset.
void initialize_netvlad(ModelParams& params, const TrainingSet& set, std::size_t samples, std::uint64_t seed);

/// LiDAR panorama width taken from the first LiDAR grid of the manifest.
SensorGeometry dataset_geometry(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& root,
                                const FrustumSpec& lidar, const FrustumSpec& camera);

struct TrainingRun {
  ModelParams params;
  std::vector<LossPoint> curve;
};

/// Phase 1 over every crop and camera frame, then Phase 2 over boresight crops. Phase 1 is skipped
/// when its epoch count is zero.
TrainingRun train_two_phase(const std::vector<ManifestEntry>& manifest, const GridLoader& load,
                            const SensorGeometry& g, const EncoderArch& arch, const TrainConfig& config,
                            double grid_pitch, const EpochCallback& on_epoch = {});

/// Descriptors of the given items (LiDAR items as their boresight crop) with manifest ids and geotags.
std::vector<Descriptor> embed_items(const ModelParams& params, const TrainingSet& set,
                                    const std::vector<ManifestEntry>& manifest);

void write_loss_curve(const std::filesystem::path& path, const std::vector<LossPoint>& curve);

}  // namespace lc2

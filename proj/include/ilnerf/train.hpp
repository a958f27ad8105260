#pragma once

// Losses, Adam, replay distillation and the incremental training loop.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ilnerf/alignment.hpp"
#include "ilnerf/pose_graph.hpp"
#include "ilnerf/radiance.hpp"
#include "ilnerf/scene_sim.hpp"

namespace ilnerf {

enum class Mode { kFull, kNoReplay, kNoTransfer, kNoRefine };

std::string mode_name(Mode m);
Mode parse_mode(const std::string& s);

struct TrainConfig {
  int iters_per_stage = 1000;
  int rays_per_iter = 1024;
  double lr_field = 0.5;
  double lr_pose = 0.005;
  double field_decay = 0.9954;
  double pose_decay = 0.9;
  int pose_decay_every = 100;
  int d_select = 5;
  double s_th = 0.0;
  double lambda = 1.0;
  std::uint64_t seed = 0;

  int grid_res = 64;
  double init_density_raw = -2.0;
  double init_color_raw = 0.0;
  // Random per-ray shift of the sample midpoints during training.
  bool jitter = false;
  // Fraction of the final iterations whose per-camera errors define rewards.
  double reward_window = 0.1;

  GaugeNoise noise;

  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  void reset(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }
};

// One bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Sum over rays of the squared L2 error over channels.
double photometric_loss(const std::vector<Eigen::Vector3d>& pred, const std::vector<Eigen::Vector3d>& target);

struct TrackedCamera {
  int id = 0;
  int chunk = 0;
  int index = 0;  // position within its chunk
  CameraPose<double> base;
  PoseDelta<double> delta;
  double reward = 0.0;

  CameraPose<double> pose() const { return apply_delta(base, delta); }
};

struct TrainState {
  VoxelRadianceField<double> field;
  std::vector<TrackedCamera> cameras;
  AdamState density_adam;
  AdamState color_adam;
  AdamState pose_adam;
  long iteration = 0;  // across all stages
};

TrainState make_initial_state(const Bounds<double>& bounds, const TrainConfig& cfg);

enum class RaySource { kCurrent, kReplay };

struct RayTarget {
  int camera = 0;  // index into TrainState::cameras
  int u = 0;
  int v = 0;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  RaySource source = RaySource::kCurrent;
};

using RayBatch = std::vector<RayTarget>;

// Every pixel of the given cameras' images, tagged as current rays.
RayBatch current_rays(const std::vector<int>& cameras, const std::vector<Image>& images);

// Pseudo ground truth: the frozen teacher rendered at each listed camera's
// pose for every `stride`-th pixel. Empty when `cameras` is empty.
RayBatch distill_targets(const VoxelRadianceField<double>& teacher, const TrainState& state,
                         const std::vector<int>& cameras, const Intrinsics& k, const RenderSettings& rs,
                         int stride = 1);

struct IterationLoss {
  double current = 0.0;
  double replay = 0.0;
  double total() const { return current + replay; }
};

// Loss and gradients of one ray set. Per-ray squared errors go to `ray_loss`
// when non-null. Pose gradients are 6 per camera (a then b).
IterationLoss accumulate_gradients(const TrainState& state, const RayBatch& rays, const std::vector<int>& picks,
                                   const Intrinsics& k, const RenderSettings& rs, bool want_pose_grad,
                                   FieldGrad<double>& field_grad, std::vector<double>& pose_grad,
                                   std::vector<double>* ray_loss = nullptr);

struct StageLog {
  std::vector<double> loss;  // per iteration, total
  double first_loss = 0.0;
  double last_loss = 0.0;
};

// Runs cfg.iters_per_stage Adam iterations over the current and replay rays,
// then folds pose deltas into the stored poses and updates rewards.
StageLog train_stage(TrainState& state, const RayBatch& current, const RayBatch& replay, const Intrinsics& k,
                     const RenderSettings& rs, const TrainConfig& cfg, bool refine_poses, int stage = 0);

struct ViewScore {
  double psnr = 0.0;
  double ssim = 0.0;
};

ViewScore score_view(const VoxelRadianceField<double>& f, const CameraPose<double>& pose, const Intrinsics& k,
                     const RenderSettings& rs, const Image& truth);

struct ChunkMetrics {
  int stage = 0;
  Mode mode = Mode::kFull;
  int chunk = 0;
  bool seen = false;
  double psnr = 0.0;
  double ssim = 0.0;
  double mean_rot_err_deg = 0.0;  // NaN for unseen chunks
  double mean_trans_err = 0.0;
};

// Scores every chunk of the stream: seen chunks at their stored poses, unseen
// chunks at their ground truth poses. Pose errors are gauge-aligned over all
// tracked cameras.
std::vector<ChunkMetrics> evaluate_stage(const TrainState& state, const ChunkStream& stream, int stage, Mode mode);

std::string metrics_csv_header();
std::string metrics_csv_row(const ChunkMetrics& m);

struct StageReport {
  int stage = 0;
  std::vector<int> selected;  // reference cameras used for alignment
  TransferTransform transfer;
  std::uint64_t teacher_checksum_before = 0;
  std::uint64_t teacher_checksum_after = 0;
  std::size_t replay_rays = 0;
  StageLog log;
};

struct FitResult {
  TrainState state;
  std::vector<ChunkMetrics> metrics;
  std::vector<StageReport> stages;
};

using StageCallback = std::function<void(int stage, const TrainState&, const std::vector<ChunkMetrics>&)>;

FitResult incremental_fit(const ChunkStream& stream, const TrainConfig& cfg, Mode mode,
                          const StageCallback& on_stage = {});

}  // namespace ilnerf

#include "ilnerf/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ilnerf/metrics.hpp"

namespace ilnerf {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t stage_seed(std::uint64_t base, int stage) { return base + kGolden * static_cast<std::uint64_t>(stage + 1); }

std::vector<double> flatten_deltas(const std::vector<TrackedCamera>& cams) {
  std::vector<double> p(6 * cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      p[6 * i + j] = cams[i].delta.a[j];
      p[6 * i + 3 + j] = cams[i].delta.b[j];
    }
  }
  return p;
}

void unflatten_deltas(const std::vector<double>& p, std::vector<TrackedCamera>& cams) {
  for (std::size_t i = 0; i < cams.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      cams[i].delta.a[j] = p[6 * i + j];
      cams[i].delta.b[j] = p[6 * i + 3 + j];
    }
  }
}

}  // namespace

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kFull: return "full";
    case Mode::kNoReplay: return "no_replay";
    case Mode::kNoTransfer: return "no_transfer";
    case Mode::kNoRefine: return "no_refine";
  }
  return "full";
}

Mode parse_mode(const std::string& s) {
  if (s == "full") return Mode::kFull;
  if (s == "no_replay") return Mode::kNoReplay;
  if (s == "no_transfer") return Mode::kNoTransfer;
  if (s == "no_refine") return Mode::kNoRefine;
  throw InvalidArgument("unknown mode '" + s + "' (expected full, no_replay, no_transfer or no_refine)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("train config: " + what); };
  if (iters_per_stage < 0) fail("iters_per_stage must be >= 0");
  if (rays_per_iter < 1) fail("rays_per_iter must be >= 1");
  if (!(lr_field >= 0) || !(lr_pose >= 0)) fail("learning rates must be >= 0");
  if (!(field_decay > 0 && field_decay <= 1) || !(pose_decay > 0 && pose_decay <= 1)) fail("decay factors must lie in (0, 1]");
  if (pose_decay_every < 1) fail("pose_decay_every must be >= 1");
  if (d_select < 1) fail("d_select must be >= 1");
  if (!(s_th >= 0) || !std::isfinite(s_th) || !(lambda >= 0) || !std::isfinite(lambda)) fail("s_th and lambda must be finite and >= 0");
  if (grid_res < 2) fail("grid_res must be >= 2");
  if (!(reward_window > 0 && reward_window <= 1)) fail("reward_window must lie in (0, 1]");
  if (!(noise.sigma_rot >= 0) || !(noise.sigma_trans >= 0)) fail("noise sigmas must be >= 0");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  if (params.size() != grads.size()) throw InvalidArgument("adam_step: params/grads size mismatch");
  if (state.m.size() != params.size()) state.reset(params.size());
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
    params[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + eps);
  }
}

double photometric_loss(const std::vector<Eigen::Vector3d>& pred, const std::vector<Eigen::Vector3d>& target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw InvalidArgument("photometric_loss: need equal, nonzero numbers of predictions and targets");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) loss += (pred[i] - target[i]).squaredNorm();
  return loss;
}

TrainState make_initial_state(const Bounds<double>& bounds, const TrainConfig& cfg) {
  TrainState s;
  s.field = VoxelRadianceField<double>(Eigen::Vector3i::Constant(cfg.grid_res), bounds, cfg.init_density_raw,
                                       cfg.init_color_raw);
  return s;
}

RayBatch current_rays(const std::vector<int>& cameras, const std::vector<Image>& images) {
  if (cameras.size() != images.size()) throw InvalidArgument("current_rays: camera/image count mismatch");
  RayBatch batch;
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    const Image& img = images[c];
    for (int v = 0; v < img.height; ++v)
      for (int u = 0; u < img.width; ++u) batch.push_back({cameras[c], u, v, img.at(u, v).transpose(), RaySource::kCurrent});
  }
  return batch;
}

RayBatch distill_targets(const VoxelRadianceField<double>& teacher, const TrainState& state,
                         const std::vector<int>& cameras, const Intrinsics& k, const RenderSettings& rs, int stride) {
  if (stride < 1) throw InvalidArgument("distill_targets: stride must be >= 1");
  RayBatch batch;
  for (int cam : cameras) {
    const CameraPose<double> pose = state.cameras.at(cam).pose();
    long pixel = 0;
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u, ++pixel) {
        if (pixel % stride != 0) continue;
        batch.push_back({cam, u, v, render_pixel(teacher, pose, k, u, v, rs), RaySource::kReplay});
      }
    }
  }
  return batch;
}

IterationLoss accumulate_gradients(const TrainState& state, const RayBatch& rays, const std::vector<int>& picks,
                                   const Intrinsics& k, const RenderSettings& rs, bool want_pose_grad,
                                   FieldGrad<double>& field_grad, std::vector<double>& pose_grad,
                                   std::vector<double>* ray_loss) {
  IterationLoss loss;
  if (ray_loss) ray_loss->assign(picks.size(), 0.0);
  for (std::size_t p = 0; p < picks.size(); ++p) {
    const RayTarget& r = rays[picks[p]];
    const TrackedCamera& cam = state.cameras[r.camera];
    const RayGradient<double> g =
        render_ray_with_grad(state.field, cam.delta, cam.base, k, r.u, r.v, r.target, rs, &field_grad, want_pose_grad);
    (r.source == RaySource::kCurrent ? loss.current : loss.replay) += g.loss;
    if (ray_loss) (*ray_loss)[p] = g.loss;
    if (want_pose_grad) {
      for (int j = 0; j < 6; ++j) pose_grad[6 * r.camera + j] += g.pose[j];
    }
  }
  return loss;
}

StageLog train_stage(TrainState& state, const RayBatch& current, const RayBatch& replay, const Intrinsics& k,
                     const RenderSettings& rs, const TrainConfig& cfg, bool refine_poses, int stage) {
  cfg.validate();
  StageLog log;
  const int iters = cfg.iters_per_stage;
  if (iters == 0) return log;
  if (current.empty()) throw InvalidArgument("train_stage: no current rays");

  RayBatch rays = current;
  rays.insert(rays.end(), replay.begin(), replay.end());
  const std::size_t n_current = current.size();
  const int replay_share = replay.empty() ? 0 : cfg.rays_per_iter / 2;
  const int current_share = cfg.rays_per_iter - replay_share;

  const std::size_t ncam = state.cameras.size();
  state.density_adam.reset(state.field.density_raw().size());
  state.color_adam.reset(state.field.color_raw().size());
  state.pose_adam.reset(6 * ncam);

  std::mt19937_64 rng(stage_seed(cfg.seed, stage));
  std::uniform_int_distribution<std::size_t> pick_current(0, n_current - 1);
  std::uniform_int_distribution<std::size_t> pick_replay(n_current, rays.empty() ? 0 : rays.size() - 1);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);

  FieldGrad<double> field_grad(state.field);
  std::vector<double> pose_grad(6 * ncam, 0.0);
  std::vector<double> ray_loss;
  std::vector<int> picks(cfg.rays_per_iter);

  const int window = std::max(1, static_cast<int>(std::lround(iters * cfg.reward_window)));
  std::vector<double> cam_err(ncam, 0.0);
  std::vector<long> cam_hits(ncam, 0);

  for (int it = 0; it < iters; ++it) {
    for (int i = 0; i < current_share; ++i) picks[i] = static_cast<int>(pick_current(rng));
    for (int i = 0; i < replay_share; ++i) picks[current_share + i] = static_cast<int>(pick_replay(rng));

    RenderSettings it_rs = rs;
    if (cfg.jitter) it_rs.sample_offset = jitter(rng);

    field_grad.zero();
    std::fill(pose_grad.begin(), pose_grad.end(), 0.0);
    const IterationLoss loss =
        accumulate_gradients(state, rays, picks, k, it_rs, refine_poses, field_grad, pose_grad, &ray_loss);
    if (!std::isfinite(loss.total())) {
      throw Diverged("stage " + std::to_string(stage) + ": non-finite loss at iteration " + std::to_string(it), it, stage);
    }
    log.loss.push_back(loss.total());

    if (it >= iters - window) {
      for (std::size_t p = 0; p < picks.size(); ++p) {
        const int cam = rays[picks[p]].camera;
        cam_err[cam] += ray_loss[p];
        ++cam_hits[cam];
      }
    }

    const double lr_f = cfg.lr_field * std::pow(cfg.field_decay, it);
    if (lr_f > 0) {
      adam_step(state.field.density_raw(), field_grad.density, state.density_adam, lr_f);
      adam_step(state.field.color_raw(), field_grad.color, state.color_adam, lr_f);
    }
    if (refine_poses && cfg.lr_pose > 0) {
      const double lr_p = cfg.lr_pose * std::pow(cfg.pose_decay, it / cfg.pose_decay_every);
      std::vector<double> deltas = flatten_deltas(state.cameras);
      adam_step(deltas, pose_grad, state.pose_adam, lr_p);
      unflatten_deltas(deltas, state.cameras);
    }
    ++state.iteration;
  }
  log.first_loss = log.loss.front();
  log.last_loss = log.loss.back();

  for (std::size_t c = 0; c < ncam; ++c) {
    if (cam_hits[c] > 0) state.cameras[c].reward = -cam_err[c] / static_cast<double>(cam_hits[c]);
  }
  for (auto& cam : state.cameras) {
    cam.base = cam.pose();
    cam.delta = PoseDelta<double>{};
  }
  state.field.round_to_float();
  return log;
}

ViewScore score_view(const VoxelRadianceField<double>& f, const CameraPose<double>& pose, const Intrinsics& k,
                     const RenderSettings& rs, const Image& truth) {
  const Image img = render_image(f, pose, k, rs);
  return {psnr(img, truth), ssim(img, truth)};
}

std::vector<ChunkMetrics> evaluate_stage(const TrainState& state, const ChunkStream& stream, int stage, Mode mode) {
  const int T = stream.chunk_count();
  std::vector<std::vector<const TrackedCamera*>> by_chunk(T);
  std::vector<CameraPose<double>> est, truth;
  std::vector<int> est_chunk;
  for (const auto& cam : state.cameras) {
    by_chunk.at(cam.chunk).push_back(&cam);
    est.push_back(cam.pose());
    truth.push_back(stream.chunks[cam.chunk].gt_poses.at(cam.index));
    est_chunk.push_back(cam.chunk);
  }
  PoseErrors errors;
  if (!est.empty()) errors = gauge_aligned_errors(est, truth);

  std::vector<ChunkMetrics> out;
  for (int t = 0; t < T; ++t) {
    const Chunk& chunk = stream.chunks[t];
    ChunkMetrics m;
    m.stage = stage;
    m.mode = mode;
    m.chunk = t;
    m.seen = !by_chunk[t].empty();
    const int n = static_cast<int>(chunk.images.size());
    for (int i = 0; i < n; ++i) {
      CameraPose<double> pose = chunk.gt_poses[i];
      if (m.seen) {
        for (const auto* cam : by_chunk[t])
          if (cam->index == i) pose = cam->pose();
      }
      const ViewScore s = score_view(state.field, pose, stream.intrinsics, stream.render, chunk.images[i]);
      m.psnr += s.psnr / n;
      m.ssim += s.ssim / n;
    }
    if (m.seen) {
      double rot = 0.0, trans = 0.0;
      int count = 0;
      for (std::size_t c = 0; c < est.size(); ++c) {
        if (est_chunk[c] != t) continue;
        rot += errors.rot_deg[c];
        trans += errors.trans[c];
        ++count;
      }
      m.mean_rot_err_deg = rot / count;
      m.mean_trans_err = trans / count;
    } else {
      m.mean_rot_err_deg = std::numeric_limits<double>::quiet_NaN();
      m.mean_trans_err = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(m);
  }
  return out;
}

std::string metrics_csv_header() { return "stage,mode,chunk,psnr,ssim,mean_rot_err_deg,mean_trans_err\n"; }

std::string metrics_csv_row(const ChunkMetrics& m) {
  std::ostringstream os;
  os.precision(12);
  os << m.stage << ',' << mode_name(m.mode) << ',' << m.chunk << ',' << m.psnr << ',' << m.ssim << ',';
  if (std::isfinite(m.mean_rot_err_deg)) os << m.mean_rot_err_deg;
  else os << "nan";
  os << ',';
  if (std::isfinite(m.mean_trans_err)) os << m.mean_trans_err;
  else os << "nan";
  os << '\n';
  return os.str();
}

FitResult incremental_fit(const ChunkStream& stream, const TrainConfig& cfg, Mode mode, const StageCallback& on_stage) {
  cfg.validate();
  if (stream.chunk_count() < 1) throw InvalidArgument("incremental_fit: empty stream");
  const Intrinsics& k = stream.intrinsics;
  const RenderSettings& rs = stream.render;
  const bool refine = mode != Mode::kNoRefine;

  FitResult result;
  result.state = make_initial_state(stream.bounds, cfg);
  TrainState& state = result.state;

  for (int t = 0; t < stream.chunk_count(); ++t) {
    const Chunk& chunk = stream.chunks[t];
    StageReport report;
    report.stage = t;
    try {
      // Frozen copy of the field trained on chunks 0..t-1.
      const VoxelRadianceField<double> teacher = state.field;
      report.teacher_checksum_before = teacher.checksum();

      const int n_past = static_cast<int>(state.cameras.size());
      std::vector<CameraPose<double>> new_poses;
      if (t == 0) {
        // The first estimate defines the reference coordinate system.
        GaugeNoise noise = cfg.noise;
        noise.identity_gauge = true;
        noise.gauge_seed = stage_seed(cfg.noise.gauge_seed, t);
        new_poses = simulate_sfm(chunk.gt_poses, noise);
      } else {
        std::vector<CameraPose<double>> past_poses;
        std::vector<double> rewards;
        for (const auto& cam : state.cameras) {
          past_poses.push_back(cam.pose());
          rewards.push_back(cam.reward);
        }
        const PoseGraph graph = build_graph(past_poses, rewards);
        SelectionConfig sel;
        sel.d = std::min(cfg.d_select, n_past);
        sel.s_th = cfg.s_th;
        sel.lambda = cfg.lambda;
        report.selected = greedy_order(graph, sel);

        // Views rendered from the teacher at the selected poses join the new
        // images; the simulated estimator treats each render as taken from
        // exactly the pose it was rendered at.
        std::vector<CameraPose<double>> group;
        for (int idx : report.selected) group.push_back(past_poses[idx]);
        group.insert(group.end(), chunk.gt_poses.begin(), chunk.gt_poses.end());
        GaugeNoise noise = cfg.noise;
        noise.identity_gauge = false;
        noise.gauge_seed = stage_seed(cfg.noise.gauge_seed, t);
        const auto estimated = simulate_sfm(group, noise);

        const std::size_t d = report.selected.size();
        new_poses.assign(estimated.begin() + static_cast<std::ptrdiff_t>(d), estimated.end());
        if (mode != Mode::kNoTransfer) {
          std::vector<Correspondence> corr;
          for (std::size_t i = 0; i < d; ++i) corr.push_back({group[i], estimated[i]});
          report.transfer = compute_transfer(corr);
          new_poses = apply_transfer(report.transfer, new_poses);
        }
      }

      std::vector<int> new_ids;
      for (std::size_t n = 0; n < new_poses.size(); ++n) {
        TrackedCamera cam;
        cam.id = static_cast<int>(state.cameras.size());
        cam.chunk = t;
        cam.index = static_cast<int>(n);
        cam.base = new_poses[n];
        new_ids.push_back(cam.id);
        state.cameras.push_back(cam);
      }

      RayBatch replay;
      if (t > 0 && mode != Mode::kNoReplay) {
        std::vector<int> past(n_past);
        for (int i = 0; i < n_past; ++i) past[i] = i;
        replay = distill_targets(teacher, state, past, k, rs);
      }
      report.replay_rays = replay.size();

      report.log = train_stage(state, current_rays(new_ids, chunk.images), replay, k, rs, cfg, refine, t);
      report.teacher_checksum_after = teacher.checksum();
    } catch (const Diverged&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + std::to_string(t) + ": " + e.what());
    }

    auto metrics = evaluate_stage(state, stream, t, mode);
    if (on_stage) on_stage(t, state, metrics);
    result.metrics.insert(result.metrics.end(), metrics.begin(), metrics.end());
    result.stages.push_back(std::move(report));
  }
  return result;
}

}  // namespace ilnerf

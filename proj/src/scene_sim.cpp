#include "ilnerf/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ilnerf {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Positive inside, negative outside, roughly the distance to the surface.
double signed_inside(const Blob& b, const Eigen::Vector3d& x) {
  if (b.is_box) {
    const Eigen::Vector3d q = (x - b.center).cwiseAbs() - b.half_size;
    const double outside = q.cwiseMax(0.0).norm();
    const double inside = std::min(q.maxCoeff(), 0.0);
    return -(outside + inside);
  }
  return b.half_size.x() - (x - b.center).norm();
}

double logit(double p) {
  p = std::clamp(p, 1e-4, 1.0 - 1e-4);
  return std::log(p / (1.0 - p));
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
       2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
       2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

}  // namespace

SyntheticScene generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticScene scene;
  scene.seed = seed;
  const int count = cfg.spheres + cfg.boxes;
  const double inner = 0.55 * cfg.half_extent;
  for (int i = 0; i < count; ++i) {
    Blob b;
    b.is_box = i >= cfg.spheres;
    b.center = Eigen::Vector3d(unit(rng), unit(rng), unit(rng)).array() * 2.0 * inner - inner;
    const double size = cfg.half_extent * (0.2 + 0.15 * unit(rng));
    b.half_size = Eigen::Vector3d::Constant(size);
    // Hues spread around the wheel so blobs are distinguishable.
    const double hue = std::fmod(static_cast<double>(i) / count + 0.1 * unit(rng), 1.0);
    for (int c = 0; c < 3; ++c) {
      b.color[c] = 0.55 + 0.4 * std::cos(2.0 * std::numbers::pi * (hue - c / 3.0));
    }
    b.texture_freq = 5.0 + 4.0 * unit(rng);
    scene.blobs.push_back(b);
  }

  Bounds<double> bounds;
  bounds.lo = Eigen::Vector3d::Constant(-cfg.half_extent);
  bounds.hi = Eigen::Vector3d::Constant(cfg.half_extent);
  scene.gt_field = VoxelRadianceField<double>(Eigen::Vector3i::Constant(cfg.grid_res), bounds);

  auto& dens = scene.gt_field.density_raw();
  auto& col = scene.gt_field.color_raw();
  const double band = 1.5 * (2.0 * cfg.half_extent) / (cfg.grid_res - 1);
  for (int k = 0; k < cfg.grid_res; ++k) {
    for (int j = 0; j < cfg.grid_res; ++j) {
      for (int i = 0; i < cfg.grid_res; ++i) {
        const Eigen::Vector3d x = scene.gt_field.vertex(i, j, k);
        double best = -1e30;
        const Blob* owner = &scene.blobs.front();
        for (const auto& b : scene.blobs) {
          const double s = signed_inside(b, x);
          if (s > best) {
            best = s;
            owner = &b;
          }
        }
        const auto idx = scene.gt_field.index(i, j, k);
        dens[idx] = -8.0 + 28.0 * smoothstep(-band, band, best);
        const double f = owner->texture_freq;
        const double pattern = std::sin(f * x.x()) * std::sin(f * x.y()) * std::sin(f * x.z());
        for (int c = 0; c < 3; ++c) col[3 * idx + c] = logit(owner->color[c] * (0.7 + 0.3 * pattern));
      }
    }
  }
  scene.gt_field.round_to_float();
  return scene;
}

int ChunkStream::total_images() const {
  int n = 0;
  for (const auto& c : chunks) n += static_cast<int>(c.images.size());
  return n;
}

RenderSettings orbit_render_settings(const Bounds<double>& bounds, double orbit_radius, int samples) {
  const double reach = std::max(bounds.lo.norm(), bounds.hi.norm());
  RenderSettings rs;
  rs.near = std::max(0.0, orbit_radius - reach);
  rs.far = orbit_radius + reach;
  rs.samples = samples;
  return rs;
}

std::vector<CameraPose<double>> orbit_trajectory(const StreamConfig& cfg) {
  const int total = cfg.chunks * cfg.per_chunk;
  const double step = total > 1 ? cfg.arc_deg / (total - 1) : 0.0;
  const double elev = cfg.elevation_deg * kDeg;
  std::vector<CameraPose<double>> poses;
  poses.reserve(total);
  for (int i = 0; i < total; ++i) {
    const double az = (cfg.start_deg + i * step) * kDeg;
    const Eigen::Vector3d eye(cfg.orbit_radius * std::cos(az) * std::cos(elev),
                              cfg.orbit_radius * std::sin(az) * std::cos(elev), cfg.orbit_radius * std::sin(elev));
    poses.push_back(look_at<double>(eye, Eigen::Vector3d::Zero()));
  }
  return poses;
}

ChunkStream generate_stream(const SyntheticScene& scene, const StreamConfig& cfg) {
  if (cfg.chunks < 1 || cfg.per_chunk < 1) throw InvalidArgument("generate_stream: need T >= 1 and N >= 1");
  ChunkStream stream;
  stream.intrinsics = Intrinsics::from_fov(cfg.width, cfg.height, cfg.fov_deg * kDeg);
  stream.render = orbit_render_settings(scene.bounds(), cfg.orbit_radius, cfg.samples);
  stream.bounds = scene.bounds();
  const auto poses = orbit_trajectory(cfg);
  stream.chunks.resize(cfg.chunks);
  for (int t = 0; t < cfg.chunks; ++t) {
    for (int n = 0; n < cfg.per_chunk; ++n) {
      const auto& pose = poses[t * cfg.per_chunk + n];
      stream.chunks[t].gt_poses.push_back(pose);
      stream.chunks[t].images.push_back(render_image(scene.gt_field, pose, stream.intrinsics, stream.render));
    }
  }
  return stream;
}

std::vector<CameraPose<double>> simulate_sfm(const std::vector<CameraPose<double>>& truth, const GaugeNoise& noise) {
  if (truth.empty()) throw InvalidArgument("simulate_sfm: no poses");
  if (noise.sigma_rot < 0 || noise.sigma_trans < 0) throw InvalidArgument("simulate_sfm: negative noise");
  std::mt19937_64 rng(noise.gauge_seed);
  Eigen::Matrix3d q = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  if (!noise.identity_gauge) {
    q = random_rotation(rng);
    std::uniform_real_distribution<double> shift(-3.0, 3.0);
    t = Eigen::Vector3d(shift(rng), shift(rng), shift(rng));
  }
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<CameraPose<double>> out;
  out.reserve(truth.size());
  for (const auto& p : truth) {
    const Eigen::Vector3d a(n01(rng), n01(rng), n01(rng));
    const Eigen::Vector3d dt(n01(rng), n01(rng), n01(rng));
    CameraPose<double> est;
    est.rot = q.transpose() * p.rot;
    if (noise.sigma_rot > 0) est.rot = est.rot * rodrigues<double>(noise.sigma_rot * a);
    est.trans = q.transpose() * (p.trans - t);
    if (noise.sigma_trans > 0) est.trans += noise.sigma_trans * dt;
    out.push_back(est);
  }
  return out;
}

}  // namespace ilnerf

#pragma once

// Synthetic scenes, sequential camera streams and a simulated structure-from-
// motion pose estimator that returns poses in an arbitrary rigid gauge.

#include <cstdint>
#include <vector>

#include "ilnerf/geometry.hpp"
#include "ilnerf/image.hpp"
#include "ilnerf/radiance.hpp"

namespace ilnerf {

struct Blob {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_size = Eigen::Vector3d::Constant(0.3);  // radius for spheres
  bool is_box = false;
  Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
  double texture_freq = 6.0;
};

struct SceneConfig {
  int grid_res = 64;
  double half_extent = 1.5;
  int spheres = 3;
  int boxes = 1;
};

struct SyntheticScene {
  VoxelRadianceField<double> gt_field;
  std::vector<Blob> blobs;
  std::uint64_t seed = 0;

  const Bounds<double>& bounds() const { return gt_field.bounds(); }
};

SyntheticScene generate_scene(std::uint64_t seed, const SceneConfig& cfg = {});

struct StreamConfig {
  int chunks = 4;
  int per_chunk = 8;
  int width = 48;
  int height = 48;
  double fov_deg = 45.0;
  double orbit_radius = 4.0;
  double elevation_deg = 20.0;
  double arc_deg = 180.0;
  double start_deg = 0.0;
  int samples = 64;
};

struct Chunk {
  std::vector<Image> images;
  // Hidden from the trainer; consumed only by the pose simulator and evaluation.
  std::vector<CameraPose<double>> gt_poses;
};

struct ChunkStream {
  std::vector<Chunk> chunks;
  Intrinsics intrinsics;
  RenderSettings render;
  Bounds<double> bounds;

  int chunk_count() const { return static_cast<int>(chunks.size()); }
  int total_images() const;
};

// Near/far planes enclosing the scene box for cameras at `orbit_radius`.
RenderSettings orbit_render_settings(const Bounds<double>& bounds, double orbit_radius, int samples);

// Poses along the orbit arc with equal angular steps, in order.
std::vector<CameraPose<double>> orbit_trajectory(const StreamConfig& cfg);

ChunkStream generate_stream(const SyntheticScene& scene, const StreamConfig& cfg);

struct GaugeNoise {
  double sigma_rot = 0.005;
  double sigma_trans = 0.005;
  std::uint64_t gauge_seed = 0;
  // Keep the input coordinate system (Q = I, t = 0); noise still applies.
  bool identity_gauge = false;
};

// Ground-truth poses re-expressed in one random rigid gauge (Q, t) with
// independent per-pose noise: rot' = Q^T rot J, trans' = Q^T (trans - t) + n.
std::vector<CameraPose<double>> simulate_sfm(const std::vector<CameraPose<double>>& truth, const GaugeNoise& noise);

}  // namespace ilnerf

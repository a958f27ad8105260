#pragma once

// Finite-difference check of render_ray_with_grad over random fields, poses
// and pixels.

#include <random>
#include <string>
#include <vector>

#include "ilnerf/radiance.hpp"
#include "oracles.hpp"

namespace gradcheck {

struct Stats {
  int configs = 0;       // configurations fully checked
  int rejected = 0;      // skipped because a sample sat on a trilinear kink
  int failures = 0;
  int density_checked = 0;
  int color_checked = 0;
  int pose_checked[6] = {0, 0, 0, 0, 0, 0};
  double worst_rel = 0.0;
  std::string first_failure;
};

// Relative error, ignoring partials too small for it to mean anything.
inline double rel_err(double a, double n) {
  const double scale = std::max(std::abs(a), std::abs(n));
  return scale > 1e-3 ? std::abs(a - n) / scale : 0.0;
}

// Random 6^3 field on [-1, 1]^3, a camera about 3 units away aimed near the
// origin, a random pixel and a random small delta.
inline Stats run(int wanted, std::uint64_t seed, double h_field = 1e-4, double h_pose = 1e-5) {
  using namespace ilnerf;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  Stats st;

  Intrinsics k = Intrinsics::from_fov(12, 12, 0.9);
  RenderSettings rs;
  rs.near = 1.0;
  rs.far = 5.0;
  rs.samples = 24;

  int attempts = 0;
  while (st.configs < wanted && attempts < wanted * 20) {
    ++attempts;
    VoxelRadianceField<double> f(Eigen::Vector3i::Constant(6), Bounds<double>{});
    for (auto& v : f.density_raw()) v = -3.0 + 5.0 * u01(rng);
    for (auto& v : f.color_raw()) v = -2.0 + 4.0 * u01(rng);

    const Eigen::Vector3d eye = Eigen::Vector3d(n01(rng), n01(rng), n01(rng)).normalized() * (2.8 + 0.4 * u01(rng));
    const Eigen::Vector3d aim(0.2 * n01(rng), 0.2 * n01(rng), 0.2 * n01(rng));
    Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
    if (std::abs(eye.normalized().dot(up)) > 0.95) up = Eigen::Vector3d::UnitX();
    const CameraPose<double> base = look_at<double>(eye, aim, up);
    PoseDelta<double> delta;
    delta.a = 0.05 * Eigen::Vector3d(n01(rng), n01(rng), n01(rng));
    delta.b = 0.05 * Eigen::Vector3d(n01(rng), n01(rng), n01(rng));
    const int u = 2 + static_cast<int>(u01(rng) * 8);
    const int v = 2 + static_cast<int>(u01(rng) * 8);
    const Eigen::Vector3d target(u01(rng), u01(rng), u01(rng));

    FieldGrad<double> fg(f);
    const auto g = render_ray_with_grad(f, delta, base, k, u, v, target, rs, &fg, true);
    if (g.color.norm() < 1e-6) continue;  // ray missed the box

    auto loss_at = [&](const VoxelRadianceField<double>& ff, const PoseDelta<double>& dd) {
      return render_ray_with_grad(ff, dd, base, k, u, v, target, rs, static_cast<FieldGrad<double>*>(nullptr), false).loss;
    };

    // Pose partials: the loss is only piecewise smooth in the pose, so a
    // configuration is used only when steps h and h/2 agree.
    double pose_fd[6];
    bool kink = false;
    for (int j = 0; j < 6; ++j) {
      auto along = [&](double x) {
        PoseDelta<double> dd = delta;
        if (j < 3) dd.a[j] = x;
        else dd.b[j - 3] = x;
        return loss_at(f, dd);
      };
      const double x0 = j < 3 ? delta.a[j] : delta.b[j - 3];
      const double h = h_pose;
      const double d1 = oracle::central_diff(along, x0, h);
      const double d2 = oracle::central_diff(along, x0, h / 2);
      if (!oracle::close(d1, d2, 1e-5, 1e-8)) {
        kink = true;
        break;
      }
      pose_fd[j] = d2;
    }
    if (kink) {
      ++st.rejected;
      continue;
    }

    auto fail = [&](const std::string& what, double a, double n) {
      ++st.failures;
      if (st.first_failure.empty()) {
        st.first_failure = what + ": analytic " + std::to_string(a) + " numeric " + std::to_string(n);
      }
    };

    for (int j = 0; j < 6; ++j) {
      st.worst_rel = std::max(st.worst_rel, rel_err(g.pose[j], pose_fd[j]));
      if (!oracle::close(g.pose[j], pose_fd[j])) fail("pose[" + std::to_string(j) + "]", g.pose[j], pose_fd[j]);
      ++st.pose_checked[j];
    }

    // Field partials at the voxels with the largest influence plus random ones.
    std::vector<std::size_t> dens_idx, col_idx;
    for (std::size_t i = 0; i < fg.density.size(); ++i)
      if (fg.density[i] != 0.0) dens_idx.push_back(i);
    for (std::size_t i = 0; i < fg.color.size(); ++i)
      if (fg.color[i] != 0.0) col_idx.push_back(i);
    std::shuffle(dens_idx.begin(), dens_idx.end(), rng);
    std::shuffle(col_idx.begin(), col_idx.end(), rng);
    dens_idx.resize(std::min<std::size_t>(dens_idx.size(), 4));
    col_idx.resize(std::min<std::size_t>(col_idx.size(), 4));
    // One parameter the ray never touches must have a zero partial.
    for (std::size_t i = 0; i < fg.density.size(); ++i) {
      if (fg.density[i] == 0.0) {
        dens_idx.push_back(i);
        break;
      }
    }

    for (std::size_t idx : dens_idx) {
      VoxelRadianceField<double> ff = f;
      auto along = [&](double x) {
        ff.density_raw()[idx] = x;
        return loss_at(ff, delta);
      };
      const double n = oracle::central_diff(along, f.density_raw()[idx], h_field);
      st.worst_rel = std::max(st.worst_rel, rel_err(fg.density[idx], n));
      if (!oracle::close(fg.density[idx], n)) fail("density[" + std::to_string(idx) + "]", fg.density[idx], n);
      ++st.density_checked;
    }
    for (std::size_t idx : col_idx) {
      VoxelRadianceField<double> ff = f;
      auto along = [&](double x) {
        ff.color_raw()[idx] = x;
        return loss_at(ff, delta);
      };
      const double n = oracle::central_diff(along, f.color_raw()[idx], h_field);
      st.worst_rel = std::max(st.worst_rel, rel_err(fg.color[idx], n));
      if (!oracle::close(fg.color[idx], n)) fail("color[" + std::to_string(idx) + "]", fg.color[idx], n);
      ++st.color_checked;
    }
    ++st.configs;
  }
  return st;
}

}  // namespace gradcheck

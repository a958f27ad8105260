#include "ilnerf/alignment.hpp"

#include <cmath>
#include <numbers>

namespace ilnerf {

TransferTransform compute_transfer(const std::vector<Correspondence>& corr) {
  if (corr.empty()) throw InvalidArgument("compute_transfer: no correspondences");
  const double inv_d = 1.0 / static_cast<double>(corr.size());

  Eigen::Matrix3d mean_rot = Eigen::Matrix3d::Zero();
  for (const auto& c : corr) mean_rot += c.old_pose.rot * c.new_pose.rot.transpose();
  mean_rot *= inv_d;

  TransferTransform tf;
  tf.d_rot = so3_project(mean_rot);
  for (const auto& c : corr) tf.d_trans += c.old_pose.trans - tf.d_rot * c.new_pose.trans;
  tf.d_trans *= inv_d;
  return tf;
}

CameraPose<double> apply_transfer(const TransferTransform& tf, const CameraPose<double>& pose) {
  return {tf.d_rot * pose.rot, tf.d_rot * pose.trans + tf.d_trans};
}

std::vector<CameraPose<double>> apply_transfer(const TransferTransform& tf,
                                               const std::vector<CameraPose<double>>& poses) {
  std::vector<CameraPose<double>> out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back(apply_transfer(tf, p));
  return out;
}

PoseErrors gauge_aligned_errors(const std::vector<CameraPose<double>>& estimated,
                                const std::vector<CameraPose<double>>& truth) {
  if (estimated.size() != truth.size() || estimated.empty()) {
    throw InvalidArgument("gauge_aligned_errors: pose lists must be nonempty and equal length");
  }
  const auto n = static_cast<Eigen::Index>(estimated.size());

  // The gauge is fitted to whole poses. Centers alone leave the rotation about
  // a short arc's chord nearly unconstrained.
  std::vector<Correspondence> corr;
  corr.reserve(estimated.size());
  for (Eigen::Index i = 0; i < n; ++i) corr.push_back({truth[i], estimated[i]});
  const TransferTransform tf = compute_transfer(corr);

  PoseErrors e;
  for (Eigen::Index i = 0; i < n; ++i) {
    const CameraPose<double> aligned = apply_transfer(tf, estimated[i]);
    e.rot_deg.push_back(rotation_geodesic(aligned.rot, truth[i].rot) * 180.0 / std::numbers::pi);
    e.trans.push_back((aligned.trans - truth[i].trans).norm());
    e.mean_rot_deg += e.rot_deg.back();
    e.mean_trans += e.trans.back();
  }
  e.mean_rot_deg /= static_cast<double>(n);
  e.mean_trans /= static_cast<double>(n);
  return e;
}

}  // namespace ilnerf

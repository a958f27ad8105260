#pragma once

#include <vector>

#include "ilnerf/geometry.hpp"

namespace ilnerf {

// Rigid map from a new pose coordinate system into the reference one:
// rot' = d_rot * rot, trans' = d_rot * trans + d_trans.
struct TransferTransform {
  Eigen::Matrix3d d_rot = Eigen::Matrix3d::Identity();
  Eigen::Vector3d d_trans = Eigen::Vector3d::Zero();
};

// The same camera expressed in the reference (old) and new coordinate systems.
struct Correspondence {
  CameraPose<double> old_pose;
  CameraPose<double> new_pose;
};

// d_rot is the SO(3) projection of the mean of old.rot * new.rot^T; d_trans is
// the mean of old.trans - d_rot * new.trans.
TransferTransform compute_transfer(const std::vector<Correspondence>& corr);

CameraPose<double> apply_transfer(const TransferTransform& tf, const CameraPose<double>& pose);
std::vector<CameraPose<double>> apply_transfer(const TransferTransform& tf,
                                               const std::vector<CameraPose<double>>& poses);

struct PoseErrors {
  std::vector<double> rot_deg;
  std::vector<double> trans;
  double mean_rot_deg = 0.0;
  double mean_trans = 0.0;
};

// Errors of `estimated` against `truth` after removing the rigid gauge
// difference, estimated from all pairs with compute_transfer.
PoseErrors gauge_aligned_errors(const std::vector<CameraPose<double>>& estimated,
                                const std::vector<CameraPose<double>>& truth);

}  // namespace ilnerf

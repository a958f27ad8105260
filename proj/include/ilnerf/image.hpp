#pragma once

#include <Eigen/Core>

namespace ilnerf {

using PixelBlock = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// RGB image with channels in [0, 1]; row v, column u lives at pixels.row(v * width + u).
struct Image {
  int width = 0;
  int height = 0;
  PixelBlock pixels;

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(PixelBlock::Zero(static_cast<Eigen::Index>(w) * h, 3)) {}

  Eigen::Index index(int u, int v) const { return static_cast<Eigen::Index>(v) * width + u; }
  auto at(int u, int v) { return pixels.row(index(u, v)); }
  auto at(int u, int v) const { return pixels.row(index(u, v)); }
};

}  // namespace ilnerf

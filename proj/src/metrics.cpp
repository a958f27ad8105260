#include "ilnerf/metrics.hpp"

#include <array>
#include <cmath>
#include <string>

#include "ilnerf/errors.hpp"

namespace ilnerf {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_same_shape(const Image& a, const Image& b, const char* who) {
  if (a.width != b.width || a.height != b.height) {
    throw InvalidArgument(std::string(who) + ": image dimensions differ");
  }
  if (a.pixels.rows() == 0) throw InvalidArgument(std::string(who) + ": empty image");
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    w[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

using Plane = Eigen::MatrixXd;  // rows = y, cols = x

// Separable "valid" filtering.
Plane filter_valid(const Plane& p, const std::array<double, kWindow>& taps) {
  const Eigen::Index oh = p.rows() - kWindow + 1;
  const Eigen::Index ow = p.cols() - kWindow + 1;
  Plane rows_done = Plane::Zero(p.rows(), ow);
  for (Eigen::Index x = 0; x < ow; ++x)
    for (int t = 0; t < kWindow; ++t) rows_done.col(x) += taps[t] * p.col(x + t);
  Plane out = Plane::Zero(oh, ow);
  for (Eigen::Index y = 0; y < oh; ++y)
    for (int t = 0; t < kWindow; ++t) out.row(y) += taps[t] * rows_done.row(y + t);
  return out;
}

Plane channel(const Image& img, int c) {
  Plane p(img.height, img.width);
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) p(v, u) = img.at(u, v)(c);
  return p;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  check_same_shape(a, b, "mse");
  return (a.pixels - b.pixels).squaredNorm() / static_cast<double>(a.pixels.size());
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / e));
}

double ssim(const Image& a, const Image& b) {
  check_same_shape(a, b, "ssim");
  if (a.width < kWindow || a.height < kWindow) {
    throw InvalidArgument("ssim: images must be at least 11x11");
  }
  const auto taps = gaussian_taps();
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Plane x = channel(a, c);
    const Plane y = channel(b, c);
    const Plane mx = filter_valid(x, taps);
    const Plane my = filter_valid(y, taps);
    const Plane sxx = filter_valid(x.cwiseProduct(x), taps) - mx.cwiseProduct(mx);
    const Plane syy = filter_valid(y.cwiseProduct(y), taps) - my.cwiseProduct(my);
    const Plane sxy = filter_valid(x.cwiseProduct(y), taps) - mx.cwiseProduct(my);
    const Eigen::ArrayXXd num = (2.0 * mx.cwiseProduct(my).array() + kC1) * (2.0 * sxy.array() + kC2);
    const Eigen::ArrayXXd den = (mx.array().square() + my.array().square() + kC1) * (sxx.array() + syy.array() + kC2);
    total += (num / den).mean();
  }
  return total / 3.0;
}

}  // namespace ilnerf

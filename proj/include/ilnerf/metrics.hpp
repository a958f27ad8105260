#pragma once

#include "ilnerf/image.hpp"

namespace ilnerf {

// Returned by psnr() for identical images.
inline constexpr double kPsnrCap = 100.0;

double mse(const Image& a, const Image& b);

// 10 log10(1 / MSE) over all channels, peak value 1.
double psnr(const Image& a, const Image& b);

// Mean local SSIM over valid 11x11 Gaussian windows (sigma 1.5), computed per
// channel and averaged; K1 = 0.01, K2 = 0.03, dynamic range 1.
double ssim(const Image& a, const Image& b);

}  // namespace ilnerf

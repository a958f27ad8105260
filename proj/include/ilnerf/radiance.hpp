#pragma once

// Dense voxel radiance field, ray sampling, volume rendering and its
// analytic gradients.
//
// The field stores unconstrained values on grid vertices:
//   sigma(x) = softplus(trilerp(density_raw, x))
//   c(x)     = sigmoid(trilerp(color_raw, x))
// Outside the bounding box sigma = 0 and c = 0.
//
// Rendering along samples z_1 < ... < z_M:
//   delta_i = exp(-(z_i - z_{i-1}) * sigma(x_i)),   z_0 := z_1 - (z_2 - z_1)
//   T_i     = prod_{j<i} delta_j                    (T_1 = 1)
//   C       = sum_i T_i (1 - delta_i) c(x_i)

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "ilnerf/geometry.hpp"
#include "ilnerf/image.hpp"

namespace ilnerf {

template <typename Scalar>
Scalar softplus(Scalar s) {
  return s > Scalar(30) ? s : std::log1p(std::exp(s));
}

template <typename Scalar>
Scalar sigmoid(Scalar s) {
  if (s >= 0) return Scalar(1) / (Scalar(1) + std::exp(-s));
  const Scalar e = std::exp(s);
  return e / (Scalar(1) + e);
}

template <typename Scalar = double>
struct Bounds {
  Vec3<Scalar> lo = Vec3<Scalar>::Constant(-1);
  Vec3<Scalar> hi = Vec3<Scalar>::Constant(1);
};

// Trilinear stencil of a point inside the grid.
template <typename Scalar>
struct Stencil {
  std::array<std::int64_t, 8> index{};
  std::array<Scalar, 8> weight{};
  // d weight / d grid coordinate, per axis.
  std::array<Vec3<Scalar>, 8> dweight{};
};

template <typename Scalar = double>
class VoxelRadianceField {
 public:
  VoxelRadianceField() = default;

  VoxelRadianceField(const Eigen::Vector3i& resolution, const Bounds<Scalar>& bounds, Scalar density_init = Scalar(0),
                     Scalar color_init = Scalar(0))
      : res_(resolution), bounds_(bounds) {
    if ((resolution.array() < 2).any()) throw InvalidArgument("VoxelRadianceField: resolution must be >= 2 per axis");
    if (!((bounds.hi - bounds.lo).array() > 0).all()) throw InvalidArgument("VoxelRadianceField: empty bounds");
    density_.assign(voxel_count(), density_init);
    color_.assign(3 * voxel_count(), color_init);
    scale_ = (res_.cast<Scalar>().array() - Scalar(1)) / (bounds_.hi - bounds_.lo).array();
  }

  const Eigen::Vector3i& resolution() const { return res_; }
  const Bounds<Scalar>& bounds() const { return bounds_; }
  std::size_t voxel_count() const { return static_cast<std::size_t>(res_.prod()); }

  std::int64_t index(int i, int j, int k) const {
    return i + static_cast<std::int64_t>(res_.x()) * (j + static_cast<std::int64_t>(res_.y()) * k);
  }

  // World position of grid vertex (i, j, k).
  Vec3<Scalar> vertex(int i, int j, int k) const {
    return bounds_.lo + Vec3<Scalar>(Scalar(i), Scalar(j), Scalar(k)).cwiseQuotient(scale_.matrix());
  }

  std::vector<Scalar>& density_raw() { return density_; }
  const std::vector<Scalar>& density_raw() const { return density_; }
  // Interleaved RGB per voxel.
  std::vector<Scalar>& color_raw() { return color_; }
  const std::vector<Scalar>& color_raw() const { return color_; }

  // d grid coordinate / d world coordinate.
  const Eigen::Array<Scalar, 3, 1>& grid_scale() const { return scale_; }

  // False when x lies outside the box.
  bool stencil(const Vec3<Scalar>& x, Stencil<Scalar>& st) const {
    const Eigen::Array<Scalar, 3, 1> g = (x - bounds_.lo).array() * scale_;
    std::array<int, 3> base{};
    std::array<Scalar, 3> f{};
    for (int a = 0; a < 3; ++a) {
      if (!(g[a] >= Scalar(0) && g[a] <= Scalar(res_[a] - 1))) return false;
      int b = static_cast<int>(std::floor(g[a]));
      if (b > res_[a] - 2) b = res_[a] - 2;
      base[a] = b;
      f[a] = g[a] - Scalar(b);
    }
    for (int c = 0; c < 8; ++c) {
      const int ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
      const Scalar wx = ox ? f[0] : Scalar(1) - f[0];
      const Scalar wy = oy ? f[1] : Scalar(1) - f[1];
      const Scalar wz = oz ? f[2] : Scalar(1) - f[2];
      const Scalar sx = ox ? Scalar(1) : Scalar(-1);
      const Scalar sy = oy ? Scalar(1) : Scalar(-1);
      const Scalar sz = oz ? Scalar(1) : Scalar(-1);
      st.index[c] = index(base[0] + ox, base[1] + oy, base[2] + oz);
      st.weight[c] = wx * wy * wz;
      st.dweight[c] = Vec3<Scalar>(sx * wy * wz, wx * sy * wz, wx * wy * sz);
    }
    return true;
  }

  Scalar density_at(const Stencil<Scalar>& st) const {
    Scalar s = 0;
    for (int c = 0; c < 8; ++c) s += st.weight[c] * density_[st.index[c]];
    return s;
  }

  Vec3<Scalar> color_at(const Stencil<Scalar>& st) const {
    Vec3<Scalar> v = Vec3<Scalar>::Zero();
    for (int c = 0; c < 8; ++c) v += st.weight[c] * Eigen::Map<const Vec3<Scalar>>(&color_[3 * st.index[c]]);
    return v;
  }

  // Rounds every parameter to the nearest float, making f32 checkpoints lossless.
  void round_to_float() {
    for (auto& v : density_) v = static_cast<Scalar>(static_cast<float>(v));
    for (auto& v : color_) v = static_cast<Scalar>(static_cast<float>(v));
  }

  // FNV-1a over the raw parameter bytes.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::vector<Scalar>& v) {
      const auto* p = reinterpret_cast<const unsigned char*>(v.data());
      for (std::size_t i = 0; i < v.size() * sizeof(Scalar); ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
      }
    };
    mix(density_);
    mix(color_);
    return h;
  }

 private:
  Eigen::Vector3i res_ = Eigen::Vector3i::Constant(2);
  Bounds<Scalar> bounds_;
  Eigen::Array<Scalar, 3, 1> scale_ = Eigen::Array<Scalar, 3, 1>::Ones();
  std::vector<Scalar> density_;
  std::vector<Scalar> color_;
};

template <typename Scalar>
struct FieldSample {
  Scalar sigma = 0;
  Vec3<Scalar> color = Vec3<Scalar>::Zero();
};

template <typename Scalar>
FieldSample<Scalar> field_query(const VoxelRadianceField<Scalar>& f, const Vec3<Scalar>& x) {
  Stencil<Scalar> st;
  if (!f.stencil(x, st)) return {};
  FieldSample<Scalar> out;
  out.sigma = softplus(f.density_at(st));
  out.color = f.color_at(st).unaryExpr([](Scalar s) { return sigmoid(s); });
  return out;
}

struct RenderSettings {
  double near = 0.0;
  double far = 1.0;
  int samples = 64;
  // Position of each sample inside its depth bin; 0.5 gives bin midpoints.
  double sample_offset = 0.5;
};

template <typename Scalar = double>
struct RaySamples {
  std::vector<Scalar> ts;
  std::vector<Vec3<Scalar>> points;
};

template <typename Scalar>
RaySamples<Scalar> sample_ray(const Ray<Scalar>& ray, double near, double far, int m, double offset = 0.5) {
  if (!(near >= 0 && far > near && std::isfinite(far)) || m < 2) {
    throw InvalidArgument("sample_ray: need 0 <= near < far and m >= 2");
  }
  if (!(offset >= 0 && offset < 1)) throw InvalidArgument("sample_ray: offset must lie in [0, 1)");
  RaySamples<Scalar> s;
  s.ts.resize(m);
  s.points.resize(m);
  const double step = (far - near) / m;
  for (int i = 0; i < m; ++i) {
    s.ts[i] = Scalar(near + (i + offset) * step);
    s.points[i] = ray.origin + s.ts[i] * ray.dir;
  }
  return s;
}

template <typename Scalar = double>
struct RenderResult {
  Vec3<Scalar> color = Vec3<Scalar>::Zero();
  std::vector<Scalar> weights;
  // T_i: fraction of light reaching sample i.
  std::vector<Scalar> transmittance;
  // delta_i: survival across segment i.
  std::vector<Scalar> survival;
};

namespace detail {

template <typename Scalar>
Scalar segment_length(const std::vector<Scalar>& ts, std::size_t i) {
  return i == 0 ? ts[1] - ts[0] : ts[i] - ts[i - 1];
}

}  // namespace detail

template <typename Scalar>
RenderResult<Scalar> render_ray(const VoxelRadianceField<Scalar>& f, const RaySamples<Scalar>& samples) {
  const std::size_t m = samples.ts.size();
  RenderResult<Scalar> r;
  r.weights.resize(m);
  r.transmittance.resize(m);
  r.survival.resize(m);
  Scalar trans = Scalar(1);
  for (std::size_t i = 0; i < m; ++i) {
    const FieldSample<Scalar> q = field_query(f, samples.points[i]);
    const Scalar delta = std::exp(-detail::segment_length(samples.ts, i) * q.sigma);
    r.transmittance[i] = trans;
    r.survival[i] = delta;
    r.weights[i] = trans * (Scalar(1) - delta);
    r.color += r.weights[i] * q.color;
    trans *= delta;
  }
  return r;
}

template <typename Scalar>
Vec3<Scalar> render_pixel(const VoxelRadianceField<Scalar>& f, const CameraPose<Scalar>& pose, const Intrinsics& k,
                          int u, int v, const RenderSettings& rs) {
  return render_ray(f, sample_ray(camera_ray(pose, k, u, v), rs.near, rs.far, rs.samples, rs.sample_offset)).color;
}

template <typename Scalar>
Image render_image(const VoxelRadianceField<Scalar>& f, const CameraPose<Scalar>& pose, const Intrinsics& k,
                   const RenderSettings& rs) {
  if (!k.valid()) throw InvalidArgument("render_image: invalid intrinsics");
  Image img(k.width, k.height);
  for (int v = 0; v < k.height; ++v)
    for (int u = 0; u < k.width; ++u) img.at(u, v) = render_pixel(f, pose, k, u, v, rs).template cast<double>().transpose();
  return img;
}

// Dense gradient buffers shaped like a field's parameters.
template <typename Scalar = double>
struct FieldGrad {
  std::vector<Scalar> density;
  std::vector<Scalar> color;

  FieldGrad() = default;
  explicit FieldGrad(const VoxelRadianceField<Scalar>& f)
      : density(f.density_raw().size(), Scalar(0)), color(f.color_raw().size(), Scalar(0)) {}

  void zero() {
    std::fill(density.begin(), density.end(), Scalar(0));
    std::fill(color.begin(), color.end(), Scalar(0));
  }
};

template <typename Scalar = double>
struct RayGradient {
  Scalar loss = 0;
  Vec3<Scalar> color = Vec3<Scalar>::Zero();
  // d loss / d (a, b).
  Eigen::Matrix<Scalar, 6, 1> pose = Eigen::Matrix<Scalar, 6, 1>::Zero();
};

// Squared error of one pixel rendered at the pose (Omega(a) * base.rot,
// base.trans + b), with exact derivatives. Field partials are added into
// `field_grad` when non-null; pose partials are returned.
template <typename Scalar>
RayGradient<Scalar> render_ray_with_grad(const VoxelRadianceField<Scalar>& f, const PoseDelta<Scalar>& delta,
                                         const CameraPose<Scalar>& base, const Intrinsics& k, int u, int v,
                                         const Vec3<Scalar>& target, const RenderSettings& rs,
                                         FieldGrad<Scalar>* field_grad, bool want_pose_grad = true) {
  const CameraPose<Scalar> pose = apply_delta(base, delta);
  const Ray<Scalar> ray = camera_ray(pose, k, u, v);
  const RaySamples<Scalar> samples = sample_ray(ray, rs.near, rs.far, rs.samples, rs.sample_offset);
  const std::size_t m = samples.ts.size();

  struct Sample {
    bool inside = false;
    Stencil<Scalar> st;
    Scalar s = 0, sigma = 0, dt = 0, delta = 1, trans = 1, w = 0;
    Vec3<Scalar> c = Vec3<Scalar>::Zero();
  };
  std::vector<Sample> sm(m);

  RayGradient<Scalar> out;
  Scalar trans = Scalar(1);
  for (std::size_t i = 0; i < m; ++i) {
    Sample& p = sm[i];
    p.dt = detail::segment_length(samples.ts, i);
    p.inside = f.stencil(samples.points[i], p.st);
    if (p.inside) {
      p.s = f.density_at(p.st);
      p.sigma = softplus(p.s);
      p.c = f.color_at(p.st).unaryExpr([](Scalar x) { return sigmoid(x); });
    }
    p.delta = std::exp(-p.dt * p.sigma);
    p.trans = trans;
    p.w = trans * (Scalar(1) - p.delta);
    out.color += p.w * p.c;
    trans *= p.delta;
  }

  const Vec3<Scalar> resid = out.color - target;
  out.loss = resid.squaredNorm();
  const Vec3<Scalar> g = Scalar(2) * resid;

  Vec3<Scalar> d_origin = Vec3<Scalar>::Zero();
  Vec3<Scalar> d_dir = Vec3<Scalar>::Zero();
  Vec3<Scalar> suffix = Vec3<Scalar>::Zero();  // sum_{k>i} w_k c_k
  for (std::size_t ii = m; ii-- > 0;) {
    const Sample& p = sm[ii];
    if (p.inside) {
      const Scalar next_trans = p.trans * p.delta;
      const Scalar d_sigma = p.dt * g.dot(next_trans * p.c - suffix);
      const Scalar d_s = d_sigma * sigmoid(p.s);
      const Vec3<Scalar> d_cr = (p.w * g).cwiseProduct(p.c.cwiseProduct(Vec3<Scalar>::Ones() - p.c));

      if (field_grad) {
        for (int c = 0; c < 8; ++c) {
          const auto idx = p.st.index[c];
          const Scalar wc = p.st.weight[c];
          field_grad->density[idx] += wc * d_s;
          field_grad->color[3 * idx + 0] += wc * d_cr[0];
          field_grad->color[3 * idx + 1] += wc * d_cr[1];
          field_grad->color[3 * idx + 2] += wc * d_cr[2];
        }
      }
      if (want_pose_grad) {
        Vec3<Scalar> d_grid = Vec3<Scalar>::Zero();
        const auto& dens = f.density_raw();
        const auto& col = f.color_raw();
        for (int c = 0; c < 8; ++c) {
          const auto idx = p.st.index[c];
          const Scalar val = d_s * dens[idx] + d_cr[0] * col[3 * idx] + d_cr[1] * col[3 * idx + 1] +
                             d_cr[2] * col[3 * idx + 2];
          d_grid += val * p.st.dweight[c];
        }
        const Vec3<Scalar> d_x = d_grid.cwiseProduct(f.grid_scale().matrix());
        d_origin += d_x;
        d_dir += samples.ts[ii] * d_x;
      }
    }
    suffix += p.w * p.c;
  }

  if (want_pose_grad) {
    const Vec3<Scalar> unit_dir = (base.rot * camera_direction<Scalar>(k, u, v)).normalized();
    const auto dR = rodrigues_jacobian(delta.a);
    for (int j = 0; j < 3; ++j) out.pose[j] = d_dir.dot(dR[j] * unit_dir);
    out.pose.template tail<3>() = d_origin;
  }
  return out;
}

}  // namespace ilnerf

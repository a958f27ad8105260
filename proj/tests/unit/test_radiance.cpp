#include "doctest.h"

#include <random>

#include "gradcheck.hpp"
#include "ilnerf/radiance.hpp"
#include "oracles.hpp"

using namespace ilnerf;
using Eigen::Vector3d;

namespace {

VoxelRadianceField<double> random_field(std::mt19937_64& rng, int res = 5) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  VoxelRadianceField<double> f(Eigen::Vector3i::Constant(res), Bounds<double>{});
  for (auto& v : f.density_raw()) v = u(rng);
  for (auto& v : f.color_raw()) v = u(rng);
  return f;
}

Ray<double> random_ray(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Ray<double> r;
  r.origin = Vector3d(n(rng), n(rng), n(rng)).normalized() * 2.5;
  r.dir = (Vector3d(0.3 * n(rng), 0.3 * n(rng), 0.3 * n(rng)) - r.origin).normalized();
  return r;
}

}  // namespace

TEST_CASE("field construction and checks") {
  CHECK_THROWS_AS(VoxelRadianceField<double>(Eigen::Vector3i(1, 4, 4), Bounds<double>{}), InvalidArgument);
  Bounds<double> flat;
  flat.hi.x() = flat.lo.x();
  CHECK_THROWS_AS(VoxelRadianceField<double>(Eigen::Vector3i::Constant(4), flat), InvalidArgument);
  VoxelRadianceField<double> f(Eigen::Vector3i(3, 4, 5), Bounds<double>{}, 0.5, -1.0);
  CHECK(f.voxel_count() == 60);
  CHECK(f.density_raw().size() == 60);
  CHECK(f.color_raw().size() == 180);
  CHECK((f.vertex(2, 3, 4) - Vector3d(1, 1, 1)).norm() < 1e-15);
}

TEST_CASE("field_query") {
  VoxelRadianceField<double> f(Eigen::Vector3i::Constant(3), Bounds<double>{}, 0.3, 0.7);
  const auto q = field_query(f, Vector3d(0.2, -0.4, 0.9));
  CHECK(q.sigma == doctest::Approx(std::log1p(std::exp(0.3))).epsilon(1e-14));
  CHECK(q.color.x() == doctest::Approx(1 / (1 + std::exp(-0.7))).epsilon(1e-14));

  // Exactly at a vertex.
  f.density_raw()[f.index(1, 2, 0)] = 4.0;
  CHECK(field_query(f, f.vertex(1, 2, 0)).sigma == doctest::Approx(softplus(4.0)).epsilon(1e-14));

  // Midway between two vertices differing only in density.
  const Vector3d mid = 0.5 * (f.vertex(1, 2, 0) + f.vertex(2, 2, 0));
  CHECK(field_query(f, mid).sigma == doctest::Approx(softplus(0.5 * (4.0 + 0.3))).epsilon(1e-14));

  const auto out = field_query(f, Vector3d(1.5, 0, 0));
  CHECK(out.sigma == 0.0);
  CHECK(out.color == Vector3d::Zero());
}

TEST_CASE("activations stay in range and are stable") {
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(800.0) == 800.0);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("sample_ray") {
  Ray<double> r;
  r.origin = Vector3d(1, 2, 3);
  r.dir = Vector3d(0, 1, 0);
  auto s = sample_ray(r, 0.0, 1.0, 2);
  CHECK(s.ts == std::vector<double>{0.25, 0.75});
  s = sample_ray(r, 0.0, 4.0, 4);
  CHECK(s.ts == std::vector<double>{0.5, 1.5, 2.5, 3.5});
  for (std::size_t i = 0; i < s.ts.size(); ++i) CHECK(s.points[i] == r.origin + s.ts[i] * r.dir);
  CHECK_THROWS_AS(sample_ray(r, 1.0, 1.0, 4), InvalidArgument);
  CHECK_THROWS_AS(sample_ray(r, -1.0, 1.0, 4), InvalidArgument);
  CHECK_THROWS_AS(sample_ray(r, 0.0, 1.0, 1), InvalidArgument);
}

TEST_CASE("render_ray hand-computed two-sample case") {
  // Field with sigma = ln 2 everywhere in [-1,1]^3 and colours red then green
  // along +x. Softplus^{-1}(ln 2) = 0.
  VoxelRadianceField<double> f(Eigen::Vector3i(2, 2, 2), Bounds<double>{}, 0.0, 0.0);
  const double big = 40.0;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j) {
      const auto left = f.index(0, j, k), right = f.index(1, j, k);
      f.color_raw()[3 * left + 0] = big;
      f.color_raw()[3 * left + 1] = -big;
      f.color_raw()[3 * left + 2] = -big;
      f.color_raw()[3 * right + 0] = -big;
      f.color_raw()[3 * right + 1] = big;
      f.color_raw()[3 * right + 2] = -big;
    }
  RaySamples<double> s;
  s.ts = {1.0, 2.0};
  s.points = {Vector3d(-1, 0, 0), Vector3d(1, 0, 0)};
  const auto r = render_ray(f, s);
  CHECK(r.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.weights[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK((r.color - Vector3d(0.5, 0.25, 0)).norm() < 1e-12);
  CHECK(r.transmittance[0] == 1.0);
}

TEST_CASE("render_ray agrees with explicit compositing") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto f = random_field(rng);
    const auto s = sample_ray(random_ray(rng), 0.5, 4.5, 16);
    std::vector<double> sigma, gaps;
    std::vector<Vector3d> color;
    for (std::size_t j = 0; j < s.ts.size(); ++j) {
      const auto q = field_query(f, s.points[j]);
      sigma.push_back(q.sigma);
      color.push_back(q.color);
      gaps.push_back(0.25);
    }
    CHECK((render_ray(f, s).color - oracle::composite(sigma, color, gaps)).norm() < 1e-12);
  }
}

TEST_CASE("rendering identities") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto f = random_field(rng);
    const auto r = render_ray(f, sample_ray(random_ray(rng), 0.5, 4.5, 24));
    double sum = 0.0, survive = 1.0;
    for (std::size_t j = 0; j < r.weights.size(); ++j) {
      CHECK(r.weights[j] >= 0.0);
      CHECK(r.weights[j] <= 1.0);
      sum += r.weights[j];
      survive *= r.survival[j];
    }
    CHECK(std::abs(sum - (1.0 - survive)) < 1e-9);
    CHECK(sum <= 1.0 + 1e-6);
    CHECK((r.color.array() >= 0).all());
    CHECK((r.color.array() <= 1).all());
  }
}

TEST_CASE("monotone occlusion") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    auto f = random_field(rng);
    const auto s = sample_ray(random_ray(rng), 0.5, 4.5, 16);
    const auto before = render_ray(f, s);
    // Raise density near one sample.
    const std::size_t j = 3 + i % 8;
    Stencil<double> st;
    if (!f.stencil(s.points[j], st)) continue;
    for (int c = 0; c < 8; ++c) f.density_raw()[st.index[c]] += 2.0;
    const auto after = render_ray(f, s);
    // Samples behind every raised stencil.
    std::size_t last_touched = 0;
    for (std::size_t k = 0; k < s.ts.size(); ++k) {
      Stencil<double> sk;
      if (!f.stencil(s.points[k], sk)) continue;
      for (int c = 0; c < 8; ++c)
        for (int d = 0; d < 8; ++d)
          if (sk.index[c] == st.index[d]) last_touched = std::max(last_touched, k);
    }
    for (std::size_t k = last_touched + 1; k < s.ts.size(); ++k) CHECK(after.weights[k] <= before.weights[k] + 1e-15);
  }
}

TEST_CASE("empty and opaque fields") {
  VoxelRadianceField<double> empty(Eigen::Vector3i::Constant(4), Bounds<double>{}, -800.0, 0.3);
  const Intrinsics k = Intrinsics::from_fov(12, 12, 0.8);
  const CameraPose<double> cam = look_at<double>(Vector3d(0, -3, 0), Vector3d::Zero());
  RenderSettings rs;
  rs.near = 1.0;
  rs.far = 5.0;
  const Image black = render_image(empty, cam, k, rs);
  CHECK(black.pixels.cwiseAbs().maxCoeff() == 0.0);

  // Opaque first sample.
  VoxelRadianceField<double> solid(Eigen::Vector3i::Constant(4), Bounds<double>{}, 200.0, 0.0);
  solid.color_raw()[0] = 1.0;
  RaySamples<double> s;
  s.ts = {0.0, 0.5, 1.0};
  s.points = {Vector3d(-1, -1, -1), Vector3d(0, 0, 0), Vector3d(0.5, 0.5, 0.5)};
  const auto r = render_ray(solid, s);
  CHECK(r.weights[0] >= 1 - 1e-6);
  CHECK((r.color - field_query(solid, s.points[0]).color).norm() < 1e-6);
}

TEST_CASE("single red voxel seen through the principal point") {
  VoxelRadianceField<double> f(Eigen::Vector3i::Constant(5), Bounds<double>{}, -30.0, -5.0);
  const auto centre = f.index(2, 2, 2);
  f.density_raw()[centre] = 30.0;
  f.color_raw()[3 * centre] = 5.0;
  Intrinsics k = Intrinsics::from_fov(9, 9, 0.6);
  const CameraPose<double> cam = look_at<double>(Vector3d(0, -3, 0), Vector3d::Zero());
  RenderSettings rs;
  rs.near = 1.0;
  rs.far = 5.0;
  rs.samples = 128;
  const Image img = render_image(f, cam, k, rs);
  const Eigen::Vector3d centre_px = img.at(4, 4).transpose();
  CHECK(centre_px.x() > 0.8);
  CHECK(centre_px.y() < 0.05);
  CHECK(centre_px == render_pixel(f, cam, k, 4, 4, rs));
  // Bit-identical re-render and per-pixel composition.
  const Image again = render_image(f, cam, k, rs);
  CHECK(img.pixels == again.pixels);
  for (int v = 0; v < 9; ++v)
    for (int u = 0; u < 9; ++u) CHECK(Eigen::Vector3d(img.at(u, v).transpose()) == render_pixel(f, cam, k, u, v, rs));
}

TEST_CASE("render_ray_with_grad: forward agrees with render_pixel") {
  std::mt19937_64 rng(7);
  const auto f = random_field(rng);
  const Intrinsics k = Intrinsics::from_fov(10, 10, 0.8);
  const CameraPose<double> cam = look_at<double>(Vector3d(2.5, 1, 0.5), Vector3d::Zero());
  RenderSettings rs;
  rs.near = 1.0;
  rs.far = 4.5;
  rs.samples = 20;
  const Vector3d c = render_pixel(f, cam, k, 4, 6, rs);
  FieldGrad<double> fg(f);
  const auto g = render_ray_with_grad(f, PoseDelta<double>{}, cam, k, 4, 6, c, rs, &fg, true);
  CHECK((g.color - c).norm() < 1e-14);
  CHECK(g.loss < 1e-28);
  CHECK(g.pose.norm() < 1e-10);
  for (double v : fg.density) CHECK(std::abs(v) < 1e-10);
  for (double v : fg.color) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("render_ray_with_grad: zero density kills colour gradients") {
  VoxelRadianceField<double> f(Eigen::Vector3i::Constant(4), Bounds<double>{}, -800.0, 0.2);
  const Intrinsics k = Intrinsics::from_fov(10, 10, 0.8);
  const CameraPose<double> cam = look_at<double>(Vector3d(0, -3, 0), Vector3d::Zero());
  RenderSettings rs;
  rs.near = 1.0;
  rs.far = 5.0;
  FieldGrad<double> fg(f);
  const auto g = render_ray_with_grad(f, PoseDelta<double>{}, cam, k, 5, 5, Vector3d(1, 1, 1), rs, &fg, true);
  CHECK(g.color == Vector3d::Zero());
  CHECK(g.loss == doctest::Approx(3.0));
  for (double v : fg.color) CHECK(v == 0.0);
}

TEST_CASE("render_ray_with_grad matches finite differences") {
  const gradcheck::Stats st = gradcheck::run(100, 2024);
  INFO(st.first_failure);
  CHECK(st.configs == 100);
  CHECK(st.failures == 0);
  for (int j = 0; j < 6; ++j) CHECK(st.pose_checked[j] == 100);
  CHECK(st.density_checked >= 100);
  CHECK(st.color_checked >= 100);
}

TEST_CASE("checksum and float rounding") {
  std::mt19937_64 rng(8);
  auto f = random_field(rng);
  const auto before = f.checksum();
  auto g = f;
  CHECK(g.checksum() == before);
  g.density_raw()[3] += 1e-12;
  CHECK(g.checksum() != before);
  f.round_to_float();
  const auto rounded = f.checksum();
  f.round_to_float();
  CHECK(f.checksum() == rounded);
}

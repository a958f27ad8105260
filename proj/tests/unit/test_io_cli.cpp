#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ilnerf/cli.hpp"
#include "ilnerf/io.hpp"
#include "ilnerf/metrics.hpp"

using namespace ilnerf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ilnerf_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Image random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(w, h);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) img.pixels.data()[i] = u(rng);
  return img;
}

RunConfig tiny_run() {
  return parse_config(
      "scene_grid_res = 12\n"
      "chunks = 2\nper_chunk = 3\nwidth = 12\nheight = 12\nsamples = 16\n"
      "iters_per_stage = 15\nrays_per_iter = 48\ngrid_res = 8\nd_select = 2\n"
      "sigma_rot = 0.01\nsigma_trans = 0.01\n");
}

}  // namespace

TEST_CASE("ppm and pfm round trips") {
  const fs::path dir = scratch("images");
  const Image img = random_image(7, 5, 1);
  write_ppm(dir / "a.ppm", img);
  const Image back = read_ppm(dir / "a.ppm");
  REQUIRE(back.width == 7);
  REQUIRE(back.height == 5);
  CHECK((back.pixels - img.pixels).cwiseAbs().maxCoeff() <= 0.5 / 255 + 1e-12);

  write_pfm(dir / "a.pfm", img);
  const Image exact = read_pfm(dir / "a.pfm");
  CHECK((exact.pixels - img.pixels).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(exact.pixels == img.pixels.cast<float>().cast<double>());

  CHECK_THROWS_AS(read_ppm(dir / "missing.ppm"), IoError);
  std::ofstream(dir / "junk.ppm") << "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(read_ppm(dir / "junk.ppm"), IoError);
}

TEST_CASE("checkpoint round trip") {
  const fs::path dir = scratch("ckpt");
  Bounds<double> b;
  b.lo = Eigen::Vector3d(-1, -2, -3);
  b.hi = Eigen::Vector3d(1, 2, 3);
  VoxelRadianceField<double> f(Eigen::Vector3i(3, 4, 5), b);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 2);
  for (auto& v : f.density_raw()) v = n(rng);
  for (auto& v : f.color_raw()) v = n(rng);
  f.round_to_float();
  save_checkpoint(dir / "f.ilnf", f);
  const auto g = load_checkpoint(dir / "f.ilnf");
  CHECK(g.resolution() == f.resolution());
  CHECK(g.bounds().lo == b.lo);
  CHECK(g.bounds().hi == b.hi);
  CHECK(g.checksum() == f.checksum());
  CHECK(fs::file_size(dir / "f.ilnf") == 4 + 4 + 12 + 48 + 4 * 60 * 4);

  std::string bytes = slurp(dir / "f.ilnf");
  bytes[0] = 'X';
  std::ofstream(dir / "bad.ilnf", std::ios::binary) << bytes;
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ilnf"), IoError);
  std::ofstream(dir / "short.ilnf", std::ios::binary) << slurp(dir / "f.ilnf").substr(0, 100);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ilnf"), IoError);
}

TEST_CASE("pose json round trip") {
  const fs::path dir = scratch("poses");
  PoseFile pf;
  pf.intrinsics = Intrinsics::from_fov(20, 16, 0.7);
  for (int i = 0; i < 4; ++i) {
    CameraRecord r;
    r.id = i;
    r.chunk = i / 2;
    r.index = i % 2;
    r.pose = look_at<double>(Eigen::Vector3d(3, i * 0.37, 1), Eigen::Vector3d::Zero());
    r.reward = -0.01 * i - 1.0 / 3;
    pf.cameras.push_back(r);
  }
  write_poses(dir / "p.json", pf);
  const PoseFile back = read_poses(dir / "p.json");
  REQUIRE(back.cameras.size() == 4);
  CHECK(back.intrinsics.fx == pf.intrinsics.fx);
  CHECK(back.intrinsics.width == 20);
  for (int i = 0; i < 4; ++i) {
    CHECK(back.cameras[i].pose.rot == pf.cameras[i].pose.rot);
    CHECK(back.cameras[i].pose.trans == pf.cameras[i].pose.trans);
    CHECK(back.cameras[i].reward == pf.cameras[i].reward);
    CHECK(back.cameras[i].chunk == pf.cameras[i].chunk);
    CHECK(back.cameras[i].index == pf.cameras[i].index);
  }
  std::ofstream(dir / "broken.json") << "{\"cameras\": [";
  CHECK_THROWS_AS(read_poses(dir / "broken.json"), IoError);
}

TEST_CASE("cmd_simulate exports a readable, reproducible stream") {
  const RunConfig cfg = tiny_run();
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  cmd_simulate(cfg, a);
  cmd_simulate(cfg, b);
  for (const char* f : {"manifest.json", "poses_gt.json", "gt_field.ilnf", "chunk_1/img_2.ppm", "chunk_1/img_2.pfm"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK_FALSE(fs::exists(a / "chunk_2"));

  const ChunkStream s = import_stream(a);
  CHECK(s.chunk_count() == 2);
  CHECK(s.total_images() == 6);
  const auto gt = load_checkpoint(a / "gt_field.ilnf");
  const Image img = render_image(gt, s.chunks[1].gt_poses[2], s.intrinsics, s.render);
  CHECK(psnr(img, s.chunks[1].images[2]) == kPsnrCap);
  CHECK(slurp(a / "manifest.json").find("\"scene_grid_res\": 12") != std::string::npos);

  CHECK_THROWS_AS(import_stream(scratch("empty")), IoError);
}

TEST_CASE("cmd_train, cmd_eval and reproducibility") {
  RunConfig cfg = tiny_run();
  const fs::path sim = scratch("train_sim");
  cmd_simulate(cfg, sim);
  const fs::path out = scratch("train_out"), out2 = scratch("train_out2");
  const FitResult fit = cmd_train(cfg, sim, out);
  cmd_train(cfg, sim, out2);

  const std::string csv = slurp(out / "metrics.csv");
  CHECK(csv == slurp(out2 / "metrics.csv"));
  CHECK(slurp(out / "field.ilnf") == slurp(out2 / "field.ilnf"));
  CHECK(slurp(out / "stage_0" / "field.ilnf") == slurp(out2 / "stage_0" / "field.ilnf"));
  // Header plus T x T rows.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4);
  CHECK(fs::exists(out / "stage_1" / "poses.json"));
  CHECK(fs::exists(out / "config.json"));

  const EvalReport ev = cmd_eval(out / "field.ilnf", out / "poses.json", sim, out / "eval", cfg.mode);
  REQUIRE(ev.chunks.size() == 2);
  for (int t = 0; t < 2; ++t) CHECK(metrics_csv_row(ev.chunks[t]) == metrics_csv_row(fit.metrics[2 + t]));
  CHECK(ev.views.size() == 6);
  CHECK(fs::exists(out / "eval" / "eval_views.csv"));
  CHECK(fs::exists(out / "eval" / "eval_metrics.csv"));

  // Ground truth field at ground truth poses is a perfect reconstruction.
  PoseFile gt_poses = read_poses(sim / "poses_gt.json");
  write_poses(out / "gt_poses.json", gt_poses);
  const EvalReport perfect = cmd_eval(sim / "gt_field.ilnf", out / "gt_poses.json", sim, out / "eval_gt", cfg.mode);
  for (const auto& v : perfect.views) {
    CHECK(v.psnr == kPsnrCap);
    CHECK(v.ssim == doctest::Approx(1.0));
    CHECK(v.rot_err_deg < 1e-6);
    CHECK(v.trans_err < 1e-9);
  }
}

TEST_CASE("cmd_bench") {
  RunConfig cfg;
  cfg.bench.sizes = {8};
  cfg.bench.seeds = {1};
  const fs::path dir = scratch("bench");
  const auto rows = cmd_bench(cfg, dir / "bench.csv");
  bool large = false;
  for (const auto& r : rows) {
    if (r.n == cfg.bench_large_n) {
      large = true;
      CHECK(r.solver == "greedy");
      CHECK(r.micros < 100000);
      CHECK(r.d == cfg.bench_large_d);
    } else if (r.solver == "greedy") {
      CHECK(r.ratio <= 1.0 + 1e-12);
    }
  }
  CHECK(large);
  CHECK(fs::exists(dir / "bench.csv"));
  CHECK(fs::exists(dir / "bench.config.json"));
}

#include "ilnerf/cli.hpp"

#include <fstream>
#include <sstream>

#include "ilnerf/io.hpp"

namespace ilnerf {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

PoseFile pose_file(const TrainState& state, const Intrinsics& k) {
  PoseFile pf;
  pf.intrinsics = k;
  for (const auto& cam : state.cameras) pf.cameras.push_back({cam.id, cam.chunk, cam.index, cam.pose(), cam.reward});
  return pf;
}

}  // namespace

void cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const SyntheticScene scene = generate_scene(cfg.scene_seed, cfg.scene);
  const ChunkStream stream = generate_stream(scene, cfg.stream);
  export_stream(stream, out_dir, cfg.to_json());
  save_checkpoint(out_dir / "gt_field.ilnf", scene.gt_field);
}

FitResult cmd_train(const RunConfig& cfg, const fs::path& stream_dir, const fs::path& out_dir) {
  cfg.validate();
  const ChunkStream stream = import_stream(stream_dir);
  fs::create_directories(out_dir);
  write_text(out_dir / "config.json", cfg.to_json() + "\n");

  const fs::path csv = out_dir / "metrics.csv";
  write_text(csv, metrics_csv_header());
  auto on_stage = [&](int t, const TrainState& state, const std::vector<ChunkMetrics>& metrics) {
    const fs::path dir = out_dir / ("stage_" + std::to_string(t));
    fs::create_directories(dir);
    save_checkpoint(dir / "field.ilnf", state.field);
    write_poses(dir / "poses.json", pose_file(state, stream.intrinsics));
    std::ofstream os(csv, std::ios::binary | std::ios::app);
    if (!os) throw IoError("cannot append to " + csv.string());
    for (const auto& m : metrics) os << metrics_csv_row(m);
  };
  FitResult fit = incremental_fit(stream, cfg.train, cfg.mode, on_stage);
  save_checkpoint(out_dir / "field.ilnf", fit.state.field);
  write_poses(out_dir / "poses.json", pose_file(fit.state, stream.intrinsics));
  return fit;
}

std::vector<BenchRow> cmd_bench(const RunConfig& cfg, const fs::path& out_csv) {
  cfg.validate();
  std::vector<BenchRow> rows = bench_solvers(cfg.bench);
  // Brute force is over budget at this size, so only greedy rows come back.
  BenchConfig large = cfg.bench;
  large.sizes = {cfg.bench_large_n};
  large.d = cfg.bench_large_d;
  const auto extra = bench_solvers(large);
  rows.insert(rows.end(), extra.begin(), extra.end());
  write_text(out_csv, bench_csv(rows));
  fs::path echo = out_csv;
  echo.replace_extension(".config.json");
  write_text(echo, cfg.to_json() + "\n");
  return rows;
}

EvalReport cmd_eval(const fs::path& checkpoint, const fs::path& poses, const fs::path& stream_dir,
                    const fs::path& out_dir, Mode mode) {
  const ChunkStream stream = import_stream(stream_dir);
  const PoseFile pf = read_poses(poses);
  if (pf.cameras.empty()) throw InvalidArgument("eval: no cameras in " + poses.string());

  TrainState state;
  state.field = load_checkpoint(checkpoint);
  int last_chunk = 0;
  std::vector<CameraPose<double>> est, truth;
  for (const auto& rec : pf.cameras) {
    if (rec.chunk < 0 || rec.chunk >= stream.chunk_count() ||
        rec.index >= static_cast<int>(stream.chunks[rec.chunk].images.size())) {
      throw InvalidArgument("eval: camera " + std::to_string(rec.id) + " does not match the stream");
    }
    TrackedCamera cam;
    cam.id = rec.id;
    cam.chunk = rec.chunk;
    cam.index = rec.index;
    cam.base = rec.pose;
    cam.reward = rec.reward;
    state.cameras.push_back(cam);
    est.push_back(rec.pose);
    truth.push_back(stream.chunks[rec.chunk].gt_poses[rec.index]);
    last_chunk = std::max(last_chunk, rec.chunk);
  }

  EvalReport report;
  const PoseErrors errors = gauge_aligned_errors(est, truth);
  for (std::size_t i = 0; i < state.cameras.size(); ++i) {
    const auto& cam = state.cameras[i];
    const ViewScore s = score_view(state.field, cam.base, stream.intrinsics, stream.render,
                                   stream.chunks[cam.chunk].images[cam.index]);
    report.views.push_back({cam.chunk, cam.index, s.psnr, s.ssim, errors.rot_deg[i], errors.trans[i]});
  }
  report.chunks = evaluate_stage(state, stream, last_chunk, mode);

  std::ostringstream views;
  views.precision(12);
  views << "chunk,index,psnr,ssim,rot_err_deg,trans_err\n";
  for (const auto& v : report.views) {
    views << v.chunk << ',' << v.index << ',' << v.psnr << ',' << v.ssim << ',' << v.rot_err_deg << ','
          << v.trans_err << '\n';
  }
  write_text(out_dir / "eval_views.csv", views.str());
  std::string chunks = metrics_csv_header();
  for (const auto& m : report.chunks) chunks += metrics_csv_row(m);
  write_text(out_dir / "eval_metrics.csv", chunks);
  return report;
}

}  // namespace ilnerf

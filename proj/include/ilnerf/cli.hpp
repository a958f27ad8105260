#pragma once

// Command implementations behind the ilnerf tool. Each writes a config echo
// next to its outputs.

#include <filesystem>
#include <string>
#include <vector>

#include "ilnerf/config.hpp"
#include "ilnerf/train.hpp"

namespace ilnerf {

// Scene + stream export, plus <out>/gt_field.ilnf.
void cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir);

// <out>/metrics.csv, <out>/stage_<t>/{field.ilnf,poses.json}, final copies in
// <out>/field.ilnf and <out>/poses.json, and <out>/config.json.
FitResult cmd_train(const RunConfig& cfg, const std::filesystem::path& stream_dir,
                    const std::filesystem::path& out_dir);

// Solver comparison on cfg.bench plus greedy-only rows at the large size.
std::vector<BenchRow> cmd_bench(const RunConfig& cfg, const std::filesystem::path& out_csv);

struct ViewReport {
  int chunk = 0;
  int index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double rot_err_deg = 0.0;
  double trans_err = 0.0;
};

struct EvalReport {
  std::vector<ViewReport> views;
  std::vector<ChunkMetrics> chunks;
};

// Renders every camera in `poses` with the checkpointed field and compares it
// to the stream images; pose errors are gauge-aligned against ground truth.
// Writes <out>/eval_views.csv and <out>/eval_metrics.csv.
EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& poses,
                    const std::filesystem::path& stream_dir, const std::filesystem::path& out_dir, Mode mode);

}  // namespace ilnerf

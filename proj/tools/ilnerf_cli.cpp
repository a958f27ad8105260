#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ilnerf/cli.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string mode;
};

void add_common(CLI::App* cmd, Common& c, bool with_mode) {
  cmd->add_option("--config", c.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "override one config key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "seed override");
  if (with_mode) cmd->add_option("--mode", c.mode, "full, no_replay, no_transfer or no_refine");
}

ilnerf::RunConfig resolve(const Common& c) {
  ilnerf::RunConfig cfg = c.config.empty() ? ilnerf::RunConfig{} : ilnerf::load_config(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ilnerf::InvalidArgument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.mode.empty()) cfg.mode = ilnerf::parse_mode(c.mode);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental voxel radiance field training on chunked camera streams"};
  app.require_subcommand(1);

  Common sim_opts, train_opts, bench_opts;
  std::string sim_out, train_out, train_stream, bench_out;
  std::string eval_ckpt, eval_poses, eval_stream, eval_out, eval_mode = "full";

  auto* sim = app.add_subcommand("simulate", "generate a synthetic scene and export its chunk stream");
  add_common(sim, sim_opts, false);
  sim->add_option("--out", sim_out, "output directory")->required();

  auto* train = app.add_subcommand("train", "incremental training over an exported stream");
  add_common(train, train_opts, true);
  train->add_option("--stream", train_stream, "stream directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", train_out, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "compare the greedy and exhaustive reference selectors");
  add_common(bench, bench_opts, false);
  bench->add_option("--out", bench_out, "output CSV")->required();

  auto* eval = app.add_subcommand("eval", "score a checkpoint and pose file against a stream");
  eval->add_option("--checkpoint", eval_ckpt, "field checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--poses", eval_poses, "pose JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--stream", eval_stream, "stream directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", eval_out, "output directory")->required();
  eval->add_option("--mode", eval_mode, "mode label for the metrics rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (sim->parsed()) {
      auto cfg = resolve(sim_opts);
      if (sim_opts.seed) cfg.scene_seed = *sim_opts.seed;
      ilnerf::cmd_simulate(cfg, sim_out);
      std::cout << "wrote " << sim_out << "\n";
    } else if (train->parsed()) {
      auto cfg = resolve(train_opts);
      if (train_opts.seed) cfg.train.seed = *train_opts.seed;
      const auto fit = ilnerf::cmd_train(cfg, train_stream, train_out);
      for (const auto& m : fit.metrics) {
        if (m.stage + 1 == static_cast<int>(fit.stages.size())) std::cout << ilnerf::metrics_csv_row(m);
      }
    } else if (bench->parsed()) {
      auto cfg = resolve(bench_opts);
      if (bench_opts.seed) cfg.bench.seeds = {*bench_opts.seed};
      const auto rows = ilnerf::cmd_bench(cfg, bench_out);
      std::cout << "wrote " << rows.size() << " rows to " << bench_out << "\n";
    } else if (eval->parsed()) {
      const auto report = ilnerf::cmd_eval(eval_ckpt, eval_poses, eval_stream, eval_out, ilnerf::parse_mode(eval_mode));
      for (const auto& m : report.chunks) std::cout << ilnerf::metrics_csv_row(m);
    }
  } catch (const ilnerf::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ilnerf::Diverged& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

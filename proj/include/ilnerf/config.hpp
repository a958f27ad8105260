#pragma once

// Run configuration shared by the command line tool: a flat `key = value`
// file (with '#' comments) plus command-line overrides.

#include <filesystem>
#include <string>
#include <vector>

#include "ilnerf/pose_graph.hpp"
#include "ilnerf/scene_sim.hpp"
#include "ilnerf/train.hpp"

namespace ilnerf {

struct RunConfig {
  std::uint64_t scene_seed = 7;
  SceneConfig scene;
  StreamConfig stream;
  TrainConfig train;
  Mode mode = Mode::kFull;

  BenchConfig bench;
  // Greedy-only instance mirroring a large real capture.
  int bench_large_n = 194;
  int bench_large_d = 10;

  // Sets one key; throws InvalidArgument for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  void validate() const;

  // Every key with its current value, as a JSON object.
  std::string to_json() const;

  static std::vector<std::string> keys();
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace ilnerf

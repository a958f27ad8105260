#pragma once

// Reward-collection selection of reference cameras.
//
// Nodes are camera centers carrying a reward (the negative training loss of
// that camera); edges are Euclidean distances. A selection picks `d` nodes
// maximizing total reward subject to the shortest open path through the picked
// nodes being at least `s_th` long.

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "ilnerf/geometry.hpp"

namespace ilnerf {

struct PoseGraph {
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> rewards;
  Eigen::MatrixXd edges;

  int size() const { return static_cast<int>(positions.size()); }
};

struct SelectionConfig {
  int d = 1;
  double s_th = 0.0;
  double lambda = 1.0;
};

struct Selection {
  std::vector<int> nodes;
  double total_reward = 0.0;
  double path_length = 0.0;
  bool feasible = false;
};

// Largest subset the exact path DP accepts (2^20 * 20 states).
inline constexpr int kMaxPathNodes = 20;

// C(16, 6) * 2^6 * 6^2: the default enumeration budget.
inline constexpr double kDefaultBruteForceBudget = 8008.0 * 64.0 * 36.0;

PoseGraph build_graph(const std::vector<CameraPose<double>>& poses, const std::vector<double>& rewards);
PoseGraph build_graph(const std::vector<Eigen::Vector3d>& positions, const std::vector<double>& rewards);

// Minimum length of an open path visiting every node of `subset` once, with
// free endpoints (Held-Karp over subsets).
double shortest_hamiltonian_path(const PoseGraph& g, const std::vector<int>& subset);

// Visit order of the greedy walk from the auxiliary start node. No path
// evaluation; this is the part whose cost scales as O(d * N).
std::vector<int> greedy_order(const PoseGraph& g, const SelectionConfig& cfg);

// greedy_order plus reward, path length and feasibility of the result.
Selection greedy_select(const PoseGraph& g, const SelectionConfig& cfg);

// Exhaustive search over all d-subsets. Throws ResourceLimit when
// C(N, d) * 2^d * d^2 exceeds `budget`.
Selection brute_force_select(const PoseGraph& g, const SelectionConfig& cfg,
                             double budget = kDefaultBruteForceBudget);

// Fills rewards/path/feasible for an arbitrary node list.
Selection evaluate_selection(const PoseGraph& g, const SelectionConfig& cfg, std::vector<int> nodes);

// Random instance: positions uniform in the unit cube, rewards uniform in (0, 1].
PoseGraph random_graph(int n, std::uint64_t seed);

double mean_edge_length(const PoseGraph& g);

struct BenchConfig {
  std::vector<int> sizes{8, 10, 12};
  int d = 4;
  double lambda = 1.0;
  // s_th = s_th_factor * mean edge length of each instance.
  double s_th_factor = 0.5;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double budget = kDefaultBruteForceBudget;
};

struct BenchRow {
  std::uint64_t instance_seed = 0;
  int n = 0;
  int d = 0;
  std::string solver;
  double reward = 0.0;
  double path_length = 0.0;
  bool feasible = false;
  double micros = 0.0;
  // Greedy reward over the brute-force optimum; infeasible greedy picks count
  // as zero reward. NaN when no brute-force reference exists.
  double ratio = 0.0;
};

// Runs both solvers on every (size, seed) pair. Brute force is skipped for
// instances over budget. Timings cover the selection algorithms themselves.
std::vector<BenchRow> bench_solvers(const BenchConfig& cfg);

std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace ilnerf

#include "ilnerf/pose_graph.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace ilnerf {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Held-Karp with a caller-owned table so repeated calls do not reallocate.
double held_karp(const Eigen::MatrixXd& edges, const std::vector<int>& nodes, std::vector<double>& dp) {
  const int m = static_cast<int>(nodes.size());
  if (m == 1) return 0.0;
  const std::size_t full = (std::size_t{1} << m) - 1;
  dp.assign((full + 1) * m, std::numeric_limits<double>::infinity());
  for (int i = 0; i < m; ++i) dp[(std::size_t{1} << i) * m + i] = 0.0;
  for (std::size_t mask = 1; mask <= full; ++mask) {
    for (int last = 0; last < m; ++last) {
      const double cur = dp[mask * m + last];
      if (!(mask & (std::size_t{1} << last)) || cur == std::numeric_limits<double>::infinity()) continue;
      for (int next = 0; next < m; ++next) {
        const std::size_t bit = std::size_t{1} << next;
        if (mask & bit) continue;
        double& slot = dp[(mask | bit) * m + next];
        slot = std::min(slot, cur + edges(nodes[last], nodes[next]));
      }
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (int last = 0; last < m; ++last) best = std::min(best, dp[full * m + last]);
  return best;
}

void check_config(const PoseGraph& g, const SelectionConfig& cfg, const char* who) {
  if (cfg.d < 1 || cfg.d > g.size()) {
    throw InvalidArgument(std::string(who) + ": d=" + std::to_string(cfg.d) + " not in [1, " +
                          std::to_string(g.size()) + "]");
  }
  if (!std::isfinite(cfg.lambda) || !std::isfinite(cfg.s_th) || cfg.lambda < 0 || cfg.s_th < 0) {
    throw InvalidArgument(std::string(who) + ": lambda and s_th must be finite and nonnegative");
  }
}

}  // namespace

PoseGraph build_graph(const std::vector<Eigen::Vector3d>& positions, const std::vector<double>& rewards) {
  if (positions.empty()) throw InvalidArgument("build_graph: no cameras");
  if (positions.size() != rewards.size()) throw InvalidArgument("build_graph: positions/rewards length mismatch");
  PoseGraph g;
  g.positions = positions;
  g.rewards = rewards;
  const int n = g.size();
  g.edges = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double e = (positions[i] - positions[j]).norm();
      g.edges(i, j) = e;
      g.edges(j, i) = e;
    }
  }
  return g;
}

PoseGraph build_graph(const std::vector<CameraPose<double>>& poses, const std::vector<double>& rewards) {
  std::vector<Eigen::Vector3d> centers;
  centers.reserve(poses.size());
  for (const auto& p : poses) centers.push_back(p.center());
  return build_graph(centers, rewards);
}

double shortest_hamiltonian_path(const PoseGraph& g, const std::vector<int>& subset) {
  if (subset.empty()) throw InvalidArgument("shortest_hamiltonian_path: empty subset");
  if (static_cast<int>(subset.size()) > kMaxPathNodes) {
    throw ResourceLimit("shortest_hamiltonian_path: subset of " + std::to_string(subset.size()) +
                        " nodes exceeds the exact DP limit");
  }
  for (int idx : subset) {
    if (idx < 0 || idx >= g.size()) throw InvalidArgument("shortest_hamiltonian_path: node index out of range");
  }
  std::vector<double> dp;
  return held_karp(g.edges, subset, dp);
}

std::vector<int> greedy_order(const PoseGraph& g, const SelectionConfig& cfg) {
  check_config(g, cfg, "greedy_select");
  const int n = g.size();
  const double budget_share = cfg.s_th / cfg.d;
  std::vector<char> visited(n, 0);
  std::vector<int> order;
  order.reserve(cfg.d);
  int current = -1;  // the auxiliary start node, at distance 0 from everything
  while (static_cast<int>(order.size()) < cfg.d) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (visited[i]) continue;
      const double e = current < 0 ? 0.0 : g.edges(current, i);
      const double score = g.rewards[i] + cfg.lambda * (budget_share - e);
      if (best < 0 || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    visited[best] = 1;
    order.push_back(best);
    current = best;
  }
  return order;
}

Selection evaluate_selection(const PoseGraph& g, const SelectionConfig& cfg, std::vector<int> nodes) {
  Selection s;
  s.nodes = std::move(nodes);
  for (int i : s.nodes) s.total_reward += g.rewards[i];
  s.path_length = shortest_hamiltonian_path(g, s.nodes);
  s.feasible = s.path_length >= cfg.s_th;
  return s;
}

Selection greedy_select(const PoseGraph& g, const SelectionConfig& cfg) {
  return evaluate_selection(g, cfg, greedy_order(g, cfg));
}

Selection brute_force_select(const PoseGraph& g, const SelectionConfig& cfg, double budget) {
  check_config(g, cfg, "brute_force_select");
  const int n = g.size();
  const int d = cfg.d;
  const double cost = binomial(n, d) * std::ldexp(1.0, d) * d * d;
  if (cost > budget || d > kMaxPathNodes) {
    throw ResourceLimit("brute_force_select: N=" + std::to_string(n) + ", d=" + std::to_string(d) +
                        " exceeds the enumeration budget");
  }

  std::vector<int> combo(d);
  std::iota(combo.begin(), combo.end(), 0);
  std::vector<double> dp;

  bool have_feasible = false;
  Selection best_feasible;
  Selection best_any;
  bool have_any = false;

  while (true) {
    double reward = 0.0;
    for (int i : combo) reward += g.rewards[i];
    const double path = held_karp(g.edges, combo, dp);
    if (path >= cfg.s_th) {
      if (!have_feasible || reward > best_feasible.total_reward) {
        best_feasible = {combo, reward, path, true};
        have_feasible = true;
      }
    }
    if (!have_any || reward > best_any.total_reward) {
      best_any = {combo, reward, path, false};
      have_any = true;
    }

    // Next combination in lexicographic order.
    int i = d - 1;
    while (i >= 0 && combo[i] == n - d + i) --i;
    if (i < 0) break;
    ++combo[i];
    for (int j = i + 1; j < d; ++j) combo[j] = combo[j - 1] + 1;
  }
  return have_feasible ? best_feasible : best_any;
}

PoseGraph random_graph(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::Vector3d> pos(n);
  std::vector<double> rewards(n);
  for (int i = 0; i < n; ++i) {
    pos[i] = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
    rewards[i] = 1.0 - unit(rng);
  }
  return build_graph(pos, rewards);
}

double mean_edge_length(const PoseGraph& g) {
  const int n = g.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) sum += g.edges(i, j);
  return sum / (0.5 * n * (n - 1));
}

namespace {

// Average microseconds per call, repeating fast calls until ~2 ms elapsed.
template <typename F>
double time_micros(F&& f) {
  using clock = std::chrono::steady_clock;
  long reps = 0;
  const auto start = clock::now();
  auto now = start;
  do {
    f();
    ++reps;
    now = clock::now();
  } while (now - start < std::chrono::milliseconds(2));
  return std::chrono::duration<double, std::micro>(now - start).count() / reps;
}

}  // namespace

std::vector<BenchRow> bench_solvers(const BenchConfig& cfg) {
  std::vector<BenchRow> rows;
  for (int n : cfg.sizes) {
    for (std::uint64_t seed : cfg.seeds) {
      const PoseGraph g = random_graph(n, seed);
      SelectionConfig sc;
      sc.d = std::min(cfg.d, n);
      sc.lambda = cfg.lambda;
      sc.s_th = cfg.s_th_factor * mean_edge_length(g);

      std::vector<int> order;
      const double greedy_us = time_micros([&] { order = greedy_order(g, sc); });
      const Selection greedy = evaluate_selection(g, sc, order);

      BenchRow gr{seed, n, sc.d, "greedy", greedy.total_reward, greedy.path_length, greedy.feasible, greedy_us,
                  std::numeric_limits<double>::quiet_NaN()};

      Selection brute;
      double brute_us = 0.0;
      bool have_brute = true;
      try {
        brute_us = time_micros([&] { brute = brute_force_select(g, sc, cfg.budget); });
      } catch (const ResourceLimit&) {
        have_brute = false;
      }
      if (have_brute && brute.total_reward > 0) {
        gr.ratio = (greedy.feasible ? greedy.total_reward : 0.0) / brute.total_reward;
      }
      rows.push_back(gr);
      if (have_brute) {
        rows.push_back({seed, n, sc.d, "brute_force", brute.total_reward, brute.path_length, brute.feasible,
                        brute_us, brute.total_reward > 0 ? 1.0 : std::numeric_limits<double>::quiet_NaN()});
      }
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "instance_seed,n,d,solver,reward,path_length,feasible,micros,ratio\n";
  for (const auto& r : rows) {
    os << r.instance_seed << ',' << r.n << ',' << r.d << ',' << r.solver << ',' << r.reward << ','
       << r.path_length << ',' << (r.feasible ? 1 : 0) << ',' << r.micros << ',';
    if (std::isfinite(r.ratio)) os << r.ratio;
    os << '\n';
  }
  return os.str();
}

}  // namespace ilnerf

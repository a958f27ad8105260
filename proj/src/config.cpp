#include "ilnerf/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ilnerf/io.hpp"
#include "json.hpp"

namespace ilnerf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw InvalidArgument("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long i = std::stoull(v, &pos);
    if (pos != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw InvalidArgument("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument("config: '" + key + "' expects true/false, got '" + v + "'");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& v, F&& conv) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<T>(conv(key, trim(item))));
  if (out.empty()) throw InvalidArgument("config: '" + key + "' expects a comma-separated list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;
using Getter = std::function<nlohmann::json(const RunConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

#define ILNERF_FIELD(name, member, conv)                                                      \
  {                                                                                           \
    name, Field {                                                                             \
      [](RunConfig& c, const std::string& k, const std::string& v) { c.member = conv(k, v); }, \
          [](const RunConfig& c) { return nlohmann::json(c.member); }                         \
    }                                                                                         \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      ILNERF_FIELD("scene_seed", scene_seed, to_u64),
      ILNERF_FIELD("scene_grid_res", scene.grid_res, to_int),
      ILNERF_FIELD("scene_half_extent", scene.half_extent, to_double),
      ILNERF_FIELD("spheres", scene.spheres, to_int),
      ILNERF_FIELD("boxes", scene.boxes, to_int),
      ILNERF_FIELD("chunks", stream.chunks, to_int),
      ILNERF_FIELD("per_chunk", stream.per_chunk, to_int),
      ILNERF_FIELD("width", stream.width, to_int),
      ILNERF_FIELD("height", stream.height, to_int),
      ILNERF_FIELD("fov_deg", stream.fov_deg, to_double),
      ILNERF_FIELD("orbit_radius", stream.orbit_radius, to_double),
      ILNERF_FIELD("elevation_deg", stream.elevation_deg, to_double),
      ILNERF_FIELD("arc_deg", stream.arc_deg, to_double),
      ILNERF_FIELD("start_deg", stream.start_deg, to_double),
      ILNERF_FIELD("samples", stream.samples, to_int),
      ILNERF_FIELD("iters_per_stage", train.iters_per_stage, to_int),
      ILNERF_FIELD("rays_per_iter", train.rays_per_iter, to_int),
      ILNERF_FIELD("lr_field", train.lr_field, to_double),
      ILNERF_FIELD("lr_pose", train.lr_pose, to_double),
      ILNERF_FIELD("field_decay", train.field_decay, to_double),
      ILNERF_FIELD("pose_decay", train.pose_decay, to_double),
      ILNERF_FIELD("pose_decay_every", train.pose_decay_every, to_int),
      ILNERF_FIELD("d_select", train.d_select, to_int),
      ILNERF_FIELD("s_th", train.s_th, to_double),
      ILNERF_FIELD("lambda", train.lambda, to_double),
      ILNERF_FIELD("seed", train.seed, to_u64),
      ILNERF_FIELD("grid_res", train.grid_res, to_int),
      ILNERF_FIELD("init_density_raw", train.init_density_raw, to_double),
      ILNERF_FIELD("init_color_raw", train.init_color_raw, to_double),
      ILNERF_FIELD("jitter", train.jitter, to_bool),
      ILNERF_FIELD("reward_window", train.reward_window, to_double),
      ILNERF_FIELD("sigma_rot", train.noise.sigma_rot, to_double),
      ILNERF_FIELD("sigma_trans", train.noise.sigma_trans, to_double),
      ILNERF_FIELD("gauge_seed", train.noise.gauge_seed, to_u64),
      ILNERF_FIELD("bench_d", bench.d, to_int),
      ILNERF_FIELD("bench_lambda", bench.lambda, to_double),
      ILNERF_FIELD("bench_s_th_factor", bench.s_th_factor, to_double),
      ILNERF_FIELD("bench_large_n", bench_large_n, to_int),
      ILNERF_FIELD("bench_large_d", bench_large_d, to_int),
      {"bench_sizes",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.bench.sizes = to_list<int>(k, v, to_int); },
        [](const RunConfig& c) { return nlohmann::json(c.bench.sizes); }}},
      {"bench_seeds",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.bench.seeds = to_list<std::uint64_t>(k, v, to_u64);
        },
        [](const RunConfig& c) { return nlohmann::json(c.bench.seeds); }}},
      {"mode",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.mode = parse_mode(v); },
        [](const RunConfig& c) { return nlohmann::json(mode_name(c.mode)); }}},
  };
  return table;
}

#undef ILNERF_FIELD

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw InvalidArgument("config: unknown key '" + key + "'");
  it->second.set(*this, key, value);
}

void RunConfig::validate() const {
  train.validate();
  auto fail = [](const std::string& what) { throw InvalidArgument("config: " + what); };
  if (stream.chunks < 1 || stream.per_chunk < 1) fail("chunks and per_chunk must be >= 1");
  if (stream.width < 11 || stream.height < 11) fail("images must be at least 11x11 for SSIM");
  if (!(stream.fov_deg > 0 && stream.fov_deg < 180)) fail("fov_deg must lie in (0, 180)");
  if (stream.samples < 2) fail("samples must be >= 2");
  if (!(scene.half_extent > 0)) fail("scene_half_extent must be > 0");
  if (stream.orbit_radius <= scene.half_extent * std::sqrt(3.0)) fail("orbit_radius must clear the scene box");
  if (scene.grid_res < 2) fail("scene_grid_res must be >= 2");
  if (scene.spheres + scene.boxes < 3 || scene.spheres < 0 || scene.boxes < 0) fail("need at least 3 blobs");
  if (bench.d < 1 || bench_large_d < 1 || bench_large_n < bench_large_d) fail("bad bench sizes");
  for (int n : bench.sizes)
    if (n < 1) fail("bench_sizes must be positive");
}

std::string RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, f] : fields()) j[k] = f.get(*this);
  return j.dump();
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields()) out.push_back(k);
  return out;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ilnerf

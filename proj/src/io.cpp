#include "ilnerf/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace ilnerf {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint and PFM writers assume a little-endian host");

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  return is;
}

// Reads a whitespace-separated header token, skipping '#' comments.
std::string header_token(std::istream& is) {
  std::string tok;
  while (is >> tok) {
    if (tok[0] != '#') return tok;
    std::string rest;
    std::getline(is, rest);
  }
  return {};
}

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const fs::path& path) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated file " + path.string());
  return v;
}

json intrinsics_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsics intrinsics_from(const json& j) {
  Intrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  return k;
}

json read_json(const fs::path& path) {
  auto is = open_in(path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

fs::path image_path(const fs::path& dir, int chunk, int n, const char* ext) {
  return dir / ("chunk_" + std::to_string(chunk)) / ("img_" + std::to_string(n) + ext);
}

}  // namespace

void write_ppm(const fs::path& path, const Image& img) {
  auto os = open_out(path);
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> buf(img.pixels.size());
  for (Eigen::Index i = 0; i < img.pixels.rows(); ++i)
    for (int c = 0; c < 3; ++c)
      buf[3 * i + c] = static_cast<unsigned char>(std::lround(std::clamp(img.pixels(i, c), 0.0, 1.0) * 255.0));
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

Image read_ppm(const fs::path& path) {
  auto is = open_in(path);
  if (header_token(is) != "P6") throw IoError("not a binary PPM: " + path.string());
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(header_token(is));
    h = std::stoi(header_token(is));
    maxval = std::stoi(header_token(is));
  } catch (const std::exception&) {
    throw IoError("bad PPM header in " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PPM in " + path.string());
  is.get();
  Image img(w, h);
  std::vector<unsigned char> buf(img.pixels.size());
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw IoError("truncated PPM " + path.string());
  for (Eigen::Index i = 0; i < img.pixels.rows(); ++i)
    for (int c = 0; c < 3; ++c) img.pixels(i, c) = buf[3 * i + c] / 255.0;
  return img;
}

void write_pfm(const fs::path& path, const Image& img) {
  auto os = open_out(path);
  os << "PF\n" << img.width << ' ' << img.height << "\n-1.0\n";
  for (int v = img.height - 1; v >= 0; --v)
    for (int u = 0; u < img.width; ++u)
      for (int c = 0; c < 3; ++c) put(os, static_cast<float>(img.at(u, v)(c)));
  if (!os) throw IoError("write failed for " + path.string());
}

Image read_pfm(const fs::path& path) {
  auto is = open_in(path);
  if (header_token(is) != "PF") throw IoError("not a colour PFM: " + path.string());
  int w = 0, h = 0;
  double scale = 0;
  try {
    w = std::stoi(header_token(is));
    h = std::stoi(header_token(is));
    scale = std::stod(header_token(is));
  } catch (const std::exception&) {
    throw IoError("bad PFM header in " + path.string());
  }
  if (w <= 0 || h <= 0 || scale >= 0) throw IoError("unsupported PFM (need little-endian) in " + path.string());
  is.get();
  Image img(w, h);
  for (int v = h - 1; v >= 0; --v)
    for (int u = 0; u < w; ++u)
      for (int c = 0; c < 3; ++c) img.at(u, v)(c) = get<float>(is, path);
  return img;
}

void save_checkpoint(const fs::path& path, const VoxelRadianceField<double>& f) {
  auto os = open_out(path);
  os.write("ILNF", 4);
  put<std::uint32_t>(os, kCheckpointVersion);
  for (int a = 0; a < 3; ++a) put<std::uint32_t>(os, static_cast<std::uint32_t>(f.resolution()[a]));
  for (int a = 0; a < 3; ++a) put<double>(os, f.bounds().lo[a]);
  for (int a = 0; a < 3; ++a) put<double>(os, f.bounds().hi[a]);
  for (double v : f.density_raw()) put<float>(os, static_cast<float>(v));
  for (double v : f.color_raw()) put<float>(os, static_cast<float>(v));
  if (!os) throw IoError("write failed for " + path.string());
}

VoxelRadianceField<double> load_checkpoint(const fs::path& path) {
  auto is = open_in(path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "ILNF", 4) != 0) throw IoError("bad checkpoint magic in " + path.string());
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version in " + path.string());
  Eigen::Vector3i res;
  for (int a = 0; a < 3; ++a) res[a] = static_cast<int>(get<std::uint32_t>(is, path));
  Bounds<double> b;
  for (int a = 0; a < 3; ++a) b.lo[a] = get<double>(is, path);
  for (int a = 0; a < 3; ++a) b.hi[a] = get<double>(is, path);
  VoxelRadianceField<double> f(res, b);
  for (double& v : f.density_raw()) v = get<float>(is, path);
  for (double& v : f.color_raw()) v = get<float>(is, path);
  return f;
}

void write_poses(const fs::path& path, const PoseFile& poses) {
  json cams = json::array();
  for (const auto& c : poses.cameras) {
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) rot[3 * r + col] = c.pose.rot(r, col);
    cams.push_back({{"id", c.id},
                    {"chunk", c.chunk},
                    {"index", c.index},
                    {"rot", rot},
                    {"trans", {c.pose.trans.x(), c.pose.trans.y(), c.pose.trans.z()}},
                    {"reward", c.reward}});
  }
  json j = {{"cameras", cams}, {"intrinsics", intrinsics_json(poses.intrinsics)}};
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

PoseFile read_poses(const fs::path& path) {
  const json j = read_json(path);
  PoseFile pf;
  try {
    pf.intrinsics = intrinsics_from(j.at("intrinsics"));
    for (const auto& c : j.at("cameras")) {
      CameraRecord rec;
      rec.id = c.at("id").get<int>();
      rec.chunk = c.value("chunk", 0);
      rec.index = c.value("index", -1);
      rec.reward = c.value("reward", 0.0);
      const auto rot = c.at("rot").get<std::vector<double>>();
      const auto trans = c.at("trans").get<std::vector<double>>();
      if (rot.size() != 9 || trans.size() != 3) throw IoError("bad camera entry in " + path.string());
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) rec.pose.rot(r, col) = rot[3 * r + col];
      rec.pose.trans = Eigen::Vector3d(trans[0], trans[1], trans[2]);
      pf.cameras.push_back(rec);
    }
  } catch (const json::exception& e) {
    throw IoError("bad pose file " + path.string() + ": " + e.what());
  }
  // Files without indices list each chunk's cameras in order.
  std::map<int, int> next;
  for (auto& rec : pf.cameras) {
    int& n = next[rec.chunk];
    if (rec.index < 0) rec.index = n;
    n = rec.index + 1;
  }
  return pf;
}

void export_stream(const ChunkStream& stream, const fs::path& dir, const std::string& config_echo_json) {
  fs::create_directories(dir);
  PoseFile gt;
  gt.intrinsics = stream.intrinsics;
  int id = 0;
  json sizes = json::array();
  for (int t = 0; t < stream.chunk_count(); ++t) {
    const auto& chunk = stream.chunks[t];
    sizes.push_back(chunk.images.size());
    for (std::size_t n = 0; n < chunk.images.size(); ++n) {
      write_ppm(image_path(dir, t, static_cast<int>(n), ".ppm"), chunk.images[n]);
      write_pfm(image_path(dir, t, static_cast<int>(n), ".pfm"), chunk.images[n]);
      gt.cameras.push_back({id++, t, static_cast<int>(n), chunk.gt_poses[n], 0.0});
    }
  }
  write_poses(dir / "poses_gt.json", gt);

  json manifest = {{"chunks", stream.chunk_count()},
                   {"chunk_sizes", sizes},
                   {"intrinsics", intrinsics_json(stream.intrinsics)},
                   {"render", {{"near", stream.render.near}, {"far", stream.render.far}, {"samples", stream.render.samples}}},
                   {"bounds",
                    {{"lo", {stream.bounds.lo.x(), stream.bounds.lo.y(), stream.bounds.lo.z()}},
                     {"hi", {stream.bounds.hi.x(), stream.bounds.hi.y(), stream.bounds.hi.z()}}}}};
  try {
    manifest["config"] = config_echo_json.empty() ? json::object() : json::parse(config_echo_json);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("export_stream: config echo is not JSON: ") + e.what());
  }
  auto os = open_out(dir / "manifest.json");
  os << manifest.dump(2) << '\n';
}

ChunkStream import_stream(const fs::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  ChunkStream stream;
  try {
    stream.intrinsics = intrinsics_from(manifest.at("intrinsics"));
    const auto& r = manifest.at("render");
    stream.render.near = r.at("near").get<double>();
    stream.render.far = r.at("far").get<double>();
    stream.render.samples = r.at("samples").get<int>();
    const auto lo = manifest.at("bounds").at("lo").get<std::vector<double>>();
    const auto hi = manifest.at("bounds").at("hi").get<std::vector<double>>();
    if (lo.size() != 3 || hi.size() != 3) throw IoError("bad bounds in " + dir.string());
    stream.bounds.lo = Eigen::Vector3d(lo[0], lo[1], lo[2]);
    stream.bounds.hi = Eigen::Vector3d(hi[0], hi[1], hi[2]);
    const auto sizes = manifest.at("chunk_sizes").get<std::vector<int>>();
    stream.chunks.resize(sizes.size());
    for (std::size_t t = 0; t < sizes.size(); ++t) {
      for (int n = 0; n < sizes[t]; ++n) {
        const auto pfm = image_path(dir, static_cast<int>(t), n, ".pfm");
        stream.chunks[t].images.push_back(fs::exists(pfm) ? read_pfm(pfm)
                                                          : read_ppm(image_path(dir, static_cast<int>(t), n, ".ppm")));
      }
    }
  } catch (const json::exception& e) {
    throw IoError("bad manifest in " + dir.string() + ": " + e.what());
  }
  const PoseFile gt = read_poses(dir / "poses_gt.json");
  for (const auto& c : gt.cameras) {
    if (c.chunk < 0 || c.chunk >= stream.chunk_count()) throw IoError("poses_gt.json: chunk index out of range");
    stream.chunks[c.chunk].gt_poses.push_back(c.pose);
  }
  for (const auto& c : stream.chunks) {
    if (c.gt_poses.size() != c.images.size()) throw IoError("poses_gt.json does not match the images in " + dir.string());
  }
  return stream;
}

}  // namespace ilnerf

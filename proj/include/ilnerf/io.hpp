#pragma once

// File formats: PPM/PFM images, field checkpoints, pose JSON and exported
// chunk streams.

#include <filesystem>
#include <string>
#include <vector>

#include "ilnerf/geometry.hpp"
#include "ilnerf/image.hpp"
#include "ilnerf/radiance.hpp"
#include "ilnerf/scene_sim.hpp"

namespace ilnerf {

// Raised for unreadable/unwritable or malformed files; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary P6, maxval 255.
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

// Little-endian colour PFM; lossless at float precision.
void write_pfm(const std::filesystem::path& path, const Image& img);
Image read_pfm(const std::filesystem::path& path);

// "ILNF", u32 version, 3 x u32 resolution, 6 x f64 bounds (lo then hi), then
// density_raw and interleaved color_raw as f32, x fastest. All little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& path, const VoxelRadianceField<double>& f);
VoxelRadianceField<double> load_checkpoint(const std::filesystem::path& path);

struct CameraRecord {
  int id = 0;
  int chunk = 0;
  int index = 0;  // position within its chunk
  CameraPose<double> pose;
  double reward = 0.0;
};

struct PoseFile {
  std::vector<CameraRecord> cameras;
  Intrinsics intrinsics;
};

void write_poses(const std::filesystem::path& path, const PoseFile& poses);
PoseFile read_poses(const std::filesystem::path& path);

// Lays out <dir>/chunk_<t>/img_<n>.ppm (plus a lossless .pfm twin),
// <dir>/poses_gt.json and <dir>/manifest.json. `config_echo` is stored
// verbatim under "config" in the manifest.
void export_stream(const ChunkStream& stream, const std::filesystem::path& dir, const std::string& config_echo_json);

// Reads images (PFM when present, else PPM), ground truth poses and render settings.
ChunkStream import_stream(const std::filesystem::path& dir);

}  // namespace ilnerf

#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "mosaic/manipulation.hpp"
#include "mosaic/memory.hpp"

namespace mosaic {

/// {fx,fy,cx,cy,width,height,R:[9],t:[3]}, row-major R, world-to-camera.
nlohmann::json camera_to_json(const Camera& cam);
Camera camera_from_json(const nlohmann::json& j);

/// {R:[9],t:[3],s}
nlohmann::json transform_to_json(const RigidTransform& xf);
RigidTransform transform_from_json(const nlohmann::json& j);

/// Memory directory: manifest.json plus one latent and one depth tensor file
/// per patch. world_points are recomputed from camera + depth on load.
void save_memory(const MosaicMemory& memory,
                 const std::filesystem::path& dir);
MosaicMemory load_memory(const std::filesystem::path& dir);

struct DatasetFrameEntry {
  Camera camera;
  std::filesystem::path image, depth, latent, latent_depth, ppm;
  std::optional<std::filesystem::path> flow;
};

struct RevisitEntry {
  int a = 0, b = 0;
  std::filesystem::path file;
};

struct DatasetManifest {
  uint64_t seed = 0;
  int width = 0, height = 0;
  int downsample = 8;
  int temporal_s = 4;
  std::vector<DatasetFrameEntry> frames;
  std::vector<RevisitEntry> revisit_pairs;
};

DatasetManifest load_dataset(const std::filesystem::path& dir);

}  // namespace mosaic

#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "mosaic/geometry.hpp"
#include "mosaic/tensor.hpp"

namespace mosaic {

/// Latent-grid <-> image-pixel conversion. Latent cell x covers the pixel
/// block [x*ds, (x+1)*ds); its center pixel is (x + 0.5) * ds.
inline double latent_to_pixel(double x, int downsample) {
  return (x + 0.5) * downsample;
}
inline double pixel_to_latent(double u, int downsample) {
  return u / downsample - 0.5;
}

/// A latent patch lifted into 3D: the unit of Mosaic Memory.
struct MemoryPatch {
  uint64_t id = 0;  // 0 = not yet inserted
  Tensor<float> latent;   // (p, p, c)
  Tensor<double> depth;   // (p, p), scene units, all > 0
  Camera source_camera;   // image-resolution camera
  int source_time = 0;    // latent-frame index
  int rope_origin_t = 0;
  int rope_origin_u = 0;  // latent-grid column of the top-left token
  int rope_origin_v = 0;  // latent-grid row
  int latent_downsample = 8;
  std::vector<Eigen::Vector3d> world_points;  // p*p, row-major

  int patch_size() const { return static_cast<int>(depth.dims[0]); }
  int channels() const { return static_cast<int>(latent.dims[2]); }

  const Eigen::Vector3d& world_point(int row, int col) const {
    return world_points[static_cast<size_t>(row) * depth.dims[1] + col];
  }

  /// Image-space center pixel of token (row, col).
  double token_pixel_u(int col) const {
    return latent_to_pixel(rope_origin_u + col, latent_downsample);
  }
  double token_pixel_v(int row) const {
    return latent_to_pixel(rope_origin_v + row, latent_downsample);
  }
};

/// Tiles a latent frame (H, W, c) with depth (H, W) into (H/p)*(W/p) patches
/// and lifts every token into 3D. Throws on indivisible dims or depth <= 0.
std::vector<MemoryPatch> lift_frame(const Tensor<float>& latent_frame,
                                    const Tensor<double>& depth_map,
                                    const Camera& camera, int time,
                                    int patch_size, int latent_downsample = 8);

enum class RetrievalMode { kDense, kSparse };

struct RetrievalParams {
  RetrievalMode mode = RetrievalMode::kDense;
  int stride = 1;  // sparse mode keeps every stride-th patch of the source grid
  const Tensor<uint8_t>* skip_region = nullptr;  // query image space, nonzero = skip
  double occlusion_threshold = 0.25;
  double z_tolerance = 0.01;  // fraction of the nearer depth
  int max_patches = 0;        // 0 = unlimited
  int latent_downsample = 8;  // query latent grid resolution
  bool use_index = true;      // false = brute-force linear scan
};

/// A memory patch reprojected into a query view.
struct RetrievedPatch {
  uint64_t id = 0;
  int query_time = 0;           // the j of the (j, u', v') RoPE triple
  Tensor<double> warped_u;      // (p, p), latent-grid units, fractional
  Tensor<double> warped_v;      // (p, p)
  Tensor<double> warped_depth;  // (p, p), z in the query camera
  Tensor<uint8_t> validity;     // (p, p)
  double occlusion_score = 0.0;
};

class MosaicMemory {
 public:
  MosaicMemory() = default;

  const std::map<uint64_t, MemoryPatch>& patches() const { return patches_; }
  size_t size() const { return patches_.size(); }
  double voxel_size() const { return voxel_size_; }

  /// Fixes the voxel size before the auto-sizing first insert.
  void set_voxel_size(double s);

  /// Inserts patches. id == 0 requests a fresh id; an explicit id must be
  /// unused. Returns the ids actually stored.
  std::vector<uint64_t> insert(std::vector<MemoryPatch> patches);

  void erase_ids(const std::vector<uint64_t>& ids);

  /// Superset of the patches with at least one token inside the query
  /// frustum, found through the voxel index.
  std::vector<uint64_t> candidate_patches(const Camera& query) const;

  std::vector<RetrievedPatch> retrieve(const Camera& query, int query_time,
                                       const RetrievalParams& params = {}) const;

 private:
  struct VoxelKey {
    int64_t x, y, z;
    bool operator==(const VoxelKey&) const = default;
  };
  struct VoxelHash {
    size_t operator()(const VoxelKey& k) const {
      size_t h = 1469598103934665603ull;
      for (int64_t v : {k.x, k.y, k.z}) {
        h ^= static_cast<size_t>(v);
        h *= 1099511628211ull;
      }
      return h;
    }
  };

  VoxelKey voxel_of(const Eigen::Vector3d& p) const;
  std::vector<VoxelKey> patch_voxels(const MemoryPatch& p) const;
  void index_insert(const MemoryPatch& p);
  void index_erase(const MemoryPatch& p);
  void auto_voxel_size(const std::vector<MemoryPatch>& batch);

  std::map<uint64_t, MemoryPatch> patches_;
  std::unordered_map<VoxelKey, std::vector<uint64_t>, VoxelHash> index_;
  double voxel_size_ = 0.0;  // 0 = not yet fixed
  uint64_t next_id_ = 1;
};

}  // namespace mosaic

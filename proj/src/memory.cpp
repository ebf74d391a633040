#include "mosaic/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mosaic {

std::vector<MemoryPatch> lift_frame(const Tensor<float>& latent_frame,
                                    const Tensor<double>& depth_map,
                                    const Camera& camera, int time,
                                    int patch_size, int latent_downsample) {
  if (latent_frame.dims.size() != 3 || depth_map.dims.size() != 2)
    throw std::invalid_argument("lift_frame: latent must be (H,W,c), depth (H,W)");
  const int H = static_cast<int>(latent_frame.dims[0]);
  const int W = static_cast<int>(latent_frame.dims[1]);
  const int c = static_cast<int>(latent_frame.dims[2]);
  if (H != static_cast<int>(depth_map.dims[0]) ||
      W != static_cast<int>(depth_map.dims[1]))
    throw std::invalid_argument("lift_frame: latent/depth shape mismatch");
  if (patch_size < 1 || H % patch_size != 0 || W % patch_size != 0)
    throw std::invalid_argument("lift_frame: dims not divisible by patch size");
  for (double d : depth_map.data)
    if (!(d > 0.0))
      throw std::invalid_argument("lift_frame: non-positive depth");

  const int p = patch_size;
  std::vector<MemoryPatch> out;
  out.reserve(static_cast<size_t>(H / p) * (W / p));
  for (int v0 = 0; v0 < H; v0 += p) {
    for (int u0 = 0; u0 < W; u0 += p) {
      MemoryPatch patch;
      patch.latent = Tensor<float>({static_cast<uint32_t>(p),
                                    static_cast<uint32_t>(p),
                                    static_cast<uint32_t>(c)});
      patch.depth = Tensor<double>({static_cast<uint32_t>(p),
                                    static_cast<uint32_t>(p)});
      patch.source_camera = camera;
      patch.source_time = time;
      patch.rope_origin_t = time;
      patch.rope_origin_u = u0;
      patch.rope_origin_v = v0;
      patch.latent_downsample = latent_downsample;
      patch.world_points.resize(static_cast<size_t>(p) * p);
      for (int r = 0; r < p; ++r) {
        for (int s = 0; s < p; ++s) {
          for (int ch = 0; ch < c; ++ch)
            patch.latent(r, s, ch) = latent_frame(v0 + r, u0 + s, ch);
          const double d = depth_map(v0 + r, u0 + s);
          patch.depth(r, s) = d;
          patch.world_points[static_cast<size_t>(r) * p + s] = back_project(
              camera, patch.token_pixel_u(s), patch.token_pixel_v(r), d);
        }
      }
      out.push_back(std::move(patch));
    }
  }
  return out;
}

void MosaicMemory::set_voxel_size(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("voxel size must be positive");
  if (!patches_.empty())
    throw std::logic_error("voxel size can only be set on an empty store");
  voxel_size_ = s;
}

MosaicMemory::VoxelKey MosaicMemory::voxel_of(const Eigen::Vector3d& p) const {
  return {static_cast<int64_t>(std::floor(p.x() / voxel_size_)),
          static_cast<int64_t>(std::floor(p.y() / voxel_size_)),
          static_cast<int64_t>(std::floor(p.z() / voxel_size_))};
}

std::vector<MosaicMemory::VoxelKey> MosaicMemory::patch_voxels(
    const MemoryPatch& p) const {
  std::vector<VoxelKey> keys;
  keys.reserve(p.world_points.size());
  for (const auto& wp : p.world_points) keys.push_back(voxel_of(wp));
  std::sort(keys.begin(), keys.end(), [](const VoxelKey& a, const VoxelKey& b) {
    return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
  });
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

void MosaicMemory::index_insert(const MemoryPatch& p) {
  for (const auto& k : patch_voxels(p)) index_[k].push_back(p.id);
}

void MosaicMemory::index_erase(const MemoryPatch& p) {
  for (const auto& k : patch_voxels(p)) {
    auto it = index_.find(k);
    if (it == index_.end()) continue;
    auto& ids = it->second;
    ids.erase(std::remove(ids.begin(), ids.end(), p.id), ids.end());
    if (ids.empty()) index_.erase(it);
  }
}

void MosaicMemory::auto_voxel_size(const std::vector<MemoryPatch>& batch) {
  // Median spacing of neighboring tokens inside patches; falls back to a
  // sampled nearest-neighbor search for 1x1 patches.
  std::vector<double> spacings;
  for (const auto& p : batch) {
    const int ps = p.patch_size();
    for (int r = 0; r < ps; ++r)
      for (int s = 0; s + 1 < ps; ++s)
        spacings.push_back(
            (p.world_point(r, s + 1) - p.world_point(r, s)).norm());
  }
  if (spacings.empty()) {
    std::vector<Eigen::Vector3d> pts;
    for (const auto& p : batch)
      for (const auto& wp : p.world_points) pts.push_back(wp);
    const size_t n = std::min<size_t>(pts.size(), 256);
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < n; ++j)
        if (j != i) best = std::min(best, (pts[i] - pts[j]).norm());
      if (std::isfinite(best) && best > 0.0) spacings.push_back(best);
    }
  }
  double median = 1.0;
  if (!spacings.empty()) {
    std::nth_element(spacings.begin(), spacings.begin() + spacings.size() / 2,
                     spacings.end());
    median = spacings[spacings.size() / 2];
  }
  voxel_size_ = std::max(median * 4.0, 1e-9);
}

std::vector<uint64_t> MosaicMemory::insert(std::vector<MemoryPatch> batch) {
  for (const auto& p : batch) {
    if (p.id != 0 && patches_.count(p.id))
      throw std::invalid_argument("insert: duplicate patch id");
    if (p.world_points.size() !=
        static_cast<size_t>(p.patch_size()) * p.patch_size())
      throw std::invalid_argument("insert: world_points not populated");
  }
  if (voxel_size_ == 0.0 && !batch.empty()) auto_voxel_size(batch);
  std::vector<uint64_t> ids;
  ids.reserve(batch.size());
  for (auto& p : batch) {
    if (p.id == 0) p.id = next_id_++;
    next_id_ = std::max(next_id_, p.id + 1);
    ids.push_back(p.id);
    index_insert(p);
    patches_.emplace(p.id, std::move(p));
  }
  return ids;
}

void MosaicMemory::erase_ids(const std::vector<uint64_t>& ids) {
  for (uint64_t id : ids) {
    auto it = patches_.find(id);
    if (it == patches_.end()) continue;
    index_erase(it->second);
    patches_.erase(it);
  }
}

namespace {

// Frustum half-spaces in camera coordinates: a point is inside iff
// n . x_cam >= 0 for every plane (near plane plus the four image borders).
std::array<Eigen::Vector3d, 5> frustum_planes_cam(const Intrinsics& k) {
  return {Eigen::Vector3d{0, 0, 1},
          Eigen::Vector3d{k.fx, 0, k.cx},
          Eigen::Vector3d{-k.fx, 0, k.width - k.cx},
          Eigen::Vector3d{0, k.fy, k.cy},
          Eigen::Vector3d{0, -k.fy, k.height - k.cy}};
}

}  // namespace

std::vector<uint64_t> MosaicMemory::candidate_patches(
    const Camera& query) const {
  if (patches_.empty()) return {};
  const auto planes = frustum_planes_cam(query.intrinsics);
  // World-space affine form of each plane: f(x) = n_w . x + d >= 0.
  std::array<Eigen::Vector3d, 5> n_w;
  std::array<double, 5> d_w;
  for (size_t i = 0; i < planes.size(); ++i) {
    n_w[i] = query.pose.rotation.transpose() * planes[i];
    d_w[i] = planes[i].dot(query.pose.translation);
  }
  std::set<uint64_t> ids;
  for (const auto& [key, cell_ids] : index_) {
    const Eigen::Vector3d lo{key.x * voxel_size_, key.y * voxel_size_,
                             key.z * voxel_size_};
    bool inside = true;
    for (size_t i = 0; i < n_w.size(); ++i) {
      // Positive vertex of the voxel AABB w.r.t. the plane normal.
      Eigen::Vector3d v = lo;
      for (int a = 0; a < 3; ++a)
        if (n_w[i][a] > 0.0) v[a] += voxel_size_;
      if (n_w[i].dot(v) + d_w[i] < 0.0) {
        inside = false;
        break;
      }
    }
    if (inside) ids.insert(cell_ids.begin(), cell_ids.end());
  }
  return {ids.begin(), ids.end()};
}

std::vector<RetrievedPatch> MosaicMemory::retrieve(
    const Camera& query, int query_time, const RetrievalParams& params) const {
  if (params.stride < 1)
    throw std::invalid_argument("retrieve: stride must be >= 1");
  std::vector<uint64_t> ids;
  if (params.use_index) {
    ids = candidate_patches(query);
  } else {
    for (const auto& [id, _] : patches_) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());

  if (params.mode == RetrievalMode::kSparse) {
    std::vector<uint64_t> kept;
    for (uint64_t id : ids) {
      const MemoryPatch& p = patches_.at(id);
      const int ps = p.patch_size();
      if ((p.rope_origin_u / ps) % params.stride == 0 &&
          (p.rope_origin_v / ps) % params.stride == 0)
        kept.push_back(id);
    }
    ids = std::move(kept);
  }

  const int ds = params.latent_downsample;
  const int grid_w = (query.intrinsics.width + ds - 1) / ds;
  const int grid_h = (query.intrinsics.height + ds - 1) / ds;

  // Pass 1: reproject every candidate token and fill the per-cell depth
  // buffer at query latent resolution.
  struct PatchProj {
    uint64_t id;
    std::vector<Reprojection> tokens;  // row-major p*p
  };
  std::vector<PatchProj> projected;
  projected.reserve(ids.size());
  std::vector<double> zbuf(static_cast<size_t>(grid_w) * grid_h,
                           std::numeric_limits<double>::infinity());
  auto cell_of = [&](const Reprojection& r, int& cx, int& cy) {
    cx = std::clamp<int>(
        static_cast<int>(std::lround(pixel_to_latent(r.coord.u, ds))), 0,
        grid_w - 1);
    cy = std::clamp<int>(
        static_cast<int>(std::lround(pixel_to_latent(r.coord.v, ds))), 0,
        grid_h - 1);
  };
  for (uint64_t id : ids) {
    const MemoryPatch& p = patches_.at(id);
    PatchProj pp{id, {}};
    pp.tokens.reserve(p.world_points.size());
    for (const auto& wp : p.world_points) {
      Reprojection r = project(query, wp);
      if (r.coord.valid) {
        int cx, cy;
        cell_of(r, cx, cy);
        double& z = zbuf[static_cast<size_t>(cy) * grid_w + cx];
        z = std::min(z, r.depth);
      }
      pp.tokens.push_back(r);
    }
    projected.push_back(std::move(pp));
  }

  // Pass 2: occlusion + skip-region masking, per-patch scores.
  std::vector<RetrievedPatch> results;
  for (const auto& pp : projected) {
    const MemoryPatch& patch = patches_.at(pp.id);
    const int p = patch.patch_size();
    RetrievedPatch rp;
    rp.id = pp.id;
    rp.query_time = query_time;
    const std::vector<uint32_t> dims{static_cast<uint32_t>(p),
                                     static_cast<uint32_t>(p)};
    rp.warped_u = Tensor<double>(dims);
    rp.warped_v = Tensor<double>(dims);
    rp.warped_depth = Tensor<double>(dims);
    rp.validity = Tensor<uint8_t>(dims);
    int survivors = 0;
    int valid_count = 0;
    for (int r = 0; r < p; ++r) {
      for (int s = 0; s < p; ++s) {
        const Reprojection& t = pp.tokens[static_cast<size_t>(r) * p + s];
        rp.warped_u(r, s) = pixel_to_latent(t.coord.u, ds);
        rp.warped_v(r, s) = pixel_to_latent(t.coord.v, ds);
        rp.warped_depth(r, s) = t.depth;
        bool ok = t.coord.valid;
        if (ok) {
          int cx, cy;
          cell_of(t, cx, cy);
          const double nearest = zbuf[static_cast<size_t>(cy) * grid_w + cx];
          ok = t.depth <= nearest * (1.0 + params.z_tolerance);
        }
        if (ok) ++survivors;
        if (ok && params.skip_region) {
          const auto& m = *params.skip_region;
          const int iu = std::clamp<int>(static_cast<int>(t.coord.u), 0,
                                         static_cast<int>(m.dims[1]) - 1);
          const int iv = std::clamp<int>(static_cast<int>(t.coord.v), 0,
                                         static_cast<int>(m.dims[0]) - 1);
          if (m(iv, iu) != 0) ok = false;
        }
        rp.validity(r, s) = ok ? 1 : 0;
        if (ok) ++valid_count;
      }
    }
    rp.occlusion_score = static_cast<double>(survivors) / (p * p);
    if (rp.occlusion_score < params.occlusion_threshold) continue;
    if (valid_count == 0) continue;
    results.push_back(std::move(rp));
  }

  std::stable_sort(results.begin(), results.end(),
                   [](const RetrievedPatch& a, const RetrievedPatch& b) {
                     if (a.occlusion_score != b.occlusion_score)
                       return a.occlusion_score > b.occlusion_score;
                     return a.id < b.id;
                   });
  if (params.max_patches > 0 &&
      results.size() > static_cast<size_t>(params.max_patches))
    results.resize(params.max_patches);
  return results;
}

}  // namespace mosaic

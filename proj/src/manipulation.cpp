#include "mosaic/manipulation.hpp"

#include <algorithm>

namespace mosaic {

std::vector<uint64_t> resolve(const MosaicMemory& memory,
                              const Selection& sel) {
  std::vector<uint64_t> out;
  if (const auto* ids = std::get_if<IdSelection>(&sel)) {
    for (uint64_t id : ids->ids)
      if (memory.patches().count(id)) out.push_back(id);
  } else if (const auto* box = std::get_if<BoxSelection>(&sel)) {
    for (const auto& [id, p] : memory.patches()) {
      for (const auto& wp : p.world_points) {
        if ((wp.array() >= box->lo.array()).all() &&
            (wp.array() <= box->hi.array()).all()) {
          out.push_back(id);
          break;
        }
      }
    }
  } else {
    const auto& region = std::get<ImageRegionSelection>(sel);
    for (const auto& [id, p] : memory.patches()) {
      for (const auto& wp : p.world_points) {
        const Reprojection r = project(region.camera, wp);
        if (r.coord.valid && r.coord.u >= region.u0 && r.coord.u < region.u1 &&
            r.coord.v >= region.v0 && r.coord.v < region.v1) {
          out.push_back(id);
          break;
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Camera transform_camera(const Camera& cam, const RigidTransform& xf) {
  Camera out = cam;
  out.pose.rotation = cam.pose.rotation * xf.rotation.transpose();
  out.pose.translation =
      xf.scale * cam.pose.translation - out.pose.rotation * xf.translation;
  return out;
}

MemoryPatch transform_patch(const MemoryPatch& p, const RigidTransform& xf) {
  MemoryPatch out = p;
  out.id = 0;
  out.source_camera = transform_camera(p.source_camera, xf);
  for (auto& d : out.depth.data) d *= xf.scale;
  for (auto& wp : out.world_points) wp = xf.apply(wp);
  return out;
}

void erase(MosaicMemory& memory, const Selection& sel) {
  memory.erase_ids(resolve(memory, sel));
}

std::vector<uint64_t> duplicate(MosaicMemory& memory, const Selection& sel,
                                const RigidTransform& xf) {
  xf.validate();
  std::vector<MemoryPatch> copies;
  for (uint64_t id : resolve(memory, sel))
    copies.push_back(transform_patch(memory.patches().at(id), xf));
  return memory.insert(std::move(copies));
}

std::vector<uint64_t> relocate(MosaicMemory& memory, const Selection& sel,
                               const RigidTransform& xf) {
  const std::vector<uint64_t> originals = resolve(memory, sel);
  std::vector<uint64_t> fresh = duplicate(memory, IdSelection{originals}, xf);
  memory.erase_ids(originals);
  return fresh;
}

MosaicMemory stitch(const MosaicMemory& a, const MosaicMemory& b,
                    const RigidTransform& xf) {
  xf.validate();
  MosaicMemory out;
  if (a.voxel_size() > 0.0) out.set_voxel_size(a.voxel_size());
  std::vector<MemoryPatch> batch;
  for (const auto& [id, p] : a.patches()) batch.push_back(p);
  out.insert(std::move(batch));
  std::vector<MemoryPatch> from_b;
  for (const auto& [id, p] : b.patches())
    from_b.push_back(transform_patch(p, xf));
  out.insert(std::move(from_b));
  return out;
}

}  // namespace mosaic

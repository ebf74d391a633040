#pragma once

#include <variant>
#include <vector>

#include "mosaic/memory.hpp"

namespace mosaic {

/// Similarity transform x' = s * R * x + t. Scale is included because
/// cross-scene registration of monocularly estimated geometry needs it.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;

  void validate(double tol = 1e-9) const {
    if ((rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff() > tol ||
        std::abs(rotation.determinant() - 1.0) > tol)
      throw std::invalid_argument("RigidTransform: rotation not orthonormal");
    if (!(scale > 0.0))
      throw std::invalid_argument("RigidTransform: scale must be positive");
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const {
    return scale * (rotation * x) + translation;
  }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.scale = 1.0 / scale;
    inv.translation = -(inv.rotation * translation) / scale;
    return inv;
  }

  /// this ∘ other.
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation = rotation * other.rotation;
    out.scale = scale * other.scale;
    out.translation = scale * (rotation * other.translation) + translation;
    return out;
  }
};

struct IdSelection {
  std::vector<uint64_t> ids;
};

/// World-space axis-aligned box; a patch is selected when any of its lifted
/// token points falls inside.
struct BoxSelection {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();
};

/// Image-space region under a camera; a patch is selected when any token
/// projects (depth > 0, in bounds) inside the rectangle [u0,u1) x [v0,v1).
struct ImageRegionSelection {
  Camera camera;
  double u0 = 0, v0 = 0, u1 = 0, v1 = 0;
};

using Selection = std::variant<IdSelection, BoxSelection, ImageRegionSelection>;

/// Deterministic, sorted id set for a selection on a fixed store.
std::vector<uint64_t> resolve(const MosaicMemory& memory, const Selection& sel);

void erase(MosaicMemory& memory, const Selection& sel);

/// Copies the selected patches through xf; returns the fresh ids. Source
/// cameras are re-posed so the lift-consistency invariant keeps holding for
/// the copies (depths scale by xf.scale).
std::vector<uint64_t> duplicate(MosaicMemory& memory, const Selection& sel,
                                const RigidTransform& xf);

/// duplicate then erase the originals.
std::vector<uint64_t> relocate(MosaicMemory& memory, const Selection& sel,
                               const RigidTransform& xf);

/// Union of a and xf-transformed b, with fresh ids for b's patches.
MosaicMemory stitch(const MosaicMemory& a, const MosaicMemory& b,
                    const RigidTransform& xf);

/// The camera that sees xf-transformed content exactly as cam saw the
/// original: R' = R * Rxfᵀ, t' = s * t - R' * t_xf.
Camera transform_camera(const Camera& cam, const RigidTransform& xf);

/// Patch copy under xf: world points mapped, depths scaled, camera re-posed.
MemoryPatch transform_patch(const MemoryPatch& p, const RigidTransform& xf);

}  // namespace mosaic

#pragma once

#include <span>
#include <vector>

#include "mosaic/memory.hpp"

namespace mosaic {

/// 3D RoPE coordinate of a warped token: target latent-frame index plus
/// fractional spatial coordinates in latent-grid units.
struct RopeCoord {
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;
  bool valid = false;
};

/// Axis-split rotary phase table. dims_t + dims_u + dims_v = head_dim / 2
/// rotation pairs. oversample == 0 evaluates phases continuously at the
/// fractional coordinate; oversample > 0 quantizes to a 1/oversample grid
/// (the finite-table ablation).
struct RopePhaseTable {
  int head_dim = 0;
  double theta_base = 10000.0;
  int dims_t = 0;
  int dims_u = 0;
  int dims_v = 0;
  int oversample = 0;

  void validate() const;

  /// Default 1:2:2 split of the d/2 rotation pairs across (t, u, v).
  static RopePhaseTable make_default(int head_dim);
};

struct WarpedRopeGrid {
  int patch_size = 0;
  std::vector<RopeCoord> coords;  // row-major p*p

  const RopeCoord& at(int row, int col) const {
    return coords[static_cast<size_t>(row) * patch_size + col];
  }
};

/// Reprojects every token of a memory patch into the query camera and
/// converts to latent-grid units, keeping the fractional part.
WarpedRopeGrid warp_rope_coords(const MemoryPatch& patch, const Camera& query,
                                int query_time, int latent_downsample = 8);

/// head_dim/2 rotation angles for one coordinate; linear in each axis.
std::vector<double> rope_phases(const RopeCoord& coord,
                                const RopePhaseTable& table);

/// Pairwise 2D rotations of an even-dimensional vector; norm preserving.
std::vector<double> apply_rope(std::span<const double> vec,
                               std::span<const double> angles);

struct WarpedLatent {
  Tensor<float> values;     // (p, p, c); invalid tokens are zero
  Tensor<uint8_t> validity; // (p, p)
};

/// Bilinear grid sampling of a (H, W, c) plane at fractional coordinates.
/// grid_u/grid_v are (p, p); u indexes width, v height. A target token is
/// invalid when any nonzero-weight neighbor falls outside the plane.
WarpedLatent warp_latent(const Tensor<float>& source_plane,
                         const Tensor<double>& grid_u,
                         const Tensor<double>& grid_v);

enum class WarpStrategy { kRope, kLatent, kBoth };

/// Deterministic per-patch choice between the two warping mechanisms.
/// mix_ratio is the fraction assigned warped RoPE; the rest get warped
/// latent. mix_ratio outside [0,1] is clamped.
std::vector<WarpStrategy> assign_warp_strategies(size_t n, double mix_ratio,
                                                 uint64_t seed);

/// Warped-latent resampling for a retrieved patch: anchors the patch at the
/// rounded warped coordinates and samples its own latent at the first-order
/// inverse of the warp. Tokens resampled outside the patch are masked.
WarpedLatent warp_patch_latent(const MemoryPatch& patch,
                               const RetrievedPatch& retrieved);

}  // namespace mosaic

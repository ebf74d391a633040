#include "mosaic/warping.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mosaic {

void RopePhaseTable::validate() const {
  if (head_dim <= 0 || head_dim % 2 != 0)
    throw std::invalid_argument("RopePhaseTable: head_dim must be positive even");
  if (dims_t < 0 || dims_u < 0 || dims_v < 0 ||
      dims_t + dims_u + dims_v != head_dim / 2)
    throw std::invalid_argument("RopePhaseTable: axis split must sum to d/2");
  if (theta_base <= 1.0)
    throw std::invalid_argument("RopePhaseTable: theta_base must exceed 1");
}

RopePhaseTable RopePhaseTable::make_default(int head_dim) {
  RopePhaseTable t;
  t.head_dim = head_dim;
  const int pairs = head_dim / 2;
  t.dims_t = std::max(1, static_cast<int>(std::lround(pairs / 5.0)));
  t.dims_u = std::max(1, static_cast<int>(std::lround(2.0 * pairs / 5.0)));
  t.dims_v = pairs - t.dims_t - t.dims_u;
  if (t.dims_v < 1) {
    t.dims_u -= 1 - t.dims_v;
    t.dims_v = 1;
  }
  t.validate();
  return t;
}

WarpedRopeGrid warp_rope_coords(const MemoryPatch& patch, const Camera& query,
                                int query_time, int latent_downsample) {
  const int p = patch.patch_size();
  WarpedRopeGrid grid;
  grid.patch_size = p;
  grid.coords.reserve(static_cast<size_t>(p) * p);
  for (int r = 0; r < p; ++r) {
    for (int s = 0; s < p; ++s) {
      const Reprojection rp = project(query, patch.world_point(r, s));
      RopeCoord c;
      c.t = query_time;
      c.u = pixel_to_latent(rp.coord.u, latent_downsample);
      c.v = pixel_to_latent(rp.coord.v, latent_downsample);
      c.valid = rp.coord.valid;
      grid.coords.push_back(c);
    }
  }
  return grid;
}

std::vector<double> rope_phases(const RopeCoord& coord,
                                const RopePhaseTable& table) {
  table.validate();
  auto snap = [&](double x) {
    if (table.oversample <= 0) return x;
    return std::round(x * table.oversample) / table.oversample;
  };
  std::vector<double> angles;
  angles.reserve(table.head_dim / 2);
  const double axes[3] = {snap(coord.t), snap(coord.u), snap(coord.v)};
  const int counts[3] = {table.dims_t, table.dims_u, table.dims_v};
  for (int a = 0; a < 3; ++a) {
    // Pair m on an axis with d_a scalar dims rotates at theta^(-2m/d_a).
    const double d_a = 2.0 * counts[a];
    for (int m = 0; m < counts[a]; ++m)
      angles.push_back(axes[a] * std::pow(table.theta_base, -2.0 * m / d_a));
  }
  return angles;
}

std::vector<double> apply_rope(std::span<const double> vec,
                               std::span<const double> angles) {
  if (vec.size() % 2 != 0 || angles.size() != vec.size() / 2)
    throw std::invalid_argument("apply_rope: dimension mismatch");
  std::vector<double> out(vec.size());
  for (size_t i = 0; i < angles.size(); ++i) {
    const double c = std::cos(angles[i]);
    const double s = std::sin(angles[i]);
    out[2 * i] = c * vec[2 * i] - s * vec[2 * i + 1];
    out[2 * i + 1] = s * vec[2 * i] + c * vec[2 * i + 1];
  }
  return out;
}

WarpedLatent warp_latent(const Tensor<float>& source_plane,
                         const Tensor<double>& grid_u,
                         const Tensor<double>& grid_v) {
  const int H = static_cast<int>(source_plane.dims[0]);
  const int W = static_cast<int>(source_plane.dims[1]);
  const int c = static_cast<int>(source_plane.dims[2]);
  const uint32_t ph = grid_u.dims[0];
  const uint32_t pw = grid_u.dims[1];
  WarpedLatent out;
  out.values = Tensor<float>({ph, pw, static_cast<uint32_t>(c)});
  out.validity = Tensor<uint8_t>({ph, pw});
  for (uint32_t r = 0; r < ph; ++r) {
    for (uint32_t s = 0; s < pw; ++s) {
      const double u = grid_u(r, s);
      const double v = grid_v(r, s);
      if (!std::isfinite(u) || !std::isfinite(v)) continue;
      const double fu0 = std::floor(u);
      const double fv0 = std::floor(v);
      const int j0 = static_cast<int>(fu0);
      const int i0 = static_cast<int>(fv0);
      const double au = u - fu0;
      const double av = v - fv0;
      if (au == 0.0 && av == 0.0) {
        // Lattice point: copy the source token bit-exactly.
        if (i0 < 0 || i0 >= H || j0 < 0 || j0 >= W) continue;
        for (int ch = 0; ch < c; ++ch)
          out.values(r, s, ch) = source_plane(i0, j0, ch);
        out.validity(r, s) = 1;
        continue;
      }
      // Only neighbors with nonzero weight count toward validity.
      struct Tap { int i, j; double w; };
      Tap taps[4];
      int n = 0;
      auto add = [&](int i, int j, double w) {
        if (w != 0.0) taps[n++] = {i, j, w};
      };
      add(i0, j0, (1 - av) * (1 - au));
      add(i0, j0 + 1, (1 - av) * au);
      add(i0 + 1, j0, av * (1 - au));
      add(i0 + 1, j0 + 1, av * au);
      bool ok = true;
      for (int k = 0; k < n; ++k)
        if (taps[k].i < 0 || taps[k].i >= H || taps[k].j < 0 || taps[k].j >= W)
          ok = false;
      if (!ok) continue;
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k)
          acc += taps[k].w * source_plane(taps[k].i, taps[k].j, ch);
        out.values(r, s, ch) = static_cast<float>(acc);
      }
      out.validity(r, s) = 1;
    }
  }
  return out;
}

std::vector<WarpStrategy> assign_warp_strategies(size_t n, double mix_ratio,
                                                 uint64_t seed) {
  const double ratio = std::clamp(mix_ratio, 0.0, 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<WarpStrategy> out(n);
  for (auto& s : out)
    s = uni(rng) < ratio ? WarpStrategy::kRope : WarpStrategy::kLatent;
  return out;
}

WarpedLatent warp_patch_latent(const MemoryPatch& patch,
                               const RetrievedPatch& retrieved) {
  const int p = patch.patch_size();
  Tensor<double> gu({static_cast<uint32_t>(p), static_cast<uint32_t>(p)});
  Tensor<double> gv = gu;
  for (int r = 0; r < p; ++r) {
    for (int s = 0; s < p; ++s) {
      if (!retrieved.validity(r, s)) {
        gu(r, s) = gv(r, s) = -1e9;  // forced out of bounds
        continue;
      }
      // Snap the token to its nearest integer target cell and pull the
      // source sample from the first-order inverse of the warp.
      gu(r, s) = s + std::round(retrieved.warped_u(r, s)) - retrieved.warped_u(r, s);
      gv(r, s) = r + std::round(retrieved.warped_v(r, s)) - retrieved.warped_v(r, s);
    }
  }
  return warp_latent(patch.latent, gu, gv);
}

}  // namespace mosaic

#pragma once

#include <random>

#include "mosaic/geometry.hpp"
#include "mosaic/memory.hpp"

namespace testutil {

inline mosaic::Camera make_camera(double fx = 100.0, double fy = 100.0,
                                  double cx = 64.0, double cy = 64.0,
                                  int width = 128, int height = 128) {
  mosaic::Camera cam;
  cam.intrinsics = {fx, fy, cx, cy, width, height};
  return cam;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng,
                                       double max_angle = M_PI) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  while (axis.norm() < 1e-6) axis = {u(rng), u(rng), u(rng)};
  axis.normalize();
  std::uniform_real_distribution<double> a(-max_angle, max_angle);
  return Eigen::AngleAxisd(a(rng), axis).toRotationMatrix();
}

/// Camera with a mild random pose, looking roughly down +z from near the
/// origin so points around z ~ 5..15 stay in front of it.
inline mosaic::Camera random_camera(std::mt19937_64& rng) {
  mosaic::Camera cam = make_camera();
  cam.pose.rotation = random_rotation(rng, 0.25);
  std::uniform_real_distribution<double> t(-0.5, 0.5);
  cam.pose.translation = {t(rng), t(rng), t(rng)};
  return cam;
}

/// A patch whose tokens lie on a constant-depth plane seen by `cam`.
inline mosaic::MemoryPatch make_plane_patch(const mosaic::Camera& cam,
                                            int patch_size, double depth,
                                            int origin_u = 0, int origin_v = 0,
                                            int time = 0, int channels = 3,
                                            int downsample = 8) {
  mosaic::MemoryPatch p;
  p.latent = mosaic::Tensor<float>({static_cast<uint32_t>(patch_size),
                                    static_cast<uint32_t>(patch_size),
                                    static_cast<uint32_t>(channels)});
  p.depth = mosaic::Tensor<double>({static_cast<uint32_t>(patch_size),
                                    static_cast<uint32_t>(patch_size)});
  p.source_camera = cam;
  p.source_time = time;
  p.rope_origin_t = time;
  p.rope_origin_u = origin_u;
  p.rope_origin_v = origin_v;
  p.latent_downsample = downsample;
  p.world_points.resize(static_cast<size_t>(patch_size) * patch_size);
  for (int r = 0; r < patch_size; ++r)
    for (int s = 0; s < patch_size; ++s) {
      p.depth(r, s) = depth;
      for (int c = 0; c < channels; ++c)
        p.latent(r, s, c) =
            static_cast<float>(0.1 * (r + 1) + 0.01 * (s + 1) + 0.001 * c);
      p.world_points[static_cast<size_t>(r) * patch_size + s] =
          mosaic::back_project(cam, p.token_pixel_u(s), p.token_pixel_v(r),
                               depth);
    }
  return p;
}

}  // namespace testutil

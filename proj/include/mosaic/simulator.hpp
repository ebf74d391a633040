#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "mosaic/geometry.hpp"
#include "mosaic/tensor.hpp"

namespace mosaic {

struct ScenePoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();  // RGB in [0,1]
  double radius = 0.0;                              // world units
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // world units / frame

  Eigen::Vector3d position_at(double time) const {
    return position + time * velocity;
  }
};

struct SyntheticScene {
  std::vector<ScenePoint> points;
  uint64_t seed = 0;
};

/// nx x ny grid of points spanning origin + i*edge_u + j*edge_v, colored by
/// a smooth gradient over the grid plus optional seeded jitter.
struct PlaneGridSpec {
  int nx = 10, ny = 10;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d edge_u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d edge_v = Eigen::Vector3d::UnitY();
  double radius = 0.05;
  double color_jitter = 0.0;
};

/// Points sampled on the surface grid of an axis-aligned box.
struct BoxSpec {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  int per_edge = 8;
  double radius = 0.05;
};

/// Uniform random cloud in a cube.
struct CloudSpec {
  int count = 100;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double extent = 1.0;
  double radius = 0.05;
};

/// Scripted linearly moving point cluster, for dynamic-score plumbing.
struct MovingClusterSpec {
  int count = 20;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double extent = 0.5;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double radius = 0.05;
};

using PrimitiveSpec =
    std::variant<PlaneGridSpec, BoxSpec, CloudSpec, MovingClusterSpec>;

struct SceneSpec {
  std::vector<PrimitiveSpec> primitives;
  uint64_t seed = 0;
};

SyntheticScene build_scene(const SceneSpec& spec);

struct RenderedFrame {
  Tensor<float> image;    // (H, W, 3) in [0,1]
  Tensor<double> depth;   // (H, W); +inf where uncovered
  Tensor<uint8_t> coverage;  // (H, W)
  std::vector<int32_t> point_id;  // (H*W); -1 where uncovered
  Camera camera;
};

/// Z-buffered point splatting: each point covers a disc of projected radius,
/// nearest center depth wins per pixel.
RenderedFrame render(const SyntheticScene& scene, const Camera& camera,
                     double time = 0.0);

enum class TrajectoryKind { kForward, kOrbit, kRevisitLoop };

struct TrajectoryParams {
  int frames = 8;
  Intrinsics intrinsics;
  double distance = 8.0;       // camera distance from the scene centroid
  double span = 4.0;           // lateral travel for forward / revisit paths
  double min_revisit_overlap = 0.3;
};

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::kForward;
  std::vector<Camera> cameras;
  std::vector<std::pair<int, int>> revisit_pairs;
};

/// revisit_loop goes out and returns along the same path and records the
/// (i, n-1-i) pairs whose visible-point overlap meets the threshold; throws
/// if none qualify.
Trajectory generate_trajectory(TrajectoryKind kind,
                               const TrajectoryParams& params,
                               const SyntheticScene& scene);

/// Fraction of mutually visible scene points between two views, relative to
/// the smaller visible set.
double frustum_overlap(const SyntheticScene& scene, const Camera& a,
                       const Camera& b, double time = 0.0);

struct DatasetParams {
  int latent_downsample = 8;
  int temporal_s = 4;
  bool with_flow = true;
  bool scene_time_from_frame = false;  // animate moving clusters per frame
};

/// Writes frames, depths, pooled pseudo-latents, revisit correspondences,
/// ground-truth flow, and manifest.json under out_dir.
void make_dataset(const SyntheticScene& scene, const Trajectory& trajectory,
                  const DatasetParams& params,
                  const std::filesystem::path& out_dir);

/// Average-pooled image and depth at latent resolution. Pooling averages
/// covered pixels only; fully uncovered cells get zero color and depth.
void pool_frame(const RenderedFrame& frame, int downsample,
                Tensor<float>& latent, Tensor<double>& latent_depth);

/// Correspondences (N,4): integer source pixel (ua,va) and fractional target
/// (ub,vb), restricted to pixels whose splat identity matches across views.
Tensor<double> annotate_correspondences(const RenderedFrame& a,
                                        const RenderedFrame& b);

void write_ppm(const std::filesystem::path& path, const Tensor<float>& image);

}  // namespace mosaic

#include "mosaic/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "mosaic/serialization.hpp"

namespace mosaic {

using nlohmann::json;

namespace {

void add_plane(std::vector<ScenePoint>& pts, const PlaneGridSpec& s,
               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jit(-s.color_jitter, s.color_jitter);
  for (int i = 0; i < s.nx; ++i) {
    for (int j = 0; j < s.ny; ++j) {
      ScenePoint p;
      const double fi = s.nx > 1 ? static_cast<double>(i) / (s.nx - 1) : 0.0;
      const double fj = s.ny > 1 ? static_cast<double>(j) / (s.ny - 1) : 0.0;
      p.position = s.origin + fi * s.edge_u + fj * s.edge_v;
      p.color = {fi, fj, 0.5};
      if (s.color_jitter > 0.0)
        for (int c = 0; c < 3; ++c)
          p.color[c] = std::clamp(p.color[c] + jit(rng), 0.0, 1.0);
      p.radius = s.radius;
      pts.push_back(p);
    }
  }
}

void add_box(std::vector<ScenePoint>& pts, const BoxSpec& s) {
  const int n = std::max(2, s.per_edge);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const bool boundary = i == 0 || i == n - 1 || j == 0 || j == n - 1 ||
                              k == 0 || k == n - 1;
        if (!boundary) continue;
        ScenePoint p;
        const Eigen::Vector3d f{static_cast<double>(i) / (n - 1),
                                static_cast<double>(j) / (n - 1),
                                static_cast<double>(k) / (n - 1)};
        p.position = s.center + (f.array() - 0.5).matrix().cwiseProduct(s.size);
        p.color = f;
        p.radius = s.radius;
        pts.push_back(p);
      }
    }
  }
}

void add_cloud(std::vector<ScenePoint>& pts, const CloudSpec& s,
               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-s.extent, s.extent);
  std::uniform_real_distribution<double> col(0.0, 1.0);
  for (int i = 0; i < s.count; ++i) {
    ScenePoint p;
    p.position = s.center + Eigen::Vector3d{pos(rng), pos(rng), pos(rng)};
    p.color = {col(rng), col(rng), col(rng)};
    p.radius = s.radius;
    pts.push_back(p);
  }
}

void add_cluster(std::vector<ScenePoint>& pts, const MovingClusterSpec& s,
                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-s.extent, s.extent);
  std::uniform_real_distribution<double> col(0.0, 1.0);
  for (int i = 0; i < s.count; ++i) {
    ScenePoint p;
    p.position = s.center + Eigen::Vector3d{pos(rng), pos(rng), pos(rng)};
    p.color = {col(rng), col(rng), col(rng)};
    p.radius = s.radius;
    p.velocity = s.velocity;
    pts.push_back(p);
  }
}

}  // namespace

SyntheticScene build_scene(const SceneSpec& spec) {
  SyntheticScene scene;
  scene.seed = spec.seed;
  std::mt19937_64 rng(spec.seed);
  for (const auto& prim : spec.primitives) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, PlaneGridSpec>)
            add_plane(scene.points, s, rng);
          else if constexpr (std::is_same_v<T, BoxSpec>)
            add_box(scene.points, s);
          else if constexpr (std::is_same_v<T, CloudSpec>)
            add_cloud(scene.points, s, rng);
          else
            add_cluster(scene.points, s, rng);
        },
        prim);
  }
  for (const auto& p : scene.points)
    if (!(p.radius > 0.0))
      throw std::invalid_argument("build_scene: point radius must be positive");
  return scene;
}

RenderedFrame render(const SyntheticScene& scene, const Camera& camera,
                     double time) {
  const int W = camera.intrinsics.width;
  const int H = camera.intrinsics.height;
  RenderedFrame frame;
  frame.camera = camera;
  frame.image = Tensor<float>({static_cast<uint32_t>(H),
                               static_cast<uint32_t>(W), 3});
  frame.depth = Tensor<double>({static_cast<uint32_t>(H),
                                static_cast<uint32_t>(W)});
  frame.coverage = Tensor<uint8_t>({static_cast<uint32_t>(H),
                                    static_cast<uint32_t>(W)});
  frame.point_id.assign(static_cast<size_t>(H) * W, -1);
  std::fill(frame.depth.data.begin(), frame.depth.data.end(),
            std::numeric_limits<double>::infinity());

  for (size_t pi = 0; pi < scene.points.size(); ++pi) {
    const ScenePoint& pt = scene.points[pi];
    const Reprojection r = project(camera, pt.position_at(time));
    if (r.depth <= 0.0) continue;
    const double pr = pt.radius * camera.intrinsics.fx / r.depth;
    const int j0 = std::max(0, static_cast<int>(std::floor(r.coord.u - pr)));
    const int j1 = std::min(W - 1, static_cast<int>(std::ceil(r.coord.u + pr)));
    const int i0 = std::max(0, static_cast<int>(std::floor(r.coord.v - pr)));
    const int i1 = std::min(H - 1, static_cast<int>(std::ceil(r.coord.v + pr)));
    auto splat = [&](int i, int j) {
      double& z = frame.depth(i, j);
      if (r.depth < z) {
        z = r.depth;
        frame.coverage(i, j) = 1;
        frame.point_id[static_cast<size_t>(i) * W + j] =
            static_cast<int32_t>(pi);
        for (int c = 0; c < 3; ++c)
          frame.image(i, j, c) = static_cast<float>(pt.color[c]);
      }
    };
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        const double du = (j + 0.5) - r.coord.u;
        const double dv = (i + 0.5) - r.coord.v;
        if (du * du + dv * dv <= pr * pr) splat(i, j);
      }
    }
    // Guarantee the pixel under the center is covered even for tiny radii.
    const int cj = static_cast<int>(std::floor(r.coord.u));
    const int ci = static_cast<int>(std::floor(r.coord.v));
    if (ci >= 0 && ci < H && cj >= 0 && cj < W) splat(ci, cj);
  }
  return frame;
}

double frustum_overlap(const SyntheticScene& scene, const Camera& a,
                       const Camera& b, double time) {
  size_t in_a = 0, in_b = 0, in_both = 0;
  for (const auto& pt : scene.points) {
    const Eigen::Vector3d x = pt.position_at(time);
    const bool va = project(a, x).coord.valid;
    const bool vb = project(b, x).coord.valid;
    in_a += va;
    in_b += vb;
    in_both += va && vb;
  }
  const size_t denom = std::max<size_t>(1, std::min(in_a, in_b));
  return static_cast<double>(in_both) / static_cast<double>(denom);
}

namespace {

Eigen::Vector3d scene_centroid(const SyntheticScene& scene) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  if (scene.points.empty()) return c;
  for (const auto& p : scene.points) c += p.position;
  return c / static_cast<double>(scene.points.size());
}

// World-to-camera rotation looking along `forward`, with image "up" along
// world -y (world y points down in image space).
Eigen::Matrix3d look_rotation(const Eigen::Vector3d& forward) {
  const Eigen::Vector3d z = forward.normalized();
  Eigen::Vector3d y0{0, 1, 0};
  if (std::abs(z.dot(y0)) > 0.999) y0 = {1, 0, 0};
  const Eigen::Vector3d x = (y0.cross(z)).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d R;
  R.row(0) = x;
  R.row(1) = y;
  R.row(2) = z;
  return R;
}

Camera camera_at(const Intrinsics& intr, const Eigen::Vector3d& position,
                 const Eigen::Vector3d& look_dir) {
  Camera cam;
  cam.intrinsics = intr;
  cam.pose.rotation = look_rotation(look_dir);
  cam.pose.translation = -(cam.pose.rotation * position);
  return cam;
}

}  // namespace

Trajectory generate_trajectory(TrajectoryKind kind,
                               const TrajectoryParams& params,
                               const SyntheticScene& scene) {
  if (params.frames < 1)
    throw std::invalid_argument("generate_trajectory: frames must be >= 1");
  const Eigen::Vector3d centroid = scene_centroid(scene);
  Trajectory traj;
  traj.kind = kind;
  const int n = params.frames;

  if (kind == TrajectoryKind::kForward) {
    const Eigen::Vector3d dir{0, 0, 1};
    const Eigen::Vector3d start = centroid - params.distance * dir;
    for (int i = 0; i < n; ++i) {
      const double f = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
      traj.cameras.push_back(
          camera_at(params.intrinsics, start + f * params.span * dir, dir));
    }
    return traj;
  }

  if (kind == TrajectoryKind::kOrbit) {
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * M_PI * i / n;
      const Eigen::Vector3d pos =
          centroid + params.distance *
                         Eigen::Vector3d{std::sin(a), 0.0, -std::cos(a)};
      traj.cameras.push_back(
          camera_at(params.intrinsics, pos, centroid - pos));
    }
    return traj;
  }

  // Revisit loop: go out along a lateral arc and come back along the exact
  // same poses, A -> B -> A.
  const int m = n / 2 + 1;  // unique poses
  std::vector<Camera> unique_poses;
  for (int i = 0; i < m; ++i) {
    const double f = m > 1 ? static_cast<double>(i) / (m - 1) : 0.0;
    const Eigen::Vector3d pos = centroid +
                                Eigen::Vector3d{(f - 0.5) * params.span, 0.0,
                                                -params.distance};
    unique_poses.push_back(camera_at(params.intrinsics, pos, centroid - pos));
  }
  for (int i = 0; i < n; ++i) {
    const int pi = i < m ? i : 2 * (m - 1) - i;
    traj.cameras.push_back(unique_poses[pi]);
  }
  for (int i = 0; i + 1 < m; ++i) {
    const int j = 2 * (m - 1) - i;
    if (j <= i || j >= n) continue;
    if (frustum_overlap(scene, traj.cameras[i], traj.cameras[j]) >=
        params.min_revisit_overlap)
      traj.revisit_pairs.emplace_back(i, j);
  }
  if (traj.revisit_pairs.empty())
    throw std::runtime_error(
        "generate_trajectory: no revisit pair meets the overlap constraint");
  return traj;
}

void pool_frame(const RenderedFrame& frame, int downsample,
                Tensor<float>& latent, Tensor<double>& latent_depth) {
  const int H = static_cast<int>(frame.image.dims[0]);
  const int W = static_cast<int>(frame.image.dims[1]);
  if (H % downsample != 0 || W % downsample != 0)
    throw std::invalid_argument("pool_frame: dims not divisible by downsample");
  const int h = H / downsample, w = W / downsample;
  latent = Tensor<float>({static_cast<uint32_t>(h), static_cast<uint32_t>(w), 3});
  latent_depth =
      Tensor<double>({static_cast<uint32_t>(h), static_cast<uint32_t>(w)});
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double acc[3] = {0, 0, 0};
      double dacc = 0.0;
      int covered = 0;
      for (int di = 0; di < downsample; ++di) {
        for (int dj = 0; dj < downsample; ++dj) {
          const int ii = i * downsample + di, jj = j * downsample + dj;
          if (!frame.coverage(ii, jj)) continue;
          ++covered;
          dacc += frame.depth(ii, jj);
          for (int c = 0; c < 3; ++c) acc[c] += frame.image(ii, jj, c);
        }
      }
      if (covered > 0) {
        for (int c = 0; c < 3; ++c)
          latent(i, j, c) = static_cast<float>(acc[c] / covered);
        latent_depth(i, j) = dacc / covered;
      }
    }
  }
}

Tensor<double> annotate_correspondences(const RenderedFrame& a,
                                        const RenderedFrame& b) {
  const int H = static_cast<int>(a.image.dims[0]);
  const int W = static_cast<int>(a.image.dims[1]);
  std::vector<double> rows;
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      if (!a.coverage(i, j)) continue;
      const double ua = j + 0.5, va = i + 0.5;
      const Eigen::Vector3d x =
          back_project(a.camera, ua, va, a.depth(i, j));
      const Reprojection r = project(b.camera, x);
      if (!r.coord.valid) continue;
      const int bi = static_cast<int>(std::floor(r.coord.v));
      const int bj = static_cast<int>(std::floor(r.coord.u));
      if (!b.coverage(bi, bj)) continue;
      // Same splat in both views: guarantees identical colors.
      if (b.point_id[static_cast<size_t>(bi) * W + bj] !=
          a.point_id[static_cast<size_t>(i) * W + j])
        continue;
      rows.insert(rows.end(), {ua, va, r.coord.u, r.coord.v});
    }
  }
  Tensor<double> t({static_cast<uint32_t>(rows.size() / 4), 4});
  t.data = std::move(rows);
  return t;
}

void write_ppm(const std::filesystem::path& path, const Tensor<float>& image) {
  const int H = static_cast<int>(image.dims[0]);
  const int W = static_cast<int>(image.dims[1]);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw TensorIoError("write_ppm: cannot open " + path.string());
  f << "P6\n" << W << " " << H << "\n255\n";
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(image(i, j, c)), 0.0, 1.0);
        const uint8_t b = static_cast<uint8_t>(std::lround(v * 255.0));
        f.write(reinterpret_cast<const char*>(&b), 1);
      }
  if (!f) throw TensorIoError("write_ppm: write failed for " + path.string());
}

void make_dataset(const SyntheticScene& scene, const Trajectory& trajectory,
                  const DatasetParams& params,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const int n = static_cast<int>(trajectory.cameras.size());
  std::vector<RenderedFrame> frames;
  frames.reserve(n);
  for (int i = 0; i < n; ++i)
    frames.push_back(render(scene, trajectory.cameras[i],
                            static_cast<double>(i)));

  json manifest;
  manifest["seed"] = scene.seed;
  manifest["width"] = trajectory.cameras[0].intrinsics.width;
  manifest["height"] = trajectory.cameras[0].intrinsics.height;
  manifest["downsample"] = params.latent_downsample;
  manifest["temporal_s"] = params.temporal_s;
  manifest["convention"] = "world_to_camera";
  json jframes = json::array();

  for (int i = 0; i < n; ++i) {
    char buf[64];
    auto name = [&](const char* what, const char* ext) {
      std::snprintf(buf, sizeof(buf), "%s_%04d.%s", what, i, ext);
      return std::string(buf);
    };
    const std::string image_f = name("frame", "mmtb");
    const std::string depth_f = name("depth", "mmtb");
    const std::string latent_f = name("latent", "mmtb");
    const std::string ldepth_f = name("latent_depth", "mmtb");
    const std::string ppm_f = name("frame", "ppm");
    write_tensor(out_dir / image_f, frames[i].image);
    write_tensor(out_dir / depth_f, frames[i].depth);
    Tensor<float> latent;
    Tensor<double> latent_depth;
    pool_frame(frames[i], params.latent_downsample, latent, latent_depth);
    write_tensor(out_dir / latent_f, latent);
    write_tensor(out_dir / ldepth_f, latent_depth);
    write_ppm(out_dir / ppm_f, frames[i].image);

    json jf;
    jf["camera"] = camera_to_json(trajectory.cameras[i]);
    jf["image"] = image_f;
    jf["depth"] = depth_f;
    jf["latent"] = latent_f;
    jf["latent_depth"] = ldepth_f;
    jf["ppm"] = ppm_f;

    if (params.with_flow && i + 1 < n) {
      // Ground-truth flow to the next frame through point identity.
      const int H = trajectory.cameras[i].intrinsics.height;
      const int W = trajectory.cameras[i].intrinsics.width;
      Tensor<double> flow({static_cast<uint32_t>(H),
                           static_cast<uint32_t>(W), 2});
      for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
          const int32_t pid = frames[i].point_id[static_cast<size_t>(r) * W + c];
          if (pid < 0) continue;
          const Eigen::Vector3d next =
              scene.points[pid].position_at(static_cast<double>(i + 1));
          const Reprojection rp = project(trajectory.cameras[i + 1], next);
          if (rp.depth <= 0.0) continue;
          flow(r, c, 0) = rp.coord.u - (c + 0.5);
          flow(r, c, 1) = rp.coord.v - (r + 0.5);
        }
      }
      const std::string flow_f = name("flow", "mmtb");
      write_tensor(out_dir / flow_f, flow);
      jf["flow"] = flow_f;
    }
    jframes.push_back(std::move(jf));
  }
  manifest["frames"] = std::move(jframes);

  json jpairs = json::array();
  for (const auto& [a, b] : trajectory.revisit_pairs) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "corr_%04d_%04d.mmtb", a, b);
    write_tensor(out_dir / buf,
                 annotate_correspondences(frames[a], frames[b]));
    json jr;
    jr["a"] = a;
    jr["b"] = b;
    jr["file"] = std::string(buf);
    jpairs.push_back(std::move(jr));
  }
  manifest["revisit_pairs"] = std::move(jpairs);

  std::ofstream f(out_dir / "manifest.json");
  if (!f)
    throw TensorIoError("make_dataset: cannot write manifest in " +
                        out_dir.string());
  f << manifest.dump(2) << "\n";
}

}  // namespace mosaic

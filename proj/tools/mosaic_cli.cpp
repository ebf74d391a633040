// Command-line surface tying simulator -> memory -> warping -> metrics.
// Exit codes: 0 ok, 2 usage/spec error, 3 I/O error, 4 numeric failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mosaic/flow_ode.hpp"
#include "mosaic/manipulation.hpp"
#include "mosaic/memory.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/serialization.hpp"
#include "mosaic/simulator.hpp"
#include "mosaic/warping.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mosaic;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSpec = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_json_or_throw(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw TensorIoError("cannot open " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw SpecError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

Eigen::Vector3d vec3_of(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw SpecError("expected a 3-vector");
  return {v[0], v[1], v[2]};
}

struct SimulateSpec {
  SceneSpec scene;
  TrajectoryKind kind = TrajectoryKind::kRevisitLoop;
  TrajectoryParams traj;
  DatasetParams dataset;
};

SimulateSpec parse_simulate_spec(const json& j) {
  SimulateSpec spec;
  try {
    spec.scene.seed = j.value("seed", uint64_t{0});
    const json& cam = j.at("camera");
    Intrinsics intr;
    intr.width = cam.at("width").get<int>();
    intr.height = cam.at("height").get<int>();
    intr.fx = cam.at("fx").get<double>();
    intr.fy = cam.at("fy").get<double>();
    intr.cx = cam.value("cx", intr.width / 2.0);
    intr.cy = cam.value("cy", intr.height / 2.0);
    intr.validate();
    spec.traj.intrinsics = intr;

    for (const json& p : j.at("primitives")) {
      const std::string type = p.at("type").get<std::string>();
      if (type == "plane") {
        PlaneGridSpec s;
        s.nx = p.value("nx", 10);
        s.ny = p.value("ny", 10);
        if (p.contains("origin")) s.origin = vec3_of(p.at("origin"));
        if (p.contains("edge_u")) s.edge_u = vec3_of(p.at("edge_u"));
        if (p.contains("edge_v")) s.edge_v = vec3_of(p.at("edge_v"));
        s.radius = p.value("radius", 0.05);
        s.color_jitter = p.value("color_jitter", 0.0);
        spec.scene.primitives.push_back(s);
      } else if (type == "box") {
        BoxSpec s;
        if (p.contains("center")) s.center = vec3_of(p.at("center"));
        if (p.contains("size")) s.size = vec3_of(p.at("size"));
        s.per_edge = p.value("per_edge", 8);
        s.radius = p.value("radius", 0.05);
        spec.scene.primitives.push_back(s);
      } else if (type == "cloud") {
        CloudSpec s;
        s.count = p.value("count", 100);
        if (p.contains("center")) s.center = vec3_of(p.at("center"));
        s.extent = p.value("extent", 1.0);
        s.radius = p.value("radius", 0.05);
        spec.scene.primitives.push_back(s);
      } else if (type == "moving_cluster") {
        MovingClusterSpec s;
        s.count = p.value("count", 20);
        if (p.contains("center")) s.center = vec3_of(p.at("center"));
        s.extent = p.value("extent", 0.5);
        if (p.contains("velocity")) s.velocity = vec3_of(p.at("velocity"));
        s.radius = p.value("radius", 0.05);
        spec.scene.primitives.push_back(s);
      } else {
        throw SpecError("unknown primitive type: " + type);
      }
    }

    const json& t = j.at("trajectory");
    const std::string kind = t.value("kind", std::string("revisit_loop"));
    if (kind == "forward")
      spec.kind = TrajectoryKind::kForward;
    else if (kind == "orbit")
      spec.kind = TrajectoryKind::kOrbit;
    else if (kind == "revisit_loop")
      spec.kind = TrajectoryKind::kRevisitLoop;
    else
      throw SpecError("unknown trajectory kind: " + kind);
    spec.traj.frames = t.value("frames", 8);
    spec.traj.distance = t.value("distance", 8.0);
    spec.traj.span = t.value("span", 4.0);
    spec.traj.min_revisit_overlap = t.value("min_revisit_overlap", 0.3);

    spec.dataset.latent_downsample = j.value("downsample", 8);
    spec.dataset.temporal_s = j.value("temporal_s", 4);
    spec.dataset.with_flow = j.value("with_flow", true);
  } catch (const json::exception& e) {
    throw SpecError(std::string("bad simulate spec: ") + e.what());
  }
  return spec;
}

int cmd_simulate(const fs::path& spec_path, const fs::path& out_dir) {
  const SimulateSpec spec = parse_simulate_spec(load_json_or_throw(spec_path));
  const SyntheticScene scene = build_scene(spec.scene);
  Trajectory traj;
  try {
    traj = generate_trajectory(spec.kind, spec.traj, scene);
  } catch (const std::runtime_error& e) {
    throw SpecError(e.what());
  }
  make_dataset(scene, traj, spec.dataset, out_dir);
  std::cout << "wrote " << traj.cameras.size() << " frames, "
            << traj.revisit_pairs.size() << " revisit pairs to " << out_dir
            << "\n";
  return kExitOk;
}

int cmd_lift(const fs::path& dataset_dir, const fs::path& mem_dir,
             int patch_size) {
  const DatasetManifest manifest = load_dataset(dataset_dir);
  MosaicMemory memory;
  size_t skipped = 0;
  for (size_t i = 0; i < manifest.frames.size(); ++i) {
    const auto& entry = manifest.frames[i];
    const Tensor<float> latent = read_tensor<float>(entry.latent);
    Tensor<double> depth = read_tensor<double>(entry.latent_depth);
    // Cells never covered by a splat carry zero depth; tile-level skipping
    // keeps lift_frame's strict positive-depth contract.
    const int H = static_cast<int>(depth.dims[0]);
    const int W = static_cast<int>(depth.dims[1]);
    if (patch_size < 1 || H % patch_size || W % patch_size)
      throw SpecError("lift: latent dims not divisible by patch size");
    bool any_invalid = false;
    for (double d : depth.data)
      if (!(d > 0.0)) any_invalid = true;
    if (!any_invalid) {
      memory.insert(lift_frame(latent, depth, entry.camera,
                               static_cast<int>(i), patch_size,
                               manifest.downsample));
      continue;
    }
    std::vector<MemoryPatch> keep;
    for (int v0 = 0; v0 < H; v0 += patch_size) {
      for (int u0 = 0; u0 < W; u0 += patch_size) {
        Tensor<float> pl({static_cast<uint32_t>(patch_size),
                          static_cast<uint32_t>(patch_size), latent.dims[2]});
        Tensor<double> pd({static_cast<uint32_t>(patch_size),
                           static_cast<uint32_t>(patch_size)});
        bool ok = true;
        for (int r = 0; r < patch_size && ok; ++r)
          for (int s = 0; s < patch_size; ++s) {
            const double d = depth(v0 + r, u0 + s);
            if (!(d > 0.0)) {
              ok = false;
              break;
            }
            pd(r, s) = d;
            for (uint32_t c = 0; c < latent.dims[2]; ++c)
              pl(r, s, c) = latent(v0 + r, u0 + s, c);
          }
        if (!ok) {
          ++skipped;
          continue;
        }
        auto lifted = lift_frame(pl, pd, entry.camera, static_cast<int>(i), 1,
                                 manifest.downsample);
        // Re-tile the single-token lifts into one patch with the right origin.
        MemoryPatch patch;
        patch.latent = std::move(pl);
        patch.depth = std::move(pd);
        patch.source_camera = entry.camera;
        patch.source_time = static_cast<int>(i);
        patch.rope_origin_t = static_cast<int>(i);
        patch.rope_origin_u = u0;
        patch.rope_origin_v = v0;
        patch.latent_downsample = manifest.downsample;
        patch.world_points.resize(static_cast<size_t>(patch_size) * patch_size);
        for (int r = 0; r < patch_size; ++r)
          for (int s = 0; s < patch_size; ++s)
            patch.world_points[static_cast<size_t>(r) * patch_size + s] =
                back_project(entry.camera, patch.token_pixel_u(s),
                             patch.token_pixel_v(r), patch.depth(r, s));
        keep.push_back(std::move(patch));
      }
    }
    memory.insert(std::move(keep));
  }
  save_memory(memory, mem_dir);
  std::cout << "lifted " << memory.size() << " patches";
  if (skipped) std::cout << " (skipped " << skipped << " with uncovered depth)";
  std::cout << " into " << mem_dir << "\n";
  return kExitOk;
}

Tensor<uint8_t> first_frame_footprint(const MosaicMemory& memory,
                                      const Camera& query, int downsample) {
  Tensor<uint8_t> mask(
      {static_cast<uint32_t>(query.intrinsics.height),
       static_cast<uint32_t>(query.intrinsics.width)});
  const int grid_w = query.intrinsics.width / downsample;
  const int grid_h = query.intrinsics.height / downsample;
  for (const auto& [id, p] : memory.patches()) {
    if (p.source_time != 0) continue;
    for (const auto& wp : p.world_points) {
      const Reprojection r = project(query, wp);
      if (!r.coord.valid) continue;
      const int cu = std::clamp<int>(
          static_cast<int>(std::lround(pixel_to_latent(r.coord.u, downsample))),
          0, grid_w - 1);
      const int cv = std::clamp<int>(
          static_cast<int>(std::lround(pixel_to_latent(r.coord.v, downsample))),
          0, grid_h - 1);
      for (int di = 0; di < downsample; ++di)
        for (int dj = 0; dj < downsample; ++dj)
          mask(cv * downsample + di, cu * downsample + dj) = 1;
    }
  }
  return mask;
}

int cmd_retrieve(const fs::path& mem_dir, const fs::path& camera_path,
                 const fs::path& out_dir, int query_time,
                 const std::string& mode, int stride, int max_patches,
                 bool skip_first_frame, double occlusion_threshold,
                 const std::string& warp, double mix_ratio, int downsample,
                 uint64_t seed) {
  const MosaicMemory memory = load_memory(mem_dir);
  Camera query;
  try {
    query = camera_from_json(load_json_or_throw(camera_path));
  } catch (const std::invalid_argument& e) {
    throw SpecError(e.what());
  }

  RetrievalParams params;
  if (mode == "dense")
    params.mode = RetrievalMode::kDense;
  else if (mode == "sparse")
    params.mode = RetrievalMode::kSparse;
  else
    throw SpecError("retrieve: --mode must be dense or sparse");
  params.stride = stride;
  params.max_patches = max_patches;
  params.occlusion_threshold = occlusion_threshold;
  params.latent_downsample = downsample;
  Tensor<uint8_t> skip_mask;
  if (skip_first_frame) {
    skip_mask = first_frame_footprint(memory, query, downsample);
    params.skip_region = &skip_mask;
  }

  const auto retrieved = memory.retrieve(query, query_time, params);

  std::vector<WarpStrategy> strategies;
  if (warp == "rope")
    strategies.assign(retrieved.size(), WarpStrategy::kRope);
  else if (warp == "latent")
    strategies.assign(retrieved.size(), WarpStrategy::kLatent);
  else if (warp == "both")
    strategies.assign(retrieved.size(), WarpStrategy::kBoth);
  else if (warp == "mix")
    strategies = assign_warp_strategies(retrieved.size(), mix_ratio, seed);
  else
    throw SpecError("retrieve: --warp must be rope, latent, both or mix");

  fs::create_directories(out_dir);
  json meta;
  meta["query_camera"] = camera_to_json(query);
  meta["query_time"] = query_time;
  meta["downsample"] = downsample;
  meta["mode"] = mode;
  meta["stride"] = stride;
  meta["occlusion_threshold"] = occlusion_threshold;
  json jpatches = json::array();
  for (size_t i = 0; i < retrieved.size(); ++i) {
    const RetrievedPatch& rp = retrieved[i];
    const MemoryPatch& patch = memory.patches().at(rp.id);
    const int p = patch.patch_size();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "ret_%04zu", i);
    const std::string coords_f = std::string(buf) + "_coords.mmtb";
    const std::string values_f = std::string(buf) + "_values.mmtb";

    Tensor<float> values = patch.latent;
    Tensor<uint8_t> value_valid = rp.validity;
    const WarpStrategy strat = strategies[i];
    if (strat == WarpStrategy::kLatent || strat == WarpStrategy::kBoth) {
      const WarpedLatent wl = warp_patch_latent(patch, rp);
      values = wl.values;
      for (int r = 0; r < p; ++r)
        for (int s = 0; s < p; ++s)
          value_valid(r, s) = rp.validity(r, s) && wl.validity(r, s);
    }

    Tensor<double> coords({static_cast<uint32_t>(p),
                           static_cast<uint32_t>(p), 4});
    for (int r = 0; r < p; ++r)
      for (int s = 0; s < p; ++s) {
        coords(r, s, 0) = rp.warped_u(r, s);
        coords(r, s, 1) = rp.warped_v(r, s);
        coords(r, s, 2) = rp.warped_depth(r, s);
        coords(r, s, 3) = value_valid(r, s) ? 1.0 : 0.0;
      }
    write_tensor(out_dir / coords_f, coords);
    write_tensor(out_dir / values_f, values);

    json jp;
    jp["id"] = rp.id;
    jp["occlusion_score"] = rp.occlusion_score;
    jp["query_time"] = rp.query_time;
    jp["strategy"] = strat == WarpStrategy::kRope
                         ? "rope"
                         : (strat == WarpStrategy::kLatent ? "latent" : "both");
    jp["coords"] = coords_f;
    jp["values"] = values_f;
    jpatches.push_back(std::move(jp));
  }
  meta["patches"] = std::move(jpatches);
  std::ofstream f(out_dir / "retrieval.json");
  if (!f)
    throw TensorIoError("cannot write " + (out_dir / "retrieval.json").string());
  f << meta.dump(2) << "\n";
  std::cout << "retrieved " << retrieved.size() << " patches into " << out_dir
            << "\n";
  return kExitOk;
}

int cmd_preview(const fs::path& retrieval_dir, const fs::path& out_path) {
  const json meta = load_json_or_throw(retrieval_dir / "retrieval.json");
  const Camera query = camera_from_json(meta.at("query_camera"));
  const int ds = meta.at("downsample").get<int>();
  const int gw = query.intrinsics.width / ds;
  const int gh = query.intrinsics.height / ds;
  Tensor<float> canvas({static_cast<uint32_t>(gh), static_cast<uint32_t>(gw), 3});
  // Magenta marks pixels no retrieved patch covers.
  for (int i = 0; i < gh; ++i)
    for (int j = 0; j < gw; ++j) {
      canvas(i, j, 0) = 1.0f;
      canvas(i, j, 2) = 1.0f;
    }
  std::vector<double> zbuf(static_cast<size_t>(gh) * gw,
                           std::numeric_limits<double>::infinity());
  for (const json& jp : meta.at("patches")) {
    const Tensor<double> coords =
        read_tensor<double>(retrieval_dir / jp.at("coords").get<std::string>());
    const Tensor<float> values =
        read_tensor<float>(retrieval_dir / jp.at("values").get<std::string>());
    const int p = static_cast<int>(coords.dims[0]);
    for (int r = 0; r < p; ++r)
      for (int s = 0; s < p; ++s) {
        if (coords(r, s, 3) == 0.0) continue;
        const int cu = static_cast<int>(std::lround(coords(r, s, 0)));
        const int cv = static_cast<int>(std::lround(coords(r, s, 1)));
        if (cu < 0 || cu >= gw || cv < 0 || cv >= gh) continue;
        double& z = zbuf[static_cast<size_t>(cv) * gw + cu];
        if (coords(r, s, 2) >= z) continue;
        z = coords(r, s, 2);
        for (uint32_t c = 0; c < values.dims[2] && c < 3; ++c)
          canvas(cv, cu, c) = values(r, s, c);
      }
  }
  write_ppm(out_path, canvas);
  std::cout << "wrote preview " << out_path << "\n";
  return kExitOk;
}

Selection parse_selection(const std::vector<uint64_t>& ids,
                          const std::string& box) {
  if (!ids.empty() && !box.empty())
    throw SpecError("mem: give either --ids or --box, not both");
  if (!box.empty()) {
    BoxSelection sel;
    double v[6];
    if (std::sscanf(box.c_str(), "%lf,%lf,%lf:%lf,%lf,%lf", &v[0], &v[1],
                    &v[2], &v[3], &v[4], &v[5]) != 6)
      throw SpecError("mem: --box expects x0,y0,z0:x1,y1,z1");
    sel.lo = {std::min(v[0], v[3]), std::min(v[1], v[4]), std::min(v[2], v[5])};
    sel.hi = {std::max(v[0], v[3]), std::max(v[1], v[4]), std::max(v[2], v[5])};
    return sel;
  }
  return IdSelection{ids};
}

RigidTransform parse_transform_arg(const std::string& arg) {
  try {
    if (!arg.empty() && arg.front() == '{')
      return transform_from_json(json::parse(arg));
    return transform_from_json(load_json_or_throw(arg));
  } catch (const json::exception& e) {
    throw SpecError(std::string("bad transform JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SpecError(e.what());
  }
}

int cmd_ode_demo(int steps, uint64_t seed) {
  const Conditions none;
  const Eigen::VectorXd x0 = gaussian_init(8, seed);

  const VectorField zero = [](const Eigen::VectorXd& x, double,
                              const Conditions&) {
    return Eigen::VectorXd::Zero(x.size()).eval();
  };
  const VectorField linear = [](const Eigen::VectorXd& x, double,
                                const Conditions&) { return x; };

  const Eigen::VectorXd still = integrate(zero, x0, steps, OdeMethod::kEuler);
  const Eigen::VectorXd grown = integrate(linear, x0, steps, OdeMethod::kHeun);
  const double rel_err =
      (grown - std::exp(1.0) * x0).norm() / (std::exp(1.0) * x0.norm());
  std::cout << "zero field drift:      " << (still - x0).norm() << "\n"
            << "linear field rel. err: " << rel_err << " (Heun, " << steps
            << " steps)\n";
  if (!std::isfinite(rel_err))
    throw std::runtime_error("ode-demo: non-finite result");
  return kExitOk;
}

int cmd_eval(const fs::path& dataset_dir, const fs::path& est_cameras_path,
             const fs::path& out_path) {
  const DatasetManifest manifest = load_dataset(dataset_dir);
  std::vector<Tensor<float>> images;
  for (const auto& f : manifest.frames)
    images.push_back(read_tensor<float>(f.image));

  std::vector<CorrespondenceSet> corr;
  for (const auto& r : manifest.revisit_pairs)
    corr.push_back({r.a, r.b, read_tensor<double>(r.file)});
  const ConsistencyReport report = consistency_score(images, corr);

  std::vector<Tensor<double>> flows;
  for (const auto& f : manifest.frames)
    if (f.flow) flows.push_back(read_tensor<double>(*f.flow));

  json out;
  out["lpips"] = nullptr;  // needs a pretrained network; schema keeps the slot
  out["n_regions"] = report.regions.size();
  out["psnr"] = report.mean_psnr ? json(*report.mean_psnr) : json(nullptr);
  out["ssim"] = report.mean_ssim ? json(*report.mean_ssim) : json(nullptr);
  out["dynamic_score"] =
      flows.empty() ? json(nullptr) : json(dynamic_score(flows));

  if (!est_cameras_path.empty()) {
    const json jest = load_json_or_throw(est_cameras_path);
    if (!jest.is_array() || jest.size() != manifest.frames.size())
      throw SpecError("eval: --est-cameras must list one camera per frame");
    double traj_len = 0.0;
    for (size_t i = 0; i + 1 < manifest.frames.size(); ++i) {
      const Pose& a = manifest.frames[i].camera.pose;
      const Pose& b = manifest.frames[i + 1].camera.pose;
      traj_len += (a.inverse().translation - b.inverse().translation).norm();
    }
    if (traj_len <= 0.0) traj_len = 1.0;
    double rot_acc = 0.0, trans_acc = 0.0;
    for (size_t i = 0; i < manifest.frames.size(); ++i) {
      Camera est;
      try {
        est = camera_from_json(jest[i]);
      } catch (const std::invalid_argument& e) {
        throw SpecError(e.what());
      }
      const Pose& gt = manifest.frames[i].camera.pose;
      rot_acc += rot_err_deg(gt.rotation, est.pose.rotation);
      trans_acc += trans_err(gt.inverse().translation,
                             est.pose.inverse().translation, traj_len);
    }
    out["rot_err_deg"] = rot_acc / manifest.frames.size();
    out["trans_err"] = trans_acc / manifest.frames.size();
  } else {
    out["rot_err_deg"] = nullptr;
    out["trans_err"] = nullptr;
  }

  std::ofstream f(out_path);
  if (!f) throw TensorIoError("cannot write " + out_path.string());
  f << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mosaic spatial-memory toolkit"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, dataset_dir, mem_dir, camera_path;
  std::string mem_b_dir, transform_arg, box_arg, retrieval_dir, out_path;
  std::string mode = "dense", warp = "mix", est_cameras;
  std::vector<uint64_t> id_args;
  int patch_size = 2, query_time = 0, stride = 1, max_patches = 0;
  int downsample = 8, temporal_s = 4, steps = 50;
  double occlusion_threshold = 0.25, mix_ratio = 0.5;
  uint64_t seed = 0;
  bool skip_first_frame = false;

  auto* sim = app.add_subcommand("simulate", "Render a synthetic dataset");
  sim->add_option("spec", spec_path, "scene spec JSON")->required();
  sim->add_option("out", out_dir, "output dataset directory")->required();

  auto* lift = app.add_subcommand("lift", "Lift a dataset into Mosaic Memory");
  lift->add_option("dataset", dataset_dir)->required();
  lift->add_option("memory", mem_dir)->required();
  lift->add_option("--patch-size", patch_size, "tokens per patch side");

  auto* ret = app.add_subcommand("retrieve", "Retrieve memory into a view");
  ret->add_option("memory", mem_dir)->required();
  ret->add_option("camera", camera_path, "query camera JSON")->required();
  ret->add_option("out", out_dir)->required();
  ret->add_option("--time", query_time, "query latent-frame index");
  ret->add_option("--mode", mode, "dense|sparse");
  ret->add_option("--stride", stride, "sparse subsampling stride");
  ret->add_option("--max-patches", max_patches, "retrieval budget, 0=all");
  ret->add_flag("--skip-first-frame", skip_first_frame,
                "mask regions overlapping the initial frame");
  ret->add_option("--occlusion-threshold", occlusion_threshold);
  ret->add_option("--warp", warp, "rope|latent|both|mix");
  ret->add_option("--mix-ratio", mix_ratio, "warped-RoPE fraction in mix mode");
  ret->add_option("--downsample", downsample, "query latent downsample");
  ret->add_option("--s", temporal_s, "VAE temporal compression factor");
  ret->add_option("--seed", seed, "mix assignment seed");

  auto* mem = app.add_subcommand("mem", "Manipulate a memory directory");
  mem->require_subcommand(1);
  auto* mdel = mem->add_subcommand("delete");
  mdel->add_option("in", mem_dir)->required();
  mdel->add_option("out", out_dir)->required();
  mdel->add_option("--ids", id_args)->delimiter(',');
  mdel->add_option("--box", box_arg, "x0,y0,z0:x1,y1,z1");
  auto* mdup = mem->add_subcommand("duplicate");
  mdup->add_option("in", mem_dir)->required();
  mdup->add_option("out", out_dir)->required();
  mdup->add_option("--transform", transform_arg, "JSON {R,t,s} file or inline")
      ->required();
  mdup->add_option("--ids", id_args)->delimiter(',');
  mdup->add_option("--box", box_arg);
  auto* mrel = mem->add_subcommand("relocate");
  mrel->add_option("in", mem_dir)->required();
  mrel->add_option("out", out_dir)->required();
  mrel->add_option("--transform", transform_arg)->required();
  mrel->add_option("--ids", id_args)->delimiter(',');
  mrel->add_option("--box", box_arg);
  auto* msti = mem->add_subcommand("stitch");
  msti->add_option("a", mem_dir)->required();
  msti->add_option("b", mem_b_dir)->required();
  msti->add_option("out", out_dir)->required();
  msti->add_option("--transform", transform_arg)->required();

  auto* prev = app.add_subcommand("preview", "Composite a retrieval to PPM");
  prev->add_option("retrieval", retrieval_dir)->required();
  prev->add_option("out", out_path)->required();

  auto* evalc = app.add_subcommand("eval", "Score a dataset");
  evalc->add_option("dataset", dataset_dir)->required();
  evalc->add_option("-o,--out", out_path, "report JSON path")
      ->default_val("report.json");
  evalc->add_option("--est-cameras", est_cameras,
                    "JSON array of estimated cameras");

  auto* ode = app.add_subcommand("ode-demo", "Run the analytic ODE fields");
  ode->add_option("--steps", steps);
  ode->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitSpec;
  }

  try {
    if (*sim) return cmd_simulate(spec_path, out_dir);
    if (*lift) return cmd_lift(dataset_dir, mem_dir, patch_size);
    if (*ret)
      return cmd_retrieve(mem_dir, camera_path, out_dir, query_time, mode,
                          stride, max_patches, skip_first_frame,
                          occlusion_threshold, warp, mix_ratio, downsample,
                          seed);
    if (*prev) return cmd_preview(retrieval_dir, out_path);
    if (*evalc) return cmd_eval(dataset_dir, est_cameras, out_path);
    if (*ode) return cmd_ode_demo(steps, seed);
    if (*mem) {
      if (*mdel) {
        MosaicMemory m = load_memory(mem_dir);
        erase(m, parse_selection(id_args, box_arg));
        save_memory(m, out_dir);
        std::cout << m.size() << " patches remain\n";
        return kExitOk;
      }
      const RigidTransform xf = parse_transform_arg(transform_arg);
      if (*mdup || *mrel) {
        MosaicMemory m = load_memory(mem_dir);
        Selection sel = (id_args.empty() && box_arg.empty())
                            ? Selection(IdSelection{[&] {
                                std::vector<uint64_t> all;
                                for (const auto& [id, _] : m.patches())
                                  all.push_back(id);
                                return all;
                              }()})
                            : parse_selection(id_args, box_arg);
        const auto fresh =
            *mdup ? duplicate(m, sel, xf) : relocate(m, sel, xf);
        save_memory(m, out_dir);
        std::cout << fresh.size() << " patches "
                  << (*mdup ? "duplicated" : "relocated") << "\n";
        return kExitOk;
      }
      MosaicMemory a = load_memory(mem_dir);
      MosaicMemory b = load_memory(mem_b_dir);
      save_memory(stitch(a, b, xf), out_dir);
      std::cout << "stitched " << a.size() << "+" << b.size() << " patches\n";
      return kExitOk;
    }
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpec;
  } catch (const TensorIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpec;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitSpec;
}

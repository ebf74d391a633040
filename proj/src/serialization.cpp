#include "mosaic/serialization.hpp"

#include <fstream>

namespace mosaic {

using nlohmann::json;

json camera_to_json(const Camera& cam) {
  json j;
  j["fx"] = cam.intrinsics.fx;
  j["fy"] = cam.intrinsics.fy;
  j["cx"] = cam.intrinsics.cx;
  j["cy"] = cam.intrinsics.cy;
  j["width"] = cam.intrinsics.width;
  j["height"] = cam.intrinsics.height;
  std::vector<double> R(9), t(3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R[r * 3 + c] = cam.pose.rotation(r, c);
  for (int r = 0; r < 3; ++r) t[r] = cam.pose.translation(r);
  j["R"] = R;
  j["t"] = t;
  return j;
}

Camera camera_from_json(const json& j) {
  Camera cam;
  cam.intrinsics.fx = j.at("fx").get<double>();
  cam.intrinsics.fy = j.at("fy").get<double>();
  cam.intrinsics.cx = j.at("cx").get<double>();
  cam.intrinsics.cy = j.at("cy").get<double>();
  cam.intrinsics.width = j.at("width").get<int>();
  cam.intrinsics.height = j.at("height").get<int>();
  const auto R = j.at("R").get<std::vector<double>>();
  const auto t = j.at("t").get<std::vector<double>>();
  if (R.size() != 9 || t.size() != 3)
    throw std::invalid_argument("camera JSON: R must have 9 entries, t 3");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) cam.pose.rotation(r, c) = R[r * 3 + c];
  for (int r = 0; r < 3; ++r) cam.pose.translation(r) = t[r];
  cam.intrinsics.validate();
  cam.pose.validate(1e-6);
  return cam;
}

json transform_to_json(const RigidTransform& xf) {
  json j;
  std::vector<double> R(9), t(3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R[r * 3 + c] = xf.rotation(r, c);
  for (int r = 0; r < 3; ++r) t[r] = xf.translation(r);
  j["R"] = R;
  j["t"] = t;
  j["s"] = xf.scale;
  return j;
}

RigidTransform transform_from_json(const json& j) {
  RigidTransform xf;
  const auto R = j.at("R").get<std::vector<double>>();
  const auto t = j.at("t").get<std::vector<double>>();
  if (R.size() != 9 || t.size() != 3)
    throw std::invalid_argument("transform JSON: R must have 9 entries, t 3");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) xf.rotation(r, c) = R[r * 3 + c];
  for (int r = 0; r < 3; ++r) xf.translation(r) = t[r];
  xf.scale = j.value("s", 1.0);
  xf.validate(1e-6);
  return xf;
}

namespace {

json load_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f)
    throw TensorIoError("cannot open " + path.string());
  json j;
  f >> j;
  return j;
}

}  // namespace

void save_memory(const MosaicMemory& memory,
                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["voxel_size"] = memory.voxel_size();
  manifest["convention"] = "world_to_camera";
  json patches = json::array();
  for (const auto& [id, p] : memory.patches()) {
    char stem[64];
    std::snprintf(stem, sizeof(stem), "patch_%08llu",
                  static_cast<unsigned long long>(id));
    const std::string latent_file = std::string(stem) + "_latent.mmtb";
    const std::string depth_file = std::string(stem) + "_depth.mmtb";
    write_tensor(dir / latent_file, p.latent);
    write_tensor(dir / depth_file, p.depth);
    json jp;
    jp["id"] = id;
    jp["source_time"] = p.source_time;
    jp["rope_origin"] = {p.rope_origin_t, p.rope_origin_u, p.rope_origin_v};
    jp["latent_downsample"] = p.latent_downsample;
    jp["camera"] = camera_to_json(p.source_camera);
    jp["latent"] = latent_file;
    jp["depth"] = depth_file;
    patches.push_back(std::move(jp));
  }
  manifest["patches"] = std::move(patches);
  std::ofstream f(dir / "manifest.json");
  if (!f) throw TensorIoError("cannot write " + (dir / "manifest.json").string());
  f << manifest.dump(2) << "\n";
}

MosaicMemory load_memory(const std::filesystem::path& dir) {
  const json manifest = load_json_file(dir / "manifest.json");
  MosaicMemory memory;
  const double voxel = manifest.value("voxel_size", 0.0);
  if (voxel > 0.0) memory.set_voxel_size(voxel);
  std::vector<MemoryPatch> batch;
  for (const auto& jp : manifest.at("patches")) {
    MemoryPatch p;
    p.id = jp.at("id").get<uint64_t>();
    p.source_time = jp.at("source_time").get<int>();
    const auto origin = jp.at("rope_origin").get<std::vector<int>>();
    p.rope_origin_t = origin.at(0);
    p.rope_origin_u = origin.at(1);
    p.rope_origin_v = origin.at(2);
    p.latent_downsample = jp.at("latent_downsample").get<int>();
    p.source_camera = camera_from_json(jp.at("camera"));
    p.latent = read_tensor<float>(dir / jp.at("latent").get<std::string>());
    p.depth = read_tensor<double>(dir / jp.at("depth").get<std::string>());
    const int ps = p.patch_size();
    p.world_points.resize(static_cast<size_t>(ps) * ps);
    for (int r = 0; r < ps; ++r)
      for (int s = 0; s < ps; ++s)
        p.world_points[static_cast<size_t>(r) * ps + s] =
            back_project(p.source_camera, p.token_pixel_u(s),
                         p.token_pixel_v(r), p.depth(r, s));
    batch.push_back(std::move(p));
  }
  memory.insert(std::move(batch));
  return memory;
}

DatasetManifest load_dataset(const std::filesystem::path& dir) {
  const json j = load_json_file(dir / "manifest.json");
  DatasetManifest m;
  m.seed = j.at("seed").get<uint64_t>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.downsample = j.at("downsample").get<int>();
  m.temporal_s = j.at("temporal_s").get<int>();
  for (const auto& jf : j.at("frames")) {
    DatasetFrameEntry e;
    e.camera = camera_from_json(jf.at("camera"));
    e.image = dir / jf.at("image").get<std::string>();
    e.depth = dir / jf.at("depth").get<std::string>();
    e.latent = dir / jf.at("latent").get<std::string>();
    e.latent_depth = dir / jf.at("latent_depth").get<std::string>();
    e.ppm = dir / jf.at("ppm").get<std::string>();
    if (jf.contains("flow"))
      e.flow = dir / jf.at("flow").get<std::string>();
    m.frames.push_back(std::move(e));
  }
  for (const auto& jr : j.at("revisit_pairs")) {
    RevisitEntry e;
    e.a = jr.at("a").get<int>();
    e.b = jr.at("b").get<int>();
    e.file = dir / jr.at("file").get<std::string>();
    m.revisit_pairs.push_back(std::move(e));
  }
  return m;
}

}  // namespace mosaic

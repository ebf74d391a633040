#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mosaic/memory.hpp"
#include "test_util.hpp"

using namespace mosaic;
using testutil::make_camera;
using testutil::make_plane_patch;
using testutil::random_camera;

namespace {

Tensor<float> constant_latent(int h, int w, int c, float base = 0.0f) {
  Tensor<float> t({static_cast<uint32_t>(h), static_cast<uint32_t>(w),
                   static_cast<uint32_t>(c)});
  for (size_t i = 0; i < t.data.size(); ++i)
    t.data[i] = base + 0.001f * static_cast<float>(i);
  return t;
}

Tensor<double> constant_depth(int h, int w, double d) {
  Tensor<double> t({static_cast<uint32_t>(h), static_cast<uint32_t>(w)});
  for (auto& v : t.data) v = d;
  return t;
}

bool same_retrieval(const std::vector<RetrievedPatch>& a,
                    const std::vector<RetrievedPatch>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id) return false;
    if (a[i].occlusion_score != b[i].occlusion_score) return false;
    if (a[i].validity.data != b[i].validity.data) return false;
    if (a[i].warped_u.data != b[i].warped_u.data) return false;
    if (a[i].warped_v.data != b[i].warped_v.data) return false;
    if (a[i].warped_depth.data != b[i].warped_depth.data) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("lift_frame: 8x8 frame with p=4 tiles into 4 patches") {
  const Camera cam = make_camera();
  const auto patches = lift_frame(constant_latent(8, 8, 2),
                                  constant_depth(8, 8, 5.0), cam, 3, 4);
  REQUIRE(patches.size() == 4);
  std::vector<std::pair<int, int>> origins;
  for (const auto& p : patches) {
    CHECK(p.rope_origin_t == 3);
    CHECK(p.source_time == 3);
    origins.emplace_back(p.rope_origin_v, p.rope_origin_u);
  }
  std::sort(origins.begin(), origins.end());
  CHECK(origins == std::vector<std::pair<int, int>>{
                       {0, 0}, {0, 4}, {4, 0}, {4, 4}});
}

TEST_CASE("lift_frame: constant depth plane lifts to a regular grid") {
  const Camera cam = make_camera();
  const auto patches =
      lift_frame(constant_latent(4, 4, 1), constant_depth(4, 4, 10.0), cam, 0, 4);
  REQUIRE(patches.size() == 1);
  const MemoryPatch& p = patches[0];
  // Closed-form back-projection: x = (u - cx) * d / fx at pixel centers
  // (x + 0.5) * 8.
  for (int r = 0; r < 4; ++r)
    for (int s = 0; s < 4; ++s) {
      const double u = (s + 0.5) * 8.0;
      const double v = (r + 0.5) * 8.0;
      const Eigen::Vector3d want((u - 64.0) * 10.0 / 100.0,
                                 (v - 64.0) * 10.0 / 100.0, 10.0);
      CHECK((p.world_point(r, s) - want).norm() < 1e-9);
    }
  // Adjacent tokens are spaced uniformly.
  const double dx = (p.world_point(0, 1) - p.world_point(0, 0)).norm();
  const double dy = (p.world_point(1, 0) - p.world_point(0, 0)).norm();
  CHECK(dx == doctest::Approx(8.0 * 10.0 / 100.0));
  CHECK(dy == doctest::Approx(dx));
}

TEST_CASE("lift_frame: reprojecting world points recovers token centers") {
  std::mt19937_64 rng(21);
  const Camera cam = random_camera(rng);
  Tensor<double> depth = constant_depth(8, 8, 0.0);
  std::uniform_real_distribution<double> d(2.0, 20.0);
  for (auto& v : depth.data) v = d(rng);
  const auto patches = lift_frame(constant_latent(8, 8, 3), depth, cam, 0, 2);
  CHECK(patches.size() == 16);
  for (const auto& p : patches)
    for (int r = 0; r < p.patch_size(); ++r)
      for (int s = 0; s < p.patch_size(); ++s) {
        const Reprojection rp = project(cam, p.world_point(r, s));
        CHECK(std::abs(rp.coord.u - p.token_pixel_u(s)) < 1e-7);
        CHECK(std::abs(rp.coord.v - p.token_pixel_v(r)) < 1e-7);
        CHECK(std::abs(rp.depth - p.depth(r, s)) < 1e-9);
      }
}

TEST_CASE("lift_frame rejects bad input") {
  const Camera cam = make_camera();
  CHECK_THROWS_AS(
      lift_frame(constant_latent(6, 6, 1), constant_depth(6, 6, 1.0), cam, 0, 4),
      std::invalid_argument);
  Tensor<double> bad = constant_depth(4, 4, 1.0);
  bad(1, 1) = 0.0;
  CHECK_THROWS_AS(lift_frame(constant_latent(4, 4, 1), bad, cam, 0, 4),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      lift_frame(constant_latent(4, 4, 1), constant_depth(4, 8, 1.0), cam, 0, 4),
      std::invalid_argument);
}

TEST_CASE("store: insert count, fresh ids, delete inverts insert") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  std::vector<MemoryPatch> batch;
  for (int i = 0; i < 4; ++i)
    batch.push_back(make_plane_patch(cam, 2, 5.0 + i, 2 * i, 0));
  const auto ids = mem.insert(batch);
  CHECK(mem.size() == 4);
  CHECK(ids.size() == 4);

  const auto extra = mem.insert({make_plane_patch(cam, 2, 9.0, 8, 0)});
  CHECK(mem.size() == 5);
  mem.erase_ids(extra);
  CHECK(mem.size() == 4);
  for (uint64_t id : ids) CHECK(mem.patches().count(id) == 1);
}

TEST_CASE("store: explicit duplicate id is rejected") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  MemoryPatch p = make_plane_patch(cam, 2, 5.0);
  p.id = 7;
  mem.insert({p});
  CHECK_THROWS_AS(mem.insert({p}), std::invalid_argument);
}

TEST_CASE("store: split insert equals combined insert under retrieval") {
  std::mt19937_64 rng(22);
  const Camera cam = make_camera();
  std::vector<MemoryPatch> batch;
  std::uniform_real_distribution<double> d(4.0, 12.0);
  for (int i = 0; i < 8; ++i)
    batch.push_back(
        make_plane_patch(cam, 2, d(rng), (i % 4) * 2, (i / 4) * 2));

  MosaicMemory combined;
  combined.insert(batch);
  MosaicMemory split;
  split.insert({batch.begin(), batch.begin() + 3});
  split.insert({batch.begin() + 3, batch.end()});

  RetrievalParams params;
  params.use_index = false;  // linear scan as the oracle path
  const auto a = combined.retrieve(cam, 0, params);
  const auto b = split.retrieve(cam, 0, params);
  CHECK(same_retrieval(a, b));
  params.use_index = true;
  CHECK(same_retrieval(a, combined.retrieve(cam, 0, params)));
}

TEST_CASE("retrieve: identity view returns exact token coordinates") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  mem.insert({make_plane_patch(cam, 2, 6.0, 3, 5)});
  const auto got = mem.retrieve(cam, 0);
  REQUIRE(got.size() == 1);
  CHECK(got[0].occlusion_score == doctest::Approx(1.0));
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s) {
      CHECK(got[0].validity(r, s) == 1);
      CHECK(std::abs(got[0].warped_u(r, s) - (3 + s)) < 1e-6);
      CHECK(std::abs(got[0].warped_v(r, s) - (5 + r)) < 1e-6);
      CHECK(std::abs(got[0].warped_depth(r, s) - 6.0) < 1e-9);
    }
}

TEST_CASE("retrieve: camera looking away sees nothing") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  mem.insert({make_plane_patch(cam, 2, 6.0)});
  Camera away = cam;
  // Rotate 180 degrees about y: content ends up behind the camera.
  away.pose.rotation = Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitY())
                           .toRotationMatrix();
  CHECK(mem.retrieve(away, 0).empty());
}

TEST_CASE("retrieve: nearer patch occludes the farther one") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  // Fully occluded patch along the same rays: dropped entirely.
  const auto near_id = mem.insert({make_plane_patch(cam, 2, 5.0, 7, 7)});
  mem.insert({make_plane_patch(cam, 2, 10.0, 7, 7)});
  const auto filtered = mem.retrieve(cam, 0);
  REQUIRE(filtered.size() == 1);
  CHECK(filtered[0].id == near_id[0]);
  CHECK(filtered[0].occlusion_score == doctest::Approx(1.0));

  // Partially occluded patch: only the overlapping token is masked.
  const auto part_id = mem.insert({make_plane_patch(cam, 2, 10.0, 6, 6)});
  const auto got = mem.retrieve(cam, 0);
  REQUIRE(got.size() == 2);
  CHECK(got[0].id == near_id[0]);
  CHECK(got[1].id == part_id[0]);
  CHECK(got[1].occlusion_score == doctest::Approx(0.75));
  CHECK(got[1].validity(0, 0) == 1);
  CHECK(got[1].validity(0, 1) == 1);
  CHECK(got[1].validity(1, 0) == 1);
  CHECK(got[1].validity(1, 1) == 0);  // cell (7,7) is behind the near patch
}

TEST_CASE("retrieve: z tolerance keeps co-located surfaces") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  mem.insert({make_plane_patch(cam, 2, 5.0, 7, 7)});
  mem.insert({make_plane_patch(cam, 2, 5.004, 7, 7)});  // within 1% of 5.0
  const auto got = mem.retrieve(cam, 0);
  CHECK(got.size() == 2);
  for (const auto& rp : got)
    CHECK(rp.occlusion_score == doctest::Approx(1.0));
}

TEST_CASE("retrieve: skip region masks tokens and rescales nothing") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  mem.insert({make_plane_patch(cam, 2, 5.0, 0, 0)});
  Tensor<uint8_t> skip({128, 128});
  // Mask the pixel block of latent cell (0,0) only.
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) skip(i, j) = 1;
  RetrievalParams params;
  params.skip_region = &skip;
  params.occlusion_threshold = 0.0;
  const auto got = mem.retrieve(cam, 0, params);
  REQUIRE(got.size() == 1);
  CHECK(got[0].validity(0, 0) == 0);
  CHECK(got[0].validity(0, 1) == 1);
  CHECK(got[0].validity(1, 0) == 1);
  CHECK(got[0].validity(1, 1) == 1);
  // Occlusion score is computed before skip-region masking.
  CHECK(got[0].occlusion_score == doctest::Approx(1.0));
}

TEST_CASE("retrieve: sparse mode keeps stride-aligned source patches") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  std::vector<uint64_t> kept;
  for (int gv = 0; gv < 3; ++gv)
    for (int gu = 0; gu < 3; ++gu) {
      const auto ids =
          mem.insert({make_plane_patch(cam, 2, 5.0, 2 * gu, 2 * gv)});
      if (gu % 2 == 0 && gv % 2 == 0) kept.push_back(ids[0]);
    }
  RetrievalParams params;
  params.mode = RetrievalMode::kSparse;
  params.stride = 2;
  const auto got = mem.retrieve(cam, 0, params);
  REQUIRE(got.size() == kept.size());
  std::vector<uint64_t> got_ids;
  for (const auto& rp : got) got_ids.push_back(rp.id);
  std::sort(got_ids.begin(), got_ids.end());
  std::sort(kept.begin(), kept.end());
  CHECK(got_ids == kept);
}

TEST_CASE("retrieve: max_patches keeps the best-scoring patches") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  mem.insert({make_plane_patch(cam, 2, 5.0, 0, 0)});
  mem.insert({make_plane_patch(cam, 2, 6.0, 4, 4)});
  mem.insert({make_plane_patch(cam, 2, 7.0, 8, 8)});
  RetrievalParams params;
  params.max_patches = 2;
  CHECK(mem.retrieve(cam, 0, params).size() == 2);
}

TEST_CASE("candidate_patches: trivial cases and superset property") {
  std::mt19937_64 rng(23);
  const Camera cam = make_camera();
  MosaicMemory empty;
  CHECK(empty.candidate_patches(cam).empty());

  MosaicMemory mem;
  std::vector<uint64_t> all;
  std::uniform_real_distribution<double> d(3.0, 15.0);
  std::uniform_int_distribution<int> cell(0, 14);
  for (int i = 0; i < 30; ++i) {
    auto ids = mem.insert(
        {make_plane_patch(cam, 2, d(rng), cell(rng), cell(rng))});
    all.push_back(ids[0]);
  }
  // Every patch is in view, so all must be candidates.
  auto cand = mem.candidate_patches(cam);
  std::sort(cand.begin(), cand.end());
  CHECK(cand == all);

  // Random queries: candidates are a superset of the truly visible set.
  for (int trial = 0; trial < 10; ++trial) {
    const Camera q = random_camera(rng);
    cand = mem.candidate_patches(q);
    std::sort(cand.begin(), cand.end());
    for (const auto& [id, patch] : mem.patches()) {
      bool visible = false;
      for (const auto& wp : patch.world_points)
        if (project(q, wp).coord.valid) visible = true;
      if (visible)
        CHECK(std::binary_search(cand.begin(), cand.end(), id));
    }
  }
}

TEST_CASE("retrieval ordering is deterministic: score desc, id asc") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  mem.insert({make_plane_patch(cam, 2, 5.0, 0, 0)});
  mem.insert({make_plane_patch(cam, 2, 5.0, 4, 0)});
  mem.insert({make_plane_patch(cam, 2, 5.0, 8, 0)});
  const auto got = mem.retrieve(cam, 0);
  REQUIRE(got.size() == 3);
  for (size_t i = 1; i < got.size(); ++i) {
    CHECK(got[i - 1].occlusion_score >= got[i].occlusion_score);
    if (got[i - 1].occlusion_score == got[i].occlusion_score)
      CHECK(got[i - 1].id < got[i].id);
  }
}

TEST_CASE("set_voxel_size only before first insert") {
  const Camera cam = make_camera();
  MosaicMemory mem;
  mem.set_voxel_size(0.5);
  CHECK(mem.voxel_size() == 0.5);
  mem.insert({make_plane_patch(cam, 2, 5.0)});
  CHECK_THROWS_AS(mem.set_voxel_size(1.0), std::logic_error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mosaic/prope.hpp"
#include "test_util.hpp"

using namespace mosaic;
using testutil::make_camera;
using testutil::random_camera;

namespace {

std::vector<ProjectionMatrix> projections_for(const std::vector<Camera>& cams) {
  std::vector<ProjectionMatrix> out;
  for (const auto& c : cams) out.push_back(ProjectionMatrix::from_camera(c));
  return out;
}

std::vector<Camera> distinct_cameras(int n, std::mt19937_64& rng) {
  std::vector<Camera> cams;
  for (int i = 0; i < n; ++i) {
    Camera c = random_camera(rng);
    c.pose.translation.z() += 0.01 * i;  // guarantee distinctness
    cams.push_back(c);
  }
  return cams;
}

}  // namespace

TEST_CASE("unfold_temporal: 8 frames at s=4 give a 2x4 pack") {
  std::mt19937_64 rng(41);
  const auto cams = distinct_cameras(8, rng);
  const CameraPack pack = unfold_temporal(projections_for(cams), 4);
  CHECK(pack.latent_frames == 2);
  CHECK(pack.temporal_s == 4);
  CHECK(pack.padded_frames == 0);
  CHECK(pack.matrices.size() == 8);
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 4; ++k)
      CHECK(pack.at(l, k).mat ==
            ProjectionMatrix::from_camera(cams[4 * l + k]).mat);
}

TEST_CASE("unfold_temporal: 5 frames pad by repeating the last camera") {
  std::mt19937_64 rng(42);
  const auto cams = distinct_cameras(5, rng);
  const CameraPack pack = unfold_temporal(projections_for(cams), 4);
  CHECK(pack.latent_frames == 2);
  CHECK(pack.padded_frames == 3);
  for (int k = 1; k < 4; ++k)
    CHECK(pack.at(1, k).mat == ProjectionMatrix::from_camera(cams[4]).mat);
  CHECK(pack.at(1, 0).mat == ProjectionMatrix::from_camera(cams[4]).mat);
}

TEST_CASE("unfold_temporal: constant camera gives constant pack") {
  const Camera cam = make_camera();
  const std::vector<ProjectionMatrix> per_frame(
      6, ProjectionMatrix::from_camera(cam));
  const CameraPack pack = unfold_temporal(per_frame, 4);
  for (const auto& m : pack.matrices) CHECK(m.mat == per_frame[0].mat);
}

TEST_CASE("token layout places tokens in (l, row, col) row-major order") {
  TokenLayout layout{2, 3, 4, {}};
  CHECK(layout.count() == 24);
  const auto p0 = layout.place(0);
  CHECK((p0.l == 0 && p0.row == 0 && p0.col == 0 && p0.k == 0));
  const auto p = layout.place(1 * 12 + 2 * 4 + 3);
  CHECK((p.l == 1 && p.row == 2 && p.col == 3));
}

TEST_CASE("build_block: identity camera at zero position is identity") {
  Camera cam;
  cam.intrinsics = {1.0, 1.0, 0.0, 0.0, 1, 1};  // K = I
  const CameraPack pack =
      unfold_temporal({ProjectionMatrix::from_camera(cam)}, 1);
  const PRoPEConfig config = PRoPEConfig::make_default(16, 1);
  TokenLayout layout{1, 1, 1, {}};
  const TokenBlock b = build_block(0, layout, pack, config);
  CHECK((b.proj - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  for (double a : b.angles) CHECK(a == 0.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Random(16);
  CHECK((apply_block(b, x) - x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((apply_block_transpose(b, x) - x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((apply_block_inverse(b, x) - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("build_block normalizes away the projective scale") {
  std::mt19937_64 rng(43);
  const Camera cam = random_camera(rng);
  CameraPack pack = unfold_temporal({ProjectionMatrix::from_camera(cam)}, 1);
  CameraPack scaled = pack;
  scaled.matrices[0].mat *= 3.7;
  const PRoPEConfig config = PRoPEConfig::make_default(16, 1);
  TokenLayout layout{1, 1, 1, {}};
  const TokenBlock a = build_block(0, layout, pack, config);
  const TokenBlock b = build_block(0, layout, scaled, config);
  CHECK((a.proj - b.proj).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("blocked application equals the dense d x d oracle") {
  std::mt19937_64 rng(44);
  for (int d : {16, 32, 64}) {
    const auto cams = distinct_cameras(4, rng);
    const CameraPack pack = unfold_temporal(projections_for(cams), 4);
    const PRoPEConfig config = PRoPEConfig::make_default(d, 4);
    TokenLayout layout{1, 2, 2, {0, 1, 2, 3}};
    for (int token = 0; token < 4; ++token) {
      const TokenBlock b = build_block(token, layout, pack, config);
      const Eigen::MatrixXd D = dense_block(b, d);
      for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd x = Eigen::VectorXd::Random(d);
        CHECK((apply_block(b, x) - D * x).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((apply_block_transpose(b, x) - D.transpose() * x)
                  .cwiseAbs()
                  .maxCoeff() < 1e-9);
        CHECK((apply_block_inverse(b, x) - D.inverse() * x)
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);
      }
    }
  }
}

TEST_CASE("prope_attention reduces to vanilla attention when blocks coincide") {
  std::mt19937_64 rng(45);
  const Camera cam = random_camera(rng);
  for (int d : {16, 64}) {
    for (int n : {1, 8, 64}) {
      const CameraPack pack =
          unfold_temporal({ProjectionMatrix::from_camera(cam)}, 1);
      const PRoPEConfig config = PRoPEConfig::make_default(d, 1);
      // All tokens at RoPE position (0,0,0) via a single-cell layout.
      TokenLayout layout{1, 1, 1, {}};
      const TokenBlock block = build_block(0, layout, pack, config);
      const std::vector<TokenBlock> blocks(n, block);
      const Eigen::MatrixXd Q = Eigen::MatrixXd::Random(n, d);
      const Eigen::MatrixXd K = Eigen::MatrixXd::Random(n, d);
      const Eigen::MatrixXd V = Eigen::MatrixXd::Random(n, d);
      const Eigen::MatrixXd got = prope_attention(Q, K, V, blocks);
      const Eigen::MatrixXd want = softmax_attention(Q, K, V);
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("prope_attention: single token returns its value row") {
  std::mt19937_64 rng(46);
  const Camera cam = random_camera(rng);
  const CameraPack pack =
      unfold_temporal({ProjectionMatrix::from_camera(cam)}, 1);
  const PRoPEConfig config = PRoPEConfig::make_default(16, 1);
  TokenLayout layout{1, 1, 1, {}};
  const std::vector<TokenBlock> blocks{build_block(0, layout, pack, config)};
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Random(1, 16);
  const Eigen::MatrixXd K = Eigen::MatrixXd::Random(1, 16);
  const Eigen::MatrixXd V = Eigen::MatrixXd::Random(1, 16);
  CHECK((prope_attention(Q, K, V, blocks) - V).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("prope_attention equals the dense-matrix reference") {
  std::mt19937_64 rng(47);
  const int d = 16;
  const auto cams = distinct_cameras(4, rng);
  const CameraPack pack = unfold_temporal(projections_for(cams), 4);
  const PRoPEConfig config = PRoPEConfig::make_default(d, 4);
  TokenLayout layout{1, 2, 2, {0, 1, 2, 3}};
  std::vector<TokenBlock> blocks;
  std::vector<Eigen::MatrixXd> dense;
  for (int t = 0; t < 4; ++t) {
    blocks.push_back(build_block(t, layout, pack, config));
    dense.push_back(dense_block(blocks.back(), d));
  }
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Random(4, d);
  const Eigen::MatrixXd K = Eigen::MatrixXd::Random(4, d);
  const Eigen::MatrixXd V = Eigen::MatrixXd::Random(4, d);
  // Reference: explicit dense D_t per token.
  Eigen::MatrixXd Qt(4, d), Kt(4, d), Vt(4, d);
  for (int t = 0; t < 4; ++t) {
    Qt.row(t) = (dense[t].transpose() * Q.row(t).transpose()).transpose();
    Kt.row(t) = (dense[t].inverse() * K.row(t).transpose()).transpose();
    Vt.row(t) = (dense[t].inverse() * V.row(t).transpose()).transpose();
  }
  Eigen::MatrixXd want = softmax_attention(Qt, Kt, Vt);
  for (int t = 0; t < 4; ++t)
    want.row(t) = (dense[t] * want.row(t).transpose()).transpose();
  CHECK((prope_attention(Q, K, V, blocks) - want).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("prope_attention is invariant to a world-frame change") {
  std::mt19937_64 rng(48);
  const int d = 16, n = 6;
  for (int trial = 0; trial < 20; ++trial) {
    auto cams = distinct_cameras(n, rng);
    const PRoPEConfig config = PRoPEConfig::make_default(d, 1);
    TokenLayout layout{n, 1, 1, {}};

    auto attention_for = [&](const std::vector<Camera>& cs) {
      const CameraPack pack = unfold_temporal(projections_for(cs), 1);
      std::vector<TokenBlock> blocks;
      for (int t = 0; t < n; ++t)
        blocks.push_back(build_block(t, layout, pack, config));
      std::mt19937_64 data_rng(100 + trial);
      std::normal_distribution<double> g(0.0, 1.0);
      Eigen::MatrixXd Q(n, d), K(n, d), V(n, d);
      for (auto* M : {&Q, &K, &V})
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < d; ++j) (*M)(i, j) = g(data_rng);
      return prope_attention(Q, K, V, blocks);
    };

    const Eigen::MatrixXd base = attention_for(cams);
    // Apply a rigid world-frame change G to every extrinsic.
    const Pose g{testutil::random_rotation(rng),
                 Eigen::Vector3d::Random()};
    for (auto& c : cams) c.pose = c.pose.compose(g);
    const Eigen::MatrixXd moved = attention_for(cams);
    CHECK((base - moved).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("temporal unfolding routes frame cameras to latent-frame tokens") {
  std::mt19937_64 rng(49);
  const auto cams = distinct_cameras(8, rng);
  const CameraPack pack = unfold_temporal(projections_for(cams), 4);
  const PRoPEConfig config = PRoPEConfig::make_default(16, 4);
  // One token per (latent frame, sub-index) pair.
  TokenLayout layout{2, 2, 2, {0, 1, 2, 3, 0, 1, 2, 3}};
  for (int token = 0; token < 8; ++token) {
    const auto pl = layout.place(token);
    const TokenBlock b = build_block(token, layout, pack, config);
    const int frame = 4 * pl.l + pl.k;
    Eigen::Matrix4d want = ProjectionMatrix::from_camera(cams[frame]).mat;
    want /= std::abs(want(3, 3));
    CHECK((b.proj - want).cwiseAbs().maxCoeff() < 1e-12);
    // And no other frame's camera matches this block.
    for (int other = 0; other < 8; ++other) {
      if (other == frame) continue;
      Eigen::Matrix4d o = ProjectionMatrix::from_camera(cams[other]).mat;
      o /= std::abs(o(3, 3));
      CHECK((b.proj - o).cwiseAbs().maxCoeff() > 1e-9);
    }
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(PRoPEConfig::make_default(12), std::invalid_argument);
  PRoPEConfig c = PRoPEConfig::make_default(16);
  c.temporal_s = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

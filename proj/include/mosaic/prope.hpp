#pragma once

#include <vector>

#include "mosaic/geometry.hpp"
#include "mosaic/warping.hpp"

namespace mosaic {

struct PRoPEConfig {
  int head_dim = 0;     // multiple of 8; projective half is d/8 copies of 4x4
  RopePhaseTable rope;  // over the RoPE half (head_dim / 2 dims)
  int temporal_s = 4;

  void validate() const {
    if (head_dim <= 0 || head_dim % 8 != 0)
      throw std::invalid_argument("PRoPEConfig: head_dim must be a multiple of 8");
    if (rope.head_dim != head_dim / 2)
      throw std::invalid_argument("PRoPEConfig: rope table must cover d/2 dims");
    rope.validate();
    if (temporal_s < 1)
      throw std::invalid_argument("PRoPEConfig: temporal_s must be >= 1");
  }

  static PRoPEConfig make_default(int head_dim, int temporal_s = 4) {
    PRoPEConfig c;
    c.head_dim = head_dim;
    c.rope = RopePhaseTable::make_default(head_dim / 2);
    c.temporal_s = temporal_s;
    c.validate();
    return c;
  }
};

/// L latent frames by s sub-frames of projection matrices. pack(l, k) is the
/// camera of original frame s*l + k; short inputs are padded by repeating the
/// last camera.
struct CameraPack {
  int latent_frames = 0;
  int temporal_s = 0;
  int padded_frames = 0;  // how many trailing entries repeat the last camera
  std::vector<ProjectionMatrix> matrices;  // row-major L x s

  const ProjectionMatrix& at(int l, int k) const {
    return matrices[static_cast<size_t>(l) * temporal_s + k];
  }
};

CameraPack unfold_temporal(const std::vector<ProjectionMatrix>& per_frame,
                           int temporal_s);

/// Token grid of L latent frames of H x W tokens, each token carrying a
/// temporal sub-index k in [0, s). Token order is (l, row, col) row-major.
struct TokenLayout {
  int latent_frames = 0;
  int height = 0;
  int width = 0;
  std::vector<int> sub_index;  // per token; empty = all zero

  int count() const { return latent_frames * height * width; }

  struct Place {
    int l, k, row, col;
  };

  Place place(int token) const {
    const int per_frame = height * width;
    Place pl;
    pl.l = token / per_frame;
    const int rem = token % per_frame;
    pl.row = rem / width;
    pl.col = rem % width;
    pl.k = sub_index.empty() ? 0 : sub_index[token];
    return pl;
  }
};

/// Per-token block-diagonal transform: d/8 repeated 4x4 projective blocks on
/// the first half, 2x2 rotations on the second half. Never materialized
/// densely outside the test oracle.
struct TokenBlock {
  Eigen::Matrix4d proj = Eigen::Matrix4d::Identity();      // normalized camera
  Eigen::Matrix4d proj_inv = Eigen::Matrix4d::Identity();
  std::vector<double> angles;  // head_dim/4 rotation pairs
};

TokenBlock build_block(int token, const TokenLayout& layout,
                       const CameraPack& pack, const PRoPEConfig& config);

/// Structured application of D^T x, D^{-1} x, D x.
Eigen::VectorXd apply_block_transpose(const TokenBlock& b,
                                      const Eigen::VectorXd& x);
Eigen::VectorXd apply_block_inverse(const TokenBlock& b,
                                    const Eigen::VectorXd& x);
Eigen::VectorXd apply_block(const TokenBlock& b, const Eigen::VectorXd& x);

/// Dense d x d materialization of D; test oracle for the blocked paths.
Eigen::MatrixXd dense_block(const TokenBlock& b, int head_dim);

/// GTA-style transformed attention:
///   out_t = D_t * Attn(D^T Q, D^{-1} K, D^{-1} V)_t, scaling 1/sqrt(d).
Eigen::MatrixXd prope_attention(const Eigen::MatrixXd& Q,
                                const Eigen::MatrixXd& K,
                                const Eigen::MatrixXd& V,
                                const std::vector<TokenBlock>& blocks);

/// Plain softmax attention, used as the reduction reference.
Eigen::MatrixXd softmax_attention(const Eigen::MatrixXd& Q,
                                  const Eigen::MatrixXd& K,
                                  const Eigen::MatrixXd& V);

}  // namespace mosaic

#include "mosaic/prope.hpp"

#include <cmath>

namespace mosaic {

CameraPack unfold_temporal(const std::vector<ProjectionMatrix>& per_frame,
                           int temporal_s) {
  if (per_frame.empty())
    throw std::invalid_argument("unfold_temporal: empty camera list");
  if (temporal_s < 1)
    throw std::invalid_argument("unfold_temporal: temporal_s must be >= 1");
  CameraPack pack;
  pack.temporal_s = temporal_s;
  pack.latent_frames =
      static_cast<int>((per_frame.size() + temporal_s - 1) / temporal_s);
  const size_t total = static_cast<size_t>(pack.latent_frames) * temporal_s;
  pack.padded_frames = static_cast<int>(total - per_frame.size());
  pack.matrices.reserve(total);
  for (size_t i = 0; i < total; ++i)
    pack.matrices.push_back(
        per_frame[std::min(i, per_frame.size() - 1)]);
  return pack;
}

namespace {

Eigen::Matrix4d normalize_projection(const Eigen::Matrix4d& m) {
  // Bounds the conditioning of D^{-1}; projection matrices carry an
  // arbitrary global scale.
  const double w = std::abs(m(3, 3));
  if (w > 1e-8) return m / w;
  const double f = m.norm();
  if (f <= 1e-12)
    throw std::invalid_argument("build_block: zero projection matrix");
  return m / f;
}

}  // namespace

TokenBlock build_block(int token, const TokenLayout& layout,
                       const CameraPack& pack, const PRoPEConfig& config) {
  config.validate();
  if (token < 0 || token >= layout.count())
    throw std::invalid_argument("build_block: token out of range");
  const TokenLayout::Place pl = layout.place(token);
  if (pl.l >= pack.latent_frames || pl.k >= pack.temporal_s)
    throw std::invalid_argument("build_block: token outside camera pack");
  TokenBlock b;
  b.proj = normalize_projection(pack.at(pl.l, pl.k).mat);
  Eigen::FullPivLU<Eigen::Matrix4d> lu(b.proj);
  if (!lu.isInvertible())
    throw std::invalid_argument("build_block: singular camera matrix");
  b.proj_inv = lu.inverse();
  b.angles = rope_phases({static_cast<double>(pl.l),
                          static_cast<double>(pl.col),
                          static_cast<double>(pl.row), true},
                         config.rope);
  return b;
}

namespace {

enum class ProjKind { kPlain, kTranspose, kInverse };

Eigen::VectorXd apply_impl(const TokenBlock& b, const Eigen::VectorXd& x,
                           ProjKind kind, double angle_sign) {
  const int d = static_cast<int>(x.size());
  const int half = d / 2;
  Eigen::VectorXd out(d);
  Eigen::Matrix4d m;
  switch (kind) {
    case ProjKind::kPlain: m = b.proj; break;
    case ProjKind::kTranspose: m = b.proj.transpose(); break;
    case ProjKind::kInverse: m = b.proj_inv; break;
  }
  for (int base = 0; base < half; base += 4)
    out.segment<4>(base) = m * x.segment<4>(base);
  for (size_t i = 0; i < b.angles.size(); ++i) {
    const double c = std::cos(angle_sign * b.angles[i]);
    const double s = std::sin(angle_sign * b.angles[i]);
    const double a0 = x[half + 2 * i];
    const double a1 = x[half + 2 * i + 1];
    out[half + 2 * i] = c * a0 - s * a1;
    out[half + 2 * i + 1] = s * a0 + c * a1;
  }
  return out;
}

}  // namespace

Eigen::VectorXd apply_block_transpose(const TokenBlock& b,
                                      const Eigen::VectorXd& x) {
  return apply_impl(b, x, ProjKind::kTranspose, -1.0);
}

Eigen::VectorXd apply_block_inverse(const TokenBlock& b,
                                    const Eigen::VectorXd& x) {
  return apply_impl(b, x, ProjKind::kInverse, -1.0);
}

Eigen::VectorXd apply_block(const TokenBlock& b, const Eigen::VectorXd& x) {
  return apply_impl(b, x, ProjKind::kPlain, 1.0);
}

Eigen::MatrixXd dense_block(const TokenBlock& b, int head_dim) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(head_dim, head_dim);
  const int half = head_dim / 2;
  for (int base = 0; base < half; base += 4)
    D.block<4, 4>(base, base) = b.proj;
  for (size_t i = 0; i < b.angles.size(); ++i) {
    const double c = std::cos(b.angles[i]);
    const double s = std::sin(b.angles[i]);
    const int r = half + static_cast<int>(2 * i);
    D(r, r) = c;
    D(r, r + 1) = -s;
    D(r + 1, r) = s;
    D(r + 1, r + 1) = c;
  }
  return D;
}

Eigen::MatrixXd softmax_attention(const Eigen::MatrixXd& Q,
                                  const Eigen::MatrixXd& K,
                                  const Eigen::MatrixXd& V) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(Q.cols()));
  Eigen::MatrixXd scores = Q * K.transpose() * scale;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double m = scores.row(r).maxCoeff();
    Eigen::ArrayXd e = (scores.row(r).array() - m).exp();
    scores.row(r) = (e / e.sum()).matrix();
  }
  return scores * V;
}

Eigen::MatrixXd prope_attention(const Eigen::MatrixXd& Q,
                                const Eigen::MatrixXd& K,
                                const Eigen::MatrixXd& V,
                                const std::vector<TokenBlock>& blocks) {
  const Eigen::Index n = Q.rows();
  const Eigen::Index d = Q.cols();
  if (K.rows() != n || V.rows() != n || K.cols() != d || V.cols() != d ||
      blocks.size() != static_cast<size_t>(n))
    throw std::invalid_argument("prope_attention: shape mismatch");
  Eigen::MatrixXd Qt(n, d), Kt(n, d), Vt(n, d);
  for (Eigen::Index t = 0; t < n; ++t) {
    Qt.row(t) = apply_block_transpose(blocks[t], Q.row(t).transpose());
    Kt.row(t) = apply_block_inverse(blocks[t], K.row(t).transpose());
    Vt.row(t) = apply_block_inverse(blocks[t], V.row(t).transpose());
  }
  Eigen::MatrixXd O = softmax_attention(Qt, Kt, Vt);
  Eigen::MatrixXd out(n, d);
  for (Eigen::Index t = 0; t < n; ++t)
    out.row(t) = apply_block(blocks[t], O.row(t).transpose());
  return out;
}

}  // namespace mosaic

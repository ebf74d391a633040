#include "mosaic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mosaic {

namespace {

void check_orthonormal(const Eigen::Matrix3d& r) {
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >
          1e-6 ||
      std::abs(r.determinant() - 1.0) > 1e-6)
    throw std::invalid_argument("rot_err: matrix not a rotation");
}

}  // namespace

double rot_err_deg(const Eigen::Matrix3d& r_gt, const Eigen::Matrix3d& r_est) {
  check_orthonormal(r_gt);
  check_orthonormal(r_est);
  const double tr = (r_gt.transpose() * r_est).trace();
  const double arg = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(arg) * 180.0 / M_PI;
}

double trans_err(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_est,
                 double normalizer) {
  if (!(normalizer > 0.0))
    throw std::invalid_argument("trans_err: normalizer must be positive");
  return (t_gt - t_est).norm() / normalizer;
}

namespace {

int channels_of(const Tensor<float>& t) {
  if (t.dims.size() == 2) return 1;
  if (t.dims.size() == 3) return static_cast<int>(t.dims[2]);
  throw std::invalid_argument("image must be (H,W) or (H,W,C)");
}

double pixel_value(const Tensor<float>& t, int i, int j, int c) {
  return t.dims.size() == 2 ? t(i, j) : t(i, j, c);
}

}  // namespace

double psnr(const Tensor<float>& a, const Tensor<float>& b,
            const Tensor<uint8_t>& mask) {
  if (a.dims != b.dims)
    throw std::invalid_argument("psnr: shape mismatch");
  const int H = static_cast<int>(a.dims[0]);
  const int W = static_cast<int>(a.dims[1]);
  const int C = channels_of(a);
  if (static_cast<int>(mask.dims[0]) != H ||
      static_cast<int>(mask.dims[1]) != W)
    throw std::invalid_argument("psnr: mask shape mismatch");
  double sq = 0.0;
  size_t n = 0;
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      if (!mask(i, j)) continue;
      for (int c = 0; c < C; ++c) {
        const double d = pixel_value(a, i, j, c) - pixel_value(b, i, j, c);
        sq += d * d;
      }
      ++n;
    }
  if (n == 0) throw std::invalid_argument("psnr: empty mask");
  const double mse = sq / (static_cast<double>(n) * C);
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Tensor<float>& a, const Tensor<float>& b,
            const Tensor<uint8_t>& mask) {
  if (a.dims != b.dims)
    throw std::invalid_argument("ssim: shape mismatch");
  const int H = static_cast<int>(a.dims[0]);
  const int W = static_cast<int>(a.dims[1]);
  const int C = channels_of(a);
  constexpr int kWin = 11;
  constexpr int kHalf = kWin / 2;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  if (H < kWin || W < kWin)
    throw std::invalid_argument("ssim: image smaller than window");
  if (static_cast<int>(mask.dims[0]) != H ||
      static_cast<int>(mask.dims[1]) != W)
    throw std::invalid_argument("ssim: mask shape mismatch");

  double kernel[kWin];
  double ksum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double x = i - kHalf;
    kernel[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    ksum += kernel[i];
  }
  for (double& k : kernel) k /= ksum;

  auto gray = [&](const Tensor<float>& t, int i, int j) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) s += pixel_value(t, i, j, c);
    return s / C;
  };

  double acc = 0.0;
  size_t n = 0;
  for (int ci = kHalf; ci < H - kHalf; ++ci) {
    for (int cj = kHalf; cj < W - kHalf; ++cj) {
      if (!mask(ci, cj)) continue;
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int di = -kHalf; di <= kHalf; ++di) {
        for (int dj = -kHalf; dj <= kHalf; ++dj) {
          const double w = kernel[di + kHalf] * kernel[dj + kHalf];
          const double va = gray(a, ci + di, cj + dj);
          const double vb = gray(b, ci + di, cj + dj);
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
      const double den =
          (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      acc += num / den;
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("ssim: no masked window centers");
  return acc / static_cast<double>(n);
}

ConsistencyReport consistency_score(
    const std::vector<Tensor<float>>& frames,
    const std::vector<CorrespondenceSet>& correspondences) {
  ConsistencyReport report;
  double ssim_acc = 0.0, psnr_acc = 0.0;
  for (const auto& corr : correspondences) {
    const Tensor<float>& fa = frames.at(corr.frame_a);
    const Tensor<float>& fb = frames.at(corr.frame_b);
    const int H = static_cast<int>(fa.dims[0]);
    const int W = static_cast<int>(fa.dims[1]);
    const size_t rows = corr.matches.dims.empty() ? 0 : corr.matches.dims[0];
    if (rows == 0) continue;
    // Start from frame_a so unmatched surroundings agree; only matched
    // pixels carry frame_b evidence.
    Tensor<float> warped = fa;
    Tensor<uint8_t> mask({static_cast<uint32_t>(H), static_cast<uint32_t>(W)});
    for (size_t r = 0; r < rows; ++r) {
      const int ja = static_cast<int>(std::floor(corr.matches(r, 0)));
      const int ia = static_cast<int>(std::floor(corr.matches(r, 1)));
      const int jb = static_cast<int>(std::floor(corr.matches(r, 2)));
      const int ib = static_cast<int>(std::floor(corr.matches(r, 3)));
      if (ia < 0 || ia >= H || ja < 0 || ja >= W) continue;
      if (ib < 0 || ib >= static_cast<int>(fb.dims[0]) || jb < 0 ||
          jb >= static_cast<int>(fb.dims[1]))
        continue;
      const int C = channels_of(fa);
      for (int c = 0; c < C; ++c) {
        const double v = pixel_value(fb, ib, jb, c);
        if (fa.dims.size() == 2)
          warped(ia, ja) = static_cast<float>(v);
        else
          warped(ia, ja, c) = static_cast<float>(v);
      }
      mask(ia, ja) = 1;
    }
    size_t masked = 0;
    for (uint8_t m : mask.data) masked += m;
    if (masked == 0) continue;
    RegionScore score;
    score.frame_a = corr.frame_a;
    score.frame_b = corr.frame_b;
    score.pixels = masked;
    score.psnr = psnr(warped, fa, mask);
    score.ssim = ssim(warped, fa, mask);
    psnr_acc += score.psnr;
    ssim_acc += score.ssim;
    report.total_pixels += masked;
    report.regions.push_back(score);
  }
  if (!report.regions.empty()) {
    report.mean_psnr = psnr_acc / report.regions.size();
    report.mean_ssim = ssim_acc / report.regions.size();
  }
  return report;
}

double dynamic_score(const std::vector<Tensor<double>>& flow_fields) {
  double acc = 0.0;
  size_t n = 0;
  for (const auto& f : flow_fields) {
    const size_t pixels = f.count() / 2;
    for (size_t i = 0; i < pixels; ++i) {
      const double u = f.data[2 * i];
      const double v = f.data[2 * i + 1];
      acc += std::sqrt(u * u + v * v);
    }
    n += pixels;
  }
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

}  // namespace mosaic

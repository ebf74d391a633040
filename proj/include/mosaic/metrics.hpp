#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mosaic/tensor.hpp"

namespace mosaic {

inline constexpr double kPsnrCapDb = 99.0;

/// Geodesic rotation distance in degrees: arccos((tr(R_gtᵀ R_est) - 1) / 2),
/// trace argument clamped to [-1, 1]. Throws on non-orthonormal input.
double rot_err_deg(const Eigen::Matrix3d& r_gt, const Eigen::Matrix3d& r_est);

/// ||t_gt - t_est|| / normalizer; normalizer is the ground-truth trajectory
/// length. Throws on normalizer <= 0.
double trans_err(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_est,
                 double normalizer);

/// Masked PSNR in dB over images in [0,1]; identical masked regions cap at
/// 99 dB. Images are (H,W) or (H,W,C); mask is (H,W), nonzero = counted.
double psnr(const Tensor<float>& a, const Tensor<float>& b,
            const Tensor<uint8_t>& mask);

/// Masked mean local SSIM (11-tap Gaussian window, sigma 1.5, K1=0.01,
/// K2=0.03, L=1) over windows that fit the image and whose center is masked.
/// Multichannel input is reduced to the channel mean first.
double ssim(const Tensor<float>& a, const Tensor<float>& b,
            const Tensor<uint8_t>& mask);

struct RegionScore {
  int frame_a = 0;
  int frame_b = 0;
  double ssim = 0.0;
  double psnr = 0.0;
  size_t pixels = 0;
};

struct ConsistencyReport {
  std::vector<RegionScore> regions;
  std::optional<double> mean_ssim;
  std::optional<double> mean_psnr;
  size_t total_pixels = 0;
};

struct CorrespondenceSet {
  int frame_a = 0;
  int frame_b = 0;
  Tensor<double> matches;  // (N,4): ua, va, ub, vb
};

/// Warps each annotated region of frame_a into frame_b space (nearest-pixel
/// sampling of frame_b at the fractional target) and scores masked
/// PSNR/SSIM against frame_a.
ConsistencyReport consistency_score(
    const std::vector<Tensor<float>>& frames,
    const std::vector<CorrespondenceSet>& correspondences);

/// Mean L2 flow magnitude over all pixels and fields; fields are (H,W,2).
double dynamic_score(const std::vector<Tensor<double>>& flow_fields);

}  // namespace mosaic

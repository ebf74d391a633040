#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace mosaic {

/// Pinhole intrinsics, in pixels.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    if (fx <= 0.0 || fy <= 0.0)
      throw std::invalid_argument("Intrinsics: focal lengths must be positive");
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
      throw std::invalid_argument("Intrinsics: principal point outside image");
  }

  // K embedded in a 4x4 with (3,3)=1, so the projective algebra stays on
  // invertible 4x4 matrices.
  Eigen::Matrix4d as_matrix4() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m(0, 0) = fx;
    m(1, 1) = fy;
    m(0, 2) = cx;
    m(1, 2) = cy;
    return m;
  }
};

/// Rigid world-to-camera map: x_cam = R * x_world + t.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate(double tol = 1e-9) const {
    if ((rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff() > tol)
      throw std::invalid_argument("Pose: rotation not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > tol)
      throw std::invalid_argument("Pose: rotation determinant != +1");
  }

  Eigen::Vector3d to_camera(const Eigen::Vector3d& x_world) const {
    return rotation * x_world + translation;
  }

  Eigen::Vector3d to_world(const Eigen::Vector3d& x_cam) const {
    return rotation.transpose() * (x_cam - translation);
  }

  Pose inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  /// this ∘ other: first apply other, then this.
  Pose compose(const Pose& other) const {
    return {rotation * other.rotation,
            rotation * other.translation + translation};
  }

  Eigen::Matrix4d as_matrix4() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 3>(0, 0) = rotation;
    m.block<3, 1>(0, 3) = translation;
    return m;
  }
};

struct Camera {
  Intrinsics intrinsics;
  Pose pose;
};

/// Continuous image coordinate with an in-frustum flag. Coordinates are
/// never clamped; validity is reported separately so downstream warping can
/// keep the unclamped value.
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
  bool valid = false;
};

struct ProjectionMatrix {
  Eigen::Matrix4d mat = Eigen::Matrix4d::Identity();

  static ProjectionMatrix from_camera(const Camera& cam) {
    return {cam.intrinsics.as_matrix4() * cam.pose.as_matrix4()};
  }

  void validate() const {
    if (std::abs(mat.determinant()) <= 1e-12)
      throw std::invalid_argument("ProjectionMatrix: singular matrix");
  }
};

struct Reprojection {
  PixelCoord coord;
  double depth = 0.0;  // z in the target camera frame
};

/// Perspective projection of a world point. valid=false when the point is
/// behind the camera or lands outside the image bounds; the (u,v) values are
/// still the unclamped perspective-division result whenever depth > 0.
Reprojection project(const Camera& cam, const Eigen::Vector3d& point_world);

/// Inverse of project at a known depth. Rejects depth <= 0.
Eigen::Vector3d back_project(const Camera& cam, double u, double v,
                             double depth);

/// Back-project (u,v,depth) in cam_i, re-project into cam_j. Fractional
/// output preserved; valid=false outside frustum j.
Reprojection reproject(double u, double v, double depth, const Camera& cam_i,
                       const Camera& cam_j);

/// p1 * p2^{-1}. Throws on singular p2.
Eigen::Matrix4d relative_projection(const ProjectionMatrix& p1,
                                    const ProjectionMatrix& p2);

}  // namespace mosaic

#include "mosaic/geometry.hpp"

namespace mosaic {

Reprojection project(const Camera& cam, const Eigen::Vector3d& point_world) {
  const Eigen::Vector3d p = cam.pose.to_camera(point_world);
  Reprojection out;
  out.depth = p.z();
  if (p.z() <= 0.0) {
    out.coord.valid = false;
    return out;
  }
  out.coord.u = cam.intrinsics.fx * p.x() / p.z() + cam.intrinsics.cx;
  out.coord.v = cam.intrinsics.fy * p.y() / p.z() + cam.intrinsics.cy;
  out.coord.valid = out.coord.u >= 0.0 && out.coord.u < cam.intrinsics.width &&
                    out.coord.v >= 0.0 && out.coord.v < cam.intrinsics.height;
  return out;
}

Eigen::Vector3d back_project(const Camera& cam, double u, double v,
                             double depth) {
  if (depth <= 0.0)
    throw std::invalid_argument("back_project: depth must be positive");
  const Eigen::Vector3d p_cam{(u - cam.intrinsics.cx) / cam.intrinsics.fx * depth,
                              (v - cam.intrinsics.cy) / cam.intrinsics.fy * depth,
                              depth};
  return cam.pose.to_world(p_cam);
}

Reprojection reproject(double u, double v, double depth, const Camera& cam_i,
                       const Camera& cam_j) {
  return project(cam_j, back_project(cam_i, u, v, depth));
}

Eigen::Matrix4d relative_projection(const ProjectionMatrix& p1,
                                    const ProjectionMatrix& p2) {
  Eigen::FullPivLU<Eigen::Matrix4d> lu(p2.mat);
  if (!lu.isInvertible())
    throw std::invalid_argument("relative_projection: singular p2");
  return p1.mat * lu.inverse();
}

}  // namespace mosaic

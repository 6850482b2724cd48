#pragma once

#include "exkin/geometry.hpp"

namespace exkin {

/// Thrown when a point lands at or behind the camera plane; projection and
/// its gradients are undefined there.
class BehindCameraError : public Error {
public:
  explicit BehindCameraError(const std::string& msg) : Error(msg) {}
};

/// Continuous image-space observation: sub-pixel coordinates plus
/// camera-frame depth in meters.
struct ImagePoint {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;

  Eigen::Vector3d vec() const { return {x, y, depth}; }
};

/// Pinhole camera: extrinsic base→camera transform plus intrinsics.
/// Depth is camera-frame z, matching depth-image semantics.
struct CameraModel {
  RigidTransform extrinsic;  // base frame -> camera frame
  double fx = 500.0, fy = 500.0;
  double cx = 320.0, cy = 240.0;
  int width = 640, height = 480;

  static constexpr double kMinDepth = 1e-9;

  void validate() const {
    if (fx <= 0.0 || fy <= 0.0) throw Error("camera: focal lengths must be positive");
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
      throw Error("camera: principal point outside image");
  }

  Eigen::Vector3d to_camera(const Eigen::Vector3d& p_base) const {
    return extrinsic.apply(p_base);
  }

  ImagePoint project(const Eigen::Vector3d& p_base) const {
    const Eigen::Vector3d pc = to_camera(p_base);
    if (pc.z() <= kMinDepth) {
      throw BehindCameraError("point at camera-frame z=" + std::to_string(pc.z()) +
                              " is behind the camera");
    }
    return {fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy, pc.z()};
  }

  /// Inverse of project using the stored depth; returns the camera-frame point.
  Eigen::Vector3d unproject(const ImagePoint& ip) const {
    return {(ip.x - cx) / fx * ip.depth, (ip.y - cy) / fy * ip.depth, ip.depth};
  }

  bool in_view(const ImagePoint& ip) const {
    return ip.x >= 0.0 && ip.x < width && ip.y >= 0.0 && ip.y < height && ip.depth > 0.0;
  }

  /// Jacobian of (x, y, depth) w.r.t. the camera-frame point.
  Eigen::Matrix3d projection_jacobian_camera(const Eigen::Vector3d& pc) const {
    if (pc.z() <= kMinDepth) throw BehindCameraError("projection jacobian undefined behind camera");
    Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
    const double iz = 1.0 / pc.z();
    j(0, 0) = fx * iz;
    j(0, 2) = -fx * pc.x() * iz * iz;
    j(1, 1) = fy * iz;
    j(1, 2) = -fy * pc.y() * iz * iz;
    j(2, 2) = 1.0;
    return j;
  }
};

/// Project every virtual joint of the extended chain; output order follows φ.
std::vector<ImagePoint> project_chain(const CameraModel& cam, const KinematicChain& chain,
                                      const Eigen::VectorXd& theta, const VirtualJointSet& phi);

}  // namespace exkin

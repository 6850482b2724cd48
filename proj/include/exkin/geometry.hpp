#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <stdexcept>
#include <string>
#include <vector>

namespace exkin {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Rigid-body transform stored as unit quaternion + translation.
/// Composition renormalizes the quaternion so long products stay on the
/// unit sphere.
struct RigidTransform {
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  static RigidTransform identity() { return {}; }

  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis_angle,
                                        const Eigen::Vector3d& translation) {
    RigidTransform t;
    const double angle = axis_angle.norm();
    if (angle > 0.0) {
      t.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis_angle / angle));
    }
    t.translation = translation;
    return t;
  }

  Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  RigidTransform inverse() const {
    RigidTransform t;
    t.rotation = rotation.conjugate();
    t.translation = -(t.rotation * translation);
    return t;
  }
};

/// result = a ∘ b (apply b first, then a).
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform t;
  t.rotation = (a.rotation * b.rotation).normalized();
  t.translation = a.rotation * b.translation + a.translation;
  return t;
}

enum class JointType { Revolute, Fixed };

/// One link of the serial chain. For revolute links the joint rotates about
/// `joint_axis` in the parent frame, then `fixed_transform` places the link
/// frame: pose_i = pose_{i-1} ∘ Rot(axis, θ) ∘ fixed_transform.
struct Link {
  std::string name;
  JointType joint_type = JointType::Fixed;
  Eigen::Vector3d joint_axis{0.0, 0.0, 1.0};
  RigidTransform fixed_transform;
};

/// Translation-only extension rigidly attached at the end-effector frame.
struct VirtualLink {
  Eigen::Vector3d translation{0.0, 0.0, 0.0};
  bool learnable = true;
};

/// Flat vector of the K virtual-link translations, the learnable parameters
/// of the extended chain. Stored stacked as (x0,y0,z0, x1,y1,z1, ...).
struct VirtualJointSet {
  Eigen::VectorXd params;  // 3K entries, meters

  VirtualJointSet() = default;
  explicit VirtualJointSet(Eigen::VectorXd p) : params(std::move(p)) {
    if (params.size() % 3 != 0) throw Error("VirtualJointSet: size must be a multiple of 3");
  }
  static VirtualJointSet zeros(int k) { return VirtualJointSet(Eigen::VectorXd::Zero(3 * k)); }

  int count() const { return static_cast<int>(params.size() / 3); }
  Eigen::Vector3d offset(int k) const { return params.segment<3>(3 * k); }
  void set_offset(int k, const Eigen::Vector3d& v) { params.segment<3>(3 * k) = v; }
};

/// Serial kinematic chain from base to end-effector, optionally carrying
/// virtual links that extend the chain past the end-effector.
class KinematicChain {
public:
  KinematicChain() = default;
  KinematicChain(std::vector<Link> links, std::vector<VirtualLink> virtual_links = {});

  int dof() const { return dof_; }
  int link_count() const { return static_cast<int>(links_.size()); }
  int ee_index() const { return static_cast<int>(links_.size()) - 1; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<VirtualLink>& virtual_links() const { return virtual_links_; }

  /// Cumulative pose of every link in the base frame.
  std::vector<RigidTransform> forward_kinematics(const Eigen::VectorXd& theta) const;

  /// End-effector pose only.
  RigidTransform ee_pose(const Eigen::VectorXd& theta) const;

  /// Base-frame positions of the K virtual joints: p_k = T_ee ∘ φ_k.
  std::vector<Eigen::Vector3d> virtual_link_positions(const Eigen::VectorXd& theta,
                                                      const VirtualJointSet& phi) const;

  /// Geometric Jacobian of a base-frame point rigidly attached to the
  /// end-effector: column j is ω_j × (p − o_j) for revolute joint j.
  Eigen::Matrix3Xd point_jacobian(const Eigen::VectorXd& theta,
                                  const Eigen::Vector3d& point) const;

  void check_theta(const Eigen::VectorXd& theta) const;

private:
  std::vector<Link> links_;
  std::vector<VirtualLink> virtual_links_;
  int dof_ = 0;
};

}  // namespace exkin

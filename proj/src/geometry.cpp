#include "exkin/geometry.hpp"

#include <cmath>

namespace exkin {

KinematicChain::KinematicChain(std::vector<Link> links, std::vector<VirtualLink> virtual_links)
    : links_(std::move(links)), virtual_links_(std::move(virtual_links)) {
  if (links_.empty()) throw Error("KinematicChain: empty link list");
  for (auto& link : links_) {
    if (link.joint_type == JointType::Revolute) {
      const double n = link.joint_axis.norm();
      if (n < 1e-12) throw Error("KinematicChain: revolute link '" + link.name + "' has zero axis");
      link.joint_axis /= n;
      ++dof_;
    }
  }
}

void KinematicChain::check_theta(const Eigen::VectorXd& theta) const {
  if (theta.size() != dof_) {
    throw Error("joint vector has " + std::to_string(theta.size()) + " entries, chain has " +
                std::to_string(dof_) + " revolute joints");
  }
  if (!theta.allFinite()) throw Error("joint vector contains non-finite entries");
}

std::vector<RigidTransform> KinematicChain::forward_kinematics(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  std::vector<RigidTransform> poses;
  poses.reserve(links_.size());
  RigidTransform cur;
  int joint = 0;
  for (const auto& link : links_) {
    if (link.joint_type == JointType::Revolute) {
      RigidTransform rot;
      rot.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(theta[joint++], link.joint_axis));
      cur = compose(cur, rot);
    }
    cur = compose(cur, link.fixed_transform);
    poses.push_back(cur);
  }
  return poses;
}

RigidTransform KinematicChain::ee_pose(const Eigen::VectorXd& theta) const {
  return forward_kinematics(theta).back();
}

std::vector<Eigen::Vector3d> KinematicChain::virtual_link_positions(
    const Eigen::VectorXd& theta, const VirtualJointSet& phi) const {
  const RigidTransform ee = ee_pose(theta);
  std::vector<Eigen::Vector3d> out;
  out.reserve(phi.count());
  for (int k = 0; k < phi.count(); ++k) out.push_back(ee.apply(phi.offset(k)));
  return out;
}

Eigen::Matrix3Xd KinematicChain::point_jacobian(const Eigen::VectorXd& theta,
                                                const Eigen::Vector3d& point) const {
  check_theta(theta);
  Eigen::Matrix3Xd jac = Eigen::Matrix3Xd::Zero(3, dof_);
  RigidTransform cur;
  int joint = 0;
  for (const auto& link : links_) {
    if (link.joint_type == JointType::Revolute) {
      // Joint frame before applying the joint rotation.
      const Eigen::Vector3d axis_world = cur.rotation * link.joint_axis;
      const Eigen::Vector3d origin = cur.translation;
      jac.col(joint) = axis_world.cross(point - origin);
      RigidTransform rot;
      rot.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(theta[joint], link.joint_axis));
      cur = compose(cur, rot);
      ++joint;
    }
    cur = compose(cur, link.fixed_transform);
  }
  return jac;
}

}  // namespace exkin

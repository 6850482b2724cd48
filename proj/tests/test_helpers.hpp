#pragma once

#include <random>

#include "exkin/camera.hpp"
#include "exkin/geometry.hpp"
#include "exkin/oracle.hpp"

namespace exkin::testing {

/// Planar 2-link arm: l1 = l2 = 0.5 m along x, both joints revolute about z.
inline KinematicChain planar_two_link() {
  std::vector<Link> links(2);
  links[0].name = "l1";
  links[0].joint_type = JointType::Revolute;
  links[0].joint_axis = {0, 0, 1};
  links[0].fixed_transform.translation = {0.5, 0, 0};
  links[1] = links[0];
  links[1].name = "l2";
  return KinematicChain(links);
}

/// Kuka-class 7-DoF chain used across the numeric tests.
inline KinematicChain seven_dof() {
  const Eigen::Vector3d z{0, 0, 1}, y{0, 1, 0};
  struct Spec {
    Eigen::Vector3d axis;
    double dz;
  };
  const std::vector<Spec> specs = {{z, 0.34}, {y, 0.0},  {z, 0.4}, {-y, 0.0},
                                   {z, 0.4},  {y, 0.126}, {z, 0.1}};
  std::vector<Link> links;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Link link;
    link.name = "j" + std::to_string(i + 1);
    link.joint_type = JointType::Revolute;
    link.joint_axis = specs[i].axis;
    link.fixed_transform.translation = {0, 0, specs[i].dz};
    links.push_back(std::move(link));
  }
  return KinematicChain(links);
}

/// Camera 2 m in front of the base on +x, looking back at the arm.
inline CameraModel test_camera() {
  CameraModel cam;
  // Camera frame: z forward (-x base), x right (-y base), y down (-z base).
  Eigen::Matrix3d r;
  r << 0, 1, 0, 0, 0, -1, -1, 0, 0;
  const Eigen::Vector3d position{2.0, 0.0, 0.45};
  cam.extrinsic.rotation = Eigen::Quaterniond(r);
  cam.extrinsic.translation = -(r * position);
  return cam;
}

/// Elbow-bent home configuration keeping the end-effector in front of the
/// test camera.
inline Eigen::VectorXd home_pose() {
  Eigen::VectorXd theta(7);
  theta << 0.0, 0.7, 0.0, -1.1, 0.0, 0.5, 0.0;
  return theta;
}

inline Eigen::VectorXd random_pose_near_home(std::mt19937_64& rng, double spread = 0.3) {
  std::uniform_real_distribution<double> uni(-spread, spread);
  Eigen::VectorXd theta = home_pose();
  for (int j = 0; j < theta.size(); ++j) theta[j] += uni(rng);
  return theta;
}

/// Harness sampling ranges: a band around the home pose that keeps every
/// ground-truth keypoint inside the test camera's frustum.
inline JointSampler default_sampler() {
  JointSampler s;
  s.lower.resize(7);
  s.upper.resize(7);
  s.lower << -0.3, 0.4, -0.3, -1.4, -0.3, 0.2, -0.3;
  s.upper << 0.3, 1.0, 0.3, -0.8, 0.3, 0.8, 0.3;
  return s;
}

inline VirtualJointSet box_object() {
  VirtualJointSet phi = VirtualJointSet::zeros(3);
  phi.set_offset(0, {0.05, 0.0, 0.08});
  phi.set_offset(1, {-0.05, 0.02, 0.10});
  phi.set_offset(2, {0.0, -0.04, 0.12});
  return phi;
}

}  // namespace exkin::testing

#pragma once

#include <functional>

#include "exkin/camera.hpp"

namespace exkin {

/// Analytic Jacobians of the projected virtual joints. Everything here is a
/// plain chain-rule composition of the pinhole Jacobian, the camera rotation
/// and the geometric Jacobian of the extended chain.

/// ∂(x_k, y_k, depth_k)/∂φ_k, one 3×3 block per keypoint. Cross-keypoint
/// blocks of the full Jacobian are identically zero, so only the diagonal
/// blocks are materialized.
std::vector<Eigen::Matrix3d> projection_jacobian_phi(const CameraModel& cam,
                                                     const KinematicChain& chain,
                                                     const Eigen::VectorXd& theta,
                                                     const VirtualJointSet& phi);

/// Dense 3K×3K block-diagonal assembly of projection_jacobian_phi.
Eigen::MatrixXd projection_jacobian_phi_dense(const CameraModel& cam, const KinematicChain& chain,
                                              const Eigen::VectorXd& theta,
                                              const VirtualJointSet& phi);

/// ∂(x_k, y_k, depth_k)/∂θ for all keypoints, stacked 3K×dof.
Eigen::MatrixXd projection_jacobian_theta(const CameraModel& cam, const KinematicChain& chain,
                                          const Eigen::VectorXd& theta,
                                          const VirtualJointSet& phi);

/// Central-difference gradient of a scalar function, the universal test
/// oracle for every analytic gradient in the toolkit.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double h = 1e-6);

/// Max over coordinates of |analytic − central difference| / (|central difference| + 1e-12).
double finite_difference_check(const std::function<double(const Eigen::VectorXd&)>& f,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& analytic_grad,
                               double h = 1e-6);

}  // namespace exkin

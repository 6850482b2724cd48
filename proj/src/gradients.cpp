#include "exkin/gradients.hpp"

#include <cmath>

namespace exkin {

std::vector<Eigen::Matrix3d> projection_jacobian_phi(const CameraModel& cam,
                                                     const KinematicChain& chain,
                                                     const Eigen::VectorXd& theta,
                                                     const VirtualJointSet& phi) {
  const RigidTransform ee = chain.ee_pose(theta);
  const Eigen::Matrix3d r_ee = ee.rotation_matrix();
  const Eigen::Matrix3d r_cam = cam.extrinsic.rotation_matrix();
  std::vector<Eigen::Matrix3d> blocks;
  blocks.reserve(phi.count());
  for (int k = 0; k < phi.count(); ++k) {
    const Eigen::Vector3d pc = cam.to_camera(ee.apply(phi.offset(k)));
    // ∂p_base/∂φ_k = R_ee, ∂p_cam/∂p_base = R_cam.
    blocks.push_back(cam.projection_jacobian_camera(pc) * r_cam * r_ee);
  }
  return blocks;
}

Eigen::MatrixXd projection_jacobian_phi_dense(const CameraModel& cam, const KinematicChain& chain,
                                              const Eigen::VectorXd& theta,
                                              const VirtualJointSet& phi) {
  const auto blocks = projection_jacobian_phi(cam, chain, theta, phi);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3 * phi.count(), 3 * phi.count());
  for (int k = 0; k < phi.count(); ++k) jac.block<3, 3>(3 * k, 3 * k) = blocks[k];
  return jac;
}

Eigen::MatrixXd projection_jacobian_theta(const CameraModel& cam, const KinematicChain& chain,
                                          const Eigen::VectorXd& theta,
                                          const VirtualJointSet& phi) {
  const RigidTransform ee = chain.ee_pose(theta);
  const Eigen::Matrix3d r_cam = cam.extrinsic.rotation_matrix();
  Eigen::MatrixXd jac(3 * phi.count(), chain.dof());
  for (int k = 0; k < phi.count(); ++k) {
    const Eigen::Vector3d p = ee.apply(phi.offset(k));
    const Eigen::Vector3d pc = cam.to_camera(p);
    jac.middleRows<3>(3 * k) =
        cam.projection_jacobian_camera(pc) * r_cam * chain.point_jacobian(theta, p);
  }
  return jac;
}

Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw Error("finite_difference_gradient: non-finite function value at coordinate " +
                  std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double finite_difference_check(const std::function<double(const Eigen::VectorXd&)>& f,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& analytic_grad,
                               double h) {
  if (analytic_grad.size() != x.size()) throw Error("finite_difference_check: gradient size mismatch");
  const Eigen::VectorXd numeric = finite_difference_gradient(f, x, h);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double err = std::abs(analytic_grad[i] - numeric[i]) / (std::abs(numeric[i]) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace exkin

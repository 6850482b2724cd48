#include "exkin/regression.hpp"

#include <cmath>

namespace exkin {

Eigen::Vector3d residual_scale(const CameraModel& cam, bool normalized) {
  return normalized ? Eigen::Vector3d(1.0 / cam.fx, 1.0 / cam.fy, 1.0)
                    : Eigen::Vector3d::Ones();
}

double loss_trans(const CameraModel& cam, const KinematicChain& chain, const Eigen::VectorXd& theta,
                  const VirtualJointSet& phi, const std::vector<ImagePoint>& z_obs,
                  bool normalized, Eigen::VectorXd* grad_phi) {
  if (static_cast<int>(z_obs.size()) != phi.count())
    throw Error("loss_trans: observation count does not match virtual joint count");
  const Eigen::Vector3d scale = residual_scale(cam, normalized);
  const auto projected = project_chain(cam, chain, theta, phi);
  std::vector<Eigen::Matrix3d> jac_blocks;
  if (grad_phi) {
    jac_blocks = projection_jacobian_phi(cam, chain, theta, phi);
    grad_phi->setZero(phi.params.size());
  }
  double loss = 0.0;
  for (int k = 0; k < phi.count(); ++k) {
    const Eigen::Vector3d r = scale.asDiagonal() * (projected[k].vec() - z_obs[k].vec());
    loss += r.squaredNorm();
    if (grad_phi)
      grad_phi->segment<3>(3 * k) = 2.0 * jac_blocks[k].transpose() * scale.asDiagonal() * r;
  }
  return loss;
}

double dataset_loss(const ObservationDataset& dataset, const CameraModel& cam,
                    const KinematicChain& chain, const VirtualJointSet& phi, bool normalized,
                    Eigen::VectorXd* grad_phi) {
  if (dataset.records.empty()) throw Error("dataset_loss: empty dataset");
  double loss = 0.0;
  Eigen::VectorXd grad_record;
  if (grad_phi) grad_phi->setZero(phi.params.size());
  for (const auto& rec : dataset.records) {
    loss += loss_trans(cam, chain, rec.theta, phi, rec.keypoints, normalized,
                       grad_phi ? &grad_record : nullptr);
    if (grad_phi) *grad_phi += grad_record;
  }
  const double inv = 1.0 / static_cast<double>(dataset.records.size());
  if (grad_phi) *grad_phi *= inv;
  return loss * inv;
}

namespace {

RegressionResult run_plain_gd(const ObservationDataset& dataset, const CameraModel& cam,
                              const KinematicChain& chain, const RegressionConfig& cfg,
                              VirtualJointSet phi) {
  RegressionResult res;
  Eigen::VectorXd grad;
  double loss = dataset_loss(dataset, cam, chain, phi, cfg.normalized_residuals, &grad);
  res.loss_history.push_back(loss);
  double lr = cfg.learning_rate;
  for (int step = 0; step < cfg.max_steps && loss > cfg.tol; ++step) {
    if (!std::isfinite(loss)) throw Error("regress: loss diverged at step " + std::to_string(step));
    // Step-halving acceptance: shrink until the step does not increase the loss.
    VirtualJointSet trial = phi;
    double trial_loss = loss;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      trial.params = phi.params - lr * grad;
      trial_loss = dataset_loss(dataset, cam, chain, trial, cfg.normalized_residuals, nullptr);
      if (std::isfinite(trial_loss) && trial_loss <= loss) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;  // stalled at numerical precision
    phi = trial;
    loss = dataset_loss(dataset, cam, chain, phi, cfg.normalized_residuals, &grad);
    res.loss_history.push_back(loss);
    ++res.steps_taken;
    lr = std::min(lr * 1.5, 1e6 * cfg.learning_rate);
  }
  res.phi = std::move(phi);
  res.converged = res.loss_history.back() <= cfg.tol;
  res.final_learning_rate = lr;
  return res;
}

RegressionResult run_adam(const ObservationDataset& dataset, const CameraModel& cam,
                          const KinematicChain& chain, const RegressionConfig& cfg,
                          VirtualJointSet phi) {
  RegressionResult res;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(phi.params.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(phi.params.size());
  Eigen::VectorXd grad;
  double loss = dataset_loss(dataset, cam, chain, phi, cfg.normalized_residuals, &grad);
  res.loss_history.push_back(loss);
  for (int step = 1; step <= cfg.max_steps && loss > cfg.tol; ++step) {
    if (!std::isfinite(loss)) throw Error("regress: loss diverged at step " + std::to_string(step));
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad).eval();
    const Eigen::VectorXd m_hat = m / (1.0 - std::pow(beta1, step));
    const Eigen::VectorXd v_hat = v / (1.0 - std::pow(beta2, step));
    phi.params -= cfg.learning_rate * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
    loss = dataset_loss(dataset, cam, chain, phi, cfg.normalized_residuals, &grad);
    res.loss_history.push_back(loss);
    ++res.steps_taken;
  }
  res.phi = std::move(phi);
  res.converged = res.loss_history.back() <= cfg.tol;
  res.final_learning_rate = cfg.learning_rate;
  return res;
}

}  // namespace

RegressionResult regress(const ObservationDataset& dataset, const CameraModel& cam,
                         const KinematicChain& chain, const RegressionConfig& cfg) {
  cfg.validate();
  if (dataset.records.empty()) throw Error("regress: empty dataset");
  const int k = dataset.keypoint_count();
  VirtualJointSet phi = cfg.init_phi.size() > 0 ? VirtualJointSet(cfg.init_phi)
                                                : VirtualJointSet::zeros(k);
  if (phi.count() != k) throw Error("regress: init_phi size does not match keypoint count");
  return cfg.optimizer == Optimizer::PlainGd ? run_plain_gd(dataset, cam, chain, cfg, std::move(phi))
                                             : run_adam(dataset, cam, chain, cfg, std::move(phi));
}

RegressionResult regrasp_adapt(const RegressionResult& prev, const ObservationDataset& new_dataset,
                               const CameraModel& cam, const KinematicChain& chain,
                               RegressionConfig cfg) {
  cfg.init_phi = prev.phi.params;
  // Carry the adapted step size along with the warm-started parameters;
  // otherwise both runs spend the same ramp-up steps growing it.
  if (cfg.optimizer == Optimizer::PlainGd && prev.final_learning_rate > 0.0)
    cfg.learning_rate = prev.final_learning_rate;
  return regress(new_dataset, cam, chain, cfg);
}

}  // namespace exkin

#include "exkin/control.hpp"

#include <cmath>

namespace exkin {

Trajectory rollout(const KinematicChain& chain, const CameraModel& cam, const VirtualJointSet& phi,
                   const Eigen::VectorXd& theta0, const ActionSequence& u) {
  chain.check_theta(theta0);
  if (u.deltas.cols() != chain.dof()) throw Error("rollout: action dof mismatch");
  Trajectory traj;
  traj.thetas.reserve(u.horizon() + 1);
  traj.keypoints.reserve(u.horizon() + 1);
  Eigen::VectorXd theta = theta0;
  for (int t = 0; t <= u.horizon(); ++t) {
    if (t > 0) theta += u.deltas.row(t - 1).transpose();
    try {
      traj.keypoints.push_back(project_chain(cam, chain, theta, phi));
    } catch (const BehindCameraError& e) {
      throw BehindCameraError("rollout step " + std::to_string(t) + ": " + e.what());
    }
    traj.thetas.push_back(theta);
  }
  return traj;
}

double cost(const Trajectory& traj, const GoalSpec& goal, const KinematicChain& chain,
            const CameraModel& cam, const VirtualJointSet& phi, const ControlConfig& cfg,
            const ActionSequence& u, Eigen::MatrixXd* grad_u) {
  const int horizon = static_cast<int>(traj.thetas.size()) - 1;
  const int k = static_cast<int>(goal.z_goal.size());
  if (k != phi.count()) throw Error("cost: goal keypoint count mismatch");

  double total = cfg.action_reg * u.deltas.squaredNorm();
  // Per-step gradient of the state cost w.r.t. θ_t; u_s collects the suffix
  // sum over t > s since θ_t = θ_0 + Σ_{s<t} u_s.
  std::vector<Eigen::VectorXd> g_theta(horizon + 1, Eigen::VectorXd::Zero(chain.dof()));
  for (int t = 1; t <= horizon; ++t) {
    const double w_t = (t == horizon) ? 1.0 : cfg.running_weight;
    if (w_t == 0.0) continue;
    Eigen::VectorXd residual(3 * k);
    for (int i = 0; i < k; ++i)
      residual.segment<3>(3 * i) =
          goal.weights.asDiagonal() * (traj.keypoints[t][i].vec() - goal.z_goal[i].vec());
    double step_cost = 0.0;
    for (int i = 0; i < k; ++i) {
      const Eigen::Vector3d d = traj.keypoints[t][i].vec() - goal.z_goal[i].vec();
      step_cost += (goal.weights.array() * d.array().square()).sum();
    }
    total += w_t * step_cost;
    if (grad_u) {
      const Eigen::MatrixXd jac = projection_jacobian_theta(cam, chain, traj.thetas[t], phi);
      g_theta[t] = 2.0 * w_t * jac.transpose() * residual;
    }
  }
  if (grad_u) {
    grad_u->setZero(horizon, chain.dof());
    Eigen::VectorXd suffix = Eigen::VectorXd::Zero(chain.dof());
    for (int s = horizon - 1; s >= 0; --s) {
      suffix += g_theta[s + 1];
      grad_u->row(s) = suffix.transpose() + 2.0 * cfg.action_reg * u.deltas.row(s);
    }
  }
  return total;
}

namespace {

void clamp_actions(Eigen::MatrixXd& deltas, double bound) {
  if (bound > 0.0) deltas = deltas.cwiseMax(-bound).cwiseMin(bound);
}

}  // namespace

namespace {

// Curvature preconditioner for the action gradient: (J^T W J + lambda I)^-1
// built at the final rolled-out state. The raw pixel cost has a Hessian
// spanning several orders of magnitude across joints (wrist levers are
// centimeters, shoulder levers are meters), and plain descent stalls long
// before sub-pixel accuracy; scaling by the local curvature fixes that
// without touching the cost definition.
Eigen::MatrixXd precondition_gradient(const KinematicChain& chain, const CameraModel& cam,
                                      const VirtualJointSet& phi, const Eigen::VectorXd& theta_end,
                                      const GoalSpec& goal, const Eigen::MatrixXd& grad) {
  const Eigen::MatrixXd jac = projection_jacobian_theta(cam, chain, theta_end, phi);
  Eigen::VectorXd w(3 * phi.count());
  for (int i = 0; i < phi.count(); ++i) w.segment<3>(3 * i) = goal.weights;
  Eigen::MatrixXd hess = jac.transpose() * w.asDiagonal() * jac;
  hess.diagonal().array() += 1e-6 * hess.diagonal().maxCoeff() + 1e-12;
  return Eigen::LDLT<Eigen::MatrixXd>(hess).solve(grad.transpose()).transpose();
}

}  // namespace

ControlResult optimize_actions(const KinematicChain& chain, const CameraModel& cam,
                               const VirtualJointSet& phi, const Eigen::VectorXd& theta0,
                               const GoalSpec& goal, int horizon, const ControlConfig& cfg) {
  if (horizon < 1) throw Error("optimize_actions: horizon must be >= 1");
  ControlResult res;
  ActionSequence u = ActionSequence::zeros(horizon, chain.dof());
  Trajectory traj = rollout(chain, cam, phi, theta0, u);
  Eigen::MatrixXd grad;
  double c = cost(traj, goal, chain, cam, phi, cfg, u, &grad);
  if (!std::isfinite(c)) throw Error("optimize_actions: non-finite initial cost");
  res.cost_history.push_back(c);
  double lr = cfg.learning_rate;
  // A full preconditioned step spread over the horizon moves theta_T by one
  // Gauss-Newton step; letting lr grow past 1/T only causes rejections.
  const double lr_cap = std::max(cfg.learning_rate, 1.0 / horizon);
  for (int epoch = 0; epoch < cfg.epochs && c > 0.0; ++epoch) {
    const Eigen::MatrixXd pgrad =
        precondition_gradient(chain, cam, phi, traj.thetas.back(), goal, grad);
    ActionSequence trial = u;
    double trial_cost = c;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      trial.deltas = u.deltas - lr * pgrad;
      clamp_actions(trial.deltas, cfg.step_bound);
      Trajectory trial_traj;
      try {
        trial_traj = rollout(chain, cam, phi, theta0, trial);
        trial_cost = cost(trial_traj, goal, chain, cam, phi, cfg, trial, nullptr);
      } catch (const BehindCameraError&) {
        lr *= 0.5;
        continue;
      }
      if (std::isfinite(trial_cost) && trial_cost <= c) {
        traj = std::move(trial_traj);
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;
    u = std::move(trial);
    c = cost(traj, goal, chain, cam, phi, cfg, u, &grad);
    res.cost_history.push_back(c);
    lr = std::min(lr * 1.5, lr_cap);
  }
  if (!std::isfinite(c)) throw Error("optimize_actions: non-finite cost");
  res.actions = std::move(u);
  res.predicted = std::move(traj);
  return res;
}

double keypoint_rmse_px(const std::vector<ImagePoint>& keypoints,
                        const std::vector<ImagePoint>& goal) {
  if (keypoints.size() != goal.size() || keypoints.empty())
    throw Error("keypoint_rmse_px: size mismatch or empty");
  double sq = 0.0;
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    const double dx = keypoints[i].x - goal[i].x;
    const double dy = keypoints[i].y - goal[i].y;
    sq += dx * dx + dy * dy;
  }
  return std::sqrt(sq / (2.0 * static_cast<double>(keypoints.size())));
}

TaskReport run_task(const KinematicChain& chain, const CameraModel& cam,
                    const VirtualJointSet& phi_model, const VirtualJointSet& phi_true,
                    const Eigen::VectorXd& theta0, const GoalSpec& goal, int horizon,
                    const ControlConfig& cfg) {
  const ControlResult opt = optimize_actions(chain, cam, phi_model, theta0, goal, horizon, cfg);
  TaskReport report;
  report.final_theta = opt.predicted.thetas.back();
  report.predicted_rmse_px = keypoint_rmse_px(opt.predicted.keypoints.back(), goal.z_goal);
  const auto true_final = project_chain(cam, chain, report.final_theta, phi_true);
  report.rmse_px = keypoint_rmse_px(true_final, goal.z_goal);
  report.steps = static_cast<int>(opt.cost_history.size()) - 1;
  report.cost_history = opt.cost_history;
  return report;
}

}  // namespace exkin

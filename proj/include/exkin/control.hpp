#pragma once

#include "exkin/gradients.hpp"
#include "exkin/oracle.hpp"

namespace exkin {

/// Joint-position deltas over the horizon: row t is u_t.
struct ActionSequence {
  Eigen::MatrixXd deltas;  // T × dof, radians

  int horizon() const { return static_cast<int>(deltas.rows()); }
  static ActionSequence zeros(int horizon, int dof) {
    return {Eigen::MatrixXd::Zero(horizon, dof)};
  }
};

/// Open-loop rollout of the predictive model: θ_{t+1} = θ_t + u_t,
/// z_t = projected virtual joints at θ_t.
struct Trajectory {
  std::vector<Eigen::VectorXd> thetas;               // T+1 entries
  std::vector<std::vector<ImagePoint>> keypoints;    // T+1 entries
};

struct GoalSpec {
  std::vector<ImagePoint> z_goal;
  Eigen::Vector3d weights{1.0, 1.0, 1.0};  // (x, y, depth)
};

struct ControlConfig {
  int epochs = 200;
  double learning_rate = 0.1;
  double running_weight = 0.0;  // weight on per-step cost before the final state
  double action_reg = 0.0;      // λ ||u||²
  double step_bound = 0.0;      // per-entry |u| clamp; 0 disables
};

Trajectory rollout(const KinematicChain& chain, const CameraModel& cam, const VirtualJointSet& phi,
                   const Eigen::VectorXd& theta0, const ActionSequence& u);

/// Weighted squared keypoint distance to the goal (final state by default,
/// plus optional running and action-regularization terms). Writes the
/// gradient w.r.t. the flattened action sequence when requested.
double cost(const Trajectory& traj, const GoalSpec& goal, const KinematicChain& chain,
            const CameraModel& cam, const VirtualJointSet& phi, const ControlConfig& cfg,
            const ActionSequence& u, Eigen::MatrixXd* grad_u = nullptr);

struct ControlResult {
  ActionSequence actions;
  std::vector<double> cost_history;  // entry i = cost after i gradient updates
  Trajectory predicted;
};

/// Gradient descent on the action sequence with step-halving acceptance,
/// starting from u = 0.
ControlResult optimize_actions(const KinematicChain& chain, const CameraModel& cam,
                               const VirtualJointSet& phi, const Eigen::VectorXd& theta0,
                               const GoalSpec& goal, int horizon, const ControlConfig& cfg);

/// Pixel-space RMSE between keypoints and goal over K keypoints and (x, y).
double keypoint_rmse_px(const std::vector<ImagePoint>& keypoints,
                        const std::vector<ImagePoint>& goal);

struct TaskReport {
  double rmse_px = 0.0;        // true final keypoints (oracle φ̄) vs goal
  double predicted_rmse_px = 0.0;
  int steps = 0;
  std::vector<double> cost_history;
  Eigen::VectorXd final_theta;
};

/// Optimize actions under the model φ, then score the true final keypoints
/// (computed with the ground-truth φ̄) against the goal.
TaskReport run_task(const KinematicChain& chain, const CameraModel& cam,
                    const VirtualJointSet& phi_model, const VirtualJointSet& phi_true,
                    const Eigen::VectorXd& theta0, const GoalSpec& goal, int horizon,
                    const ControlConfig& cfg);

}  // namespace exkin

#pragma once

#include "exkin/gradients.hpp"
#include "exkin/oracle.hpp"

namespace exkin {

enum class Optimizer { PlainGd, Adam };

struct RegressionConfig {
  double learning_rate = 1e-2;
  int max_steps = 2000;
  double tol = 1e-10;  // stop when mean loss drops to or below this
  Optimizer optimizer = Optimizer::PlainGd;
  Eigen::VectorXd init_phi;  // 3K; empty → zeros
  /// Pre-scale pixel residuals by (1/fx, 1/fy) so pixel and meter terms
  /// share one learning rate. Raw mode keeps the literal unscaled sum.
  bool normalized_residuals = true;

  void validate() const {
    if (learning_rate <= 0.0) throw Error("regression: learning_rate must be positive");
    if (max_steps < 1) throw Error("regression: max_steps must be >= 1");
    if (tol < 0.0) throw Error("regression: tol must be >= 0");
  }
};

struct RegressionResult {
  VirtualJointSet phi;
  std::vector<double> loss_history;  // entry i = mean loss after i gradient updates
  int steps_taken = 0;               // gradient updates applied
  bool converged = false;
  double final_learning_rate = 0.0;  // adapted step size at the last accepted step
};

/// Residual scale used for loss_trans in normalized mode.
Eigen::Vector3d residual_scale(const CameraModel& cam, bool normalized);

/// Single-record translation loss: Σ_k Σ_c (scale_c (h_kc(θ, φ) − z_kc))².
/// Writes the gradient w.r.t. the 3K φ parameters into `grad_phi` when
/// non-null.
double loss_trans(const CameraModel& cam, const KinematicChain& chain, const Eigen::VectorXd& theta,
                  const VirtualJointSet& phi, const std::vector<ImagePoint>& z_obs,
                  bool normalized = true, Eigen::VectorXd* grad_phi = nullptr);

/// Mean of loss_trans over all dataset records.
double dataset_loss(const ObservationDataset& dataset, const CameraModel& cam,
                    const KinematicChain& chain, const VirtualJointSet& phi, bool normalized,
                    Eigen::VectorXd* grad_phi = nullptr);

/// Full-batch gradient descent on φ. Plain GD uses step-halving acceptance
/// (retry with a smaller step on loss increase, grow the step after an
/// accepted one), so the recorded loss history is non-increasing.
RegressionResult regress(const ObservationDataset& dataset, const CameraModel& cam,
                         const KinematicChain& chain, const RegressionConfig& cfg);

/// Re-grasp adaptation: same regression, warm-started from a previous fit.
RegressionResult regrasp_adapt(const RegressionResult& prev, const ObservationDataset& new_dataset,
                               const CameraModel& cam, const KinematicChain& chain,
                               RegressionConfig cfg);

}  // namespace exkin

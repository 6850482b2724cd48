#pragma once

#include <cstdint>

#include "exkin/control.hpp"
#include "exkin/oracle.hpp"

namespace exkin {

enum class Activation { Tanh, Relu };

/// Small feed-forward network trained by manual backpropagation; the
/// black-box keypoint dynamics baseline s_{t+1} = g_β(s_t, u_t).
/// Inputs and outputs are normalized with per-feature stats frozen at
/// training time.
class MlpModel {
public:
  MlpModel() = default;
  MlpModel(const std::vector<int>& layer_sizes, Activation act, std::uint64_t seed);

  int input_size() const { return layer_sizes_.empty() ? 0 : layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.empty() ? 0 : layer_sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  Activation activation() const { return act_; }

  void set_normalization(const Eigen::VectorXd& in_mean, const Eigen::VectorXd& in_std,
                         const Eigen::VectorXd& out_mean, const Eigen::VectorXd& out_std);
  const Eigen::VectorXd& input_mean() const { return in_mean_; }
  const Eigen::VectorXd& input_std() const { return in_std_; }
  const Eigen::VectorXd& output_mean() const { return out_mean_; }
  const Eigen::VectorXd& output_std() const { return out_std_; }

  /// Denormalized prediction for a raw input vector.
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;

  /// One SGD-with-momentum step on a mini-batch of (raw input, raw target)
  /// columns; returns the batch mean squared error in normalized space.
  double train_batch(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lr,
                     double momentum);

  /// d(predict)/d(input) as a dense Jacobian (raw units on both sides).
  Eigen::MatrixXd input_jacobian(const Eigen::VectorXd& x) const;

  // Flat parameter access for checkpointing.
  Eigen::VectorXd flat_weights() const;
  void set_flat_weights(const Eigen::VectorXd& w);

private:
  Eigen::VectorXd normalize_in(const Eigen::VectorXd& x) const;

  std::vector<int> layer_sizes_;
  Activation act_ = Activation::Tanh;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
  std::vector<Eigen::MatrixXd> vw_;  // momentum buffers
  std::vector<Eigen::VectorXd> vb_;
  Eigen::VectorXd in_mean_, in_std_, out_mean_, out_std_;
};

/// Transition tuples for dynamics training. Keypoints are stored flat with
/// `z_dim` components per keypoint (2 = pixels only, 3 = pixels + depth).
struct DynDataset {
  std::vector<Eigen::VectorXd> theta, u, z, theta_next, z_next;
  int z_dim = 3;
  int keypoints = 0;

  int size() const { return static_cast<int>(theta.size()); }
};

struct SineMotionSpec {
  Eigen::VectorXd center;      // base configuration, radians
  double amplitude = 0.3;      // per-joint sine amplitude, radians
  double min_freq = 0.05;      // Hz
  double max_freq = 0.25;
  double dt = 0.2;             // 5 Hz sampling
};

/// Sine-motion data collection: per-joint sinusoids around the center
/// configuration, observations from the oracle detector.
DynDataset gen_sine_data(const KinematicChain& chain, const CameraModel& cam, OracleDetector& det,
                         int n, const SineMotionSpec& spec, std::uint64_t seed, int z_dim = 3);

struct TrainStats {
  std::vector<double> train_nmse;  // per epoch
  double test_nmse = 0.0;
};

struct DynTrainConfig {
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::Tanh;
  int epochs = 2000;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 64;
  double target_nmse = 0.0;  // early stop on train NMSE; 0 disables
};

/// Train on one-step transitions, 80/20 contiguous train/test split.
/// NMSE = MSE / variance of targets, computed on the raw test targets.
std::pair<MlpModel, TrainStats> train_dynamics(const DynDataset& data, const DynTrainConfig& cfg,
                                               std::uint64_t seed);

/// Iterated one-step predictions feeding model outputs back as inputs.
/// Returns keypoint vectors per step, 1..T; truncates with a flag on
/// non-finite output.
struct HorizonPrediction {
  std::vector<Eigen::VectorXd> z;  // flat keypoints per step
  bool truncated = false;
};

HorizonPrediction predict_horizon(const MlpModel& model, const Eigen::VectorXd& theta0,
                                  const Eigen::VectorXd& z0, const ActionSequence& u);

/// Mean ± std pixel prediction error per horizon step for a named model.
struct ErrorCurve {
  std::string model_id;
  std::vector<double> mean_err_px;  // index t-1 holds error at step t
  std::vector<double> std_err_px;
};

/// Evaluate the kinematic predictor (with `phi_model`) and any number of MLP
/// baselines on shared action sequences against ground-truth keypoints from
/// φ̄. Error is mean pixel distance over keypoints.
std::vector<ErrorCurve> compare_long_horizon(
    const KinematicChain& chain, const CameraModel& cam, const VirtualJointSet& phi_model,
    const VirtualJointSet& phi_true,
    const std::vector<std::pair<std::string, const MlpModel*>>& baselines,
    const std::vector<std::pair<Eigen::VectorXd, ActionSequence>>& sequences);

/// Gradient-based action optimization through the MLP dynamics model
/// (backprop through the rolled-out network); the baseline counterpart of
/// optimize_actions.
ActionSequence optimize_actions_mlp(const MlpModel& model, const Eigen::VectorXd& theta0,
                                    const Eigen::VectorXd& z0, const Eigen::VectorXd& z_goal,
                                    int horizon, int epochs, double lr);

}  // namespace exkin

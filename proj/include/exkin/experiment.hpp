#pragma once

#include "exkin/io.hpp"

namespace exkin {

/// Start/goal joint configurations of one placing task; goal keypoints are
/// generated from φ̄ at the goal configuration.
struct TaskSpec {
  std::string name;
  Eigen::VectorXd theta_start;
  Eigen::VectorXd theta_goal;
};

/// One experiment bundle: scene files, sampling ranges, seeds, noise and
/// optimizer settings. Loaded from a JSON config with paths resolved
/// relative to the config file.
struct ExperimentConfig {
  std::filesystem::path chain_file, camera_file, objects_file;
  KinematicChain chain;
  CameraModel camera;
  ObjectLibrary objects;
  JointSampler sampler;
  std::vector<TaskSpec> tasks;
  std::vector<std::uint64_t> seeds;
  double pixel_noise = 1.0;
  double depth_noise = 0.005;
  int regression_configs = 15;  // observations per regression dataset
  int horizon = 10;
  int mpc_epochs = 200;
  double mpc_learning_rate = 0.1;
  double regression_learning_rate = 1e-2;
  int regression_max_steps = 2000;
  double regression_tol_noiseless = 1e-10;
  Eigen::Vector3d goal_weights{1.0, 1.0, 1.0};
  std::uint64_t master_seed = 0;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

RegressionConfig make_regression_config(const ExperimentConfig& cfg, bool noisy, int keypoints);

/// Goal keypoints for a task: projection of φ̄ at the goal configuration.
GoalSpec task_goal(const ExperimentConfig& cfg, const VirtualJointSet& phi_true,
                   const TaskSpec& task);

struct ResultRow {
  std::string task;
  std::string object;
  int grasp = -1;  // -1 = no shift
  std::uint64_t seed = 0;
  double rmse_px = 0.0;
  int steps = 0;
  double wall_time_ms = 0.0;
};

/// Placing experiment over tasks × seeds × grasps. With `use_truth_phi` the
/// controller uses φ̄ directly; otherwise φ is regressed per (seed, grasp)
/// from a noisy dataset first.
std::vector<ResultRow> run_placing_experiment(const ExperimentConfig& cfg,
                                              const std::string& object_name, bool use_truth_phi,
                                              int n_grasps);

void save_results(const std::vector<ResultRow>& rows, const std::filesystem::path& results_path,
                  const std::filesystem::path& timing_path,
                  const std::map<std::string, std::string>& metadata);
std::vector<ResultRow> load_results(const std::filesystem::path& results_path);

struct TaskAggregate {
  std::string task;
  double mean_rmse_px = 0.0;
  double std_rmse_px = 0.0;
  int count = 0;
};

std::vector<TaskAggregate> aggregate_results(const std::vector<ResultRow>& rows);

/// Baseline ids a–d realized as data-condition variants:
/// a = 2D keypoints with off-object bias, b = 3D biased,
/// c = 2D on-object, d = 3D on-object.
struct BaselineVariant {
  std::string id;
  int z_dim = 3;
  double bias_px = 0.0;
};

std::vector<BaselineVariant> baseline_variants();

/// Train one baseline dynamics model on sine-motion data for the given
/// object and variant.
std::pair<MlpModel, TrainStats> train_baseline(const ExperimentConfig& cfg,
                                               const VirtualJointSet& phi_true,
                                               const BaselineVariant& variant, int n_tuples,
                                               std::uint64_t seed, const DynTrainConfig& train_cfg);

/// Horizon-error comparison on the first task's optimized action sequence
/// and on random action sequences; writes one error-curve CSV per variant
/// of action sequence.
void run_eval_horizon(const ExperimentConfig& cfg, const std::string& object_name,
                      const std::filesystem::path& out_dir, int n_sequences, int dyn_tuples,
                      const DynTrainConfig& train_cfg);

}  // namespace exkin

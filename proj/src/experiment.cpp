#include "exkin/experiment.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace exkin {

using nlohmann::json;

namespace {

Eigen::VectorXd read_vector(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open experiment config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("failed to parse " + path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  ExperimentConfig cfg;
  cfg.chain_file = base / j.at("chain_file").get<std::string>();
  cfg.camera_file = base / j.at("camera_file").get<std::string>();
  cfg.objects_file = base / j.at("objects_file").get<std::string>();
  for (const auto& p : {cfg.chain_file, cfg.camera_file, cfg.objects_file}) {
    if (!std::filesystem::exists(p)) throw Error("referenced file does not exist: " + p.string());
  }
  cfg.chain = load_chain(cfg.chain_file);
  cfg.camera = load_camera(cfg.camera_file);
  cfg.objects = load_objects(cfg.objects_file);
  cfg.sampler.lower = read_vector(j.at("sampler").at("lower"));
  cfg.sampler.upper = read_vector(j.at("sampler").at("upper"));
  cfg.sampler.validate(cfg.chain.dof());
  for (const auto& jt : j.at("tasks")) {
    TaskSpec task;
    task.name = jt.at("name").get<std::string>();
    task.theta_start = read_vector(jt.at("theta_start"));
    task.theta_goal = read_vector(jt.at("theta_goal"));
    cfg.tasks.push_back(std::move(task));
  }
  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (cfg.seeds.empty()) throw Error("experiment config: seeds must be non-empty");
  cfg.pixel_noise = j.value("pixel_noise", cfg.pixel_noise);
  cfg.depth_noise = j.value("depth_noise", cfg.depth_noise);
  cfg.regression_configs = j.value("regression_configs", cfg.regression_configs);
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.mpc_epochs = j.value("mpc_epochs", cfg.mpc_epochs);
  cfg.mpc_learning_rate = j.value("mpc_learning_rate", cfg.mpc_learning_rate);
  cfg.regression_learning_rate = j.value("regression_learning_rate", cfg.regression_learning_rate);
  cfg.regression_max_steps = j.value("regression_max_steps", cfg.regression_max_steps);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  if (j.contains("goal_weights")) {
    const Eigen::VectorXd w = read_vector(j.at("goal_weights"));
    cfg.goal_weights = w.head<3>();
  }
  return cfg;
}

RegressionConfig make_regression_config(const ExperimentConfig& cfg, bool noisy, int keypoints) {
  RegressionConfig rc;
  rc.learning_rate = cfg.regression_learning_rate;
  rc.max_steps = cfg.regression_max_steps;
  // Noisy tolerance: the expected residual floor, K·(2σ_px² + σ_d²) in
  // normalized units, with a 1.5× margin.
  const double sigma_norm = cfg.pixel_noise / cfg.camera.fx;
  const double floor =
      keypoints * (2.0 * sigma_norm * sigma_norm + cfg.depth_noise * cfg.depth_noise);
  rc.tol = noisy ? 1.5 * floor : cfg.regression_tol_noiseless;
  return rc;
}

GoalSpec task_goal(const ExperimentConfig& cfg, const VirtualJointSet& phi_true,
                   const TaskSpec& task) {
  GoalSpec goal;
  goal.z_goal = project_chain(cfg.camera, cfg.chain, task.theta_goal, phi_true);
  goal.weights = cfg.goal_weights;
  return goal;
}

std::vector<ResultRow> run_placing_experiment(const ExperimentConfig& cfg,
                                              const std::string& object_name, bool use_truth_phi,
                                              int n_grasps) {
  const ObjectSpec& object = cfg.objects.find(object_name);
  if (n_grasps > static_cast<int>(cfg.objects.grasp_shifts.size()))
    throw Error("run_placing_experiment: not enough grasp shifts configured");
  ControlConfig ctrl;
  ctrl.epochs = cfg.mpc_epochs;
  ctrl.learning_rate = cfg.mpc_learning_rate;

  std::vector<ResultRow> rows;
  for (const auto& task : cfg.tasks) {
    for (std::uint64_t seed : cfg.seeds) {
      for (int grasp = 0; grasp < n_grasps; ++grasp) {
        const auto start = std::chrono::steady_clock::now();
        const VirtualJointSet phi_true =
            shifted(object.phi_true, cfg.objects.grasp_shifts[grasp]);
        VirtualJointSet phi_model = phi_true;
        if (!use_truth_phi) {
          const std::uint64_t data_seed = derive_seed(
              cfg.master_seed ^ seed, object_name + "/grasp" + std::to_string(grasp) + "/regress");
          OracleDetector det(phi_true, cfg.pixel_noise, cfg.depth_noise, data_seed);
          const ObservationDataset ds =
              gen_dataset(det, cfg.camera, cfg.chain, cfg.regression_configs, cfg.sampler);
          const RegressionConfig rc = make_regression_config(cfg, true, phi_true.count());
          phi_model = regress(ds, cfg.camera, cfg.chain, rc).phi;
        }
        const GoalSpec goal = task_goal(cfg, phi_true, task);
        const TaskReport report = run_task(cfg.chain, cfg.camera, phi_model, phi_true,
                                           task.theta_start, goal, cfg.horizon, ctrl);
        const auto stop = std::chrono::steady_clock::now();
        ResultRow row;
        row.task = task.name;
        row.object = object_name;
        row.grasp = grasp;
        row.seed = seed;
        row.rmse_px = report.rmse_px;
        row.steps = report.steps;
        row.wall_time_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(stop - start)
                .count();
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void save_results(const std::vector<ResultRow>& rows, const std::filesystem::path& results_path,
                  const std::filesystem::path& timing_path,
                  const std::map<std::string, std::string>& metadata) {
  // Wall time goes to a separate file so the result CSV stays byte-identical
  // across repeated runs.
  CsvWriter csv(results_path, {"task", "object", "grasp", "seed", "rmse_px", "steps"}, metadata);
  for (const auto& row : rows) {
    csv.row({row.task, row.object, std::to_string(row.grasp), std::to_string(row.seed),
             CsvWriter::num(row.rmse_px), std::to_string(row.steps)});
  }
  csv.close();
  CsvWriter timing(timing_path, {"task", "object", "grasp", "seed", "wall_time_ms"}, metadata);
  for (const auto& row : rows) {
    timing.row({row.task, row.object, std::to_string(row.grasp), std::to_string(row.seed),
                CsvWriter::num(row.wall_time_ms)});
  }
  timing.close();
}

std::vector<ResultRow> load_results(const std::filesystem::path& results_path) {
  std::ifstream in(results_path);
  if (!in) throw Error("cannot open results file: " + results_path.string());
  std::vector<ResultRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw Error(results_path.string() + ": malformed row");
    ResultRow row;
    row.task = cells[0];
    row.object = cells[1];
    row.grasp = std::stoi(cells[2]);
    row.seed = std::stoull(cells[3]);
    row.rmse_px = std::stod(cells[4]);
    row.steps = std::stoi(cells[5]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TaskAggregate> aggregate_results(const std::vector<ResultRow>& rows) {
  std::vector<TaskAggregate> aggs;
  for (const auto& row : rows) {
    auto it = std::find_if(aggs.begin(), aggs.end(),
                           [&](const TaskAggregate& a) { return a.task == row.task; });
    if (it == aggs.end()) {
      aggs.push_back({row.task, 0.0, 0.0, 0});
      it = std::prev(aggs.end());
    }
    it->mean_rmse_px += row.rmse_px;
    ++it->count;
  }
  for (auto& agg : aggs) agg.mean_rmse_px /= agg.count;
  for (const auto& row : rows) {
    auto& agg = *std::find_if(aggs.begin(), aggs.end(),
                              [&](const TaskAggregate& a) { return a.task == row.task; });
    agg.std_rmse_px += (row.rmse_px - agg.mean_rmse_px) * (row.rmse_px - agg.mean_rmse_px);
  }
  for (auto& agg : aggs)
    agg.std_rmse_px = agg.count > 1 ? std::sqrt(agg.std_rmse_px / (agg.count - 1)) : 0.0;
  return aggs;
}

std::vector<BaselineVariant> baseline_variants() {
  return {{"a", 2, 15.0}, {"b", 3, 15.0}, {"c", 2, 0.0}, {"d", 3, 0.0}};
}

std::pair<MlpModel, TrainStats> train_baseline(const ExperimentConfig& cfg,
                                               const VirtualJointSet& phi_true,
                                               const BaselineVariant& variant, int n_tuples,
                                               std::uint64_t seed, const DynTrainConfig& train_cfg) {
  OracleDetector det(phi_true, cfg.pixel_noise, cfg.depth_noise, seed);
  det.set_bias(variant.bias_px);
  SineMotionSpec spec;
  spec.center = 0.5 * (cfg.sampler.lower + cfg.sampler.upper);
  spec.amplitude = 0.25 * (cfg.sampler.upper - cfg.sampler.lower).minCoeff();
  const DynDataset data = gen_sine_data(cfg.chain, cfg.camera, det, n_tuples, spec,
                                        derive_seed(seed, "sine/" + variant.id), variant.z_dim);
  return train_dynamics(data, train_cfg, derive_seed(seed, "train/" + variant.id));
}

void run_eval_horizon(const ExperimentConfig& cfg, const std::string& object_name,
                      const std::filesystem::path& out_dir, int n_sequences, int dyn_tuples,
                      const DynTrainConfig& train_cfg) {
  const ObjectSpec& object = cfg.objects.find(object_name);
  const VirtualJointSet& phi_true = object.phi_true;
  const std::uint64_t base_seed = derive_seed(cfg.master_seed, "eval-horizon/" + object_name);

  std::vector<std::pair<MlpModel, TrainStats>> trained;
  std::vector<std::pair<std::string, const MlpModel*>> baselines;
  for (const auto& variant : baseline_variants())
    trained.push_back(train_baseline(cfg, phi_true, variant, dyn_tuples, base_seed, train_cfg));
  const auto variants = baseline_variants();
  for (std::size_t i = 0; i < variants.size(); ++i)
    baselines.emplace_back(variants[i].id, &trained[i].first);

  // Sequence set 1: optimized placing-task action sequences.
  ControlConfig ctrl;
  ctrl.epochs = cfg.mpc_epochs;
  ctrl.learning_rate = cfg.mpc_learning_rate;
  std::vector<std::pair<Eigen::VectorXd, ActionSequence>> task_sequences;
  for (const auto& task : cfg.tasks) {
    const GoalSpec goal = task_goal(cfg, phi_true, task);
    const ControlResult opt = optimize_actions(cfg.chain, cfg.camera, phi_true, task.theta_start,
                                               goal, cfg.horizon, ctrl);
    task_sequences.emplace_back(task.theta_start, opt.actions);
  }

  // Sequence set 2: random action sequences from random in-view starts.
  std::mt19937_64 rng(derive_seed(base_seed, "random-sequences"));
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<std::pair<Eigen::VectorXd, ActionSequence>> random_sequences;
  while (static_cast<int>(random_sequences.size()) < n_sequences) {
    Eigen::VectorXd theta0(cfg.chain.dof());
    for (int j = 0; j < cfg.chain.dof(); ++j) {
      const double mid = 0.5 * (cfg.sampler.lower[j] + cfg.sampler.upper[j]);
      const double half = 0.5 * (cfg.sampler.upper[j] - cfg.sampler.lower[j]);
      theta0[j] = mid + 0.5 * half * uni(rng);
    }
    ActionSequence u = ActionSequence::zeros(cfg.horizon, cfg.chain.dof());
    for (int t = 0; t < cfg.horizon; ++t)
      for (int j = 0; j < cfg.chain.dof(); ++j) u.deltas(t, j) = 0.03 * uni(rng);
    try {
      rollout(cfg.chain, cfg.camera, phi_true, theta0, u);
    } catch (const BehindCameraError&) {
      continue;
    }
    random_sequences.emplace_back(std::move(theta0), std::move(u));
  }

  std::filesystem::create_directories(out_dir);
  const auto emit = [&](const std::string& label,
                        const std::vector<std::pair<Eigen::VectorXd, ActionSequence>>& seqs) {
    const auto curves =
        compare_long_horizon(cfg.chain, cfg.camera, phi_true, phi_true, baselines, seqs);
    CsvWriter csv(out_dir / ("horizon_error_" + label + ".csv"),
                  {"step", "model_id", "mean_err_px", "std_err_px"},
                  {{"seed", std::to_string(base_seed)}, {"object", object_name}});
    for (const auto& curve : curves) {
      for (std::size_t t = 0; t < curve.mean_err_px.size(); ++t) {
        csv.row({std::to_string(t + 1), curve.model_id, CsvWriter::num(curve.mean_err_px[t]),
                 CsvWriter::num(curve.std_err_px[t])});
      }
    }
    csv.close();
  };
  emit("task_sequence", task_sequences);
  emit("random_sequence", random_sequences);

  CsvWriter nmse_csv(out_dir / "baseline_nmse.csv", {"model_id", "test_nmse"},
                     {{"seed", std::to_string(base_seed)}, {"object", object_name}});
  for (std::size_t i = 0; i < variants.size(); ++i)
    nmse_csv.row({variants[i].id, CsvWriter::num(trained[i].second.test_nmse)});
  nmse_csv.close();
}

}  // namespace exkin

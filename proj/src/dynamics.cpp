#include "exkin/dynamics.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace exkin {

namespace {

Eigen::MatrixXd act_forward(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::Tanh) return z.array().tanh();
  return z.cwiseMax(0.0);
}

Eigen::MatrixXd act_derivative(const Eigen::MatrixXd& post, const Eigen::MatrixXd& pre,
                               Activation act) {
  if (act == Activation::Tanh) return 1.0 - post.array().square();
  return (pre.array() > 0.0).cast<double>();
}

Eigen::VectorXd slice_keypoints(const std::vector<ImagePoint>& kps, int z_dim) {
  Eigen::VectorXd z(z_dim * static_cast<int>(kps.size()));
  for (std::size_t k = 0; k < kps.size(); ++k) {
    z[z_dim * k + 0] = kps[k].x;
    z[z_dim * k + 1] = kps[k].y;
    if (z_dim == 3) z[z_dim * k + 2] = kps[k].depth;
  }
  return z;
}

}  // namespace

MlpModel::MlpModel(const std::vector<int>& layer_sizes, Activation act, std::uint64_t seed)
    : layer_sizes_(layer_sizes), act_(act) {
  if (layer_sizes_.size() < 2) throw Error("MlpModel: need at least input and output layer");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    const int fan_in = layer_sizes_[l];
    const int fan_out = layer_sizes_[l + 1];
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < w.size(); ++i) w.data()[i] = scale * gauss(rng);
    w_.push_back(w);
    b_.push_back(Eigen::VectorXd::Zero(fan_out));
    vw_.push_back(Eigen::MatrixXd::Zero(fan_out, fan_in));
    vb_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  in_mean_ = Eigen::VectorXd::Zero(input_size());
  in_std_ = Eigen::VectorXd::Ones(input_size());
  out_mean_ = Eigen::VectorXd::Zero(output_size());
  out_std_ = Eigen::VectorXd::Ones(output_size());
}

void MlpModel::set_normalization(const Eigen::VectorXd& in_mean, const Eigen::VectorXd& in_std,
                                 const Eigen::VectorXd& out_mean, const Eigen::VectorXd& out_std) {
  if (in_mean.size() != input_size() || in_std.size() != input_size() ||
      out_mean.size() != output_size() || out_std.size() != output_size())
    throw Error("MlpModel: normalization stat size mismatch");
  if (!(in_std.array() > 0.0).all() || !(out_std.array() > 0.0).all())
    throw Error("MlpModel: normalization std must be positive");
  in_mean_ = in_mean;
  in_std_ = in_std;
  out_mean_ = out_mean;
  out_std_ = out_std;
}

Eigen::VectorXd MlpModel::normalize_in(const Eigen::VectorXd& x) const {
  return (x - in_mean_).cwiseQuotient(in_std_);
}

Eigen::VectorXd MlpModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != input_size()) throw Error("MlpModel::predict: input size mismatch");
  Eigen::VectorXd h = normalize_in(x);
  for (std::size_t l = 0; l < w_.size(); ++l) {
    h = w_[l] * h + b_[l];
    if (l + 1 < w_.size()) h = act_forward(h, act_);
  }
  return out_mean_ + out_std_.cwiseProduct(h);
}

double MlpModel::train_batch(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lr,
                             double momentum) {
  const int n = static_cast<int>(x.cols());
  std::vector<Eigen::MatrixXd> post(w_.size() + 1), pre(w_.size());
  post[0] = (x.colwise() - in_mean_).array().colwise() / in_std_.array();
  for (std::size_t l = 0; l < w_.size(); ++l) {
    pre[l] = (w_[l] * post[l]).colwise() + b_[l];
    post[l + 1] = (l + 1 < w_.size()) ? act_forward(pre[l], act_) : pre[l];
  }
  const Eigen::MatrixXd target = (y.colwise() - out_mean_).array().colwise() / out_std_.array();
  const Eigen::MatrixXd err = post.back() - target;
  const double loss = err.squaredNorm() / static_cast<double>(n * output_size());

  Eigen::MatrixXd delta = 2.0 * err / static_cast<double>(n * output_size());
  for (int l = static_cast<int>(w_.size()) - 1; l >= 0; --l) {
    const Eigen::MatrixXd grad_w = delta * post[l].transpose();
    const Eigen::VectorXd grad_b = delta.rowwise().sum();
    if (l > 0)
      delta = (w_[l].transpose() * delta).cwiseProduct(act_derivative(post[l], pre[l - 1], act_));
    vw_[l] = momentum * vw_[l] - lr * grad_w;
    vb_[l] = momentum * vb_[l] - lr * grad_b;
    w_[l] += vw_[l];
    b_[l] += vb_[l];
  }
  return loss;
}

Eigen::MatrixXd MlpModel::input_jacobian(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h = normalize_in(x);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(input_size(), input_size());
  jac.array().colwise() /= in_std_.array();
  for (std::size_t l = 0; l < w_.size(); ++l) {
    jac = w_[l] * jac;
    Eigen::VectorXd z = w_[l] * h + b_[l];
    if (l + 1 < w_.size()) {
      Eigen::VectorXd a = act_forward(z, act_);
      jac.array().colwise() *= act_derivative(a, z, act_).col(0).array();
      h = a;
    }
  }
  jac.array().colwise() *= out_std_.array();
  return jac;
}

Eigen::VectorXd MlpModel::flat_weights() const {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) total += w_[l].size() + b_[l].size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    flat.segment(at, w_[l].size()) = Eigen::Map<const Eigen::VectorXd>(w_[l].data(), w_[l].size());
    at += w_[l].size();
    flat.segment(at, b_[l].size()) = b_[l];
    at += b_[l].size();
  }
  return flat;
}

void MlpModel::set_flat_weights(const Eigen::VectorXd& flat) {
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    if (at + w_[l].size() + b_[l].size() > flat.size())
      throw Error("MlpModel: flat weight vector too short");
    w_[l] = Eigen::Map<const Eigen::MatrixXd>(flat.data() + at, w_[l].rows(), w_[l].cols());
    at += w_[l].size();
    b_[l] = flat.segment(at, b_[l].size());
    at += b_[l].size();
  }
  if (at != flat.size()) throw Error("MlpModel: flat weight vector size mismatch");
}

DynDataset gen_sine_data(const KinematicChain& chain, const CameraModel& cam, OracleDetector& det,
                         int n, const SineMotionSpec& spec, std::uint64_t seed, int z_dim) {
  if (z_dim != 2 && z_dim != 3) throw Error("gen_sine_data: z_dim must be 2 or 3");
  if (spec.center.size() != chain.dof()) throw Error("gen_sine_data: center dof mismatch");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::VectorXd freq(chain.dof()), phase(chain.dof());
  for (int j = 0; j < chain.dof(); ++j) {
    freq[j] = spec.min_freq + (spec.max_freq - spec.min_freq) * uni(rng);
    phase[j] = 2.0 * M_PI * uni(rng);
  }

  std::vector<Eigen::VectorXd> thetas;
  std::vector<Eigen::VectorXd> zs;
  for (int t = 0; t <= n; ++t) {
    Eigen::VectorXd theta = spec.center;
    for (int j = 0; j < chain.dof(); ++j)
      theta[j] += spec.amplitude * std::sin(2.0 * M_PI * freq[j] * t * spec.dt + phase[j]);
    const auto truth_kps = project_chain(cam, chain, theta, det.truth());
    for (const auto& kp : truth_kps) {
      if (!cam.in_view(kp))
        throw Error("gen_sine_data: motion leaves the camera view at frame " + std::to_string(t));
    }
    zs.push_back(slice_keypoints(det.observe(cam, chain, theta), z_dim));
    thetas.push_back(std::move(theta));
  }

  DynDataset data;
  data.z_dim = z_dim;
  data.keypoints = det.truth().count();
  for (int t = 0; t < n; ++t) {
    data.theta.push_back(thetas[t]);
    data.u.push_back(thetas[t + 1] - thetas[t]);
    data.z.push_back(zs[t]);
    // store theta + u rather than the raw sine value so the transition
    // identity theta_t + u_t = theta_{t+1} holds bit-exactly
    data.theta_next.push_back(thetas[t] + data.u.back());
    data.z_next.push_back(zs[t + 1]);
  }
  return data;
}

namespace {

double nmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  const Eigen::VectorXd mean = target.rowwise().mean();
  const double var = (target.colwise() - mean).squaredNorm();
  const double mse = (pred - target).squaredNorm();
  if (var < 1e-12) throw Error("nmse: degenerate target variance");
  return mse / var;
}

Eigen::MatrixXd batch_predict(const MlpModel& model, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd y(model.output_size(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) y.col(i) = model.predict(x.col(i));
  return y;
}

}  // namespace

std::pair<MlpModel, TrainStats> train_dynamics(const DynDataset& data, const DynTrainConfig& cfg,
                                               std::uint64_t seed) {
  if (data.size() < 10) throw Error("train_dynamics: dataset too small");
  const int in_dim = static_cast<int>(data.theta[0].size() + data.z[0].size() + data.u[0].size());
  const int out_dim = static_cast<int>(data.theta_next[0].size() + data.z_next[0].size());
  Eigen::MatrixXd x(in_dim, data.size()), y(out_dim, data.size());
  for (int i = 0; i < data.size(); ++i) {
    x.col(i) << data.theta[i], data.z[i], data.u[i];
    y.col(i) << data.theta_next[i], data.z_next[i];
  }
  const int n_train = (data.size() * 8) / 10;
  const int n_test = data.size() - n_train;
  const Eigen::MatrixXd x_train = x.leftCols(n_train), y_train = y.leftCols(n_train);
  const Eigen::MatrixXd x_test = x.rightCols(n_test), y_test = y.rightCols(n_test);

  std::vector<int> arch{in_dim};
  arch.insert(arch.end(), cfg.hidden.begin(), cfg.hidden.end());
  arch.push_back(out_dim);
  MlpModel model(arch, cfg.activation, seed);

  const Eigen::VectorXd in_mean = x_train.rowwise().mean();
  const Eigen::VectorXd out_mean = y_train.rowwise().mean();
  Eigen::VectorXd in_std =
      ((x_train.colwise() - in_mean).array().square().rowwise().mean()).sqrt().matrix();
  Eigen::VectorXd out_std =
      ((y_train.colwise() - out_mean).array().square().rowwise().mean()).sqrt().matrix();
  in_std = in_std.cwiseMax(1e-8);
  out_std = out_std.cwiseMax(1e-8);
  model.set_normalization(in_mean, in_std, out_mean, out_std);

  std::mt19937_64 rng(seed ^ 0xa0761d6478bd642full);
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  TrainStats stats;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n_train - start);
      Eigen::MatrixXd xb(in_dim, count), yb(out_dim, count);
      for (int i = 0; i < count; ++i) {
        xb.col(i) = x_train.col(order[start + i]);
        yb.col(i) = y_train.col(order[start + i]);
      }
      const double loss = model.train_batch(xb, yb, cfg.learning_rate, cfg.momentum);
      if (!std::isfinite(loss)) throw Error("train_dynamics: diverged at epoch " + std::to_string(epoch));
    }
    stats.train_nmse.push_back(nmse(batch_predict(model, x_train), y_train));
    if (cfg.target_nmse > 0.0 && stats.train_nmse.back() < cfg.target_nmse) break;
  }
  stats.test_nmse = nmse(batch_predict(model, x_test), y_test);
  return {std::move(model), std::move(stats)};
}

HorizonPrediction predict_horizon(const MlpModel& model, const Eigen::VectorXd& theta0,
                                  const Eigen::VectorXd& z0, const ActionSequence& u) {
  if (u.horizon() < 1) throw Error("predict_horizon: horizon must be >= 1");
  const int dof = static_cast<int>(theta0.size());
  HorizonPrediction out;
  Eigen::VectorXd theta = theta0, z = z0;
  for (int t = 0; t < u.horizon(); ++t) {
    Eigen::VectorXd x(dof + z.size() + dof);
    x << theta, z, u.deltas.row(t).transpose();
    const Eigen::VectorXd s_next = model.predict(x);
    if (!s_next.allFinite()) {
      out.truncated = true;
      break;
    }
    theta = s_next.head(dof);
    z = s_next.tail(z.size());
    out.z.push_back(z);
  }
  return out;
}

namespace {

double mean_pixel_error(const Eigen::VectorXd& z_pred, const std::vector<ImagePoint>& truth,
                        int z_dim) {
  double err = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double dx = z_pred[z_dim * k + 0] - truth[k].x;
    const double dy = z_pred[z_dim * k + 1] - truth[k].y;
    err += std::sqrt(dx * dx + dy * dy);
  }
  return err / static_cast<double>(truth.size());
}

}  // namespace

std::vector<ErrorCurve> compare_long_horizon(
    const KinematicChain& chain, const CameraModel& cam, const VirtualJointSet& phi_model,
    const VirtualJointSet& phi_true,
    const std::vector<std::pair<std::string, const MlpModel*>>& baselines,
    const std::vector<std::pair<Eigen::VectorXd, ActionSequence>>& sequences) {
  if (sequences.empty()) throw Error("compare_long_horizon: no sequences");
  const int horizon = sequences.front().second.horizon();
  const int n_models = 1 + static_cast<int>(baselines.size());
  // errors[model][step][sequence]
  std::vector<std::vector<std::vector<double>>> errors(
      n_models, std::vector<std::vector<double>>(horizon));

  for (const auto& [theta0, u] : sequences) {
    if (u.horizon() != horizon) throw Error("compare_long_horizon: inconsistent horizons");
    // Ground truth and kinematic prediction share the rollout machinery.
    const Trajectory truth = rollout(chain, cam, phi_true, theta0, u);
    const Trajectory kin = rollout(chain, cam, phi_model, theta0, u);
    for (int t = 1; t <= horizon; ++t) {
      double err = 0.0;
      for (int k = 0; k < phi_true.count(); ++k) {
        const double dx = kin.keypoints[t][k].x - truth.keypoints[t][k].x;
        const double dy = kin.keypoints[t][k].y - truth.keypoints[t][k].y;
        err += std::sqrt(dx * dx + dy * dy);
      }
      errors[0][t - 1].push_back(err / phi_true.count());
    }
    for (std::size_t m = 0; m < baselines.size(); ++m) {
      const MlpModel& model = *baselines[m].second;
      const int z_dim =
          (model.input_size() - 2 * chain.dof()) / phi_true.count();
      const Eigen::VectorXd z0 = [&] {
        Eigen::VectorXd z(z_dim * phi_true.count());
        for (int k = 0; k < phi_true.count(); ++k) {
          z[z_dim * k + 0] = truth.keypoints[0][k].x;
          z[z_dim * k + 1] = truth.keypoints[0][k].y;
          if (z_dim == 3) z[z_dim * k + 2] = truth.keypoints[0][k].depth;
        }
        return z;
      }();
      const HorizonPrediction pred = predict_horizon(model, theta0, z0, u);
      for (int t = 1; t <= horizon; ++t) {
        if (t - 1 < static_cast<int>(pred.z.size()))
          errors[m + 1][t - 1].push_back(mean_pixel_error(pred.z[t - 1], truth.keypoints[t], z_dim));
      }
    }
  }

  std::vector<ErrorCurve> curves;
  for (int m = 0; m < n_models; ++m) {
    ErrorCurve curve;
    curve.model_id = m == 0 ? "kinematic" : baselines[m - 1].first;
    for (int t = 0; t < horizon; ++t) {
      const auto& samples = errors[m][t];
      double mean = 0.0, sq = 0.0;
      for (double e : samples) mean += e;
      mean /= std::max<std::size_t>(samples.size(), 1);
      for (double e : samples) sq += (e - mean) * (e - mean);
      curve.mean_err_px.push_back(mean);
      curve.std_err_px.push_back(samples.size() > 1 ? std::sqrt(sq / (samples.size() - 1)) : 0.0);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

ActionSequence optimize_actions_mlp(const MlpModel& model, const Eigen::VectorXd& theta0,
                                    const Eigen::VectorXd& z0, const Eigen::VectorXd& z_goal,
                                    int horizon, int epochs, double lr) {
  const int dof = static_cast<int>(theta0.size());
  const int z_size = static_cast<int>(z0.size());
  const int s_size = dof + z_size;

  auto roll_cost = [&](const ActionSequence& u) {
    Eigen::VectorXd theta = theta0, z = z0;
    for (int t = 0; t < horizon; ++t) {
      Eigen::VectorXd x(s_size + dof);
      x << theta, z, u.deltas.row(t).transpose();
      const Eigen::VectorXd s = model.predict(x);
      theta = s.head(dof);
      z = s.tail(z_size);
    }
    return (z - z_goal).squaredNorm();
  };

  ActionSequence u = ActionSequence::zeros(horizon, dof);
  double c = roll_cost(u);
  double step = lr;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Forward pass storing inputs, then backprop through time via the
    // model's input Jacobians.
    std::vector<Eigen::VectorXd> inputs;
    Eigen::VectorXd theta = theta0, z = z0;
    for (int t = 0; t < horizon; ++t) {
      Eigen::VectorXd x(s_size + dof);
      x << theta, z, u.deltas.row(t).transpose();
      inputs.push_back(x);
      const Eigen::VectorXd s = model.predict(x);
      theta = s.head(dof);
      z = s.tail(z_size);
    }
    Eigen::VectorXd a = Eigen::VectorXd::Zero(s_size);
    a.tail(z_size) = 2.0 * (z - z_goal);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(horizon, dof);
    for (int t = horizon - 1; t >= 0; --t) {
      const Eigen::MatrixXd jac = model.input_jacobian(inputs[t]);
      grad.row(t) = (jac.rightCols(dof).transpose() * a).transpose();
      a = jac.leftCols(s_size).transpose() * a;
    }
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      ActionSequence trial{u.deltas - step * grad};
      const double trial_cost = roll_cost(trial);
      if (std::isfinite(trial_cost) && trial_cost <= c) {
        u = std::move(trial);
        c = trial_cost;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step = std::min(step * 1.5, 1e6 * lr);
  }
  return u;
}

}  // namespace exkin

#include "exkin/oracle.hpp"

#include <cmath>

namespace exkin {

std::vector<ImagePoint> OracleDetector::observe(const CameraModel& cam,
                                                const KinematicChain& chain,
                                                const Eigen::VectorXd& theta) {
  std::vector<ImagePoint> kps = project_chain(cam, chain, theta, truth_);
  if (bias_px_ != 0.0) {
    // Direction tied to the end-effector yaw: systematic, pose-dependent.
    const Eigen::Matrix3d r = chain.ee_pose(theta).rotation_matrix();
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    for (auto& kp : kps) {
      kp.x += bias_px_ * std::cos(yaw);
      kp.y += bias_px_ * std::sin(yaw);
    }
  }
  if (pixel_sigma_ > 0.0 || depth_sigma_ > 0.0) {
    for (auto& kp : kps) {
      kp.x += pixel_sigma_ * gauss_(rng_);
      kp.y += pixel_sigma_ * gauss_(rng_);
      kp.depth += depth_sigma_ * gauss_(rng_);
    }
  }
  return kps;
}

ObservationDataset gen_dataset(OracleDetector& det, const CameraModel& cam,
                               const KinematicChain& chain, int n_configs,
                               const JointSampler& sampler) {
  sampler.validate(chain.dof());
  ObservationDataset ds;
  ds.seed = det.seed();
  ds.pixel_sigma = det.pixel_sigma();
  ds.depth_sigma = det.depth_sigma();
  if (n_configs == 0) return ds;

  std::mt19937_64 rng(det.seed() ^ 0xd1b54a32d192ed03ull);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int max_attempts = 10 * n_configs;
  int attempts = 0;
  while (static_cast<int>(ds.records.size()) < n_configs) {
    if (attempts++ >= max_attempts) {
      throw Error("gen_dataset: in-view rejection bound exceeded (" +
                  std::to_string(max_attempts) + " attempts); widen camera view or narrow joint ranges");
    }
    Eigen::VectorXd theta(chain.dof());
    for (int j = 0; j < chain.dof(); ++j)
      theta[j] = sampler.lower[j] + (sampler.upper[j] - sampler.lower[j]) * uni(rng);
    std::vector<ImagePoint> kps;
    try {
      kps = project_chain(cam, chain, theta, det.truth());
    } catch (const BehindCameraError&) {
      continue;
    }
    bool visible = true;
    for (const auto& kp : kps) visible = visible && cam.in_view(kp);
    if (!visible) continue;
    auto obs = det.observe(cam, chain, theta);
    ds.records.push_back({std::move(theta), std::move(obs)});
  }
  return ds;
}

Heatmap kinematic_heatmap(const ImagePoint& center, double sigma, int width, int height) {
  if (sigma <= 0.0) throw Error("kinematic_heatmap: sigma must be positive");
  Heatmap hm;
  hm.peak = center;
  const long px = std::lround(center.x);
  const long py = std::lround(center.y);
  hm.flagged = px < 0 || px >= width || py < 0 || py >= height;
  hm.grid.resize(height, width);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double du = u - static_cast<double>(px);
      const double dv = v - static_cast<double>(py);
      hm.grid(v, u) = std::exp(-(du * du + dv * dv) * inv);
    }
  }
  return hm;
}

Eigen::MatrixXd fuse_feature_maps(const Eigen::MatrixXd& visual, const Heatmap& kin) {
  if (visual.rows() != kin.grid.rows() || visual.cols() != kin.grid.cols())
    throw Error("fuse_feature_maps: size mismatch");
  return visual + kin.grid;
}

double kinematic_consistency_loss(const std::vector<ImagePoint>& keypoints, const ImagePoint& ee,
                                  const Eigen::Vector3d& weights) {
  double loss = 0.0;
  for (const auto& kp : keypoints) {
    const Eigen::Vector3d r = kp.vec() - ee.vec();
    loss += (weights.array() * r.array().square()).sum();
  }
  return loss;
}

}  // namespace exkin

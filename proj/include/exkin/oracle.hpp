#pragma once

#include <cstdint>
#include <random>

#include "exkin/camera.hpp"

namespace exkin {

/// Uniform joint-configuration sampler with per-joint ranges.
struct JointSampler {
  Eigen::VectorXd lower;  // radians
  Eigen::VectorXd upper;

  void validate(int dof) const {
    if (lower.size() != dof || upper.size() != dof) throw Error("joint sampler: range size != dof");
    if ((upper.array() < lower.array()).any()) throw Error("joint sampler: upper < lower");
  }
};

/// Stand-in for the trained keypoint detector: emits projections of the
/// ground-truth virtual joints plus optional Gaussian noise and an optional
/// systematic pose-dependent pixel bias (used to mimic off-object
/// detections in the baseline experiments).
class OracleDetector {
public:
  OracleDetector(VirtualJointSet truth, double pixel_noise_sigma, double depth_noise_sigma,
                 std::uint64_t seed)
      : truth_(std::move(truth)),
        pixel_sigma_(pixel_noise_sigma),
        depth_sigma_(depth_noise_sigma),
        seed_(seed),
        rng_(seed) {
    if (pixel_sigma_ < 0.0 || depth_sigma_ < 0.0) throw Error("oracle: negative noise sigma");
  }

  const VirtualJointSet& truth() const { return truth_; }
  std::uint64_t seed() const { return seed_; }
  double pixel_sigma() const { return pixel_sigma_; }
  double depth_sigma() const { return depth_sigma_; }

  /// Off-object bias in pixels; direction rotates with the end-effector yaw
  /// so it is systematic but pose-dependent.
  void set_bias(double bias_px) { bias_px_ = bias_px; }
  double bias() const { return bias_px_; }

  /// Fresh detector with a derived seed, for parallel scenario runs.
  OracleDetector fork(std::uint64_t stream) const {
    OracleDetector d(truth_, pixel_sigma_, depth_sigma_, seed_ ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
    d.bias_px_ = bias_px_;
    return d;
  }

  std::vector<ImagePoint> observe(const CameraModel& cam, const KinematicChain& chain,
                                  const Eigen::VectorXd& theta);

private:
  VirtualJointSet truth_;
  double pixel_sigma_;
  double depth_sigma_;
  double bias_px_ = 0.0;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

/// One (θ, z) record of the regression dataset.
struct ObservationRecord {
  Eigen::VectorXd theta;
  std::vector<ImagePoint> keypoints;
};

struct ObservationDataset {
  std::vector<ObservationRecord> records;
  std::uint64_t seed = 0;
  double pixel_sigma = 0.0;
  double depth_sigma = 0.0;

  int keypoint_count() const {
    return records.empty() ? 0 : static_cast<int>(records.front().keypoints.size());
  }
};

/// Sample `n_configs` joint configurations whose ground-truth keypoints all
/// project in view; rejects out-of-view samples up to 10× oversampling.
ObservationDataset gen_dataset(OracleDetector& det, const CameraModel& cam,
                               const KinematicChain& chain, int n_configs,
                               const JointSampler& sampler);

/// Gaussian feature-map blob. Peak value is 1.0 at the rasterized center
/// pixel; `flagged` marks centers outside the image bounds.
struct Heatmap {
  Eigen::MatrixXd grid;  // height × width
  ImagePoint peak;
  bool flagged = false;
};

Heatmap kinematic_heatmap(const ImagePoint& center, double sigma, int width, int height);

/// Element-wise sum of a visual and a kinematic feature map.
Eigen::MatrixXd fuse_feature_maps(const Eigen::MatrixXd& visual, const Heatmap& kin);

/// Kinematic consistency loss: Σ_k weighted squared (x, y, depth) distance
/// between keypoints and the end-effector observation.
double kinematic_consistency_loss(const std::vector<ImagePoint>& keypoints, const ImagePoint& ee,
                                  const Eigen::Vector3d& weights = Eigen::Vector3d::Ones());

}  // namespace exkin

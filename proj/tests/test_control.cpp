#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "exkin/control.hpp"
#include "exkin/io.hpp"
#include "test_helpers.hpp"

using namespace exkin;
using namespace exkin::testing;

namespace {

/// Single revolute link about z, 0.5 m along x, one virtual joint.
KinematicChain one_dof() {
  Link link;
  link.name = "l1";
  link.joint_type = JointType::Revolute;
  link.joint_axis = {0, 0, 1};
  link.fixed_transform.translation = {0.5, 0, 0};
  return KinematicChain({link});
}

VirtualJointSet one_dof_object() {
  VirtualJointSet phi = VirtualJointSet::zeros(1);
  phi.set_offset(0, {0.1, 0.0, 0.05});
  return phi;
}

GoalSpec goal_at(const CameraModel& cam, const KinematicChain& chain, const VirtualJointSet& phi,
                 const Eigen::VectorXd& theta) {
  GoalSpec goal;
  goal.z_goal = project_chain(cam, chain, theta, phi);
  return goal;
}

}  // namespace

TEST_CASE("rollout with zero actions is a fixed point") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  const auto traj = rollout(chain, cam, phi, theta0, ActionSequence::zeros(10, 7));
  REQUIRE(traj.thetas.size() == 11);
  REQUIRE(traj.keypoints.size() == 11);
  for (int t = 0; t <= 10; ++t) {
    CHECK(traj.thetas[t] == theta0);
    for (int k = 0; k < 3; ++k)
      CHECK(traj.keypoints[t][k].vec() == traj.keypoints[0][k].vec());
  }
}

TEST_CASE("rollout integrates actions exactly") {
  auto chain = one_dof();
  auto cam = test_camera();
  auto phi = one_dof_object();
  Eigen::VectorXd theta0(1);
  theta0 << 0.2;
  ActionSequence u = ActionSequence::zeros(10, 1);
  u.deltas.setConstant(0.01);
  const auto traj = rollout(chain, cam, phi, theta0, u);
  CHECK(traj.thetas.back()[0] == doctest::Approx(0.3).epsilon(1e-15));
  // exact chaining per step
  for (int t = 0; t < 10; ++t)
    CHECK(traj.thetas[t + 1][0] == traj.thetas[t][0] + u.deltas(t, 0));
}

TEST_CASE("rollout rejects a dof mismatch") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  CHECK_THROWS_AS(rollout(chain, cam, phi, home_pose(), ActionSequence::zeros(5, 3)), Error);
}

TEST_CASE("behind-camera rollout error names the step") {
  // 3 m link: sweeping toward the base axis carries the keypoint past the
  // camera plane mid-rollout.
  Link link;
  link.name = "l1";
  link.joint_type = JointType::Revolute;
  link.joint_axis = {0, 0, 1};
  link.fixed_transform.translation = {3.0, 0, 0};
  KinematicChain chain({link});
  auto cam = test_camera();
  auto phi = one_dof_object();
  Eigen::VectorXd theta0(1);
  theta0 << 1.0;
  ActionSequence u = ActionSequence::zeros(10, 1);
  u.deltas.setConstant(-0.15);
  try {
    rollout(chain, cam, phi, theta0, u);
    FAIL("expected BehindCameraError");
  } catch (const BehindCameraError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("cost is zero at the goal and positive off it") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  const GoalSpec goal = goal_at(cam, chain, phi, theta0);
  const ActionSequence u = ActionSequence::zeros(10, 7);
  const auto traj = rollout(chain, cam, phi, theta0, u);
  ControlConfig cfg;
  CHECK(cost(traj, goal, chain, cam, phi, cfg, u) == doctest::Approx(0.0).epsilon(1e-18));

  GoalSpec off = goal;
  off.z_goal[0].x += 2.0;
  CHECK(cost(traj, off, chain, cam, phi, cfg, u) > 0.0);
}

TEST_CASE("cost hand case: one keypoint 2 px off in x gives 4") {
  auto chain = one_dof();
  auto cam = test_camera();
  auto phi = one_dof_object();
  Eigen::VectorXd theta0(1);
  theta0 << 0.3;
  const ActionSequence u = ActionSequence::zeros(5, 1);
  const auto traj = rollout(chain, cam, phi, theta0, u);
  GoalSpec goal = goal_at(cam, chain, phi, theta0);
  goal.z_goal[0].x += 2.0;
  ControlConfig cfg;
  CHECK(cost(traj, goal, chain, cam, phi, cfg, u) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("doubling the weights doubles the cost but not the argmin") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  Eigen::VectorXd theta_goal = theta0;
  theta_goal[1] += 0.1;
  theta_goal[3] += 0.15;
  GoalSpec goal = goal_at(cam, chain, phi, theta_goal);

  ActionSequence u = ActionSequence::zeros(10, 7);
  u.deltas.setConstant(0.003);
  const auto traj = rollout(chain, cam, phi, theta0, u);
  ControlConfig cfg;
  const double c1 = cost(traj, goal, chain, cam, phi, cfg, u);
  GoalSpec doubled = goal;
  doubled.weights *= 2.0;
  CHECK(cost(traj, doubled, chain, cam, phi, cfg, u) == doctest::Approx(2.0 * c1).epsilon(1e-12));

  const auto res1 = optimize_actions(chain, cam, phi, theta0, goal, 10, cfg);
  const auto res2 = optimize_actions(chain, cam, phi, theta0, doubled, 10, cfg);
  CHECK((res1.predicted.thetas.back() - res2.predicted.thetas.back()).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("cost gradient w.r.t. actions matches finite differences") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  Eigen::VectorXd theta_goal = theta0;
  theta_goal[1] -= 0.2;
  const GoalSpec goal = goal_at(cam, chain, phi, theta_goal);

  ControlConfig cfg;
  cfg.running_weight = 0.3;
  cfg.action_reg = 1e-3;
  const int horizon = 6;
  ActionSequence u = ActionSequence::zeros(horizon, 7);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uni(-0.02, 0.02);
  for (int t = 0; t < horizon; ++t)
    for (int j = 0; j < 7; ++j) u.deltas(t, j) = uni(rng);

  Eigen::MatrixXd grad;
  const auto traj = rollout(chain, cam, phi, theta0, u);
  cost(traj, goal, chain, cam, phi, cfg, u, &grad);

  const double h = 1e-6;
  double max_rel = 0.0;
  for (int t = 0; t < horizon; ++t) {
    for (int j = 0; j < 7; ++j) {
      ActionSequence up = u, dn = u;
      up.deltas(t, j) += h;
      dn.deltas(t, j) -= h;
      const double cp = cost(rollout(chain, cam, phi, theta0, up), goal, chain, cam, phi, cfg, up);
      const double cn = cost(rollout(chain, cam, phi, theta0, dn), goal, chain, cam, phi, cfg, dn);
      const double fd = (cp - cn) / (2.0 * h);
      max_rel = std::max(max_rel, std::abs(grad(t, j) - fd) / (std::abs(fd) + 1e-6));
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("goal at the start needs no actions") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  const GoalSpec goal = goal_at(cam, chain, phi, theta0);
  const auto res = optimize_actions(chain, cam, phi, theta0, goal, 10, ControlConfig{});
  CHECK(res.cost_history.back() < 1e-12);
  CHECK(res.actions.deltas.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("1-DoF goal at theta0 + 0.1 is reached exactly") {
  auto chain = one_dof();
  auto cam = test_camera();
  auto phi = one_dof_object();
  Eigen::VectorXd theta0(1);
  theta0 << 0.2;
  Eigen::VectorXd theta_goal(1);
  theta_goal << 0.3;
  const GoalSpec goal = goal_at(cam, chain, phi, theta_goal);
  const auto res = optimize_actions(chain, cam, phi, theta0, goal, 10, ControlConfig{});
  CHECK(std::abs(res.actions.deltas.sum() - 0.1) < 1e-4);
}

TEST_CASE("cost history is non-increasing") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  Eigen::VectorXd theta_goal = theta0;
  theta_goal[1] += 0.2;
  theta_goal[3] -= 0.2;
  theta_goal[5] += 0.1;
  const GoalSpec goal = goal_at(cam, chain, phi, theta_goal);
  const auto res = optimize_actions(chain, cam, phi, theta0, goal, 10, ControlConfig{});
  CHECK(std::is_sorted(res.cost_history.rbegin(), res.cost_history.rend()));
  CHECK(res.cost_history.back() < res.cost_history.front());
}

TEST_CASE("replaying the optimized actions reproduces the prediction bit-exactly") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  Eigen::VectorXd theta_goal = theta0;
  theta_goal[1] += 0.15;
  theta_goal[3] -= 0.1;
  const GoalSpec goal = goal_at(cam, chain, phi, theta_goal);
  const auto res = optimize_actions(chain, cam, phi, theta0, goal, 10, ControlConfig{});
  const auto replay = rollout(chain, cam, phi, theta0, res.actions);
  REQUIRE(replay.thetas.size() == res.predicted.thetas.size());
  for (std::size_t t = 0; t < replay.thetas.size(); ++t) {
    CHECK(replay.thetas[t] == res.predicted.thetas[t]);
    for (std::size_t k = 0; k < replay.keypoints[t].size(); ++k)
      CHECK(replay.keypoints[t][k].vec() == res.predicted.keypoints[t][k].vec());
  }
}

TEST_CASE("step bound clamps every action entry") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  Eigen::VectorXd theta_goal = theta0;
  theta_goal[1] += 0.4;
  const GoalSpec goal = goal_at(cam, chain, phi, theta_goal);
  ControlConfig cfg;
  cfg.step_bound = 0.01;
  const auto res = optimize_actions(chain, cam, phi, theta0, goal, 10, cfg);
  CHECK(res.actions.deltas.cwiseAbs().maxCoeff() <= 0.01 + 1e-15);
}

TEST_CASE("keypoint_rmse_px hand values") {
  std::vector<ImagePoint> goal{{100.0, 100.0, 1.0}, {200.0, 200.0, 1.0}};
  std::vector<ImagePoint> kps = goal;
  CHECK(keypoint_rmse_px(kps, goal) == 0.0);
  kps[0].x += 3.0;
  kps[0].y += 4.0;
  // sq = 25 over 2 keypoints * 2 components -> sqrt(25/4)
  CHECK(keypoint_rmse_px(kps, goal) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(keypoint_rmse_px({}, {}), Error);
}

TEST_CASE("run_task with the true model reaches the goal") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  Eigen::VectorXd theta_goal = theta0;
  theta_goal[1] += 0.2;
  theta_goal[3] -= 0.15;
  const GoalSpec goal = goal_at(cam, chain, phi, theta_goal);
  const auto report = run_task(chain, cam, phi, phi, theta0, goal, 10, ControlConfig{});
  CHECK(report.rmse_px < 0.1);
  CHECK(report.rmse_px == doctest::Approx(report.predicted_rmse_px).epsilon(1e-12));
}

TEST_CASE("run_task with goal at the start reports zero") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi = box_object();
  const Eigen::VectorXd theta0 = home_pose();
  const GoalSpec goal = goal_at(cam, chain, phi, theta0);
  const auto report = run_task(chain, cam, phi, phi, theta0, goal, 10, ControlConfig{});
  CHECK(report.rmse_px < 1e-9);
}

TEST_CASE("model mismatch shows up in the true RMSE, not the predicted one") {
  auto chain = seven_dof();
  auto cam = test_camera();
  auto phi_true = box_object();
  const VirtualJointSet phi_model = shifted(phi_true, {0.03, 0.0, 0.0});
  const Eigen::VectorXd theta0 = home_pose();
  Eigen::VectorXd theta_goal = theta0;
  theta_goal[1] += 0.2;
  // goal keypoints come from the true object
  GoalSpec goal;
  goal.z_goal = project_chain(cam, chain, theta_goal, phi_true);
  const auto report = run_task(chain, cam, phi_model, phi_true, theta0, goal, 10, ControlConfig{});
  CHECK(report.predicted_rmse_px < 0.1);
  CHECK(report.rmse_px > report.predicted_rmse_px);
}

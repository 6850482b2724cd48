#include <doctest.h>

#include <random>

#include "test_helpers.hpp"

using namespace exkin;
using namespace exkin::testing;

namespace {

CameraModel identity_camera() {
  CameraModel cam;  // extrinsic = identity: base frame is the camera frame
  return cam;
}

}  // namespace

TEST_CASE("principal point projection") {
  const CameraModel cam = identity_camera();
  const ImagePoint ip = cam.project({0, 0, 2});
  CHECK(ip.x == doctest::Approx(320.0));
  CHECK(ip.y == doctest::Approx(240.0));
  CHECK(ip.depth == doctest::Approx(2.0));
}

TEST_CASE("pinhole formula hand check") {
  const CameraModel cam = identity_camera();
  const ImagePoint ip = cam.project({0.2, 0, 2});
  CHECK(ip.x == doctest::Approx(370.0));  // 500 * 0.2/2 + 320
}

TEST_CASE("behind-camera points are rejected, not NaN") {
  const CameraModel cam = identity_camera();
  CHECK_THROWS_AS(cam.project({0.1, 0.1, 0.0}), BehindCameraError);
  CHECK_THROWS_AS(cam.project({0.1, 0.1, -1.0}), BehindCameraError);
}

TEST_CASE("project/unproject round trip") {
  const CameraModel cam = test_camera();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d p{uni(rng), uni(rng), 0.8 + uni(rng)};
    const ImagePoint ip = cam.project(p);
    CHECK(cam.unproject(ip).isApprox(cam.to_camera(p), 1e-9));
  }
}

TEST_CASE("optical-axis translation moves depth exactly and pixels toward center") {
  const CameraModel cam = identity_camera();
  const Eigen::Vector3d p{0.3, -0.2, 1.5};
  const ImagePoint near = cam.project(p);
  double prev_dx = std::abs(near.x - cam.cx);
  double prev_dy = std::abs(near.y - cam.cy);
  for (double dz : {0.5, 1.0, 2.0}) {
    const ImagePoint far = cam.project(p + Eigen::Vector3d(0, 0, dz));
    CHECK(far.depth == doctest::Approx(near.depth + dz).epsilon(1e-12));
    const double dx = std::abs(far.x - cam.cx);
    const double dy = std::abs(far.y - cam.cy);
    CHECK(dx < prev_dx);
    CHECK(dy < prev_dy);
    prev_dx = dx;
    prev_dy = dy;
  }
}

TEST_CASE("project_chain order and zero-offset degeneracy") {
  const KinematicChain chain = seven_dof();
  const CameraModel cam = test_camera();
  const Eigen::VectorXd theta = home_pose();

  SUBCASE("zero offsets collapse onto the end-effector projection") {
    const auto pts = project_chain(cam, chain, theta, VirtualJointSet::zeros(3));
    const ImagePoint ee = cam.project(chain.ee_pose(theta).translation);
    for (const auto& pt : pts) {
      CHECK(pt.x == doctest::Approx(ee.x));
      CHECK(pt.y == doctest::Approx(ee.y));
      CHECK(pt.depth == doctest::Approx(ee.depth));
    }
  }

  SUBCASE("three virtual joints yield three image points in phi order") {
    const VirtualJointSet phi = box_object();
    const auto pts = project_chain(cam, chain, theta, phi);
    REQUIRE(pts.size() == 3);
    const auto positions = chain.virtual_link_positions(theta, phi);
    for (int k = 0; k < 3; ++k) {
      const ImagePoint direct = cam.project(positions[k]);
      CHECK(pts[k].x == doctest::Approx(direct.x));
      CHECK(pts[k].y == doctest::Approx(direct.y));
    }
  }

  SUBCASE("behind-camera error names the keypoint") {
    VirtualJointSet phi = VirtualJointSet::zeros(1);
    phi.set_offset(0, {0.0, 0.0, 10.0});  // far past the camera
    try {
      project_chain(cam, chain, theta, phi);
      FAIL("expected BehindCameraError");
    } catch (const BehindCameraError& e) {
      CHECK(std::string(e.what()).find("0") != std::string::npos);
    }
  }
}

TEST_CASE("default scene keeps depths in a sane band") {
  const KinematicChain chain = seven_dof();
  const CameraModel cam = test_camera();
  const VirtualJointSet phi = box_object();
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd theta = random_pose_near_home(rng);
    for (const auto& pt : project_chain(cam, chain, theta, phi)) {
      CHECK(pt.depth > 0.5);
      CHECK(pt.depth < 5.0);
    }
  }
}

TEST_CASE("camera validation") {
  CameraModel cam;
  cam.fx = -1.0;
  CHECK_THROWS_AS(cam.validate(), Error);
  cam.fx = 500.0;
  cam.cx = 1000.0;
  CHECK_THROWS_AS(cam.validate(), Error);
}

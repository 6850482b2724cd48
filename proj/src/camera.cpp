#include "exkin/camera.hpp"

namespace exkin {

std::vector<ImagePoint> project_chain(const CameraModel& cam, const KinematicChain& chain,
                                      const Eigen::VectorXd& theta, const VirtualJointSet& phi) {
  const auto points = chain.virtual_link_positions(theta, phi);
  std::vector<ImagePoint> out;
  out.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    try {
      out.push_back(cam.project(points[k]));
    } catch (const BehindCameraError&) {
      throw BehindCameraError("virtual joint " + std::to_string(k) + " is behind the camera");
    }
  }
  return out;
}

}  // namespace exkin

// Python bindings for the core operations: kinematics, projection,
// regression, control, and the oracle detector.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "exkin/control.hpp"
#include "exkin/experiment.hpp"
#include "exkin/io.hpp"
#include "exkin/oracle.hpp"
#include "exkin/regression.hpp"

namespace py = pybind11;
using namespace exkin;

namespace {

Eigen::MatrixXd keypoints_to_matrix(const std::vector<ImagePoint>& pts) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].vec();
  return m;
}

std::vector<ImagePoint> matrix_to_keypoints(const Eigen::MatrixXd& m) {
  if (m.cols() != 3) throw Error("keypoint matrix must be K x 3");
  std::vector<ImagePoint> pts;
  for (Eigen::Index i = 0; i < m.rows(); ++i) pts.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return pts;
}

}  // namespace

PYBIND11_MODULE(_exkin, m) {
  m.doc() = "Extended-body-schema kinematics toolkit";
  m.attr("__version__") = kToolVersion;

  py::register_exception<Error>(m, "ExkinError");

  py::class_<RigidTransform>(m, "RigidTransform")
      .def_property_readonly("translation",
                             [](const RigidTransform& t) { return t.translation; })
      .def_property_readonly("rotation_matrix", [](const RigidTransform& t) {
        return t.rotation.toRotationMatrix();
      });

  py::class_<VirtualJointSet>(m, "VirtualJointSet")
      .def(py::init([](const Eigen::VectorXd& params) { return VirtualJointSet(params); }))
      .def_readwrite("params", &VirtualJointSet::params)
      .def_property_readonly("count", &VirtualJointSet::count)
      .def("offset", &VirtualJointSet::offset);

  py::class_<KinematicChain>(m, "KinematicChain")
      .def_property_readonly("dof", &KinematicChain::dof)
      .def("ee_pose", &KinematicChain::ee_pose)
      .def("virtual_link_positions", &KinematicChain::virtual_link_positions);

  py::class_<CameraModel>(m, "CameraModel")
      .def_readonly("fx", &CameraModel::fx)
      .def_readonly("fy", &CameraModel::fy)
      .def_readonly("width", &CameraModel::width)
      .def_readonly("height", &CameraModel::height)
      .def("project",
           [](const CameraModel& cam, const Eigen::Vector3d& p) {
             const auto pt = cam.project(p);
             return Eigen::Vector3d(pt.x, pt.y, pt.depth);
           })
      .def("in_view", [](const CameraModel& cam, const Eigen::Vector3d& xyd) {
        return cam.in_view({xyd[0], xyd[1], xyd[2]});
      });

  m.def("load_chain", &load_chain, py::arg("path"));
  m.def("load_camera", &load_camera, py::arg("path"));

  m.def(
      "project_chain",
      [](const CameraModel& cam, const KinematicChain& chain, const Eigen::VectorXd& theta,
         const VirtualJointSet& phi) {
        return keypoints_to_matrix(project_chain(cam, chain, theta, phi));
      },
      py::arg("camera"), py::arg("chain"), py::arg("theta"), py::arg("phi"),
      "Project the virtual joints at theta; rows are (x px, y px, depth m).");

  py::class_<ObservationDataset>(m, "ObservationDataset")
      .def_property_readonly("size",
                             [](const ObservationDataset& ds) { return ds.records.size(); })
      .def_property_readonly("keypoint_count", &ObservationDataset::keypoint_count)
      .def("theta", [](const ObservationDataset& ds, int i) { return ds.records.at(i).theta; })
      .def("keypoints", [](const ObservationDataset& ds, int i) {
        return keypoints_to_matrix(ds.records.at(i).keypoints);
      });

  py::class_<OracleDetector>(m, "OracleDetector")
      .def(py::init<VirtualJointSet, double, double, std::uint64_t>(), py::arg("truth"),
           py::arg("pixel_noise_sigma"), py::arg("depth_noise_sigma"), py::arg("seed"))
      .def("observe", [](OracleDetector& det, const CameraModel& cam, const KinematicChain& chain,
                         const Eigen::VectorXd& theta) {
        return keypoints_to_matrix(det.observe(cam, chain, theta));
      });

  m.def(
      "gen_dataset",
      [](OracleDetector& det, const CameraModel& cam, const KinematicChain& chain, int n,
         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
        return gen_dataset(det, cam, chain, n, JointSampler{lower, upper});
      },
      py::arg("detector"), py::arg("camera"), py::arg("chain"), py::arg("n_configs"),
      py::arg("lower"), py::arg("upper"));

  py::class_<RegressionResult>(m, "RegressionResult")
      .def_property_readonly("phi", [](const RegressionResult& r) { return r.phi; })
      .def_readonly("loss_history", &RegressionResult::loss_history)
      .def_readonly("steps_taken", &RegressionResult::steps_taken)
      .def_readonly("converged", &RegressionResult::converged);

  m.def(
      "regress",
      [](const ObservationDataset& ds, const CameraModel& cam, const KinematicChain& chain,
         double learning_rate, int max_steps, double tol, const Eigen::VectorXd& init_phi) {
        RegressionConfig cfg;
        cfg.learning_rate = learning_rate;
        cfg.max_steps = max_steps;
        cfg.tol = tol;
        cfg.init_phi = init_phi;
        return regress(ds, cam, chain, cfg);
      },
      py::arg("dataset"), py::arg("camera"), py::arg("chain"), py::arg("learning_rate") = 1e-2,
      py::arg("max_steps") = 2000, py::arg("tol") = 1e-10,
      py::arg("init_phi") = Eigen::VectorXd());

  m.def(
      "loss_trans",
      [](const CameraModel& cam, const KinematicChain& chain, const Eigen::VectorXd& theta,
         const VirtualJointSet& phi, const Eigen::MatrixXd& z_obs) {
        return loss_trans(cam, chain, theta, phi, matrix_to_keypoints(z_obs));
      },
      py::arg("camera"), py::arg("chain"), py::arg("theta"), py::arg("phi"), py::arg("z_obs"));

  py::class_<TaskReport>(m, "TaskReport")
      .def_readonly("rmse_px", &TaskReport::rmse_px)
      .def_readonly("predicted_rmse_px", &TaskReport::predicted_rmse_px)
      .def_readonly("steps", &TaskReport::steps)
      .def_readonly("cost_history", &TaskReport::cost_history)
      .def_readonly("final_theta", &TaskReport::final_theta);

  m.def(
      "run_task",
      [](const KinematicChain& chain, const CameraModel& cam, const VirtualJointSet& phi_model,
         const VirtualJointSet& phi_true, const Eigen::VectorXd& theta0,
         const Eigen::MatrixXd& z_goal, int horizon, int epochs) {
        GoalSpec goal;
        goal.z_goal = matrix_to_keypoints(z_goal);
        ControlConfig cfg;
        cfg.epochs = epochs;
        return run_task(chain, cam, phi_model, phi_true, theta0, goal, horizon, cfg);
      },
      py::arg("chain"), py::arg("camera"), py::arg("phi_model"), py::arg("phi_true"),
      py::arg("theta0"), py::arg("z_goal"), py::arg("horizon") = 10, py::arg("epochs") = 200);

  m.def(
      "kinematic_heatmap",
      [](double x, double y, double sigma, int width, int height) {
        return kinematic_heatmap({x, y, 1.0}, sigma, width, height).grid;
      },
      py::arg("x"), py::arg("y"), py::arg("sigma"), py::arg("width"), py::arg("height"));

  m.def(
      "kinematic_consistency_loss",
      [](const Eigen::MatrixXd& keypoints, const Eigen::Vector3d& ee) {
        return kinematic_consistency_loss(matrix_to_keypoints(keypoints), {ee[0], ee[1], ee[2]});
      },
      py::arg("keypoints"), py::arg("ee"));
}

"""Python interface to the exkin core library.

Thin re-export of the compiled module; heavy lifting (kinematics,
projection, regression, MPC) stays in C++.
"""

from ._exkin import (
    CameraModel,
    ExkinError,
    KinematicChain,
    ObservationDataset,
    OracleDetector,
    RegressionResult,
    RigidTransform,
    TaskReport,
    VirtualJointSet,
    __version__,
    gen_dataset,
    kinematic_consistency_loss,
    kinematic_heatmap,
    load_camera,
    load_chain,
    loss_trans,
    project_chain,
    regress,
    run_task,
)

__all__ = [
    "CameraModel",
    "ExkinError",
    "KinematicChain",
    "ObservationDataset",
    "OracleDetector",
    "RegressionResult",
    "RigidTransform",
    "TaskReport",
    "VirtualJointSet",
    "__version__",
    "gen_dataset",
    "kinematic_consistency_loss",
    "kinematic_heatmap",
    "load_camera",
    "load_chain",
    "loss_trans",
    "project_chain",
    "regress",
    "run_task",
]

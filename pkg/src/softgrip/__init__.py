"""Planar two-segment pneumatic soft-finger simulator and gripper controls."""

from .dynamics import (
    ActuationMap,
    DynamicParams,
    DynamicsMatrices,
    config_map,
    direct_dynamics,
    dyn_regressor,
    equilibrium_bend,
    map_jacobian,
    map_jacobian_dot,
    rigid_dynamics,
    soft_dynamics,
)
from .kinematics import (
    CurvatureState,
    KinematicParams,
    PlanarPose,
    fk_com,
    fk_tip,
    kin_regressor,
    segment_transform,
    task_jacobian,
    task_jacobian_dot,
)
from .simulate import (
    FingerModel,
    ForceScenario,
    Obstacle,
    PressureSignal,
    Scenario,
    SimConfig,
    SimulationDiverged,
    Trajectory,
    accel,
    obstacle_force,
    pressure_to_torque,
    simulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

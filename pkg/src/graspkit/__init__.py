"""Deterministic antipodal grasp planning for 3D point clouds."""

from .candidates import (
    GraspCandidate,
    RegionPair,
    find_antiparallel_pairs,
    make_candidates,
    overlap_region,
    project_to_common_plane,
)
from .cloud import (
    PointCloud,
    SpatialIndex,
    estimate_normals_curvatures,
    remove_statistical_outliers,
    voxel_downsample,
)
from .io import CloudParseError, EmptyCloudError, load_cloud, save_cloud_ply
from .mechanics import (
    ContactFrame,
    GraspMap,
    build_contact_frame,
    build_grasp_map,
    contact_wrench,
    force_closure,
    in_friction_cone,
)
from .planner import PlannerConfig, PlanResult, load_config, plan
from .regions import PlanarRegion, RegionGrowingParams, Segmentation, fit_plane_lsq, segment
from .robustness import PerturbationSpec, RobustnessReport, perturb_and_snap, robust_force_closure
from .shapes import ShapeSpec, corpus_standard, generate
from .stability import (
    GraspReport,
    StabilityProblem,
    StabilityResult,
    rank_candidates,
    solve_stability,
    stability_cost,
)

__version__ = "0.1.0"

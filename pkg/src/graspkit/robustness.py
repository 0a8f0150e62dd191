"""Empirical force-closure probability under contact perturbation.

Each trial jitters both contact points with isotropic Gaussian noise, snaps
them back to the nearest cloud point, rebuilds the grasp map with the
stored normals at the snapped points and re-runs the closure check. The
RNG is Philox (counter-based) keyed by (seed, trial), so the per-trial
outcome vector is reproducible and independent of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import GraspCandidate
from .cloud import PointCloud, SpatialIndex
from .mechanics import build_contact_frame, build_grasp_map, force_closure

RNG_ALGORITHM = "philox"


@dataclass(frozen=True)
class PerturbationSpec:
    """Noise level, trial count, seed and closure threshold for the metric.

    ``sigma_mode`` "absolute" reads sigma in cloud length units;
    "relative" scales it by the cloud's bounding-sphere radius.
    """

    sigma: float
    trials: int = 100
    seed: int = 0
    threshold: float = 0.01
    sigma_mode: str = "absolute"

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sigma_mode not in ("absolute", "relative"):
            raise ValueError(f"unknown sigma_mode {self.sigma_mode!r}")

    def effective_sigma(self, cloud: PointCloud) -> float:
        if self.sigma_mode == "relative":
            return self.sigma * cloud.bounding_radius()
        return self.sigma


@dataclass(frozen=True)
class RobustnessReport:
    probability: float
    per_trial: tuple[bool, ...]
    sigma: float
    effective_sigma: float
    sigma_mode: str
    trials: int
    seed: int
    threshold: float
    mode: str
    rng: str = RNG_ALGORITHM

    def to_json_dict(self) -> dict:
        return {
            "probability": self.probability,
            "per_trial": [bool(v) for v in self.per_trial],
            "sigma": self.sigma,
            "effective_sigma": self.effective_sigma,
            "sigma_mode": self.sigma_mode,
            "trials": self.trials,
            "seed": self.seed,
            "threshold": self.threshold,
            "mode": self.mode,
            "rng": self.rng,
        }


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent Philox stream for one trial, derived from (seed, trial)."""
    return np.random.Generator(np.random.Philox(key=(np.uint64(seed), np.uint64(trial))))


def _snap_index(contact, index: SpatialIndex, sigma: float, rng: np.random.Generator) -> int:
    offset = rng.standard_normal(3) * sigma
    return index.nearest(np.asarray(contact, dtype=np.float64) + offset)


def perturb_and_snap(contact, cloud, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Nearest cloud point to contact + per-axis N(0, sigma^2) offsets.

    ``cloud`` may be a PointCloud or a prebuilt SpatialIndex; the RNG state
    advances deterministically (three draws) even when sigma is 0.
    """
    index = cloud if isinstance(cloud, SpatialIndex) else SpatialIndex(cloud)
    points = cloud.points if isinstance(cloud, PointCloud) else index._points
    return points[_snap_index(contact, index, sigma, rng)]


def robust_force_closure(
    candidate: GraspCandidate,
    cloud: PointCloud,
    spec: PerturbationSpec,
    mu: float = 0.5,
    mode: str = "soft-pinch",
) -> RobustnessReport:
    """Fraction of perturbation trials in which the grasp keeps force closure.

    Requires a cloud with stored normals: the inward normal at a snapped
    contact is the negated stored (outward) normal there. Trials where both
    contacts snap to the same point count as failures.
    """
    if cloud.normals is None:
        raise ValueError("robust_force_closure requires cloud normals")
    index = SpatialIndex(cloud)
    sigma = spec.effective_sigma(cloud)
    origin = cloud.centroid()
    torque_scale = max(cloud.bounding_radius(), 1e-12)

    outcomes = []
    for trial in range(spec.trials):
        rng = trial_rng(spec.seed, trial)
        ia = _snap_index(candidate.contact_a, index, sigma, rng)
        ib = _snap_index(candidate.contact_b, index, sigma, rng)
        if ia == ib:
            outcomes.append(False)
            continue
        pa, pb = cloud.points[ia], cloud.points[ib]
        na, nb = -cloud.normals[ia], -cloud.normals[ib]
        frames = (
            build_contact_frame(pa, na, mu),
            build_contact_frame(pb, nb, mu),
        )
        gm = build_grasp_map(frames, origin)
        closure, _ = force_closure(
            gm, mu, spec.threshold, mode=mode, torque_scale=torque_scale
        )
        outcomes.append(closure)
    return RobustnessReport(
        probability=sum(outcomes) / spec.trials,
        per_trial=tuple(outcomes),
        sigma=spec.sigma,
        effective_sigma=sigma,
        sigma_mode=spec.sigma_mode,
        trials=spec.trials,
        seed=spec.seed,
        threshold=spec.threshold,
        mode=mode,
    )

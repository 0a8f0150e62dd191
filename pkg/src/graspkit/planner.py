"""End-to-end planning pipeline: preprocess, segment, pair, score, rank.

The pipeline is deterministic end to end; two runs on the same input and
configuration produce identical results. Serialized plan output therefore
carries no timestamps, and stage timings live only on the in-memory result
(they are logged, never serialized).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .candidates import GraspCandidate, find_antiparallel_pairs, make_candidates
from .cloud import PointCloud, estimate_normals_curvatures, remove_statistical_outliers, voxel_downsample
from .regions import RegionGrowingParams, Segmentation, segment
from .stability import GraspReport, RankedCandidates, rank_candidates

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
VERSION = "0.1.0"
ENV_PREFIX = "GRASPKIT_"

RESULT_OK = "ok"
RESULT_SEGMENTATION_EMPTY = "segmentation-empty"
RESULT_NO_CANDIDATES = "no-candidates"


@dataclass(frozen=True)
class PlannerConfig:
    """Every pipeline tunable, loadable from a flat key=value file.

    Unknown keys are rejected at load time and each value is validated
    against its stage's invariants.
    """

    voxel_size: float = 0.002
    outlier_k: int = 12
    outlier_std_ratio: float = 2.0
    normals_k: int = 16
    angle_threshold_deg: float = 15.0
    curvature_threshold: float = 0.05
    distance_threshold: float = 0.005
    region_k_neighbors: int = 16
    min_region_size: int = 20
    max_pair_angle_deg: float = 15.0
    max_width: float = 0.085
    candidates_per_pair: int = 5
    mu: float = 0.5
    f_ex_magnitude: float = 1.0
    f_normal_cap: float = 2.0
    sigma_min_threshold: float = 0.01
    closure_mode: str = "soft-pinch"
    sigmas: tuple[float, ...] = (0.02, 0.05, 0.1)
    sigma_mode: str = "relative"
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.voxel_size < 0:
            raise ValueError("voxel_size must be >= 0 (0 disables downsampling)")
        if self.outlier_k < 1:
            raise ValueError("outlier_k must be >= 1")
        if self.outlier_std_ratio <= 0:
            raise ValueError("outlier_std_ratio must be positive")
        if self.normals_k < 3:
            raise ValueError("normals_k must be >= 3")
        if self.max_pair_angle_deg <= 0:
            raise ValueError("max_pair_angle_deg must be positive")
        if self.max_width <= 0:
            raise ValueError("max_width must be positive")
        if self.candidates_per_pair < 1:
            raise ValueError("candidates_per_pair must be >= 1")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.f_ex_magnitude <= 0 or self.f_normal_cap <= 0:
            raise ValueError("pseudo-force magnitude and cap must be positive")
        if self.sigma_min_threshold <= 0:
            raise ValueError("sigma_min_threshold must be positive")
        if self.closure_mode not in ("soft-pinch", "strict"):
            raise ValueError(f"unknown closure_mode {self.closure_mode!r}")
        if self.sigma_mode not in ("absolute", "relative"):
            raise ValueError(f"unknown sigma_mode {self.sigma_mode!r}")
        if any(s < 0 for s in self.sigmas):
            raise ValueError("sigmas must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        # delegate the region-growing invariants
        self.region_params()

    def region_params(self) -> RegionGrowingParams:
        return RegionGrowingParams(
            angle_threshold_deg=self.angle_threshold_deg,
            curvature_threshold=self.curvature_threshold,
            distance_threshold=self.distance_threshold,
            k_neighbors=self.region_k_neighbors,
            min_region_size=self.min_region_size,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def _coerce(name: str, raw: str, target_type):
    if target_type is float:
        return float(raw)
    if target_type is int:
        return int(raw)
    if target_type is str:
        return raw
    if target_type is tuple:
        return tuple(float(v) for v in raw.split(",") if v.strip())
    raise ValueError(f"cannot parse config key {name!r}")


def load_config(path=None, env: bool = True) -> PlannerConfig:
    """Config from a flat key=value file, with GRASPKIT_* environment overrides.

    Lines are ``key = value``; '#' starts a comment. Unknown keys raise.
    """
    known = {f.name: (tuple if f.name == "sigmas" else type(getattr(PlannerConfig(), f.name)))
             for f in fields(PlannerConfig)}
    values: dict = {}
    if path is not None:
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            values[key] = _coerce(key, value.strip(), known[key])
    if env:
        for key, target_type in known.items():
            raw = os.environ.get(ENV_PREFIX + key.upper())
            if raw is not None:
                values[key] = _coerce(key, raw, target_type)
    return PlannerConfig(**values)


@dataclass(frozen=True)
class PlanResult:
    result_code: str
    best: GraspReport | None
    all_reports: tuple[GraspReport, ...]
    timings_ms: dict[str, float]
    config_sha256: str
    input_sha256: str
    n_points: int
    n_regions: int
    n_pairs: int

    @property
    def ok(self) -> bool:
        return self.result_code == RESULT_OK

    def to_json_dict(self) -> dict:
        # Timings are intentionally omitted: serialized results must be
        # byte-identical across repeated runs.
        return {
            "schema_version": SCHEMA_VERSION,
            "result_code": self.result_code,
            "best": self.best.to_json_dict() if self.best else None,
            "reports": [r.to_json_dict() for r in self.all_reports],
            "pipeline_metadata": {
                "version": VERSION,
                "config_sha256": self.config_sha256,
                "input_sha256": self.input_sha256,
                "n_points": self.n_points,
                "n_regions": self.n_regions,
                "n_pairs": self.n_pairs,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _hash_cloud(cloud: PointCloud) -> str:
    h = hashlib.sha256(cloud.points.tobytes())
    if cloud.normals is not None:
        h.update(cloud.normals.tobytes())
    if cloud.curvatures is not None:
        h.update(cloud.curvatures.tobytes())
    return h.hexdigest()


def preprocess(cloud: PointCloud, config: PlannerConfig) -> PointCloud:
    """Outlier filter, then voxel downsample, then fill in missing attributes."""
    out = cloud
    if len(out) >= config.outlier_k + 1:
        out = remove_statistical_outliers(out, k=config.outlier_k, std_ratio=config.outlier_std_ratio)
    if config.voxel_size > 0:
        out = voxel_downsample(out, config.voxel_size)
    if (out.normals is None or out.curvatures is None) and len(out) >= config.normals_k:
        out = estimate_normals_curvatures(out, k=config.normals_k)
    return out


def plan(cloud: PointCloud, config: PlannerConfig | None = None) -> PlanResult:
    """Run the full pipeline and return ranked grasp reports.

    Structured failure codes instead of exceptions: "segmentation-empty"
    when no region survives, "no-candidates" when no antiparallel pair
    yields a feasible contact pair.
    """
    config = config or PlannerConfig()
    if len(cloud) == 0:
        raise ValueError("cannot plan on an empty cloud")
    input_hash = _hash_cloud(cloud)
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    prepared = preprocess(cloud, config)
    timings["preprocess"] = (time.perf_counter() - t0) * 1e3

    def finish(code: str, reports=(), n_regions=0, n_pairs=0) -> PlanResult:
        ranked = tuple(reports)
        return PlanResult(
            result_code=code,
            best=ranked[0] if ranked else None,
            all_reports=ranked,
            timings_ms=timings,
            config_sha256=config.sha256(),
            input_sha256=input_hash,
            n_points=len(prepared),
            n_regions=n_regions,
            n_pairs=n_pairs,
        )

    if prepared.normals is None or prepared.curvatures is None:
        logger.warning("cloud too small to estimate attributes; nothing to segment")
        return finish(RESULT_SEGMENTATION_EMPTY)

    t0 = time.perf_counter()
    segmentation: Segmentation = segment(prepared, config.region_params())
    timings["segment"] = (time.perf_counter() - t0) * 1e3
    if len(segmentation) == 0:
        return finish(RESULT_SEGMENTATION_EMPTY)

    t0 = time.perf_counter()
    pairs = find_antiparallel_pairs(
        segmentation.regions, config.max_pair_angle_deg, config.max_width
    )
    candidates: list[GraspCandidate] = []
    for pair in pairs:
        candidates.extend(
            make_candidates(
                pair,
                prepared,
                n_per_pair=config.candidates_per_pair,
                max_width=config.max_width,
                distance_threshold=config.distance_threshold,
                min_points=config.min_region_size,
            )
        )
    timings["candidates"] = (time.perf_counter() - t0) * 1e3
    if not candidates:
        return finish(RESULT_NO_CANDIDATES, n_regions=len(segmentation), n_pairs=len(pairs))

    t0 = time.perf_counter()
    ranked: RankedCandidates = rank_candidates(
        candidates,
        prepared,
        mu=config.mu,
        sigma_min_threshold=config.sigma_min_threshold,
        closure_mode=config.closure_mode,
        f_ex_magnitude=config.f_ex_magnitude,
        f_normal_cap=config.f_normal_cap,
    )
    timings["rank"] = (time.perf_counter() - t0) * 1e3
    logger.debug("plan timings (ms): %s", timings)
    return finish(
        RESULT_OK,
        reports=ranked.reports,
        n_regions=len(segmentation),
        n_pairs=len(pairs),
    )

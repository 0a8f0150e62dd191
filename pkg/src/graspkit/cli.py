"""Command-line front end: plan, segment, eval, benchmark, synth."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import planner as planner_mod
from .candidates import GraspCandidate
from .cloud import PointCloud, SpatialIndex, estimate_normals_curvatures
from .io import load_cloud, save_cloud_ply, save_segmentation_ply
from .planner import PlannerConfig, load_config, plan
from .regions import segment
from .robustness import PerturbationSpec, robust_force_closure
from .shapes import corpus_standard, generate, lookup

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_CANDIDATES = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="graspkit", description="Antipodal grasp planning for point clouds")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="plan grasps for a cloud file")
    p.add_argument("--input", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--output", default=None, help="JSON report path (default stdout)")

    p = sub.add_parser("segment", help="export region-labelled PLY for debugging")
    p.add_argument("--input", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--output", required=True)

    p = sub.add_parser("eval", help="robust force-closure metric for a stored grasp")
    p.add_argument("--input", required=True)
    p.add_argument("--grasp", required=True, help="JSON with contact_a/contact_b")
    p.add_argument("--config", default=None)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-mode", choices=["absolute", "relative"], default="absolute")
    p.add_argument("--output", default=None)

    p = sub.add_parser("benchmark", help="closure-probability grid over the synthetic corpus")
    p.add_argument("--corpus", default="standard", choices=["standard"])
    p.add_argument("--sigmas", default="0.02,0.05,0.1")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-mode", choices=["absolute", "relative"], default="relative")
    p.add_argument("--config", default=None)
    p.add_argument("--output", required=True, help="CSV path")

    p = sub.add_parser("synth", help="write a corpus object as ASCII PLY")
    p.add_argument("--name", default=None)
    p.add_argument("--output", default=None)
    p.add_argument("--list", action="store_true", help="list corpus object names")
    return parser


def _load_config(path: str | None) -> PlannerConfig:
    return load_config(path) if path else load_config(None)


def _write_or_print(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        print(text)


def _cmd_plan(args) -> int:
    config = _load_config(args.config)
    cloud = load_cloud(args.input)
    result = plan(cloud, config)
    _write_or_print(result.to_json(), args.output)
    logger.info("plan timings (ms): %s", result.timings_ms)
    return EXIT_OK if result.ok else EXIT_NO_CANDIDATES


def _cmd_segment(args) -> int:
    config = _load_config(args.config)
    cloud = planner_mod.preprocess(load_cloud(args.input), config)
    if cloud.normals is None or cloud.curvatures is None:
        print("error: cloud too small to segment", file=sys.stderr)
        return EXIT_NO_CANDIDATES
    segmentation = segment(cloud, config.region_params())
    save_segmentation_ply(cloud, segmentation.region_ids(), args.output)
    return EXIT_OK if len(segmentation) else EXIT_NO_CANDIDATES


def _candidate_from_json(data: dict, cloud: PointCloud) -> GraspCandidate:
    contact_a = np.asarray(data["contact_a"], dtype=np.float64)
    contact_b = np.asarray(data["contact_b"], dtype=np.float64)
    delta = contact_b - contact_a
    width = float(np.linalg.norm(delta))
    if width <= 0:
        raise ValueError("grasp contacts coincide")
    if "normal_a" in data and "normal_b" in data:
        normal_a = np.asarray(data["normal_a"], dtype=np.float64)
        normal_b = np.asarray(data["normal_b"], dtype=np.float64)
    else:
        index = SpatialIndex(cloud)
        normal_a = -cloud.normals[index.nearest(contact_a)]
        normal_b = -cloud.normals[index.nearest(contact_b)]
    return GraspCandidate(
        contact_a=contact_a,
        contact_b=contact_b,
        normal_a=normal_a,
        normal_b=normal_b,
        grasp_axis=delta / width,
        width=width,
    )


def _with_normals(cloud: PointCloud, config: PlannerConfig) -> PointCloud:
    if cloud.normals is not None:
        return cloud
    return estimate_normals_curvatures(cloud, k=config.normals_k)


def _cmd_eval(args) -> int:
    config = _load_config(args.config)
    cloud = _with_normals(load_cloud(args.input), config)
    grasp_data = json.loads(Path(args.grasp).read_text())
    if isinstance(grasp_data, list):
        grasp_data = grasp_data[0]
    candidate = _candidate_from_json(grasp_data, cloud)
    spec = PerturbationSpec(
        sigma=args.sigma,
        trials=args.trials,
        seed=args.seed,
        threshold=config.sigma_min_threshold,
        sigma_mode=args.sigma_mode,
    )
    report = robust_force_closure(
        candidate, cloud, spec, mu=config.mu, mode=config.closure_mode
    )
    _write_or_print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True), args.output)
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    config = _load_config(args.config)
    sigmas = tuple(float(s) for s in args.sigmas.split(",") if s.strip())
    if not sigmas:
        print("error: no sigmas given", file=sys.stderr)
        return EXIT_USAGE
    rows = []
    for name, spec in corpus_standard().items():
        cloud = generate(spec)
        result = plan(cloud, config)
        if not result.ok or result.best is None:
            rows.append([name] + ["-"] * len(sigmas))
            logger.info("%s: %s", name, result.result_code)
            continue
        prepared = planner_mod.preprocess(cloud, config)
        probs = []
        for sigma in sigmas:
            pspec = PerturbationSpec(
                sigma=sigma,
                trials=args.trials,
                seed=args.seed,
                threshold=config.sigma_min_threshold,
                sigma_mode=args.sigma_mode,
            )
            report = robust_force_closure(
                result.best.candidate, prepared, pspec, mu=config.mu, mode=config.closure_mode
            )
            probs.append(f"{report.probability:.3f}")
        rows.append([name] + probs)
    header = ["object"] + [f"sigma_{s:g}" for s in sigmas]
    lines = [",".join(header)] + [",".join(r) for r in rows]
    Path(args.output).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.list:
        for name in corpus_standard():
            print(name)
        return EXIT_OK
    if not args.name or not args.output:
        print("error: --name and --output are required (or use --list)", file=sys.stderr)
        return EXIT_USAGE
    try:
        spec = lookup(args.name)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    save_cloud_ply(generate(spec), args.output)
    return EXIT_OK


_COMMANDS = {
    "plan": _cmd_plan,
    "segment": _cmd_segment,
    "eval": _cmd_eval,
    "benchmark": _cmd_benchmark,
    "synth": _cmd_synth,
}


def cli_main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()

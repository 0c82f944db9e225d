"""Batch experiment runner.

Usage:
    rswlab run <config.json>        execute the configured task
    rswlab validate <config.json>   print diagnostics, run nothing
    rswlab render <config.json>     image outputs only (task must be sample)

A run configuration is one JSON document (or an array of them for batch
mode):

    {"experiment_name": "pi-critical",
     "model": {"model": "bernoulli", "p": 0.5},
     "task": "pi",
     "geometry": {"a": 16, "b": 20},
     "reps": 10000,
     "seed": 1,
     "output_dir": "out"}

Tasks: sample | pi | psi | beta | theta | check-rect-l | constants | bounds.
The seed is mandatory; identical configurations produce byte-identical JSON
and CSV outputs (timing lives in a separate .meta.json).  Exit status: 0 on
success, 2 when an inequality check flags a violation, 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .bounds import bootstrap_constants, decorrelation_bound, rsw_bound
from .estimators import (
    ExplorationRecipe,
    QuadFamily,
    TruncatedGaussianSampler,
    check_rect_to_l,
    estimate_beta,
    estimate_pi,
    estimate_psi,
    estimate_theta,
)
from .ising import IsingModel, ising_cftp_sample
from .lattice import Box, get_lattice
from .samplers import sampler_from_descriptor
from .topology import Quad, rect_quad, annulus_slit_quad

_TASKS = ("sample", "pi", "psi", "beta", "theta", "check-rect-l",
          "constants", "bounds")


@dataclass
class RunConfig:
    experiment_name: str
    task: str
    seed: int
    model: Optional[dict] = None
    geometry: dict = field(default_factory=dict)
    reps: int = 1000
    output_dir: str = "out"
    lattice: str = "union-jack"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = {k: v for k, v in raw.items() if k not in known}
        kw = {k: v for k, v in raw.items() if k in known}
        kw.setdefault("params", {})
        kw["params"] = {**extra, **kw["params"]}
        if "experiment_name" not in kw or "task" not in kw or "seed" not in kw:
            raise ValueError("experiment_name, task and seed are mandatory")
        return cls(**kw)


def quad_from_geometry(geom: dict) -> Quad:
    if "arcs" in geom:
        arcs = geom["arcs"]
        from .lattice import UNION_JACK
        return Quad(UNION_JACK, *(list(map(tuple, arcs[k]))
                                  for k in ("gamma", "gamma1", "gamma_prime", "gamma2")))
    if {"a", "b"} <= geom.keys():
        return rect_quad(int(geom["a"]), int(geom["b"]),
                         int(geom.get("x0", 0)), int(geom.get("y0", 0)))
    if {"r", "R"} <= geom.keys():
        center = tuple(geom.get("x", (0, 0)))
        return annulus_slit_quad(center, int(geom["r"]), int(geom["R"]))
    raise ValueError("geometry needs a rectangle {a,b}, an annulus {r,R}, "
                     "or explicit {arcs}")


def validate(config: RunConfig) -> list[str]:
    """Structured diagnostics; empty list means a run would start."""
    diags: list[str] = []
    if config.task not in _TASKS:
        diags.append(f"unknown task {config.task!r}")
        return diags
    try:
        get_lattice(config.lattice)
    except ValueError as err:
        diags.append(str(err))
    if not isinstance(config.seed, int):
        diags.append("seed must be an integer (no entropy defaults)")
    if config.task in ("sample", "pi", "psi", "beta", "theta"):
        if config.model is None:
            diags.append(f"task {config.task} needs a model descriptor")
        else:
            try:
                sampler_from_descriptor(config.model)
            except (ValueError, KeyError) as err:
                diags.append(f"model: {err}")
    if config.model and config.model.get("model") == "ising":
        N = int(config.model.get("N", 8))
        beta0 = float(config.model.get("beta0", 0.0))
        if beta0 <= 0 or N * math.tanh(beta0 * N) >= 1.0:
            diags.append("ising model needs N*tanh(beta0*N) < 1 so the "
                         "backward exploration dies out")
    if config.task == "pi":
        try:
            quad = quad_from_geometry(config.geometry)
        except (ValueError, KeyError) as err:
            diags.append(f"geometry: {err}")
        else:
            box_n = int(config.geometry.get("box", 0))
            if box_n and quad.bounding_box_half_side() > box_n:
                diags.append("quad exceeds the declared box")
    if config.task == "psi" and "n" not in config.geometry:
        diags.append("task psi needs geometry {n}")
    if config.task == "check-rect-l":
        need = {"l", "L", "lp", "Lp"}
        if not need <= config.geometry.keys():
            diags.append(f"task check-rect-l needs geometry {sorted(need)}")
    if config.task == "constants":
        p = config.params
        if not {"C", "alpha", "beta"} <= p.keys():
            diags.append("task constants needs params C, alpha, beta")
        elif float(p["beta"]) <= 2 * float(p["alpha"]):
            diags.append("constants need beta > 2*alpha")
    return diags


def _json_dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _append_csv(path: Path, row: dict) -> None:
    fields = ["experiment", "task", "value", "stderr", "n_samples", "seed",
              "descriptor"]
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        if new:
            writer.writeheader()
        writer.writerow({k: row.get(k, "") for k in fields})


def _run_task(config: RunConfig) -> tuple[dict, int, list[tuple[str, Any]]]:
    """Returns (result record, exit code, extra artifacts [(suffix, payload)])."""
    geom = config.geometry
    params = config.params
    artifacts: list[tuple[str, Any]] = []
    code = 0

    if config.task == "constants":
        out = bootstrap_constants(float(params["C"]), float(params["alpha"]),
                                  float(params["beta"]))
        return {"constants": out.record()}, 0, artifacts

    if config.task == "bounds":
        kind = params["kind"]
        kw = {k: v for k, v in params.items() if k != "kind"}
        if kind in ("ising", "gaussian"):
            return {"bound": decorrelation_bound(kind, **kw)}, 0, artifacts
        return {"bound": rsw_bound(kind, **kw).record()}, 0, artifacts

    sampler = sampler_from_descriptor(config.model)

    if config.task == "sample":
        n = int(geom.get("n", 64))
        if config.model.get("model") == "ising":
            model = IsingModel(beta=float(config.model["beta"]),
                               beta0=float(config.model["beta0"]),
                               depth=int(config.model.get("depth", 8)),
                               degree_max=int(config.model.get("N", 8)))
            cfg, determined, stats = ising_cftp_sample(model, Box(n), config.seed)
            extra = {"determined_fraction": stats["determined_fraction"]}
        else:
            from .lattice import GridGeometry, UNION_JACK
            grid = GridGeometry(get_lattice(config.lattice), -n, -n,
                                2 * n + 1, 2 * n + 1)
            signs = sampler.sample_signs(grid, config.seed, 0)
            from .topology import Configuration
            cfg = Configuration(grid=grid, signs=signs, box=Box(n))
            extra = {}
        artifacts.append(("config", cfg))
        return {"sample": {"n": n, **extra}}, 0, artifacts

    if config.task == "pi":
        quad = quad_from_geometry(geom)
        est = estimate_pi(sampler, quad, config.reps, config.seed)
        artifacts.append(("figure", ([quad.name], [est.value], [est.stderr],
                                     "crossing probability")))
        return {"estimate": est.record()}, 0, artifacts

    if config.task == "psi":
        est = estimate_psi(sampler, int(geom["n"]), config.reps, config.seed)
        artifacts.append(("figure", ([f"A({geom['n']},{2*int(geom['n'])})"],
                                     [est.value], [est.stderr],
                                     "annulus circuit probability")))
        return {"estimate": est.record()}, 0, artifacts

    if config.task == "beta":
        rs = [int(r) for r in geom.get("rs", [geom.get("r", 2)])]
        R, L = int(geom["R"]), int(geom["L"])
        recipes = []
        if "recipe" in geom:
            recipes.append(ExplorationRecipe(int(geom["recipe"]["a"]),
                                             int(geom["recipe"]["b"])))
        family = QuadFamily.annulus_family(rs, R, L, recipes=recipes)
        family.validate()
        est = estimate_beta(sampler, family, config.reps, config.seed)
        members = est.metadata["members"]
        artifacts.append(("figure", (
            [m["metadata"].get("member", "?") for m in members],
            [m["value"] for m in members],
            [m["stderr"] for m in members],
            "non-gluing frequency")))
        return {"estimate": est.record()}, 0, artifacts

    if config.task == "theta":
        other = params["model_b"]
        if other.get("model") == "gaussian-truncated":
            from .kernels import kernel_from_descriptor
            sampler_b = TruncatedGaussianSampler(
                kernel_from_descriptor(other["kernel"]),
                float(other["distance"]))
        else:
            sampler_b = sampler_from_descriptor(other)
        est = estimate_theta(sampler, sampler_b, int(geom["n"]),
                             config.reps, config.seed)
        return {"estimate": est.record()}, 0, artifacts

    if config.task == "check-rect-l":
        rep = check_rect_to_l(sampler, int(geom["l"]), int(geom["L"]),
                              int(geom["lp"]), int(geom["Lp"]),
                              config.reps, config.seed,
                              ell=int(geom.get("ell", 0)))
        if rep.violated:
            code = 2
        return {"inequality": rep.record()}, code, artifacts

    raise ValueError(f"unhandled task {config.task}")


def run(config: RunConfig, render_only: bool = False) -> int:
    diags = validate(config)
    if diags:
        for d in diags:
            print(f"config error: {d}", file=sys.stderr)
        return 1
    if render_only and config.task != "sample":
        print("render applies to task=sample configs only", file=sys.stderr)
        return 1

    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result, code, artifacts = _run_task(config)
    runtime_ms = (time.perf_counter() - t0) * 1000.0

    record = {
        "experiment": config.experiment_name,
        "task": config.task,
        "seed": config.seed,
        "reps": config.reps,
        "model": config.model,
        "geometry": config.geometry,
        "params": config.params,
        "lattice": config.lattice,
        **result,
    }
    base = outdir / config.experiment_name

    for suffix, payload in artifacts:
        if suffix == "config":
            from .render import config_to_rgb, write_png, write_ppm
            rgb = config_to_rgb(payload, highlight_cluster=True)
            write_ppm(base.with_suffix(".ppm"), rgb)
            write_png(base.with_suffix(".png"), rgb, title=config.experiment_name)
        elif suffix == "figure" and not render_only:
            from .render import write_estimate_figure
            labels, values, errors, ylabel = payload
            write_estimate_figure(base.with_suffix(".png"), labels, values,
                                  errors, config.experiment_name, ylabel)

    if not render_only:
        with open(base.with_suffix(".json"), "w") as fh:
            fh.write(_json_dumps(record))
        est = result.get("estimate")
        _append_csv(outdir / "results.csv", {
            "experiment": config.experiment_name,
            "task": config.task,
            "value": est["value"] if est else "",
            "stderr": est["stderr"] if est else "",
            "n_samples": est["n_samples"] if est else "",
            "seed": config.seed,
            "descriptor": json.dumps(config.model, sort_keys=True),
        })
        with open(base.with_suffix(".meta.json"), "w") as fh:
            fh.write(_json_dumps({"runtime_ms": runtime_ms,
                                  "finished_unix": time.time()}))
    return code


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rswlab",
        description="box-crossing experiments on planar sign fields")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in ("run", "validate", "render"):
        p = sub.add_parser(cmd)
        p.add_argument("config", help="path to a JSON run configuration")
    args = parser.parse_args(argv)

    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return 1
    docs = raw if isinstance(raw, list) else [raw]

    worst = 0
    for doc in docs:
        try:
            config = RunConfig.from_dict(doc)
        except (TypeError, ValueError) as err:
            print(f"invalid config: {err}", file=sys.stderr)
            return 1
        if args.command == "validate":
            diags = validate(config)
            for d in diags:
                print(f"{config.experiment_name}: {d}")
            worst = max(worst, 1 if diags else 0)
            continue
        try:
            code = run(config, render_only=args.command == "render")
        except Exception as err:  # surface anything as exit 1 with a message
            print(f"{config.experiment_name}: {err}", file=sys.stderr)
            return 1
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())

"""Batch experiment driver.

    rotorbit run <config.json> [--out DIR] [--seed N] [--tasks t1,t2]
    rotorbit project <output dir> --pair i,j [--csv FILE]

Every data file is a deterministic function of the config and seed; the
only wall-clock values live in report.json.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import config as cfgmod
from .curves import filling_check, geodesic_of, lifted_union_connected
from .errors import ConfigError, MissingArtifact, NotFound, NotInterior, RotorbitError, TaskError
from .group import GroupWord, standard_group
from .realization import (
    bounded_sequence,
    compose_certificate,
    core_candidates,
    periodic_point_search,
    realize_and_verify,
    steinitz_decompose,
)
from .rotation import (
    RotationConfig,
    deviation_suite,
    estimate_from_cloud,
    hausdorff,
    hull_dimension,
    measure_vector_lebesgue,
    mz_estimate,
)
from .zoo import (
    MapSpec,
    Profile,
    ShearSpec,
    TorusMapSpec,
    TorusSystem,
    area_preserving,
    build_map,
    equivariance_certificate,
)

OUT_ENV = "ROTORBIT_OUT"
FORMAT_VERSION = 1
SURFACE_TOL = {"relator": 1e-9, "area": 1e-6}


class TaskFailed(RotorbitError):
    """A task ran but its check missed the stated tolerance."""


class Inconclusive(RotorbitError):
    pass


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


class Run:
    """State shared by the tasks of one run."""

    def __init__(self, cfg: cfgmod.ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.files = []
        self._group = None
        self._map = None
        self._est = None

    @property
    def group(self):
        if self._group is None:
            self._group = standard_group(self.cfg.genus)
        return self._group

    @property
    def map(self):
        if self._map is None:
            G = self.group
            shears = []
            for s in self.cfg.shears:
                w = GroupWord.parse(s["curve"])
                words = [w, w.inverse()] if s.get("both_orientations", False) else [w]
                for x in words:
                    shears.append(
                        ShearSpec(geodesic_of(x, G), s["width"], s.get("strength", 1.0), s.get("side_offset", 0.0))
                    )
            self._map = build_map(MapSpec(tuple(shears)), G, certify=False)
        return self._map

    def rotation_config(self, section: str = "rotation") -> RotationConfig:
        r = self.cfg.section(section)
        return RotationConfig(
            n_iters=r["n_iters"],
            n_samples=r["n_samples"],
            seed=self.cfg.seed,
            n_directions=self.cfg.section("rotation")["n_directions"],
        )

    @property
    def estimate(self):
        if self._est is None:
            self._est = mz_estimate(self.map, self.rotation_config())
        return self._est

    def write_json(self, name: str, obj) -> None:
        obj = {"format_version": FORMAT_VERSION, "seed": self.cfg.seed, **obj}
        _dump(self.out / name, obj)
        self.files.append(name)

    def write_csv(self, name: str, header, rows) -> None:
        _write_csv(self.out / name, header, rows)
        self.files.append(name)


# --- tasks ------------------------------------------------------------------------


def task_surface_check(run: Run) -> dict:
    G = run.group
    residual = G.relator_residual()
    area = G.domain.area()
    expected = 4 * math.pi * (G.genus - 1)
    m = {
        "genus": G.genus,
        "relator_residual": residual,
        "relator_tolerance": SURFACE_TOL["relator"],
        "area": area,
        "expected_area": expected,
        "area_error": abs(area - expected),
        "area_tolerance": SURFACE_TOL["area"],
    }
    run.write_json("surface.json", m)
    if residual > SURFACE_TOL["relator"] or abs(area - expected) > SURFACE_TOL["area"]:
        raise TaskFailed("surface group check outside tolerance")
    return m


def task_filling_check(run: Run) -> dict:
    G = run.group
    curves = [geodesic_of(w, G) for w in run.cfg.curves]
    rep = filling_check(curves, G)
    m = rep.to_dict()
    m["curves"] = list(run.cfg.curves)
    m["lifted_union_connected"] = lifted_union_connected(curves, G) if rep.V else False
    run.write_json("filling.json", m)
    return m


def task_equivariance_check(run: Run) -> dict:
    sec = run.cfg.section("equivariance")
    M = run.map
    cert = equivariance_certificate(M, np.random.default_rng(run.cfg.seed), sec["pairs"], sec["max_word_length"])
    ok_area, worst = area_preserving(M, n=sec["jacobian_points"], seed=run.cfg.seed)
    m = dict(cert)
    m.update({"jacobian_max_defect": worst, "jacobian_points": sec["jacobian_points"], "jacobian_tolerance": 1e-6})
    run.write_json("equivariance.json", m)
    if not cert["max_error"] < cert["tolerance"] or not ok_area:
        raise TaskFailed("equivariance or area-preservation check outside tolerance")
    return m


def task_mz_estimate(run: Run) -> dict:
    est = run.estimate
    dim = est.dim
    run.write_csv("mz_cloud.csv", [f"x{k + 1}" for k in range(dim)], [[_fmt(x) for x in row] for row in est.cloud])
    hull = est.to_dict()
    hull["equations"] = est.equations.tolist() if est.equations is not None else None
    hull["margin_tolerance"] = 1.0 / est.n
    run.write_json("hull.json", hull)
    return {k: hull[k] for k in ("dimension", "margin_of_origin", "n_iters", "n_samples", "resolution")}


def task_lebesgue_vector(run: Run) -> dict:
    cfg = run.rotation_config()
    mean, radius = measure_vector_lebesgue(run.map, cfg)
    margin = run.estimate.margin(mean)
    m = {
        "vector": mean.tolist(),
        "confidence_radius": radius,
        "confidence": "3 sigma",
        "hull_margin": margin,
        "inside_with_margin": bool(margin > radius),
    }
    run.write_json("lebesgue.json", m)
    if not margin > radius:
        raise TaskFailed("Lebesgue rotation vector not inside the hull by its confidence radius")
    return m


def task_deviation(run: Run) -> dict:
    sec = run.cfg.section("deviation")
    cfg = run.rotation_config("deviation")
    union_from = sec["union_from"]
    if union_from == -1:
        union_from = max(1, cfg.n_iters // 64)
    est, reports = deviation_suite(run.map, cfg, n_random=sec["n_random"], linear=sec["linear"], union_from=union_from)
    rows = []
    for k, r in enumerate(reports):
        for n, mx, run_mx in zip(r.checkpoints, r.max_deviation, r.running_max):
            rows.append([k, n, _fmt(mx), _fmt(run_mx)])
    run.write_csv("deviation.csv", ["direction", "n", "max_deviation", "running_max"], rows)
    m = {
        "n_iters": cfg.n_iters,
        "n_samples": cfg.n_samples,
        "hull_dimension": hull_dimension(est),
        "union_from": union_from,
        "directions": [r.to_dict() for r in reports],
        "max_slope": max(r.slope for r in reports),
        "slope_threshold": reports[0].to_dict()["slope_threshold"],
    }
    run.write_json("deviation.json", m)
    if any(r.flagged for r in reports):
        raise TaskFailed("a deviation slope exceeds the threshold")
    return {k: m[k] for k in ("max_slope", "slope_threshold", "hull_dimension")}


def task_realize(run: Run) -> dict:
    sec = run.cfg.section("realize")
    M = run.map
    G = run.group
    words = run.cfg.curves or [s["curve"] for s in run.cfg.shears]
    data, found = core_candidates(M, words, sec["tol"], seed=run.cfg.seed)
    certs = []
    for t in sec["targets"]:
        v = [cfgmod.parse_rational(x) for x in t]
        entry = {"target": [str(x) for x in v]}
        try:
            subset, lam = steinitz_decompose(v, data)
        except NotInterior as e:
            entry["status"] = "not-interior"
            entry["direction"] = None if e.direction is None else [str(x) for x in e.direction]
            certs.append(entry)
            continue
        cert = compose_certificate(v, subset, lam)
        entry["certificate"] = cert.to_dict()
        entry["verified"] = cert.verify(G.genus)
        entry["status"] = "certified" if entry["verified"] else "failed"
        if sec["verify"]:
            try:
                res = realize_and_verify(M, cert, sec["tol"], grid=sec["grid"], seed=run.cfg.seed)
                entry["search"] = {"status": "found", **res.to_dict(), "tolerance": sec["tol"]}
            except NotFound as e:
                best = e.best.to_dict() if e.best is not None else None
                entry["search"] = {"status": "not-found (inconclusive)", "best": best, "tolerance": sec["tol"]}
        certs.append(entry)
    out = {
        "candidates": [d.to_dict() for d in data],
        "candidate_searches": [{**r.to_dict(), "tolerance": sec["tol"]} for r in found],
        "certificates": certs,
    }
    if sec["irrational_target"]:
        bs = bounded_sequence(np.array(sec["irrational_target"], dtype=float), data, sec["steps"])
        out["bounded_sequence"] = {
            "target": list(sec["irrational_target"]),
            "steps": sec["steps"],
            "max_deviation": bs.max_deviation,
            "C_star": bs.C_star,
            "C_diameter_form": bs.C_diameter_form,
            "inradius": bs.inradius,
            "within_bound": bs.within_bound,
            "symbol_prefix": bs.symbols[:64].tolist(),
        }
    run.write_json("certificate.json", out)
    n_ok = sum(1 for c in certs if c.get("verified"))
    if sec["targets"] and n_ok == 0:
        raise TaskFailed("no target produced a verified certificate")
    if "bounded_sequence" in out and not out["bounded_sequence"]["within_bound"]:
        raise TaskFailed("greedy stream deviation exceeded C*")
    return {"candidates": len(data), "certified": n_ok, "targets": len(certs)}


def task_periodic_point(run: Run) -> dict:
    sec = run.cfg.section("periodic_point")
    words = sec["words"] or ["a1"]
    results = []
    for w in words:
        try:
            r = periodic_point_search(run.map, w, sec["N_max"], sec["tol"], grid=sec["grid"], seed=run.cfg.seed)
            results.append({"word": w, "status": "found", **r.to_dict(), "tolerance": sec["tol"]})
        except NotFound as e:
            best = e.best.to_dict() if e.best is not None else None
            results.append({"word": w, "status": "not-found (inconclusive)", "best": best, "tolerance": sec["tol"]})
    run.write_json("periodic.json", {"results": results})
    if any(r["status"] != "found" for r in results):
        raise Inconclusive("periodic point search did not succeed for every word")
    return {"found": len(results)}


def _profile(d) -> Profile:
    return Profile(d["kind"], float(d.get("amplitude", 0.0)), float(d.get("plateau", 0.25)))


def torus_truth(spec: TorusMapSpec, grid: int) -> np.ndarray:
    """Brute-force rotation set for a torus map with one active shear: every
    point moves by (phi(y), 0) (or (0, psi(x))) each step, so the set is the
    segment spanned by the profile's values on a fine grid."""
    t = np.linspace(0, 1, grid)
    if spec.psi.kind == "zero" or spec.psi.amplitude == 0:
        vals = spec.phi(t)
        return np.array([[vals.min(), 0.0], [vals.max(), 0.0]])
    if spec.phi.kind == "zero" or spec.phi.amplitude == 0:
        vals = spec.psi(t)
        return np.array([[0.0, vals.min()], [0.0, vals.max()]])
    raise ConfigError("torus oracle needs one of phi, psi to vanish", "/torus")


def task_torus_oracle(run: Run) -> dict:
    sec = run.cfg.section("torus")
    spec = TorusMapSpec(_profile(sec["phi"]), _profile(sec["psi"]))
    cfg = RotationConfig(n_iters=sec["n_iters"], n_samples=sec["n_samples"], seed=run.cfg.seed)
    est = mz_estimate(TorusSystem(spec), cfg)
    truth = torus_truth(spec, sec["truth_grid"])
    h = hausdorff(est.vertices, truth)
    m = {
        "hausdorff": h,
        "tolerance": sec["tolerance"],
        "truth": truth.tolist(),
        "vertices": est.vertices.tolist(),
        "n_iters": cfg.n_iters,
        "n_samples": cfg.n_samples,
    }
    run.write_json("torus.json", m)
    if not h <= sec["tolerance"]:
        raise TaskFailed(f"torus Hausdorff distance {h:.3g} above tolerance")
    return m


TASK_FUNCS = {
    "surface-check": task_surface_check,
    "filling-check": task_filling_check,
    "equivariance-check": task_equivariance_check,
    "mz-estimate": task_mz_estimate,
    "lebesgue-vector": task_lebesgue_vector,
    "deviation": task_deviation,
    "realize": task_realize,
    "periodic-point": task_periodic_point,
    "torus-oracle": task_torus_oracle,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, Fraction):
        return str(x)
    return x


def run(cfg: cfgmod.ExperimentConfig) -> dict:
    """Execute the configured tasks in the fixed task order; write report.json."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    state = Run(cfg, out)
    started = datetime.now(timezone.utc)
    tasks = {}
    for name in (t for t in cfgmod.TASKS if t in cfg.tasks):
        t0 = time.perf_counter()
        try:
            metrics = TASK_FUNCS[name](state)
            status, error = "ok", None
        except TaskFailed as e:
            status, error, metrics = "failed", str(e), None
        except Inconclusive as e:
            status, error, metrics = "inconclusive", str(e), None
        except (RotorbitError, ValueError, ArithmeticError) as e:
            err = TaskError(name, e)
            status, error, metrics = "error", str(err), None
        tasks[name] = {
            "status": status,
            "error": error,
            "metrics": _jsonable(metrics),
            "seconds": round(time.perf_counter() - t0, 3),
        }
    report = {
        "format_version": FORMAT_VERSION,
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "started": started.isoformat(),
        "wall_clock_seconds": round((datetime.now(timezone.utc) - started).total_seconds(), 3),
        "tasks": tasks,
        "files": sorted(set(state.files)),
        "success": all(t["status"] == "ok" for t in tasks.values()),
    }
    _dump(out / "report.json", report)
    return report


# --- projection -------------------------------------------------------------------


def project(out_dir, i: int, j: int) -> str:
    """CSV of the (i, j) coordinate projection (1-based) of the mz cloud.

    One row per distinct projected point, sorted, with a flag column marking
    the vertices of the projected hull.
    """
    out_dir = Path(out_dir)
    if out_dir.is_file():
        out_dir = out_dir.parent
    path = out_dir / "mz_cloud.csv"
    if not path.exists():
        raise MissingArtifact(f"{path} not found; run the mz-estimate task first")
    cloud = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    dim = cloud.shape[1]
    if not (1 <= i <= dim and 1 <= j <= dim):
        raise ConfigError(f"coordinate pair ({i}, {j}) outside 1..{dim}", "/pair")
    pts = np.unique(cloud[:, [i - 1, j - 1]], axis=0)
    flags = np.zeros(len(pts), dtype=int)
    if len(pts) <= 2:
        flags[:] = 1
    else:
        try:
            flags[ConvexHull(pts).vertices] = 1
        except QhullError:
            # collinear: the extreme points along the spanning direction
            d = pts - pts.mean(axis=0)
            _, _, vt = np.linalg.svd(d)
            proj = d @ vt[0]
            flags[[int(np.argmin(proj)), int(np.argmax(proj))]] = 1
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i}", f"x{j}", "hull_vertex"])
    for p, f in zip(pts, flags):
        w.writerow([_fmt(p[0]), _fmt(p[1]), int(f)])
    return buf.getvalue()


# --- entry point --------------------------------------------------------------------


def _parse_tasks(text: str):
    tasks = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in tasks if t not in cfgmod.TASKS]
    if bad:
        raise ConfigError(f"unknown task(s) {', '.join(bad)}", "/tasks")
    return tasks


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rotorbit", description="Rotation sets of surface homeomorphisms.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the tasks of a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (overrides the config and $" + OUT_ENV + ")")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--tasks", help="comma-separated task list, overriding the config")
    p_proj = sub.add_parser("project", help="2D projection CSV of an mz-estimate cloud")
    p_proj.add_argument("output_dir")
    p_proj.add_argument("--pair", required=True, help="1-based coordinates, e.g. 1,2")
    p_proj.add_argument("--csv", help="write here instead of stdout")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            tasks = _parse_tasks(args.tasks) if args.tasks else None
            out = args.out or os.environ.get(OUT_ENV)
            cfg = cfgmod.load(args.config, seed=args.seed, output=out, tasks=tasks)
            report = run(cfg)
            for name, t in report["tasks"].items():
                line = f"{name}: {t['status']}"
                if t["error"]:
                    line += f" ({t['error']})"
                print(line)
            return 0 if report["success"] else 1
        i, j = (int(x) for x in args.pair.split(","))
        text = project(args.output_dir, i, j)
        if args.csv:
            Path(args.csv).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    except ConfigError as e:
        print(f"config error at {e}", file=sys.stderr)
        return 2
    except MissingArtifact as e:
        print(f"missing artifact: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

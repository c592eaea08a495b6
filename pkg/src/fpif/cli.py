"""Command-line front end: run declaratively specified problems, verify outputs.

Configs are single JSON files; small matrices inline, larger ones as CSV
file references resolved relative to the config. Each run writes a
solution CSV (long format: var,index,value), a trace CSV, and a report
JSON, all atomically. ``verify`` recomputes the report's residuals from
the written solution without iterating.

Exit codes: 0 converged, 2 stopped at the iteration cap (or diverged),
1 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
import time

import numpy as np

from . import games as games_mod
from .errors import ConfigurationError, FpifError
from .hilbert import LinearMap, Projector, Space, projector_from_basis, projector_from_kernel
from .operators import (
    abs_subdifferential,
    affine_set_normal_cone,
    box_normal_cone,
    halfspace_normal_cone,
    linear_monotone_map,
    monotone_linear,
    plus_identity,
    point_normal_cone,
    shifted,
    translation_residual,
    zero_map,
    zero_operator,
)
from .primal_dual import (
    PDBlock,
    PDProblem,
    coercive_linear_partial_inverse,
    partially_inverted_resolvent,
    pd_solution_residuals,
    pd_solve,
)
from .splitting import InclusionProblem, fpif_solve, solution_residuals as fpif_residuals
from .sums import SumProblem, solution_residuals as sum_residuals, sum_solve
from .tseng import CONVERGED, StepSchedule, StopRule, tseng_solve

log = logging.getLogger("fpif.cli")

KINDS = ("tseng", "fpif", "sum-m", "primal-dual", "matrix-game", "grid-game")


class ConfigError(ConfigurationError):
    """Invalid run configuration; message carries the offending field path."""


def _fail(path, message):
    raise ConfigError(f"{path}: {message}")


def _require(cfg, key, path, kind=None):
    if key not in cfg:
        _fail(f"{path}.{key}", "required field is missing")
    value = cfg[key]
    if kind is not None and not isinstance(value, kind):
        _fail(f"{path}.{key}", f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _load_matrix(value, path, base_dir):
    """A matrix is either a nested list or a CSV file reference."""
    if isinstance(value, str):
        file_path = os.path.join(base_dir, value)
        if not os.path.exists(file_path):
            _fail(path, f"referenced file {file_path} does not exist")
        try:
            return np.loadtxt(file_path, delimiter=",", ndmin=2)
        except ValueError as exc:
            _fail(path, f"could not parse {file_path}: {exc}")
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        _fail(path, f"not a numeric matrix: {exc}")
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        _fail(path, f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


def _load_vector(value, path):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        _fail(path, f"not a numeric vector: {exc}")
    if arr.ndim == 0:
        arr = arr[None]
    if arr.ndim != 1:
        _fail(path, f"expected a vector, got shape {arr.shape}")
    return arr


def _build_space(cfg, path):
    dim = _require(cfg, "dim", path, int)
    weights = cfg.get("weights")
    try:
        return Space(dim, weights)
    except ValueError as exc:
        _fail(path, str(exc))


def _build_operator(cfg, space, path, base_dir):
    """Maximally monotone operator block (type tag + parameters)."""
    if not isinstance(cfg, dict):
        _fail(path, "operator block must be an object")
    op_type = _require(cfg, "type", path, str)
    try:
        if op_type == "zero":
            return zero_operator(space)
        if op_type == "box":
            return box_normal_cone(space, cfg.get("lower", -np.inf), cfg.get("upper", np.inf))
        if op_type == "point":
            return point_normal_cone(space, _load_vector(_require(cfg, "at", path), f"{path}.at"))
        if op_type == "halfspace":
            return halfspace_normal_cone(
                space,
                _load_vector(_require(cfg, "normal", path), f"{path}.normal"),
                _require(cfg, "offset", path),
            )
        if op_type == "affine_set":
            mat = _load_matrix(_require(cfg, "matrix", path), f"{path}.matrix", base_dir)
            rhs = _load_vector(_require(cfg, "rhs", path), f"{path}.rhs")
            L = LinearMap(space, Space(mat.shape[0]), mat)
            return affine_set_normal_cone(space, L, rhs)
        if op_type == "linear":
            mat = _load_matrix(_require(cfg, "matrix", path), f"{path}.matrix", base_dir)
            shift = cfg.get("shift")
            shift = None if shift is None else _load_vector(shift, f"{path}.shift")
            return monotone_linear(space, mat, shift=shift)
        if op_type == "abs":
            return abs_subdifferential(space, cfg.get("scale", 1.0))
        if op_type == "shifted":
            base = _build_operator(_require(cfg, "base", path, dict), space, f"{path}.base", base_dir)
            return shifted(base, _load_vector(_require(cfg, "by", path), f"{path}.by"))
        if op_type == "plus_identity":
            base = _build_operator(_require(cfg, "base", path, dict), space, f"{path}.base", base_dir)
            return plus_identity(base, _require(cfg, "coefficient", path))
    except (ValueError, FpifError) as exc:
        if isinstance(exc, ConfigError):
            raise
        _fail(path, str(exc))
    _fail(f"{path}.type", f"unknown operator type {op_type!r}")


def _build_lipschitz(cfg, space, path, base_dir):
    """Lipschitzian monotone map block."""
    if not isinstance(cfg, dict):
        _fail(path, "map block must be an object")
    op_type = _require(cfg, "type", path, str)
    try:
        if op_type == "zero":
            return zero_map(space)
        if op_type == "linear":
            mat = _load_matrix(_require(cfg, "matrix", path), f"{path}.matrix", base_dir)
            shift = cfg.get("shift")
            shift = None if shift is None else _load_vector(shift, f"{path}.shift")
            return linear_monotone_map(space, mat, shift=shift, chi=cfg.get("chi"))
        if op_type == "translation":
            return translation_residual(
                space, _load_vector(_require(cfg, "target", path), f"{path}.target")
            )
    except (ValueError, FpifError) as exc:
        if isinstance(exc, ConfigError):
            raise
        _fail(path, str(exc))
    _fail(f"{path}.type", f"unknown map type {op_type!r}")


def _build_subspace(cfg, space, path, base_dir):
    try:
        if cfg == "full":
            return Projector.identity(space)
        if cfg == "zero":
            return Projector.zero(space)
        if isinstance(cfg, dict) and "basis" in cfg:
            mat = _load_matrix(cfg["basis"], f"{path}.basis", base_dir)
            return projector_from_basis(space, list(mat))
        if isinstance(cfg, dict) and "kernel_of" in cfg:
            mat = _load_matrix(cfg["kernel_of"], f"{path}.kernel_of", base_dir)
            return projector_from_kernel(LinearMap(space, Space(mat.shape[0]), mat))
    except (ValueError, FpifError) as exc:
        if isinstance(exc, ConfigError):
            raise
        _fail(path, str(exc))
    _fail(path, 'subspace must be "full", "zero", {"basis": ...} or {"kernel_of": ...}')


def _build_schedule(cfg, path):
    cfg = cfg or {}
    kwargs = {}
    if "delta" in cfg:
        kwargs["delta"] = cfg["delta"]
    if "lambda" in cfg:
        kwargs["lam"] = cfg["lambda"]
    if "epsilon" in cfg:
        kwargs["epsilon"] = cfg["epsilon"]
    try:
        return StepSchedule(**kwargs)
    except (ValueError, FpifError) as exc:
        _fail(path, str(exc))


def _build_stop(cfg, path, overrides):
    cfg = dict(cfg or {})
    if overrides.max_iter is not None:
        cfg["max_iter"] = overrides.max_iter
    if overrides.tol is not None:
        cfg["tol"] = overrides.tol
    try:
        return StopRule(
            residual_tol=cfg.get("tol", 1e-8),
            iterate_tol=cfg.get("iterate_tol", 1e-14),
            max_iter=cfg.get("max_iter", 100_000),
        )
    except (ValueError, FpifError) as exc:
        _fail(path, str(exc))


def _gamma(cfg, overrides):
    if overrides.gamma is not None:
        return overrides.gamma
    return (cfg.get("schedule") or {}).get("gamma")


# ---------------------------------------------------------------------------
# per-kind assembly and dispatch
# ---------------------------------------------------------------------------


def assemble(cfg, base_dir, overrides):
    kind = _require(cfg, "kind", "config", str)
    if kind not in KINDS:
        _fail("config.kind", f"unknown kind {kind!r}; expected one of {KINDS}")
    schedule = _build_schedule(cfg.get("schedule"), "config.schedule")
    stop = _build_stop(cfg.get("stop"), "config.stop", overrides)
    gamma = _gamma(cfg, overrides)

    if kind in ("tseng", "fpif", "sum-m", "primal-dual"):
        space = _build_space(_require(cfg, "space", "config", dict), "config.space")

    if kind == "tseng":
        A = _build_operator(_require(cfg, "A", "config", dict), space, "config.A", base_dir)
        B = _build_lipschitz(_require(cfg, "B", "config", dict), space, "config.B", base_dir)
        z0 = _load_vector(cfg.get("z0", [0.0] * space.dim), "config.z0")
        return kind, {"A": A, "B": B, "z0": z0, "schedule": schedule, "stop": stop}

    if kind == "fpif":
        A = _build_operator(_require(cfg, "A", "config", dict), space, "config.A", base_dir)
        B = _build_lipschitz(_require(cfg, "B", "config", dict), space, "config.B", base_dir)
        V = _build_subspace(_require(cfg, "V", "config"), space, "config.V", base_dir)
        try:
            prob = InclusionProblem(A=A, B=B, V=V, gamma=gamma)
        except FpifError as exc:
            _fail("config.schedule.gamma", str(exc))
        x0 = cfg.get("x0")
        y0 = cfg.get("y0")
        return kind, {
            "prob": prob,
            "x0": None if x0 is None else _load_vector(x0, "config.x0"),
            "y0": None if y0 is None else _load_vector(y0, "config.y0"),
            "schedule": schedule,
            "stop": stop,
        }

    if kind == "sum-m":
        ops_cfg = _require(cfg, "operators", "config", list)
        ops = [
            _build_operator(blk, space, f"config.operators[{i}]", base_dir)
            for i, blk in enumerate(ops_cfg)
        ]
        B = _build_lipschitz(_require(cfg, "B", "config", dict), space, "config.B", base_dir)
        try:
            prob = SumProblem(ops=ops, B=B, weights=cfg.get("weights"), gamma=gamma)
        except FpifError as exc:
            _fail("config", str(exc))
        z0 = cfg.get("z0")
        if z0 is not None:
            z0 = [_load_vector(zi, f"config.z0[{i}]") for i, zi in enumerate(z0)]
        return kind, {"prob": prob, "z0": z0, "schedule": schedule, "stop": stop}

    if kind == "primal-dual":
        A = _build_operator(_require(cfg, "A", "config", dict), space, "config.A", base_dir)
        U = _build_subspace(_require(cfg, "U", "config"), space, "config.U", base_dir)
        C = _build_lipschitz(_require(cfg, "C", "config", dict), space, "config.C", base_dir)
        z = _load_vector(cfg.get("z", [0.0] * space.dim), "config.z")
        blocks = []
        for i, blk in enumerate(_require(cfg, "blocks", "config", list)):
            bpath = f"config.blocks[{i}]"
            Lmat = _load_matrix(_require(blk, "L", bpath), f"{bpath}.L", base_dir)
            G = _build_space(blk.get("dual_space", {"dim": Lmat.shape[0]}), f"{bpath}.dual_space")
            L = LinearMap(space, G, Lmat)
            Vi = _build_subspace(_require(blk, "V", bpath), G, f"{bpath}.V", base_dir)
            Bi = _build_operator(_require(blk, "B", bpath, dict), G, f"{bpath}.B", base_dir)
            try:
                B_pinv = partially_inverted_resolvent(Bi, Vi)
            except FpifError as exc:
                _fail(f"{bpath}.B", str(exc))
            d_cfg = blk.get("D", {"type": "zero"})
            try:
                if d_cfg.get("type") == "zero":
                    D_pinv = zero_map(G)
                elif d_cfg.get("type") == "linear":
                    mat = _load_matrix(_require(d_cfg, "matrix", f"{bpath}.D"), f"{bpath}.D.matrix", base_dir)
                    shift = d_cfg.get("shift")
                    shift = None if shift is None else _load_vector(shift, f"{bpath}.D.shift")
                    D_pinv = coercive_linear_partial_inverse(
                        G, mat, Vi.complement(), shift=shift
                    )
                else:
                    _fail(f"{bpath}.D.type", "expected 'zero' or 'linear'")
            except (ValueError, FpifError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                _fail(f"{bpath}.D", str(exc))
            b = _load_vector(blk.get("b", [0.0] * G.dim), f"{bpath}.b")
            blocks.append(PDBlock(B_pinv=B_pinv, D_pinv=D_pinv, L=L, V=Vi, b=b))
        try:
            prob = PDProblem(A=A, U=U, C=C, z=z, blocks=blocks, gamma=gamma)
        except FpifError as exc:
            _fail("config.schedule.gamma", str(exc))
        return kind, {"prob": prob, "schedule": schedule, "stop": stop}

    if kind == "matrix-game":
        payoff = _load_matrix(_require(cfg, "payoff", "config"), "config.payoff", base_dir)
        game = games_mod.MatrixGame(payoff)
        try:
            if gamma is not None and game.chi() > 0 and not 0 < gamma < 1.0 / game.chi():
                raise ConfigurationError(
                    f"gamma must lie in ]0, 1/chi[ = ]0, {1.0 / game.chi()}[, got {gamma}"
                )
        except FpifError as exc:
            _fail("config.schedule.gamma", str(exc))
        return kind, {
            "game": game,
            "gamma": gamma,
            "stop": stop if "stop" in cfg or overrides.max_iter or overrides.tol else None,
            "gap_tol": cfg.get("gap_tol", 1e-6),
            "schedule": schedule,
        }

    # grid-game
    kernel = _load_matrix(_require(cfg, "kernel", "config"), "config.kernel", base_dir)
    grids = []
    for side in ("x1", "x2"):
        g = _require(cfg, side, "config", dict)
        grids.append(
            games_mod.quadrature_grid(
                _require(g, "from", f"config.{side}"),
                _require(g, "to", f"config.{side}"),
                _require(g, "points", f"config.{side}", int),
                cfg.get("rule", "trapezoid"),
            )
        )
    (xs1, w1), (xs2, w2) = grids
    if kernel.shape != (w1.size, w2.size):
        _fail("config.kernel", f"kernel shape {kernel.shape} does not match grids "
                               f"({w1.size}, {w2.size})")
    game = games_mod.GridGame(kernel, w1, w2, grid1=xs1, grid2=xs2)
    return kind, {
        "game": game,
        "gamma": gamma,
        "stop": stop if "stop" in cfg or overrides.max_iter or overrides.tol else None,
        "gap_tol": cfg.get("gap_tol", 1e-7),
        "schedule": schedule,
    }


def solve(kind, setup):
    """Dispatch a solve; returns (solution_vars, trace, summary_extras)."""
    if kind == "tseng":
        point, trace = tseng_solve(
            setup["A"], setup["B"], setup["z0"],
            schedule=setup["schedule"], stop=setup["stop"], record_iterates=False,
        )
        return {"z": point.coords}, trace, {}
    if kind == "fpif":
        pd, trace = fpif_solve(
            setup["prob"], x0=setup["x0"], y0=setup["y0"],
            schedule=setup["schedule"], stop=setup["stop"], record_iterates=False,
        )
        return {"x": pd.x.coords, "y": pd.y.coords}, trace, {}
    if kind == "sum-m":
        point, trace = sum_solve(
            setup["prob"], z0=setup["z0"],
            schedule=setup["schedule"], stop=setup["stop"], record_iterates=True,
        )
        state = trace.iterates[-1].coords
        m, dim = setup["prob"].m, setup["prob"].space.dim
        out = {"x": point.coords}
        for i in range(m):
            out[f"z{i + 1}"] = state[i * dim : (i + 1) * dim]
        return out, trace, {}
    if kind == "primal-dual":
        sol, trace = pd_solve(
            setup["prob"], schedule=setup["schedule"], stop=setup["stop"],
            record_iterates=False,
        )
        out = {"x": sol.x.coords, "x_raw": sol.x_raw.coords}
        for i, (u, u_raw) in enumerate(zip(sol.u, sol.u_raw)):
            out[f"u{i + 1}"] = u.coords
            out[f"u{i + 1}_raw"] = u_raw.coords
        return out, trace, {}
    if kind == "matrix-game":
        x1, x2, value, trace = games_mod.matrix_game_solve(
            setup["game"], gamma=setup["gamma"], stop=setup["stop"],
            schedule=setup["schedule"], gap_tol=setup["gap_tol"],
        )
        gap = float(np.max(x1.coords @ setup["game"].payoff)
                    - np.min(setup["game"].payoff @ x2.coords))
        return (
            {"x1": x1.coords, "x2": x2.coords},
            trace,
            {"value": value, "gap": gap, "backend": trace.backend},
        )
    # grid-game
    rho1, rho2, trace = games_mod.grid_game_solve(
        setup["game"], gamma=setup["gamma"], stop=setup["stop"],
        schedule=setup["schedule"], gap_tol=setup["gap_tol"],
    )
    game = setup["game"]
    pi1, pi2 = game.w1 * rho1.coords, game.w2 * rho2.coords
    value = float(pi1 @ game.kernel @ pi2)
    gap = games_mod.grid_duality_gap(game, rho1.coords, rho2.coords)
    return (
        {"rho1": rho1.coords, "rho2": rho2.coords},
        trace,
        {"value": value, "gap": gap, "backend": trace.backend},
    )


def compute_residuals(kind, setup, sol_vars):
    """Kind-specific certification residuals at a stored solution."""
    if kind == "tseng":
        z = sol_vars["z"]
        A, B, space = setup["A"], setup["B"], setup["A"].space
        delta = setup["schedule"].delta_at(0)
        r = z - delta * B(z)
        s = A.resolvent(delta, r)
        t = s - delta * B(s)
        return {"fixed_point": space.norm(t - r) / max(1.0, space.norm(z))}
    if kind == "fpif":
        return fpif_residuals(setup["prob"], sol_vars["x"], sol_vars["y"])
    if kind == "sum-m":
        prob = setup["prob"]
        zs = [sol_vars[f"z{i + 1}"] for i in range(prob.m)]
        return sum_residuals(prob, zs)
    if kind == "primal-dual":
        prob = setup["prob"]
        us = [sol_vars[f"u{i + 1}_raw"] for i in range(prob.m)]
        return pd_solution_residuals(prob, sol_vars["x_raw"], us)
    if kind == "matrix-game":
        F = setup["game"].payoff
        x1, x2 = sol_vars["x1"], sol_vars["x2"]
        return {
            "gap": float(np.max(x1 @ F) - np.min(F @ x2)),
            "sum_defect": max(abs(float(np.sum(x1)) - 1.0), abs(float(np.sum(x2)) - 1.0)),
            "negativity": max(0.0, -float(np.min(x1)), -float(np.min(x2))),
        }
    game = setup["game"]
    rho1, rho2 = sol_vars["rho1"], sol_vars["rho2"]
    return {
        "gap": games_mod.grid_duality_gap(game, rho1, rho2),
        "mass_defect": max(
            abs(float(np.sum(game.w1 * rho1)) - 1.0),
            abs(float(np.sum(game.w2 * rho2)) - 1.0),
        ),
        "negativity": max(0.0, -float(np.min(rho1)), -float(np.min(rho2))),
    }


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def _atomic_write(path, write_fn):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_solution(path, sol_vars):
    def body(fh):
        writer = csv.writer(fh)
        writer.writerow(["var", "index", "value"])
        for name, arr in sol_vars.items():
            for idx, val in enumerate(np.asarray(arr, dtype=float)):
                writer.writerow([name, idx, repr(float(val))])

    _atomic_write(path, body)


def read_solution(path):
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.setdefault(row["var"], []).append((int(row["index"]), float(row["value"])))
    return {
        name: np.array([v for _, v in sorted(pairs)]) for name, pairs in out.items()
    }


def write_report(path, report):
    _atomic_write(path, lambda fh: fh.write(json.dumps(report, indent=2, sort_keys=True) + "\n"))


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


def run(config_path, overrides):
    with open(config_path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from exc
    base_dir = os.path.dirname(os.path.abspath(config_path))
    kind, setup = assemble(cfg, base_dir, overrides)

    out_dir = overrides.out or (cfg.get("output") or {}).get("dir") or "."
    os.makedirs(out_dir, exist_ok=True)

    started = time.perf_counter()
    sol_vars, trace, extras = solve(kind, setup)
    wall = time.perf_counter() - started

    solution_path = os.path.join(out_dir, "solution.csv")
    trace_path = os.path.join(out_dir, "trace.csv")
    report_path = os.path.join(out_dir, "report.json")
    write_solution(solution_path, sol_vars)
    trace.to_csv(trace_path)

    state_norm = max(1.0, _solution_scale(sol_vars))
    report = {
        "kind": kind,
        "status": trace.status,
        "iterations": trace.n_iter,
        "final_residual": trace.final_residual / state_norm,
        "wall_time_s": wall,
        "solution_path": os.path.abspath(solution_path),
        "trace_path": os.path.abspath(trace_path),
        "seed": cfg.get("seed", 42),
        "residuals": compute_residuals(kind, setup, sol_vars),
        **extras,
    }
    write_report(report_path, report)
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0 if trace.status == CONVERGED else 2


def _solution_scale(sol_vars):
    parts = [np.asarray(v, dtype=float) for v in sol_vars.values()]
    return float(np.sqrt(sum(np.sum(p * p) for p in parts)))


def verify(solution_path, config_path, overrides):
    with open(config_path) as fh:
        cfg = json.load(fh)
    base_dir = os.path.dirname(os.path.abspath(config_path))
    kind, setup = assemble(cfg, base_dir, overrides)
    sol_vars = read_solution(solution_path)
    expected = _expected_shapes(kind, setup)
    missing = sorted(set(expected) - set(sol_vars))
    if missing:
        raise ConfigError(f"solution: missing variables {missing}")
    for name, dim in expected.items():
        if sol_vars[name].size != dim:
            raise ConfigError(
                f"solution.{name}: has {sol_vars[name].size} entries, problem needs {dim}"
            )
    residuals = compute_residuals(kind, setup, sol_vars)
    json.dump({"kind": kind, "residuals": residuals}, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _expected_shapes(kind, setup):
    if kind == "tseng":
        return {"z": setup["A"].space.dim}
    if kind == "fpif":
        dim = setup["prob"].space.dim
        return {"x": dim, "y": dim}
    if kind == "sum-m":
        prob = setup["prob"]
        out = {"x": prob.space.dim}
        out.update({f"z{i + 1}": prob.space.dim for i in range(prob.m)})
        return out
    if kind == "primal-dual":
        prob = setup["prob"]
        out = {"x": prob.space.dim, "x_raw": prob.space.dim}
        for i, blk in enumerate(prob.blocks):
            out[f"u{i + 1}_raw"] = blk.B_pinv.space.dim
        return out
    if kind == "matrix-game":
        n1, n2 = setup["game"].shape
        return {"x1": n1, "x2": n2}
    n1, n2 = setup["game"].kernel.shape
    return {"rho1": n1, "rho2": n2}


def _configure_logging():
    level = os.environ.get("FPIF_LOG", "error").strip().lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        stream=sys.stderr,
        level=levels.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None):
    _configure_logging()
    parser = argparse.ArgumentParser(prog="fpif", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a configured problem")
    p_run.add_argument("config")
    p_run.add_argument("--max-iter", type=int, default=None)
    p_run.add_argument("--tol", type=float, default=None)
    p_run.add_argument("--gamma", type=float, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)

    p_verify = sub.add_parser("verify", help="recompute residuals for a stored solution")
    p_verify.add_argument("solution")
    p_verify.add_argument("config")

    args = parser.parse_args(argv)
    if args.command == "verify":
        args.max_iter = args.tol = args.gamma = args.out = args.seed = None

    try:
        if args.command == "run":
            return run(args.config, args)
        return verify(args.solution, args.config, args)
    except (ConfigError, ConfigurationError, FpifError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

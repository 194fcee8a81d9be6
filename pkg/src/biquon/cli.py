"""Batch front-end: config-driven experiment runner and small subcommands.

Exit codes: 0 all checks passed, 1 a tolerance was exceeded, 2 bad
configuration or arguments.  Summaries are JSON with sorted keys so that
identical configs and seeds produce identical bytes (timings live under
their own key and are the only nondeterministic field).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import bicoherent, positionrep, pseudoquon, qcore, resolution, selftest
from .fock import operator_to_csv, qmutator_residual
from .qcore import BetaSequence

__all__ = ["main", "ConfigError", "run_config"]


class ConfigError(Exception):
    """Invalid experiment configuration; message carries the field path."""


FOCK_TASKS = {"mutator", "family", "theta", "bicoherent", "resolution"}
POSITION_TASKS = {"mutator", "family", "theta", "position"}
TASK_ORDER = ["family", "mutator", "theta", "bicoherent", "resolution", "position"]

DEFAULT_TOLERANCES = {
    "mutator": 1e-12,
    "family": 1e-11,
    "theta": 1e-10,
    "bicoherent": 1e-9,
    "resolution": 1e-8,
    "position": 1e-6,
}
POSITION_TASK_TOLERANCES = {"mutator": 1e-10, "family": 1e-9}


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _parse_complex(value, path: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(value[0], value[1])
    raise ConfigError(f"{path}: expected number or [re, im] pair, got {value!r}")


def _parse_sparse_vector(entries, path: str) -> np.ndarray:
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{path}: expected nonempty list of [index, re, im]")
    idx_max = 0
    parsed = []
    for i, item in enumerate(entries):
        if not (isinstance(item, list) and len(item) == 3):
            raise ConfigError(f"{path}[{i}]: expected [index, re, im]")
        k = item[0]
        if not isinstance(k, int) or k < 0:
            raise ConfigError(f"{path}[{i}]: index must be a nonnegative integer")
        parsed.append((k, complex(item[1], item[2])))
        idx_max = max(idx_max, k)
    vec = np.zeros(idx_max + 1, dtype=complex)
    for k, z in parsed:
        vec[k] += z
    return vec


def _normalize_tasks(raw, path: str) -> list[dict]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}: expected nonempty task list")
    tasks = []
    for i, item in enumerate(raw):
        if isinstance(item, str):
            tasks.append({"task": item})
        elif isinstance(item, dict) and "task" in item:
            tasks.append(dict(item))
        else:
            raise ConfigError(f"{path}[{i}]: expected task name or "
                              f"object with a 'task' field")
    return tasks


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("config: expected a JSON object")
    out: dict = {}
    try:
        out["q"] = float(cfg["q"])
    except KeyError:
        raise ConfigError("q: missing") from None
    except (TypeError, ValueError):
        raise ConfigError(f"q: not a number ({cfg.get('q')!r})") from None

    out["K"] = int(cfg.get("K", 64))
    if out["K"] < 2:
        raise ConfigError(f"K: must be at least 2, got {out['K']}")

    fam = cfg.get("family", {"kind": "identity"})
    if not isinstance(fam, dict) or "kind" not in fam:
        raise ConfigError("family: expected object with a 'kind' field")
    kind = fam["kind"]
    if kind not in ("identity", "rank_one", "position"):
        raise ConfigError(f"family.kind: unknown kind {kind!r}")
    out["family"] = {"kind": kind}
    if kind == "rank_one":
        alpha = _parse_complex(fam.get("alpha_def", [0.0, 1.0]), "family.alpha_def")
        if fam.get("preset") == "worked" or ("u" not in fam and "v" not in fam):
            out["family"]["deformation"] = pseudoquon.worked_deformation(alpha)
        else:
            u = _parse_sparse_vector(fam.get("u"), "family.u")
            v = _parse_sparse_vector(fam.get("v"), "family.v")
            try:
                out["family"]["deformation"] = \
                    pseudoquon.RankOneDeformation.from_alpha(u, v, alpha)
            except ValueError as exc:
                raise ConfigError(f"family: {exc}") from None
    elif kind == "position":
        out["family"]["gamma"] = float(fam.get("gamma", 0.0))

    tasks = _normalize_tasks(cfg.get("tasks"), "tasks")
    allowed = POSITION_TASKS if kind == "position" else FOCK_TASKS
    for i, task in enumerate(tasks):
        name = task["task"]
        if name not in FOCK_TASKS | POSITION_TASKS:
            raise ConfigError(f"tasks[{i}]: unknown task {name!r}")
        if name not in allowed:
            raise ConfigError(f"tasks[{i}]: task {name!r} is not valid for "
                              f"family kind {kind!r}")
        if name in ("bicoherent", "resolution") and not (0.0 < out["q"] < 1.0):
            raise ConfigError(f"tasks[{i}]: task {name!r} requires 0 < q < 1 "
                              f"(convergence radius undefined at q={out['q']})")
    order = {name: i for i, name in enumerate(TASK_ORDER)}
    out["tasks"] = sorted(tasks, key=lambda t: order[t["task"]])

    tol = cfg.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("tolerances: expected an object")
    for key, value in tol.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerances.{key}: unknown task")
        try:
            tol[key] = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"tolerances.{key}: not a number") from None
    out["tolerances"] = tol
    out["seed"] = int(cfg.get("seed", selftest.DEFAULT_SEED))
    return out


# ---------------------------------------------------------------------------
# task runners
# ---------------------------------------------------------------------------

class _Workspace:
    """Shared state built once per run: family, operators, rng, output dir."""

    def __init__(self, cfg: dict, out_dir: Path | None, tol_scale: float):
        self.cfg = cfg
        self.out = out_dir
        self.tol_scale = tol_scale
        self.rng = np.random.default_rng(cfg["seed"])
        self.kind = cfg["family"]["kind"]
        self.csv_rows: list[tuple[str, str, float]] = []
        if self.kind == "position":
            self.params = positionrep.PositionParams(cfg["q"], cfg["family"]["gamma"])
            self.source = self.family = self.a = self.b = None
        else:
            if self.kind == "identity":
                self.source = pseudoquon.IdentitySimilarity()
            else:
                self.source = pseudoquon.RankOneSimilarity(cfg["family"]["deformation"])
            self.family = pseudoquon.build_family(self.source, cfg["q"], cfg["K"])
            self.a, self.b = pseudoquon.make_pair(self.source, cfg["q"], cfg["K"])
            self.params = None

    def tolerance(self, task: str) -> float:
        base = self.cfg["tolerances"].get(task)
        if base is None:
            base = DEFAULT_TOLERANCES[task]
            if self.kind == "position":
                base = POSITION_TASK_TOLERANCES.get(task, base)
        return base * self.tol_scale

    def record(self, task: str, metric: str, value: float) -> None:
        self.csv_rows.append((task, metric, float(value)))

    def write_text(self, name: str, text: str) -> None:
        if self.out is not None:
            (self.out / name).write_text(text)

    def open_csv(self, name: str):
        if self.out is None:
            return None
        return (self.out / name).open("w", newline="")


def _finish(ws: _Workspace, task: str, report: dict, residual: float,
            tolerance: float) -> dict:
    report["max_residual"] = residual
    report["tolerance"] = tolerance
    report["passed"] = bool(residual <= tolerance)
    for key, value in report.items():
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            ws.record(task, key, value)
    return report


def _task_mutator(ws: _Workspace, task: dict) -> dict:
    tol = ws.tolerance("mutator")
    if ws.kind == "position":
        states = list(positionrep.build_families(ws.params, 3)[0])
        resid = positionrep.qmutation_grid_check(ws.params, states)
        return _finish(ws, "mutator", {"realization": "grid"}, resid, tol)
    resid = qmutator_residual(ws.a, ws.b, ws.cfg["q"], ws.family.safe_dim)
    if task.get("dump_operators"):
        for op, name in ((ws.a, "a.csv"), (ws.b, "b.csv")):
            stream = ws.open_csv(name)
            if stream:
                with stream:
                    operator_to_csv(op, stream)
    report = {"realization": "fock", "safe_dim": ws.family.safe_dim}
    return _finish(ws, "mutator", report, resid, tol)


def _task_family(ws: _Workspace, task: dict) -> dict:
    tol = ws.tolerance("family")
    if ws.kind == "position":
        n_max = int(task.get("n_max", 6))
        rep = positionrep.similarity_check(ws.params, n_max)
        resid = max(rep["similarity_phi"], rep["similarity_psi"],
                    rep["biorthogonality"])
        return _finish(ws, "family", rep, resid, tol)
    ladder = pseudoquon.check_ladder(ws.family, ws.a, ws.b)
    report = {
        "gram_deviation": pseudoquon.gram_deviation(ws.family),
        "iteration_deviation": ws.family.iteration_deviation,
        **{k: v for k, v in ladder.items() if k != "safe_dim"},
        "safe_dim": ladder["safe_dim"],
    }
    resid = max(report["gram_deviation"], ladder["max_residual"])
    number = pseudoquon.number_eigencheck(ws.family, ws.a, ws.b)
    report["number_residual_phi"] = number["residual_phi"]
    report["number_residual_psi"] = number["residual_psi"]
    resid = max(resid, number["residual_phi"], number["residual_psi"])
    stream = ws.open_csv("family.json")
    if stream:
        with stream:
            pseudoquon.family_to_json(ws.family, stream, residual_report=report)
    return _finish(ws, "family", report, resid, tol)


def _task_theta(ws: _Workspace, task: dict) -> dict:
    tol = ws.tolerance("theta")
    if ws.kind == "position":
        states = positionrep.build_families(ws.params, 2)[0]
        resid = positionrep.theta_conjugacy_check(ws.params, states)
        return _finish(ws, "theta", {"realization": "grid"}, resid, tol)
    theta = pseudoquon.build_theta(ws.family)
    closed = pseudoquon.closed_form_theta(ws.source, ws.family.K)
    series_dev = float(np.max(np.abs(theta.matrix - closed.matrix)))
    conj = pseudoquon.check_theta_conjugate(ws.a, ws.b, theta,
                                            ws.family.safe_dim, ws.family)
    inv = pseudoquon.build_theta_inverse(ws.family)
    inv_dev = float(np.max(np.abs(
        theta.matrix @ inv.matrix - np.eye(ws.family.K))))
    report = {
        "series_vs_closed": series_dev,
        "conjugation_residual": conj["conjugation_residual"],
        "mapping_residual": conj["mapping_residual"],
        "inverse_residual": inv_dev,
    }
    return _finish(ws, "theta", report,
                   max(series_dev, conj["conjugation_residual"], inv_dev), tol)


def _task_bicoherent(ws: _Workspace, task: dict) -> dict:
    tol = ws.tolerance("bicoherent")
    n_r = int(task.get("n_r", 4))
    n_theta = int(task.get("n_theta", 8))
    # reaching 0.9 of the disc radius needs K around 256; the default grid
    # stays where the default truncation converges
    r_frac = float(task.get("r_frac", 0.7))
    rho = bicoherent.family_radius(ws.family)
    stream = ws.open_csv("bicoherent.csv")
    rows = []
    worst_eig = worst_pair = worst_unc = 0.0
    for frac in np.linspace(r_frac / n_r, r_frac, n_r):
        for ang in 2 * np.pi * np.arange(n_theta) / n_theta:
            z = frac * rho * np.exp(1j * ang)
            state = bicoherent.bicoherent_state(ws.family, z)
            r_phi, r_psi = bicoherent.eigen_check(state, ws.a, ws.b)
            pair = bicoherent.pairing(state)
            unc = bicoherent.uncertainty_product(ws.family, ws.a, ws.b, z)
            worst_eig = max(worst_eig, r_phi, r_psi)
            worst_pair = max(worst_pair, abs(pair - 1.0))
            worst_unc = max(worst_unc, abs(unc.product - unc.predicted))
            rows.append([z.real, z.imag, state.norm_const, r_phi, r_psi,
                         pair.real, pair.imag, unc.product.real,
                         unc.product.imag, unc.predicted])
    if stream:
        import csv as _csv
        with stream:
            writer = _csv.writer(stream)
            writer.writerow(["re_z", "im_z", "norm_const", "eigen_phi",
                             "eigen_psi", "pairing_re", "pairing_im",
                             "uncertainty_re", "uncertainty_im",
                             "uncertainty_predicted"])
            writer.writerows([[f"{v:.17g}" for v in row] for row in rows])
    report = {
        "n_points": len(rows),
        "rho": rho,
        "eigen_residual": worst_eig,
        "pairing_residual": worst_pair,
        "uncertainty_residual": worst_unc,
    }
    resid = max(worst_eig, worst_pair, worst_unc / 100.0)
    return _finish(ws, "bicoherent", report, resid, tol)


def _task_resolution(ws: _Workspace, task: dict) -> dict:
    tol = ws.tolerance("resolution")
    k_mom = int(task.get("K_mom", 12))
    n_theta = int(task.get("n_theta", 64))
    n_pairs = int(task.get("n_pairs", 20))
    support = int(task.get("support", min(6, k_mom // 2)))
    quad = resolution.solve_moment_measure(ws.cfg["q"],
                                           qcore.disc_radius(ws.cfg["q"]), k_mom)
    worst = 0.0
    for _ in range(n_pairs):
        f = np.zeros(ws.family.K, dtype=complex)
        g = np.zeros(ws.family.K, dtype=complex)
        f[:support] = ws.rng.standard_normal(support) \
            + 1j * ws.rng.standard_normal(support)
        g[:support] = ws.rng.standard_normal(support) \
            + 1j * ws.rng.standard_normal(support)
        val = resolution.resolution_check(ws.family, quad, n_theta, f, g)
        worst = max(worst, abs(val - np.vdot(f, g)))
    stream = ws.open_csv("quadrature.csv")
    if stream:
        with stream:
            resolution.quadrature_to_csv(quad, stream)
    ws.write_text("moments.json",
                  json.dumps(resolution.residual_report(quad), sort_keys=True,
                             indent=2))
    report = {
        "quadrature": resolution.residual_report(quad),
        "moment_residual": quad.max_residual,
        "n_pairs": n_pairs,
    }
    return _finish(ws, "resolution", report, worst, tol)


def _task_position(ws: _Workspace, task: dict) -> dict:
    tol = ws.tolerance("position")
    n_max = int(task.get("n_max", 5))
    table = positionrep.coefficient_recursion(ws.params, n_max)
    stream = ws.open_csv("coefficients.csv")
    if stream:
        import csv as _csv
        with stream:
            writer = _csv.writer(stream)
            writer.writerow(["n", "k", "re", "im"])
            for n in range(n_max + 1):
                for k, c in enumerate(table.row(n)):
                    writer.writerow([n, k, f"{c.real:.17g}", f"{c.imag:.17g}"])
    norm_rep = positionrep.norm_formula_check(ws.params, n_max)
    ladder = positionrep.ladder_check(ws.params, min(n_max, 6))
    vacuum = positionrep.vacuum_check(ws.params)
    if task.get("dump_states"):
        grid = positionrep.default_grid(ws.params.gamma)
        for n in range(n_max + 1):
            stream = ws.open_csv(f"phi_{n}.csv")
            if stream:
                with stream:
                    positionrep.state_to_csv(
                        positionrep.phi_state(ws.params, n, table), grid, stream)
    report = {
        "norm_formula_max_rel": norm_rep["max_rel_err"],
        "norm_symmetry": norm_rep["norm_symmetry"],
        "L_bound_ok": norm_rep["L_bound_ok"],
        "ladder_residual": ladder["max_residual"],
        "vacuum_a_phi0": vacuum["a_phi0"],
        "vacuum_bdag_psi0": vacuum["bdag_psi0"],
        "vacuum_pairing_error": abs(vacuum["pairing"] - 1.0),
        "n_max": n_max,
    }
    resid = max(norm_rep["max_rel_err"],
                ladder["max_residual"] / 1e-4,
                0.0 if norm_rep["L_bound_ok"] else math.inf)
    return _finish(ws, "position", report, resid, tol)


TASK_RUNNERS = {
    "mutator": _task_mutator,
    "family": _task_family,
    "theta": _task_theta,
    "bicoherent": _task_bicoherent,
    "resolution": _task_resolution,
    "position": _task_position,
}


def run_config(cfg: dict, out_dir: Path | None = None,
               tol_scale: float = 1.0) -> tuple[dict, int]:
    """Execute every task; returns (summary, exit_code)."""
    cfg = validate_config(cfg)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    ws = _Workspace(cfg, out_dir, tol_scale)
    summary: dict = {
        "q": cfg["q"],
        "K": cfg["K"],
        "family_kind": ws.kind,
        "seed": cfg["seed"],
        "tasks": {},
    }
    timings = {}
    all_pass = True
    for task in cfg["tasks"]:
        name = task["task"]
        start = time.perf_counter()
        report = TASK_RUNNERS[name](ws, task)
        timings[name] = time.perf_counter() - start
        summary["tasks"][name] = report
        all_pass = all_pass and report["passed"]
    summary["all_pass"] = all_pass
    if out_dir is not None:
        with (out_dir / "summary.json").open("w") as fh:
            json.dump({**summary, "timings": timings}, fh, sort_keys=True, indent=2)
            fh.write("\n")
        with (out_dir / "residuals.csv").open("w", newline="") as fh:
            import csv as _csv
            writer = _csv.writer(fh)
            writer.writerow(["task", "metric", "value"])
            for row in ws.csv_rows:
                writer.writerow([row[0], row[1], f"{row[2]:.17g}"])
    return summary, 0 if all_pass else 1


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _mini_config(args, tasks: list) -> dict:
    fam: dict = {"kind": args.family}
    if args.family == "rank_one":
        fam["preset"] = "worked"
        fam["alpha_def"] = [0.0, 1.0]
    if args.family == "position":
        fam["gamma"] = args.gamma
    return {"q": args.q, "K": args.dim, "family": fam, "tasks": tasks,
            "seed": args.seed}


def _cmd_beta(args) -> int:
    qcore.validate_q_algebraic(args.q)
    bs = BetaSequence(args.q, args.n_max)
    lines = ["n,beta,beta_factorial" + (",log_number" if 0 < args.q < 1 else "")]
    for n in range(args.n_max + 1):
        row = f"{n},{bs.beta(n):.17g},{bs.factorial(n):.17g}"
        if 0 < args.q < 1:
            row += f",{qcore.log_number_eigenvalue(args.q, n):.17g}"
        lines.append(row)
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "beta.csv").write_text(text)
    print(text, end="")
    return 0


def _run_and_report(cfg: dict, args) -> int:
    try:
        summary, code = run_config(cfg, Path(args.out) if args.out else None,
                                   args.tolerance_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, sort_keys=True, indent=2))
    return code


def _cmd_simple_task(task_name):
    def cmd(args) -> int:
        task: dict = {"task": task_name}
        for attr in ("n_r", "n_theta", "k_mom", "n_pairs", "n_max", "r_frac"):
            if getattr(args, attr, None) is not None:
                key = "K_mom" if attr == "k_mom" else attr
                task[key] = getattr(args, attr)
        if getattr(args, "dump_states", False):
            task["dump_states"] = True
        if getattr(args, "dump_operators", False):
            task["dump_operators"] = True
        return _run_and_report(_mini_config(args, [task]), args)
    return cmd


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.exists():
        print(f"config error: no such file {path}", file=sys.stderr)
        return 2
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        print(f"config error: invalid JSON ({exc})", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    return _run_and_report(cfg, args)


def _cmd_selftest(args) -> int:
    results = selftest.run_all(seed=args.seed if args.seed is not None
                               else selftest.DEFAULT_SEED)
    print(selftest.format_results(results))
    unexpected = [r for r in results if r.unexpected_failure]
    expected = [r for r in results if r.known_discrepancy and not r.passed]
    print(f"\n{len(results)} checks: "
          f"{sum(r.passed for r in results)} passed, "
          f"{len(unexpected)} failed, {len(expected)} expected failures")
    return 1 if unexpected else 0


def _add_common(parser: argparse.ArgumentParser, with_family=True) -> None:
    parser.add_argument("--q", type=float, default=0.5)
    parser.add_argument("--out", type=str, default=None,
                        help="directory for JSON/CSV artifacts")
    parser.add_argument("--seed", type=int, default=selftest.DEFAULT_SEED)
    parser.add_argument("--tolerance-scale", type=float, default=1.0)
    if with_family:
        parser.add_argument("--dim", type=int, default=64)
        parser.add_argument("--family", type=str, default="identity",
                            choices=["identity", "rank_one", "position"])
        parser.add_argument("--gamma", type=float, default=0.5,
                            help="shift parameter (position family)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biquon",
        description="deformed quon algebras, biorthogonal families and "
                    "bi-coherent states on truncated spaces")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("beta", help="tabulate the coefficient sequence")
    _add_common(p, with_family=False)
    p.add_argument("--n-max", type=int, default=16)
    p.set_defaults(func=_cmd_beta)

    for name, extra in [
        ("mutator", ["dump_operators"]),
        ("family", ["n_max"]),
        ("theta", []),
        ("bicoherent", ["n_r", "n_theta", "r_frac"]),
        ("resolution", ["k_mom", "n_theta", "n_pairs"]),
        ("position", ["n_max", "dump_states"]),
    ]:
        p = sub.add_parser(name, help=f"run the {name} checks")
        _add_common(p)
        if "n_r" in extra:
            p.add_argument("--n-r", type=int, default=None)
        if "n_theta" in extra:
            p.add_argument("--n-theta", type=int, default=None)
        if "k_mom" in extra:
            p.add_argument("--k-mom", type=int, default=None)
        if "n_pairs" in extra:
            p.add_argument("--n-pairs", type=int, default=None)
        if "n_max" in extra:
            p.add_argument("--n-max", type=int, default=None)
        if "r_frac" in extra:
            p.add_argument("--r-frac", type=float, default=None)
        if "dump_states" in extra:
            p.add_argument("--dump-states", action="store_true")
        if "dump_operators" in extra:
            p.add_argument("--dump-operators", action="store_true")
        if name == "position":
            p.set_defaults(family="position")
        p.set_defaults(func=_cmd_simple_task(name))

    p = sub.add_parser("run", help="execute a full experiment config")
    p.add_argument("--config", type=str, required=True)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tolerance-scale", type=float, default=1.0)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

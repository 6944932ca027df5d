"""``finsler <subcommand> --config <path> [--out <path>] [--format json]``.

Exit codes: 0 all checks hold, 1 a checked invariant is violated, 2 the
config or metric is invalid, 3 a numeric failure stopped the computation.
``probe-closure`` exits 0 either way; its verdict is part of the report.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import report as _report
from . import rng as _rng
from .autodiff import fd_check
from .config import build_norm, load_config
from .core import cartan_at, classify, euler_report, light_speed, metric_at
from .errors import (
    ConfigError,
    DimensionError,
    FinslerError,
    HomogeneityError,
    MetricSyntaxError,
    NotProductForm,
    NotSpacelikeSeed,
)
from .motions import Verdict, defect_rate, infinitesimal_space, probe_search
from .ortho import Basis, cone_split, orthogonalize, triangular_report

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

EULER_TOL = 1e-8
FD_TOL = 1e-5
FD_THIRD_TOL = 1e-3
SPEED_TOL = 1e-12

_CONFIG_ERRORS = (ConfigError, MetricSyntaxError, DimensionError, HomogeneityError, NotProductForm, NotSpacelikeSeed)


class Violation(Exception):
    """A checked invariant failed; carries the diagnostic for the report."""

    def __init__(self, code, message, outputs, **witness):
        super().__init__(message)
        self.code = code
        self.outputs = outputs
        self.witness = witness


def _diag(code, message, witness=None):
    return {"code": code, "message": message, "witness": _report.plain(witness or {})}


def _seed_basis(cfg):
    return Basis(cfg.seed_basis) if cfg.seed_basis is not None else Basis.standard(cfg.dim)


def _ortho_out(rep):
    return {
        "basis": rep.basis.vectors,
        "tri": rep.tri,
        "max_upper_violation": rep.max_upper_violation,
        "residual": rep.residual,
        "diag_signs": list(rep.diag_signs),
        "orthonormal": rep.orthonormal,
    }


def cmd_check(cfg, norm):
    gen = _rng.stream(cfg.rng_seed, "check", cfg.dim)
    worst = {"homogeneity": 0.0, "contraction": 0.0, "degree0": 0.0, "gradient": 0.0,
             "fd_grad": 0.0, "fd_hess": 0.0, "fd_third": 0.0}
    where = {}
    for t in range(cfg.trials):
        v = gen.standard_normal(cfg.dim)
        e = euler_report(norm, v)
        fd = fd_check(norm, v)
        for key, val in (("homogeneity", e.homogeneity), ("contraction", e.contraction),
                         ("degree0", e.degree0), ("gradient", e.gradient),
                         ("fd_grad", fd.grad), ("fd_hess", fd.hess), ("fd_third", fd.third)):
            if val > worst[key]:
                worst[key] = val
                where[key] = {"trial": t, "v": v}
    limits = {k: EULER_TOL for k in ("homogeneity", "contraction", "degree0", "gradient")}
    limits.update(fd_grad=FD_TOL, fd_hess=FD_TOL, fd_third=FD_THIRD_TOL)
    out = {"metric": norm.label(), "points": cfg.trials, "max_residual": worst, "limits": limits}
    bad = sorted(k for k in worst if worst[k] > limits[k])
    if bad:
        raise Violation("ResidualTooLarge", f"residuals above limit: {', '.join(bad)}", out,
                        **{k: where[k] for k in bad})
    return out


def cmd_gram(cfg, norm):
    rep = orthogonalize(norm, _seed_basis(cfg), cfg.tolerances.class_tol, cfg.tolerances.ortho_tol)
    passive = triangular_report(norm, rep.basis, cfg.tolerances.ortho_tol)
    out = _ortho_out(rep)
    out["tri_passive"] = passive.tri
    out["path_discrepancy"] = float(np.max(np.abs(rep.tri - passive.tri)))
    out["lower"] = rep.lower
    if not rep.orthonormal:
        raise Violation("NotOrthonormal", f"result is not orthonormal (residual {rep.residual:.3e})", out,
                        basis=rep.basis.vectors)
    return out


def cmd_cone(cfg, norm):
    if cfg.seed_plus is None:
        raise ConfigError("cone needs seed_plus (a list of spacelike vectors, possibly empty)")
    split = cone_split(norm, np.array(cfg.seed_plus).reshape(-1, cfg.dim), cfg.tolerances.class_tol,
                       cfg.tolerances.ortho_tol, seed=cfg.rng_seed)
    out = _ortho_out(split.report)
    out["plus"] = split.plus
    out["minus"] = split.minus
    if not split.report.orthonormal:
        raise Violation("NotOrthonormal", "cone split basis is not orthonormal", out, basis=split.basis.vectors)
    return out


def probe_witness(found):
    """The replayable part of a closure probe, as plain data."""
    t, res = found
    return {
        "trial": t,
        "b1": res.motion.source.vectors,
        "b2": res.motion.image.vectors,
        "motion": res.motion.matrix,
        "chained": res.chained_basis.vectors,
        "violation": res.violation,
    }


def cmd_probe_closure(cfg, norm):
    search = probe_search(norm, cfg.rng_seed, cfg.trials, cfg.tolerances.ortho_tol, cfg.tolerances.class_tol)
    out = {
        "metric": norm.label(),
        "trials": cfg.trials,
        "probed": len(search.results),
        "skipped": search.skipped,
        "closed": search.closed,
        "not_closed": search.not_closed,
        "max_violation": search.max_violation,
        "verdict": (Verdict.NOT_CLOSED if search.not_closed else Verdict.CLOSED).value,
        "witness": None,
        "witness_digest": None,
    }
    if search.first_not_closed is not None:
        w = probe_witness(search.first_not_closed)
        out["witness"] = w
        out["witness_digest"] = _report.digest(w)
    return out


def cmd_lie(cfg, norm):
    tol = cfg.tolerances
    b = orthogonalize(norm, _seed_basis(cfg), tol.class_tol, tol.ortho_tol).basis
    space = infinitesimal_space(norm, b, tol.rank_tol, tol.ortho_tol)
    gen = _rng.stream(cfg.rng_seed, "lie", cfg.dim)
    best, unconverged = None, []
    for t in range(cfg.trials if space.dim else 0):
        x = gen.standard_normal(cfg.dim)
        y = gen.standard_normal(cfg.dim)
        for i, a in enumerate(space.generators):
            r = defect_rate(norm, a, x, y)
            if not r.converged:
                unconverged.append({"trial": t, "generator": i, "x": x, "y": y, "rel_change": r.rel_change})
            if best is None or abs(r.rate) > abs(best["rate"]):
                best = {"trial": t, "generator": i, "x": x, "y": y, "rate": r.rate}
    out = {
        "metric": norm.label(),
        "basis": b.vectors,
        "dim": space.dim,
        "generators": space.generators,
        "singular_values": space.singular_values,
        "smallness_max": float(space.smallness.max()) if space.dim else 0.0,
        "smallness_passes": space.passes(),
        "defect_max": best,
        "defect_unconverged": len(unconverged),
    }
    if not space.passes():
        raise Violation("SmallnessFailed", "a generator fails the second-order smallness check", out, basis=b.vectors)
    if unconverged:
        raise Violation("DefectNotConverged", "defect rate did not converge", out, **unconverged[0])
    return out


def cmd_lightspeed(cfg, norm):
    direction = cfg.direction if cfg.direction is not None else (1.0, 0.0, 0.0)
    rep = light_speed(norm, direction, cfg.trials, cfg.rng_seed, cfg.tolerances.class_tol)
    expected = 1.0 / float(norm.c)
    out = {
        "metric": norm.label(),
        "direction": rep.direction,
        "v0": rep.v0,
        "mean": rep.mean,
        "spread": rep.spread,
        "expected": expected,
        "samples": len(rep.samples),
    }
    dev = max(abs(rep.v0 - expected), abs(rep.mean - expected))
    if rep.spread > SPEED_TOL or dev > SPEED_TOL * max(1.0, expected):
        raise Violation("SpeedDependsOnDirection", f"spread {rep.spread:.3e}, deviation {dev:.3e}", out,
                        direction=rep.direction)
    return out


def cmd_derive(cfg, norm):
    if cfg.point is None:
        raise ConfigError("derive needs point (the direction v)")
    v = np.array(cfg.point)
    m = metric_at(norm, v, cfg.tolerances.singular_tol)
    c = cartan_at(norm, v)
    cls = classify(norm, v, cfg.tolerances.class_tol)
    return {"metric": norm.label(), "point": v, "f2": cls.f2, "class": cls.kind.value,
            "g": m.g, "det_g": m.det_g, "cartan": c.c}


COMMANDS = {
    "check": cmd_check,
    "gram": cmd_gram,
    "cone": cmd_cone,
    "probe-closure": cmd_probe_closure,
    "lie": cmd_lie,
    "lightspeed": cmd_lightspeed,
    "derive": cmd_derive,
}


def run(subcommand, cfg):
    """Run one subcommand; returns ``(report dict, exit code)``."""
    echo = {"subcommand": subcommand, "config": cfg.as_dict()}
    rep = {
        "schema_version": _report.SCHEMA_VERSION,
        "command": echo,
        "inputs_digest": _report.digest(echo),
        "outputs": None,
        "diagnostics": [],
    }
    try:
        norm = build_norm(cfg)
        rep["outputs"] = COMMANDS[subcommand](cfg, norm)
        code = EXIT_OK
    except Violation as exc:
        rep["outputs"] = exc.outputs
        rep["diagnostics"].append(_diag(exc.code, str(exc), exc.witness))
        code = EXIT_VIOLATION
    except _CONFIG_ERRORS as exc:
        rep["diagnostics"].append(_diag(exc.code, str(exc), exc.witness))
        code = EXIT_CONFIG
    except FinslerError as exc:
        rep["diagnostics"].append(_diag(exc.code, str(exc), exc.witness))
        code = EXIT_NUMERIC
    except ValueError as exc:
        rep["diagnostics"].append(_diag("InvalidInput", str(exc)))
        code = EXIT_CONFIG
    rep["exit_code"] = code
    return rep, code


def _write_atomic(path, text):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".finsler-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser():
    p = argparse.ArgumentParser(prog="finsler", description="Numerics for Minkowski spaces with a Finsler norm.")
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--format", choices=["json"], default="json")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        rep = {
            "schema_version": _report.SCHEMA_VERSION,
            "command": {"subcommand": args.subcommand, "config_path": args.config},
            "inputs_digest": None,
            "outputs": None,
            "diagnostics": [_diag(exc.code, str(exc), exc.witness)],
            "exit_code": EXIT_CONFIG,
        }
        code = EXIT_CONFIG
    else:
        rep, code = run(args.subcommand, cfg)
    text = _report.dumps(rep)
    if args.out:
        _write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

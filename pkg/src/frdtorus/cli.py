"""Command-line interface: ``frdtorus {decompose,verify,sweep,selftest}``.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 build failure.  Settings come from defaults, then a flat
``key = value`` config file, then flags (later sources win).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import decomposition as dm
from .lattice import TorusSpec
from .spectral import QuadratureError, QuadratureRule, SpectralParams, stieltjes_check
from .verify import SUITES, SuiteOptions, VerificationReport, continuity_check, run_suite
from .walk import BlockSchedule

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUILD = 0, 1, 2, 3
WORKERS_ENV = "FRDTORUS_WORKERS"
BIG_POINTS = 200_000


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    d: int = 2
    L: int = 3
    N: int = 2
    alpha: float = 1.5
    m2: float = 1.0
    rel_tol: float = 1e-9
    schedule: tuple[int, ...] | None = None
    suite: tuple[str, ...] = SUITES
    out: str | None = None
    dir: str | None = None
    report: str | None = None
    r: int = 2
    orders: tuple[int, ...] = (0, 1, 2)
    scales: tuple[int, ...] = (1, 2, 3, 4, 5)
    m2_grid: tuple[float, ...] = (0.2, 0.5, 1.0)
    workers: int = 1
    big: bool = False

    def validate(self) -> None:
        """Collect every problem into one message."""
        errs = []
        if self.d < 2:
            errs.append(f"d must be >= 2 (got {self.d})")
        if self.L < 3 or self.L % 2 == 0:
            errs.append(f"L must be an odd integer >= 3 (got {self.L})")
        if self.N < 2:
            errs.append(f"N must be >= 2 (got {self.N})")
        if not 0.0 < self.alpha < 2.0:
            errs.append(f"alpha must lie in the open interval (0, 2) (got {self.alpha})")
        if not self.m2 > 0.0:
            errs.append(f"m2 = {self.m2}: the decomposition is valid only when m ≠ 0 (need m2 > 0)")
        if any(not m > 0.0 for m in self.m2_grid):
            errs.append("m2 grid entries must be > 0 (valid only when m ≠ 0)")
        if not 0.0 < self.rel_tol < 1.0:
            errs.append(f"rel_tol must lie in (0, 1) (got {self.rel_tol})")
        if self.r < 1:
            errs.append(f"coarse factor r must be >= 1 (got {self.r})")
        if self.workers < 1:
            errs.append(f"workers must be >= 1 (got {self.workers})")
        bad = [s for s in self.suite if s not in SUITES]
        if bad:
            errs.append(f"unknown suite(s) {', '.join(bad)}; choose from {', '.join(SUITES)}")
        if any(o < 0 for o in self.orders):
            errs.append("derivative orders must be >= 0")
        if self.schedule is not None:
            try:
                s = BlockSchedule(self.schedule)
                if s.N != self.N:
                    errs.append(f"schedule has {s.N} blocks but N = {self.N}")
            except ValueError as exc:
                errs.append(str(exc))
        if not errs and self.L ** ((self.N + 1) * self.d) > BIG_POINTS and not self.big:
            errs.append(
                f"torus with {self.L ** ((self.N + 1) * self.d)} points is a heavy fixture; pass --big"
            )
        if errs:
            raise UsageError("; ".join(errs))

    def spec(self) -> TorusSpec:
        return TorusSpec(self.d, self.L, self.N)

    def params(self) -> SpectralParams:
        return SpectralParams(self.alpha, self.m2)

    def rule(self) -> QuadratureRule:
        return QuadratureRule(rel_tol=self.rel_tol)

    def block_schedule(self) -> BlockSchedule:
        if self.schedule is None:
            return BlockSchedule.default(self.L, self.N)
        return BlockSchedule(self.schedule)

    def suite_options(self) -> SuiteOptions:
        return SuiteOptions(scales=self.scales, orders=self.orders, coarse_r=self.r, workers=self.workers)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).replace(";", ",").split(",") if v.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())


def _strs(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {
    "d": int, "L": int, "N": int, "alpha": float, "m2": float, "rel_tol": float,
    "schedule": _ints, "suite": _strs, "out": str, "dir": str, "report": str, "r": int,
    "orders": _ints, "scales": _ints, "m2_grid": _floats, "workers": int, "big": _bool,
}


def read_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _PARSERS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise UsageError(f"{path}:{n}: {exc}") from None
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    env = os.environ.get(WORKERS_ENV)
    if env and "workers" not in values:
        try:
            values["workers"] = int(env)
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer (got {env!r})") from None
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and v is not False:
            values[f.name] = v
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--d", type=int)
    g.add_argument("--L", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--m2", type=float)
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--schedule", type=_ints, help="comma-separated cut points T_0..T_N")
    g.add_argument("--config", help="flat key = value file")
    g.add_argument("--workers", type=int, help=f"worker threads (else ${WORKERS_ENV}, else 1)")
    g.add_argument("--big", action="store_true", help="allow heavy fixtures")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frdtorus", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="build a decomposition and write it to a directory")
    _add_common(p)
    p.add_argument("--out", required=False)

    p = sub.add_parser("verify", help="run bound suites on a decomposition")
    _add_common(p)
    p.add_argument("--dir", help="existing decomposition directory (else build inline)")
    p.add_argument("--suite", type=_strs, help=f"comma-separated subset of {','.join(SUITES)}")
    p.add_argument("--report", help="report JSON path (CSV written alongside)")
    p.add_argument("--r", type=int, help="coarse factor")
    p.add_argument("--orders", type=_ints, help="derivative orders p")
    p.add_argument("--scales", type=_ints, help="scale indices j for window suites")

    p = sub.add_parser("sweep", help="verify over an m2 grid plus a combined continuity report")
    _add_common(p)
    p.add_argument("--m2-grid", dest="m2_grid", type=_floats)
    p.add_argument("--suite", type=_strs)
    p.add_argument("--out", required=False)
    p.add_argument("--r", type=int)
    p.add_argument("--orders", type=_ints)
    p.add_argument("--scales", type=_ints)

    sub.add_parser("selftest", help="check the spectral quadrature against closed forms")
    return ap


def _build(cfg: RunConfig) -> dm.Decomposition:
    return dm.assemble(cfg.spec(), cfg.params(), cfg.rule(), cfg.block_schedule())


def _summary(rep: VerificationReport, stream) -> None:
    for c in rep.sorted():
        v = c.fit.get("value", "")
        print(f"{c.status:15s} {c.check_id:40s} {v}", file=stream)


def cmd_decompose(cfg: RunConfig) -> int:
    out = Path(cfg.out or "decomposition")
    dec = _build(cfg)
    dm.save(dec, out)
    print(f"wrote {len(dec.pieces)} pieces and remainder to {out}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    dec = dm.load(cfg.dir) if cfg.dir else _build(cfg)
    rep = run_suite(dec, cfg.suite, cfg.suite_options())
    path = Path(cfg.report or "verify_report.json")
    rep.write(path)
    _summary(rep, sys.stdout)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_sweep(cfg: RunConfig) -> int:
    out = Path(cfg.out or "sweep")
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    suite = tuple(s for s in cfg.suite if s != "continuity")
    builds = {}
    for m2 in cfg.m2_grid:
        c = replace(cfg, m2=m2)
        dec = _build(c)
        builds[m2] = dec
        rep = run_suite(dec, suite, c.suite_options())
        rep.write(out / f"report_m2={m2:g}.json")
        ok &= rep.ok
        print(f"m2 = {m2:g}: {'pass' if rep.ok else 'FAIL'}")
    spec, P = cfg.spec(), cfg.params()
    rep = VerificationReport({"d": cfg.d, "L": cfg.L, "N": cfg.N, "alpha": cfg.alpha, "m2_grid": list(cfg.m2_grid)})
    derivs = {}

    def deriv(m):
        if m not in derivs:
            derivs[m] = dm.assemble(spec, P.with_m2(m), cfg.rule(), cfg.block_schedule(), "rho_dm2")
        return derivs[m]

    def value(m):
        if m not in builds:
            builds[m] = dm.assemble(spec, P.with_m2(m), cfg.rule(), cfg.block_schedule())
        return builds[m]

    if 1.0 < cfg.alpha < 2.0:
        for j in range(cfg.N):
            rep.add(*continuity_check(
                cfg.m2_grid, lambda m: value(m).pieces[j].field.values,
                lambda m: deriv(m).pieces[j].field.values, cfg.alpha, "piece",
                float(cfg.L) ** (j * (cfg.d - 2)), f"continuity.piece.j{j}",
            ))
    rep.add(*continuity_check(
        cfg.m2_grid, lambda m: value(m).remainder.field.values,
        lambda m: deriv(m).remainder.field.values, cfg.alpha, "remainder",
        float(cfg.L) ** ((cfg.N + 1) * cfg.d), "continuity.remainder",
    ))
    rep.write(out / "continuity.json")
    ok &= rep.ok
    print(f"continuity: {'pass' if rep.ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


STIELTJES_ALPHAS = (0.5, 1.0, 1.5, 1.8)
STIELTJES_MASSES = (0.0, 0.1, 1.0, 10.0)


def stieltjes_grid(rule: QuadratureRule | None = None) -> float:
    """Worst relative error of the Stieltjes identity over the reference grid."""
    worst = 0.0
    for a in STIELTJES_ALPHAS:
        for m2 in STIELTJES_MASSES:
            P = SpectralParams(a, m2)
            for lam in np.logspace(-3, 3, 13):
                worst = max(worst, stieltjes_check(float(lam), P, rule).rel_err)
    return worst


def cmd_selftest() -> int:
    worst = stieltjes_grid()
    ok = worst <= 1e-8
    print(f"stieltjes grid: worst relative error {worst:.3e} ({'pass' if ok else 'FAIL'})")
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        if args.command == "selftest":
            return cmd_selftest()
        cfg = build_config(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"frdtorus {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "decompose":
            return cmd_decompose(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        return cmd_sweep(cfg)
    except QuadratureError as exc:
        print(f"frdtorus {args.command}: build failed: {exc}", file=sys.stderr)
        return EXIT_BUILD
    except (FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"frdtorus {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

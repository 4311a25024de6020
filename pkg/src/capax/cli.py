"""Batch front-end: parse domains and configs, run pipelines, emit reports.

Exit codes: 0 success or all checks PASS, 1 a verification check FAILed,
2 input error, 3 numerical degeneracy.  Reports are deterministic: the
same config and seed produce byte-identical output.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
from dataclasses import dataclass

from .action import ActionContext
from .capacities import (capacity_eh, capacity_gh, capacity_gh_multiset,
                         choose_slope, gh_context, axiom_checks,
                         verify_equality)
from .complexes import build_complex, check_d_squared, homology_ranks
from .domains import (EllipsoidSpec, quadratic_model, reeb_spectrum,
                      spectral_gap)
from .errors import (CapaxError, ConvergenceError, DegenerateSpectrumError,
                     InputError, NumericalDegeneracyError)
from .orbits import solve_quadratic_orbits
from .reports import Report

COMMANDS = ("spectrum", "orbits", "capacities", "verify", "morse", "axioms")

DEFAULTS = {"K": 32, "grid": 0, "kmax": 10, "tol": 1e-6, "slope": 0.0,
            "seed": 0, "format": "csv"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    domain: str
    K: int
    grid: int
    kmax: int
    tol: float
    slope: float          # 0 means auto-select from kmax
    seed: int
    format: str
    out: str = None
    domain2: str = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.K <= 0 or self.kmax <= 0:
            raise InputError("K and kmax must be positive")
        if self.grid < 0 or self.tol <= 0 or self.slope < 0:
            raise InputError("grid, tol, slope must be nonnegative")
        if self.format not in ("csv", "json"):
            raise InputError(f"unknown format {self.format!r}")

    def provenance(self):
        items = [("command", self.command), ("domain", self.domain),
                 ("K", self.K), ("grid", self.grid), ("kmax", self.kmax),
                 ("tol", self.tol), ("slope", self.slope),
                 ("seed", self.seed)]
        if self.domain2 is not None:
            items.insert(2, ("domain2", self.domain2))
        return tuple(items)


def parse_domain(text: str) -> EllipsoidSpec:
    """A domain argument is a JSON file path or an inline axis list."""
    if os.path.exists(text):
        with open(text) as fh:
            return EllipsoidSpec.from_json(fh.read())
    try:
        a = tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise InputError(f"cannot parse domain {text!r}") from exc
    return EllipsoidSpec(a)


def _slope(cfg: RunConfig, dom: EllipsoidSpec) -> float:
    return cfg.slope if cfg.slope > 0 else choose_slope(dom, cfg.kmax)


def _run_spectrum(cfg: RunConfig) -> Report:
    dom = parse_domain(cfg.domain)
    cutoff = _slope(cfg, dom)
    entries = reeb_spectrum(dom, cutoff).entries
    if cfg.slope == 0:
        # auto cutoff: report exactly the first kmax spectrum values
        entries = entries[:cfg.kmax]
    rows = tuple((k + 1, v, m, i)
                 for k, (v, m, i) in enumerate(entries))
    return Report("spectrum", ("k", "value", "multiplier", "axis"), rows,
                  cfg.provenance())


def _run_orbits(cfg: RunConfig) -> Report:
    dom = parse_domain(cfg.domain)
    ctx = gh_context(dom, _slope(cfg, dom), cfg.K, cfg.grid)
    orbits = solve_quadratic_orbits(ctx)
    rows = []
    for o in orbits:
        m, i = o.reebLabel if o.reebLabel is not None else (0, 0)
        rows.append((m, i, o.actionValue, o.relIndex, o.czIndex,
                     o.gradNorm, o.nondegMargin))
    return Report("orbits",
                  ("multiplier", "axis", "action", "rel_index", "cz_index",
                   "grad_norm", "nondeg_margin"),
                  tuple(rows), cfg.provenance())


def _run_capacities(cfg: RunConfig) -> Report:
    dom = parse_domain(cfg.domain)
    L = _slope(cfg, dom)
    eh = capacity_eh(ActionContext(
        quadratic_model(dom, L, eps=1e-4 * dom.a[0]), cfg.K, cfg.grid),
        cfg.kmax)
    gap = spectral_gap(dom, L)
    if gap > 1e-6 * dom.a[0]:
        gh = capacity_gh(gh_context(dom, L, cfg.K, cfg.grid), cfg.kmax)
        mode = "complex"
    else:
        # resonant spectrum: orbit families coincide, fall back to the
        # documented multiset-rank degree convention
        gh = capacity_gh_multiset(dom, cfg.kmax, L)
        mode = "multiset"
    rows = tuple((k, eh.values[k], gh.values[k], mode)
                 for k in range(1, cfg.kmax + 1))
    return Report("capacities", ("k", "c_eh", "c_gh", "gh_mode"), rows,
                  cfg.provenance())


def _run_verify(cfg: RunConfig):
    dom = parse_domain(cfg.domain)
    slope = cfg.slope if cfg.slope > 0 else None
    results = verify_equality(dom, cfg.kmax, tol=cfg.tol, K=cfg.K,
                              m=cfg.grid, slope=slope)
    rows = tuple((r.k, r.c_eh, r.c_gh, r.diff,
                  "PASS" if r.passed else "FAIL") for r in results)
    report = Report("verify", ("k", "c_eh", "c_gh", "diff", "status"), rows,
                    cfg.provenance())
    code = 0 if all(r.passed for r in results) else 1
    return report, code


def _run_morse(cfg: RunConfig) -> Report:
    dom = parse_domain(cfg.domain)
    ctx = gh_context(dom, _slope(cfg, dom), cfg.K, cfg.grid)
    orbits = solve_quadratic_orbits(ctx)
    top = max(o.actionValue for o in orbits)
    cx = build_complex(ctx, orbits, (2 * ctx.H.epsilon, top + 1.0))
    if not check_d_squared(cx):
        raise NumericalDegeneracyError("boundary does not square to zero")
    ranks = homology_ranks(cx)
    rows = [("generator", g.relIndex, g.actionValue,
             f"{g.reebLabel[0]},{g.reebLabel[1]}", None)
            for g in cx.generators]
    for degree in sorted(ranks):
        rows.append(("homology_rank", degree, None, None, ranks[degree]))
    return Report("morse", ("kind", "degree", "action", "label", "rank"),
                  tuple(rows), cfg.provenance())


def _run_axioms(cfg: RunConfig):
    dom = parse_domain(cfg.domain)
    domB = (parse_domain(cfg.domain2) if cfg.domain2 is not None
            else dom.scaled(1.25))
    results = axiom_checks(dom, domB, cfg.kmax, K=cfg.K)
    rows = tuple((r.check, r.k, r.lhs, r.rhs,
                  "PASS" if r.passed else "FAIL") for r in results)
    report = Report("axioms", ("check", "k", "lhs", "rhs", "status"), rows,
                    cfg.provenance())
    code = 0 if all(r.passed for r in results) else 1
    return report, code


def run(cfg: RunConfig):
    """Execute one command; return (report, exit code)."""
    if cfg.command == "spectrum":
        return _run_spectrum(cfg), 0
    if cfg.command == "orbits":
        return _run_orbits(cfg), 0
    if cfg.command == "capacities":
        return _run_capacities(cfg), 0
    if cfg.command == "verify":
        return _run_verify(cfg)
    if cfg.command == "morse":
        return _run_morse(cfg), 0
    return _run_axioms(cfg)


def _thread_limit():
    raw = os.environ.get("CAPAX_THREADS")
    if raw is None:
        return contextlib.nullcontext()
    try:
        limit = int(raw)
    except ValueError as exc:
        raise InputError(f"CAPAX_THREADS must be an integer, got {raw!r}") \
            from exc
    if limit <= 0:
        raise InputError("CAPAX_THREADS must be positive")
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(limits=limit)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capax",
        description="capacity sequences of ellipsoids, two independent ways")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("spectrum", "closed-orbit period multiset below a cutoff"),
            ("orbits", "solve and grade periodic orbits of a profile"),
            ("capacities", "both capacity sequences side by side"),
            ("verify", "cross-check the two pipelines (exit 1 on FAIL)"),
            ("morse", "build the filtered complex and its homology"),
            ("axioms", "monotonicity and conformality checks")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--domain", required=True,
                       help="ellipsoid: JSON file or comma list of areas")
        if name == "axioms":
            p.add_argument("--domain2", default=None,
                           help="enclosing ellipsoid for monotonicity")
        p.add_argument("--config", default=None,
                       help="JSON file of parameter defaults")
        p.add_argument("--K", type=int, default=None,
                       help="Fourier truncation order")
        p.add_argument("--grid", type=int, default=None,
                       help="quadrature grid size (0 = 4K)")
        p.add_argument("--kmax", type=int, default=None,
                       help="number of capacities")
        p.add_argument("--tol", type=float, default=None,
                       help="relative verification tolerance")
        p.add_argument("--slope", type=float, default=None,
                       help="asymptotic slope (0 = auto from kmax)")
        p.add_argument("--seed", type=int, default=None, help="RNG seed")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--out", default=None, help="output path (default stdout)")
    return parser


def _resolve_config(args) -> RunConfig:
    file_defaults = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_defaults = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed config file: {exc}") from exc
        unknown = set(file_defaults) - set(DEFAULTS)
        if unknown:
            raise InputError(f"unknown config keys {sorted(unknown)}")

    def pick(key):
        cli = getattr(args, key)
        if cli is not None:
            return cli
        if key in file_defaults:
            return type(DEFAULTS[key])(file_defaults[key])
        return DEFAULTS[key]

    return RunConfig(command=args.command, domain=args.domain,
                     K=pick("K"), grid=pick("grid"), kmax=pick("kmax"),
                     tol=pick("tol"), slope=pick("slope"), seed=pick("seed"),
                     format=pick("format"), out=args.out,
                     domain2=getattr(args, "domain2", None))


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        with _thread_limit():
            report, code = run(cfg)
        text = report.render(cfg.format)
        if cfg.out is not None:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return code
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (DegenerateSpectrumError, NumericalDegeneracyError,
            ConvergenceError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except CapaxError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

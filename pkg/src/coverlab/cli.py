"""Batch driver: one entry point, five experiments, reproducible artifacts.

Experiments: sample (draw a connected cover, emit its edge list and cusp
table), certify (tangle-free report at the rho rule), walk (graph or FEM
sign-flip walk with CSV series, SVG chart, and density verdict), kernels
(transform/localization reports), fixpoints (expectation tables).

Configuration comes from an optional ``key = value`` file plus command-line
overrides; unknown keys are rejected.  All randomness flows from the
configured seed, never from the clock or the environment.  Every run writes
its artifacts and a versioned ``manifest.json`` (config echo, sha256 and
size per artifact, per-check verdicts, wall time) into the output
directory; rerunning an identical config reproduces the artifact bytes.

Exit codes: 0 all checks passed; 1 a requested check failed.  Error
classes map to distinct codes: 2 config, 3 numeric, 4 mesh, 5 domain,
6 not connected, 7 assembly, 8 basis mismatch, 9 cusp band,
10 calibration, 11 non-termination, 12 invalid element, 13 other.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import characters as ch
from . import covers as cv
from . import fixpoints as fx
from . import graph_spectra as gs
from . import kernels as kn
from . import tangle as tg
from .errors import (
    AssemblyError,
    BasisMismatchError,
    CalibrationError,
    ConfigError,
    CoverlabError,
    DomainError,
    InvalidBandError,
    InvalidElementError,
    MeshError,
    NonTerminationError,
    NotConnectedError,
    NumericError,
)
from .fem import fem_continuity_walk
from .mesh import build_tile_mesh

__all__ = ["RunConfig", "parse_config_text", "run", "main"]

EXPERIMENTS = ("sample", "certify", "walk", "kernels", "fixpoints")
MANIFEST_SCHEMA = "coverlab-manifest v1"

_EXIT_CODES = {
    ConfigError: 2,
    NumericError: 3,
    MeshError: 4,
    DomainError: 5,
    NotConnectedError: 6,
    AssemblyError: 7,
    BasisMismatchError: 8,
    InvalidBandError: 9,
    CalibrationError: 10,
    NonTerminationError: 11,
    InvalidElementError: 12,
}


def exit_code_for(exc: CoverlabError) -> int:
    return _EXIT_CODES.get(type(exc), 13)


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class RunConfig:
    """One experiment run.  Documented ranges enforced by validate()."""

    experiment: str
    n: int = 2
    seed: int = 0
    theta: tuple[int, int] = (-1, -1)
    c_g: float = 0.25
    mesh_h: float = 0.1
    trunc_Y: float = 4.0
    eig_tol: float = 1e-9
    resid_tol: float = 1e-7
    backend: str = "graph"
    out_dir: str = "coverlab-out"
    threads: int = 1

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        if not 1 <= self.n <= 10**7:
            raise ConfigError(f"n = {self.n} outside [1, 1e7]")
        if not 0 <= self.seed < 2**63:
            raise ConfigError(f"seed = {self.seed} outside [0, 2^63)")
        if len(self.theta) != 2 or any(t not in (-1, 1) for t in self.theta):
            raise ConfigError(f"theta = {self.theta} must be a pair of +-1")
        if not 0.0 < self.c_g <= 1.0:
            raise ConfigError(f"c_g = {self.c_g} outside (0, 1]")
        if not 0.0 < self.mesh_h <= 0.2:
            raise ConfigError(f"mesh_h = {self.mesh_h} outside (0, 0.2]")
        if not 4.0 <= self.trunc_Y <= 64.0:
            raise ConfigError(f"trunc_Y = {self.trunc_Y} outside [4, 64]")
        if not 0.0 < self.eig_tol <= 1e-2:
            raise ConfigError(f"eig_tol = {self.eig_tol} outside (0, 1e-2]")
        if not 0.0 < self.resid_tol <= 1e-2:
            raise ConfigError(f"resid_tol = {self.resid_tol} outside (0, 1e-2]")
        if self.backend not in ("graph", "fem"):
            raise ConfigError(f"backend = {self.backend!r} must be graph or fem")
        if not 1 <= self.threads <= 256:
            raise ConfigError(f"threads = {self.threads} outside [1, 256]")
        if not self.out_dir:
            raise ConfigError("out_dir must be a nonempty path")

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["theta"] = list(self.theta)
        return out


def _parse_theta(value: str) -> tuple[int, int]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"theta needs two comma-separated signs, got {value!r}")
    try:
        pair = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"theta components must be integers, got {value!r}") from None
    return pair  # sign values checked by validate()


_FIELD_PARSERS = {
    "experiment": str,
    "n": int,
    "seed": int,
    "theta": _parse_theta,
    "c_g": float,
    "mesh_h": float,
    "trunc_Y": float,
    "eig_tol": float,
    "resid_tol": float,
    "backend": str,
    "out_dir": str,
    "threads": int,
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' comments; unknown keys rejected."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        try:
            out[key] = _FIELD_PARSERS[key](value)
        except (ValueError, TypeError):
            raise ConfigError(
                f"line {lineno}: invalid value {value!r} for key {key!r}"
            ) from None
    return out


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text)


# ---------------------------------------------------------------------------
# experiment bodies.  Each fills artifacts (name -> text body), checks
# (name -> bool), and meta (JSON-ready numbers for the manifest).

def _run_sample(cfg: RunConfig, artifacts, checks, meta) -> None:
    pair, attempts = cv.sample_connected_pair(cfg.n, cfg.seed)
    artifacts["cover.txt"] = cv.pair_to_text(pair)
    cycles = cv.cusp_cycles(pair)
    rows = ["cusp,cycle,length"]
    for cusp in ("inf", "zero", "one"):
        for j, cyc in enumerate(cycles[cusp]):
            rows.append(f"{cusp},{j},{len(cyc)}")
    artifacts["cusps.csv"] = "\n".join(rows) + "\n"
    checks["connected"] = cv.is_transitive(pair)
    meta["attempts"] = attempts
    meta["cusp_counts"] = {c: len(cycles[c]) for c in ("inf", "zero", "one")}


def _run_certify(cfg: RunConfig, artifacts, checks, meta) -> None:
    pair, attempts = cv.sample_connected_pair(cfg.n, cfg.seed)
    rho = tg.rho_rule(cfg.n, cfg.c_g)
    report = tg.certify_tangle_free(pair, rho)
    rows = [
        "n,seed,rho,pass,witnesses,checked_vertices",
        f"{cfg.n},{cfg.seed},{rho},{str(report.passed).lower()},"
        f"{len(report.witnesses)},{report.checked_vertices}",
    ]
    artifacts["gtf.csv"] = "\n".join(rows) + "\n"
    checks["tangle_free"] = report.passed
    meta["attempts"] = attempts
    meta["rho"] = rho
    meta["witness_words"] = [
        [list(w) for w in ws] for ws in tg.witness_words(report)[:4]
    ]


def _run_walk(cfg: RunConfig, artifacts, checks, meta) -> None:
    pair, attempts = cv.sample_connected_pair(cfg.n, cfg.seed)
    basis = cv.spanning_basis(pair)
    chi0 = ch.trivial_character(basis)
    chi1 = ch.restrict(cfg.theta, basis)
    if cfg.backend == "graph":
        series = gs.continuity_walk(pair, basis, chi0, chi1)
    else:
        mesh = build_tile_mesh(cfg.mesh_h, cfg.trunc_Y)
        series = fem_continuity_walk(mesh, pair, basis, chi0, chi1)
        meta["mesh_vertices"] = mesh.n_vertices
    artifacts["walk.csv"] = gs.series_to_csv(series)
    artifacts["walk.svg"] = _series_svg(series)
    vals = series.values
    checks["starts_at_zero"] = abs(vals[0]) <= 1e-8
    checks["density"] = gs.density_report(series, max(series.max_step, 1e-12))
    meta["attempts"] = attempts
    meta["steps"] = len(vals) - 1
    meta["endpoint"] = vals[-1]
    meta["max_step"] = series.max_step


def _run_kernels(cfg: RunConfig, artifacts, checks, meta) -> None:
    # transform at the bottom of the spectrum vs the closed ball-volume form
    rows = ["t,h_numeric,h_closed,rel_err"]
    worst_h = 0.0
    for t in (3.0, 4.0, 5.0):
        num = kn.indicator_h(t, 0.5)
        ref = kn.indicator_h_at_zero(t)
        rel = abs(num - ref) / ref
        worst_h = max(worst_h, rel)
        rows.append(f"{t:g},{num:.17g},{ref:.17g},{rel:.3e}")
    artifacts["selberg.csv"] = "\n".join(rows) + "\n"
    checks["transform_closed_form"] = worst_h <= 1e-6

    # self-convolution doubles the transform exponent: H = h^2
    rows = ["t,lambda,H_numeric,h_squared,rel_err"]
    worst_sq = 0.0
    for t in (3.0, 4.0):
        K = kn.kernel_selfconv(kn.indicator_profile(t))
        for lam in (0.0, 0.1, 0.2):
            s = kn.SpectralParameter(lam).s
            big = float(kn.selberg_transform(K, [s])[0])
            sq = kn.indicator_h(t, s) ** 2
            rel = abs(big - sq) / sq
            worst_sq = max(worst_sq, rel)
            rows.append(f"{t:g},{lam:g},{big:.17g},{sq:.17g},{rel:.3e}")
    artifacts["selfconv.csv"] = "\n".join(rows) + "\n"
    checks["selfconv_square"] = worst_sq <= 1e-6

    t_grid = [3.0 + 0.5 * k for k in range(15)]
    lam_grid = [0.02 * k for k in range(13)]  # up to 0.24
    report = kn.lower_bound_ratio(t_grid, lam_grid)
    artifacts["ratios.csv"] = report.to_csv()
    checks["ratio_positive"] = report.min_ratio > 0.0
    meta["min_ratio"] = report.min_ratio

    fam = kn.bump_family()
    fns = kn.random_smooth_functions(5, cfg.seed)
    rows = ["function,residual"]
    worst_ims = 0.0
    for i, fn in enumerate(fns):
        resid = kn.ims_identity_check(fam, [fn])
        worst_ims = max(worst_ims, resid)
        rows.append(f"{getattr(fn, 'label', f'fn{i}')},{resid:.3e}")
    artifacts["ims.csv"] = "\n".join(rows) + "\n"
    checks["ims_identity"] = worst_ims <= 1e-6

    ta = kn.tube_area(1.0, 8.0, 1.0)
    rel = abs(ta.quadrature - ta.closed_form) / ta.closed_form
    artifacts["tube.csv"] = (
        "omega,L1,L2,closed_form,quadrature,rel_err,width_factor\n"
        f"1,8,1,{ta.closed_form:.17g},{ta.quadrature:.17g},{rel:.3e},"
        f"{ta.width_factor:.17g}\n"
    )
    checks["tube_quadrature"] = rel <= 1e-8

    rows = ["L,frakj_l1"]
    vals = []
    for L in (1.0, 4.0, 16.0, 64.0, 256.0):
        v = kn.frakJ_l1(L, L)
        vals.append(v)
        rows.append(f"{L:g},{v:.17g}")
    artifacts["frakj.csv"] = "\n".join(rows) + "\n"
    checks["frakj_stable"] = max(vals) <= 2.0 * min(vals)
    meta["frakj_range"] = [min(vals), max(vals)]


_EXACT_SUBGROUPS = (
    ("<a>", [(1,)]),
    ("<a,b>", [(1,), (2,)]),
    ("<a^2>", [(1, 1)]),
)


def _exact_expected(name: str, n: int) -> Fraction:
    if name == "<a>":
        return Fraction(1)
    if name == "<a,b>":
        return Fraction(1, n)
    return Fraction(1) if n == 1 else Fraction(2)  # fix(sigma^2): 1-s plus 2-cycles


def _run_fixpoints(cfg: RunConfig, artifacts, checks, meta) -> None:
    rows = ["subgroup,n,expectation"]
    all_exact = True
    for name, words in _EXACT_SUBGROUPS:
        for n in range(1, 7):
            val = fx.expected_fix_exact(words, n)
            all_exact = all_exact and val == _exact_expected(name, n)
            rows.append(f"{name},{n},{val}")
    artifacts["expectations.csv"] = "\n".join(rows) + "\n"
    checks["exact_identities"] = all_exact

    # scaled Prop-style ratio for the rank-2 subgroup <ab, ba>
    words = [(1, 2), (2, 1)]
    rows = ["n,mean_fix,stderr,ratio"]
    finite = True
    for n in (64, 128):
        rep = fx.expectation_ratio(words, n, trials=10_000, seed=cfg.seed)
        finite = finite and math.isfinite(rep["ratio"])
        rows.append(f"{n},{rep['mean_fix']:.17g},{rep['stderr']:.17g},{rep['ratio']:.17g}")
    artifacts["prop_a1.csv"] = "\n".join(rows) + "\n"
    checks["ratio_finite"] = finite

    rows = ["n,a,falling,lower,upper"]
    for n in (5, 10, 25, 50):
        for a in range(0, min(5, n // 2) + 1):
            p = fx.pochhammer_falling(n, a)
            lo = n**a - a * a * n ** max(a - 1, 0)
            rows.append(f"{n},{a},{p},{lo},{n ** a}")
    artifacts["pochhammer.csv"] = "\n".join(rows) + "\n"
    checks["pochhammer_bounds"] = fx.pochhammer_check(50, 25)


_RUNNERS = {
    "sample": _run_sample,
    "certify": _run_certify,
    "walk": _run_walk,
    "kernels": _run_kernels,
    "fixpoints": _run_fixpoints,
}


# ---------------------------------------------------------------------------
# SVG chart (series value vs step), no plotting dependency

def _series_svg(series: gs.SpectralSeries) -> str:
    vals = list(series.values)
    W, H = 640.0, 400.0
    ml, mr, mt, mb = 64.0, 16.0, 16.0, 44.0
    lo = min(0.0, min(vals))
    hi = max(vals)
    span = max(hi - lo, 1e-9)
    nx = max(len(vals) - 1, 1)

    def px(k: int) -> float:
        return ml + (W - ml - mr) * (k / nx)

    def py(v: float) -> float:
        return H - mb - (H - mt - mb) * ((v - lo) / span)

    pts = " ".join(f"{px(k):.2f},{py(v):.2f}" for k, v in enumerate(vals))
    font = 'font-family="monospace" font-size="12" fill="#222"'
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:g}" height="{H:g}" '
        f'viewBox="0 0 {W:g} {H:g}">',
        f'<rect width="{W:g}" height="{H:g}" fill="white"/>',
        f'<line x1="{ml:g}" y1="{py(lo):.2f}" x2="{W - mr:g}" y2="{py(lo):.2f}" '
        'stroke="#444" stroke-width="1"/>',
        f'<line x1="{ml:g}" y1="{mt:g}" x2="{ml:g}" y2="{H - mb:g}" '
        'stroke="#444" stroke-width="1"/>',
        f'<polyline points="{pts}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>',
        f'<text x="8" y="{mt + 4:g}" {font}>{hi:.6g}</text>',
        f'<text x="8" y="{H - mb:g}" {font}>{lo:.6g}</text>',
        f'<text x="{ml:g}" y="{H - 12:g}" {font}>steps 0..{len(vals) - 1}</text>',
        f'<text x="{W - mr:g}" y="{H - 12:g}" {font} text-anchor="end">'
        "lambda1 vs step</text>",
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# orchestration

def run(config: RunConfig) -> int:
    """Execute one experiment; write artifacts + manifest; return exit code."""
    config.validate()
    t0 = time.perf_counter()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, str] = {}
    checks: dict[str, bool] = {}
    meta: dict = {}
    _RUNNERS[config.experiment](config, artifacts, checks, meta)

    hashes = {}
    for name in sorted(artifacts):
        data = artifacts[name].encode()
        (out / name).write_bytes(data)
        hashes[name] = {
            "sha256": hashlib.sha256(data).hexdigest(),
            "bytes": len(data),
        }
    passed = all(checks.values())
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "experiment": config.experiment,
        "config": config.as_dict(),
        "artifacts": hashes,
        "checks": checks,
        "failed_checks": sorted(k for k, v in checks.items() if not v),
        "pass": passed,
        "meta": meta,
        "wall_time_s": round(time.perf_counter() - t0, 6),
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    for name in sorted(checks):
        print(f"check {name}: {'pass' if checks[name] else 'FAIL'}")
    print(f"wrote {out / 'manifest.json'}")
    return 0 if passed else 1


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="coverlab",
        description="Reproducible cover/spectrum experiments with file artifacts.",
    )
    p.add_argument("experiment", nargs="?", choices=EXPERIMENTS,
                   help="experiment to run (or use --experiment / config file)")
    p.add_argument("--experiment", dest="experiment_flag", choices=EXPERIMENTS,
                   help="experiment to run")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--n", type=int, help="cover degree")
    p.add_argument("--seed", type=int, help="PRNG seed (sole entropy source)")
    p.add_argument("--theta", help="base character signs, e.g. --theta=-1,-1")
    p.add_argument("--backend", choices=("graph", "fem"), help="walk backend")
    p.add_argument("--rho-coef", dest="c_g", type=float,
                   help="tangle-free radius coefficient in rho = floor(c_g log2 n)")
    p.add_argument("--mesh-h", dest="mesh_h", type=float, help="mesh spacing, (0, 0.2]")
    p.add_argument("--trunc-Y", dest="trunc_Y", type=float, help="truncation height, [4, 64]")
    p.add_argument("--eig-tol", dest="eig_tol", type=float, help="iterative eigensolver tolerance")
    p.add_argument("--resid-tol", dest="resid_tol", type=float, help="eigenpair residual gate")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--threads", type=int,
                   help="reserved for solver-internal parallelism; outputs do not depend on it")
    return p


def _build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(_load_config_file(args.config))
    if args.experiment_flag:
        if args.experiment and args.experiment != args.experiment_flag:
            raise ConfigError(
                f"experiment given twice: {args.experiment!r} vs {args.experiment_flag!r}"
            )
        values["experiment"] = args.experiment_flag
    if args.experiment:
        values["experiment"] = args.experiment
    for key in ("n", "seed", "backend", "c_g", "mesh_h", "trunc_Y",
                "eig_tol", "resid_tol", "out_dir", "threads"):
        val = getattr(args, key)
        if val is not None:
            values[key] = val
    if args.theta is not None:
        values["theta"] = _parse_theta(args.theta)
    if "experiment" not in values:
        raise ConfigError("no experiment selected (positional, --experiment, or config file)")
    return RunConfig(**values)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    try:
        config = _build_config(args)
        return run(config)
    except CoverlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)

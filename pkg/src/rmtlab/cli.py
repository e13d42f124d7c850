"""Command-line entry point.

Commands: density | spectrum | clt | cov | moments | variance | norm.
Configuration comes from flags, optionally layered over a JSON file given
with --config (flags win).  Reports are JSON, curves and spectra are CSV.
Exit codes: 0 success, 1 usage error, 2 numerical-convergence failure.

Artifacts are byte-identical across reruns with the same config; wall time
is therefore logged to stderr instead of being embedded in the output.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .ensemble import SigmaMeasure, parse_phi
from .montecarlo import (
    ExperimentConfig,
    draw_sample,
    replicate_spectra,
    run_clt,
    run_cov,
    run_moment_check,
)
from .mp_limit import (
    ConvergenceError,
    EdgeProximityError,
    density_curve,
    support_edges_mp,
)
from .variance import GridError, sobolev_norm, variance_limit
from .vectors import VectorLaw, moment_profile

log = logging.getLogger("rmtlab")

COMMANDS = ("density", "spectrum", "clt", "cov", "moments", "variance", "norm")
DEFAULT_SEED = 42
DEFAULT_R = 800


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Flat, JSON-serializable run description; round-trips exactly."""

    command: str
    law: str = "iid:gaussian"
    sigma: str = "1:1"
    c: float = 1.0
    n: int = 256
    m: int | None = None
    R: int = DEFAULT_R
    seed: int = DEFAULT_SEED
    phi: str | None = None
    eta: str | None = None
    z1: str | None = None
    z2: str | None = None
    delta: float = 0.5
    out: str | None = None
    format: str = "json"
    jobs: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        known = {f.name for f in fields(RunConfig)}
        extra = set(d) - known
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        if "command" not in d:
            raise UsageError("config is missing 'command'")
        cfg = RunConfig(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("json", "csv"):
            raise UsageError(f"unknown format {self.format!r}")
        for name in ("c",):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be > 0")
        for name in ("n", "R", "jobs"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")
        if self.m is not None and self.m < 1:
            raise UsageError("m must be >= 1")
        if self.seed < 0:
            raise UsageError("seed must be >= 0")
        try:
            VectorLaw.parse(self.law)
            SigmaMeasure.parse(self.sigma, self.c)
            if self.phi is not None:
                parse_phi(self.phi)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"bad complex number {text!r}") from exc


def _parse_etas(text: str | None, default: tuple) -> tuple:
    if text is None:
        return default
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad eta list {text!r}") from exc
    if any(v <= 0 for v in vals):
        raise UsageError("eta values must be > 0")
    return vals


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract here is 1
    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="rmtlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rmtlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="|".join(COMMANDS))
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--law")
        p.add_argument("--sigma", help='atoms as "tau:weight,tau:weight,..."')
        p.add_argument("--c", type=float)
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--R", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--phi", help="poly:c0,c1,... | exp:t | bump:center,width")
        p.add_argument("--eta", help="comma-separated eta ladder")
        p.add_argument("--z1")
        p.add_argument("--z2")
        p.add_argument("--delta", type=float)
        p.add_argument("--out")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--jobs", type=int)
    return parser


def parse_config(argv: list[str]) -> RunConfig:
    """Build a validated RunConfig from CLI arguments.

    Precedence: flag > config-file value > default.  RMTLAB_SEED overrides
    the default seed but never an explicit one.
    """
    ns = build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError("a command is required")
    base: dict = {"command": ns.command}
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_vals = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(file_vals, dict):
            raise UsageError("config file must hold a JSON object")
        file_vals.pop("command", None)
        base.update(file_vals)
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if f.name != "command" and v is not None:
            base[f.name] = v
    if "seed" not in base:
        env = os.environ.get("RMTLAB_SEED")
        if env is not None:
            try:
                base["seed"] = int(env)
            except ValueError as exc:
                raise UsageError(f"bad RMTLAB_SEED {env!r}") from exc
    return RunConfig.from_dict(base)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _experiment(cfg: RunConfig) -> ExperimentConfig:
    return ExperimentConfig(
        law=VectorLaw.parse(cfg.law),
        sigma=SigmaMeasure.parse(cfg.sigma, cfg.c),
        n=cfg.n,
        R=cfg.R,
        seed=cfg.seed,
        m=cfg.m,
        phi=parse_phi(cfg.phi) if cfg.phi else None,
        jobs=cfg.jobs,
    )


def _meta(cfg: RunConfig) -> dict:
    return {"config": cfg.to_dict(), "version": __version__}


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(report: dict, cfg: RunConfig) -> None:
    _emit(json.dumps({"meta": _meta(cfg), **report}, indent=2, sort_keys=True) + "\n", cfg)


def _cmd_density(cfg: RunConfig) -> None:
    sigma = SigmaMeasure.parse(cfg.sigma, cfg.c)
    _, a_plus, _ = support_edges_mp(sigma.c)
    hi = float(sigma.taus.max()) * a_plus + 0.5
    lam = np.linspace(0.0, hi, 600)
    etas = _parse_etas(cfg.eta, (0.08, 0.04, 0.02, 0.01))
    rho = density_curve(lam, sigma, etas)
    lines = [f"# {json.dumps(_meta(cfg), sort_keys=True)}", "lambda,rho"]
    lines += [f"{float(l)!r},{float(r)!r}" for l, r in zip(lam, rho)]
    _emit("\n".join(lines) + "\n", cfg)


def _cmd_spectrum(cfg: RunConfig) -> None:
    sample = draw_sample(_experiment(cfg), 0)
    if cfg.out:
        sample.to_csv(cfg.out)
    else:
        sample.to_csv(sys.stdout)


def _cmd_clt(cfg: RunConfig) -> None:
    if not cfg.phi:
        raise UsageError("clt requires --phi")
    report = run_clt(_experiment(cfg))
    _emit_json(report.to_dict(), cfg)


def _cmd_cov(cfg: RunConfig) -> None:
    if not (cfg.z1 and cfg.z2):
        raise UsageError("cov requires --z1 and --z2")
    report = run_cov(_experiment(cfg), _parse_complex(cfg.z1), _parse_complex(cfg.z2))
    _emit_json(report.to_dict(), cfg)


def _cmd_moments(cfg: RunConfig) -> None:
    rows = run_moment_check(VectorLaw.parse(cfg.law), R=cfg.R, seed=cfg.seed)
    _emit_json({"rows": [r.to_dict() for r in rows]}, cfg)


def _cmd_variance(cfg: RunConfig) -> None:
    if not cfg.phi:
        raise UsageError("variance requires --phi")
    prof = moment_profile(VectorLaw.parse(cfg.law))
    sigma = SigmaMeasure.parse(cfg.sigma, cfg.c)
    etas = _parse_etas(cfg.eta, (0.16, 0.08, 0.04, 0.02))
    report = variance_limit(parse_phi(cfg.phi), sigma, prof.a, prof.b, etas=etas)
    _emit_json(report.to_dict(), cfg)


def _cmd_norm(cfg: RunConfig) -> None:
    if not cfg.phi:
        raise UsageError("norm requires --phi")
    s = 2.0 + cfg.delta
    value = sobolev_norm(parse_phi(cfg.phi), s)
    _emit_json({"norm": value, "s": s}, cfg)


_DISPATCH = {
    "density": _cmd_density,
    "spectrum": _cmd_spectrum,
    "clt": _cmd_clt,
    "cov": _cmd_cov,
    "moments": _cmd_moments,
    "variance": _cmd_variance,
    "norm": _cmd_norm,
}


def dispatch(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    try:
        _DISPATCH[cfg.command](cfg)
    except (ConvergenceError, EdgeProximityError, GridError) as exc:
        log.error("numerical failure: %s", exc)
        return 2
    log.info("%s finished in %.2f s", cfg.command, time.perf_counter() - t0)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    if argv is None:
        argv = sys.argv[1:]
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"rmtlab: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --version / --help
        return 0 if exc.code in (0, None) else 1
    try:
        return dispatch(cfg)
    except UsageError as exc:
        print(f"rmtlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line entry point.

Usage examples::

    sharkswim simulate --mode p --n 1000 --alpha 1.5 --p 0.3 --seed 1 --out walk.csv
    sharkswim clusters --n 3 --p 1/2 --exact
    sharkswim yule --n 10000 --p 0.5 --seed 2 --out types.csv
    sharkswim constants --alpha 1.5 --p 1/3
    sharkswim verify --regime sub --alpha 2 --p 0.25 --n 1e5 --reps 1000 --seed 42 --out sub.json

Settings come from flags, a TOML file (``--config``), or both; flags win.
Exit codes: 0 success or PASS, 2 statistical FAIL, 1 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, analytics, rrt, verifier, walk, yule
from .stable_rng import ParameterError, RngStream

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAIL = 2
SEED_ENV = "SHARKSWIM_SEED"
COMMANDS = ("simulate", "clusters", "yule", "constants", "verify")


class UsageError(Exception):
    """Invalid configuration; the message names the offending field."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Value parsing


def parse_count(text) -> int:
    """Integer counts that may be written as ``1e5``."""
    if isinstance(text, bool):
        raise ValueError(f"not a count: {text!r}")
    if isinstance(text, int):
        return text
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def parse_count_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [parse_count(t) for t in text]
    return [parse_count(t) for t in str(text).split(",") if t.strip()]


def parse_rational(text):
    """``"3/4"`` stays exact; plain decimals become floats."""
    if isinstance(text, (int, float, Fraction)):
        return text
    s = str(text).strip()
    if "/" in s:
        return Fraction(s)
    return float(s)


def _float(x) -> float:
    return float(x)


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class ExperimentConfig:
    command: str
    values: dict = field(default_factory=dict)
    seed: int = 0
    seed_source: str = "default"
    workers: int = 1
    out: str | None = None
    csv: str | None = None

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def require(self, key):
        v = self.values.get(key)
        if v is None:
            raise UsageError(f"missing required setting '{key}'")
        return v

    def metadata(self) -> dict:
        """Full config and seed; worker count is left out so output is worker independent."""
        vals = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in sorted(self.values.items())
                if v is not None}
        return {"tool": "sharkswim", "version": __version__, "command": self.command,
                "config": vals, "seed": self.seed}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sharkswim", description="Random walks with complete memory and stable steps.")
    parser.add_argument("--version", action="version", version=f"sharkswim {__version__}")
    sub = parser.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--config", help="TOML file with settings; flags override it")
        sp.add_argument("--seed", default=None, help=f"integer seed (fallback: ${SEED_ENV})")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--workers", default=None, help="worker processes (default: all cores)")

    s = sub.add_parser("simulate", help="simulate one trajectory as CSV")
    common(s)
    s.add_argument("--mode", choices=[m.value for m in walk.Mode], default=None)
    s.add_argument("--n", default=None)
    s.add_argument("--alpha", default=None)
    s.add_argument("--p", default=None)
    s.add_argument("--q", default=None)
    s.add_argument("--dimension", default=None)
    s.add_argument("--scale", default=None, help="scale c in exp(-c |theta|^alpha)")
    s.add_argument("--first-step", dest="first_step", default=None, help="ERW first step, +1 or -1")

    c = sub.add_parser("clusters", help="cluster sizes of a percolated tree")
    common(c)
    c.add_argument("--n", default=None)
    c.add_argument("--p", default=None)
    c.add_argument("--exact", action="store_const", const=True, default=None,
                   help="exact law by enumeration (n <= 8) as JSON")

    y = sub.add_parser("yule", help="type counts of a Yule process with mutation")
    common(y)
    y.add_argument("--n", default=None)
    y.add_argument("--p", default=None)

    k = sub.add_parser("constants", help="limit constants as JSON")
    common(k)
    k.add_argument("--alpha", action="append", default=None)
    k.add_argument("--p", action="append", default=None)

    v = sub.add_parser("verify", help="run a regime experiment")
    common(v)
    v.add_argument("--regime", choices=["sub", "crit", "super"], default=None)
    v.add_argument("--alpha", default=None)
    v.add_argument("--p", default=None)
    v.add_argument("--n", default=None, help="comma-separated horizons, e.g. 1e3,1e4")
    v.add_argument("--reps", default=None)
    v.add_argument("--dimension", default=None)
    v.add_argument("--theta-count", dest="theta_count", default=None)
    v.add_argument("--theta-min", dest="theta_min", default=None)
    v.add_argument("--theta-max", dest="theta_max", default=None)
    v.add_argument("--csv", default=None, help="plot CSV path (default: next to --out)")
    return parser


_GENERIC = ("config", "seed", "out", "workers", "csv", "command")


def _load_toml(path: str, command: str) -> dict:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config: invalid TOML in {path}: {exc}") from exc
    flat = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    flat.update(doc.get(command, {}))
    return {k.replace("-", "_"): v for k, v in flat.items()}


def resolve_config(argv=None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError("a command is required: " + ", ".join(COMMANDS))
    flags = {k: v for k, v in vars(args).items() if v is not None}
    merged = _load_toml(args.config, args.command) if args.config else {}
    merged.update(flags)
    seed_source = "flag/config"
    seed = merged.get("seed")
    if seed is None and os.environ.get(SEED_ENV):
        seed, seed_source = os.environ[SEED_ENV], "env"
    if seed is None:
        seed, seed_source = 0, "default"
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise UsageError(f"seed: not an integer: {seed!r}") from None
    workers = merged.get("workers")
    try:
        workers = (os.cpu_count() or 1) if workers is None else int(workers)
    except ValueError:
        raise UsageError(f"workers: not an integer: {workers!r}") from None
    if workers < 1:
        raise UsageError("workers: must be at least 1")
    values = {k: v for k, v in merged.items() if k not in _GENERIC}
    return ExperimentConfig(args.command, values, seed, seed_source, workers,
                            merged.get("out"), merged.get("csv"))


def _field(cfg: ExperimentConfig, key: str, conv, default=None, required=False):
    raw = cfg.require(key) if required else cfg.get(key, default)
    if raw is None:
        return None
    try:
        return conv(raw)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"{key}: {exc}") from None


# ---------------------------------------------------------------------------
# Commands


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_simulate(cfg: ExperimentConfig) -> int:
    mode = walk.Mode(_field(cfg, "mode", str, "p"))
    n = _field(cfg, "n", parse_count, required=True)
    kw = dict(mode=mode, n=n, dimension=_field(cfg, "dimension", parse_count, 1))
    if mode is walk.Mode.P:
        kw.update(alpha=_field(cfg, "alpha", _float, 2.0), p=_field(cfg, "p", lambda x: float(parse_rational(x)),
                                                                      required=True),
                  scale_alpha=_field(cfg, "scale", _float, 1.0))
    else:
        kw.update(q=_field(cfg, "q", lambda x: float(parse_rational(x)), required=True))
        if mode is walk.Mode.Q:
            kw.update(alpha=_field(cfg, "alpha", _float, 2.0), scale_alpha=_field(cfg, "scale", _float, 1.0))
        else:
            kw.update(erw_first_step=_field(cfg, "first_step", int))
    try:
        params = walk.ModelParams(**kw)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    traj = walk.simulate(params, RngStream(cfg.seed))
    _emit(traj.to_csv(cfg.metadata()), cfg.out)
    return EXIT_OK


def cmd_clusters(cfg: ExperimentConfig) -> int:
    n = _field(cfg, "n", parse_count, required=True)
    p = _field(cfg, "p", parse_rational, required=True)
    if not (0 < p < 1):
        raise UsageError("p: must lie in (0, 1)")
    if cfg.get("exact", False):
        try:
            law = rrt.enumerate_exact(n, p)
        except rrt.SizeError as exc:
            raise UsageError(f"n: {exc}") from None
        doc = json.loads(law.to_json(cfg.metadata()))
        doc["pmf"] = {str(k): float(v) for k, v in law.root_law().items()}
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", cfg.out)
    else:
        forest = rrt.grow(n, float(p), RngStream(cfg.seed))
        _emit(forest.to_csv(cfg.metadata()), cfg.out)
    return EXIT_OK


def cmd_yule(cfg: ExperimentConfig) -> int:
    n = _field(cfg, "n", parse_count, required=True)
    p = float(_field(cfg, "p", parse_rational, required=True))
    if not (0 < p < 1):
        raise UsageError("p: must lie in (0, 1)")
    state = yule.simulate_until_n(n, p, RngStream(cfg.seed))
    _emit(state.to_csv(cfg.metadata()), cfg.out)
    return EXIT_OK


def _as_list(x):
    return x if isinstance(x, list) else [x]


def cmd_constants(cfg: ExperimentConfig) -> int:
    # raw strings keep "3/4" exact and become the table keys
    alphas = [str(a).strip() for a in _as_list(cfg.require("alpha"))]
    ps = [str(q).strip() for q in _as_list(cfg.require("p"))]
    if len(ps) == 1 and len(alphas) > 1:
        ps = ps * len(alphas)
    if len(alphas) == 1 and len(ps) > 1:
        alphas = alphas * len(ps)
    if len(alphas) != len(ps):
        raise UsageError("alpha/p: give one p per alpha or a single shared value")
    try:
        text = analytics.dumps_constants(list(zip(alphas, ps)), cfg.metadata())
    except (analytics.DomainError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"alpha/p: {exc}") from None
    _emit(text, cfg.out)
    return EXIT_OK


_DEFAULT_N = {"sub": [10**3, 10**4], "crit": [10**4, 10**5, 10**6], "super": [2**k for k in range(10, 17)]}
_DEFAULT_REPS = {"sub": 1000, "crit": 200, "super": 500}


def cmd_verify(cfg: ExperimentConfig) -> int:
    reg = _field(cfg, "regime", str, required=True)
    if reg not in _DEFAULT_N:
        raise UsageError(f"regime: unknown value {reg!r}")
    alpha = _field(cfg, "alpha", parse_rational, required=True)
    p = _field(cfg, "p", parse_rational, required=True)
    if not (0 < alpha <= 2) or not (0 < p < 1):
        raise UsageError("alpha/p: need 0 < alpha <= 2 and 0 < p < 1")
    actual = analytics.regime(alpha, p)
    if actual != reg:
        raise UsageError(f"regime: requested {reg} but alpha*p puts ({alpha}, {p}) in {actual}")
    n_list = _field(cfg, "n", parse_count_list, _DEFAULT_N[reg])
    if reg == "super" and any(n & (n - 1) for n in n_list):
        raise UsageError("n: supercritical horizons must be powers of two")
    if not n_list or min(n_list) < 2:
        raise UsageError("n: horizons must be at least 2")
    reps = _field(cfg, "reps", parse_count, _DEFAULT_REPS[reg])
    if reps < 2:
        raise UsageError("reps: need at least 2 replicates")
    d = _field(cfg, "dimension", parse_count, 1)
    grid = verifier.default_theta_grid(
        d, _field(cfg, "theta_count", parse_count, 8),
        _field(cfg, "theta_min", _float, 0.1), _field(cfg, "theta_max", _float, 3.0))
    report = verifier.run_regime(reg, alpha, p, d=d, n_list=n_list, reps=reps, theta_grid=grid,
                                 rng=cfg.seed, workers=cfg.workers)
    meta = cfg.metadata()
    _emit(report.to_json(meta), cfg.out)
    csv_path = cfg.csv
    if csv_path is None and cfg.out is not None:
        csv_path = str(Path(cfg.out).with_suffix(".csv"))
    if csv_path is not None:
        _emit(report.to_csv(meta), csv_path)
    print(f"{report.regime}: {report.verdict}", file=sys.stderr)
    for t in report.tests:
        flag = "PASS" if t.passed else "FAIL"
        print(f"  {flag} {t.name}{'' if t.gated else ' (informational)'}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


HANDLERS = {"simulate": cmd_simulate, "clusters": cmd_clusters, "yule": cmd_yule,
            "constants": cmd_constants, "verify": cmd_verify}


def run(config: ExperimentConfig) -> int:
    return HANDLERS[config.command](config)


def main(argv=None) -> int:
    try:
        cfg = resolve_config(argv)
        return run(cfg)
    except UsageError as exc:
        print(f"sharkswim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, analytics.DomainError, verifier.RegimeMismatch) as exc:
        print(f"sharkswim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

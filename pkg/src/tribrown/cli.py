"""Command-line front end.

One job per process.  A job is described by key=value pairs collected from,
in increasing precedence: a config file (``--config``), repeated ``--set
key=value`` overrides, and the explicit flags (positional command, ``--out``,
``--seed``).  Identical config + seed reproduces byte-identical CSV output.

Config keys
-----------
command        density | pushforward | fkdet | domain | randmat-compare | selftest
model          inline model spec or path to a model file
alpha, beta    triangular parameters (both or neither)
t              circular parameter (mutually exclusive with alpha/beta)
gamma_re, gamma_im
eps            regularization (default 0)
xmin, xmax, ymin, ymax, nx, ny          evaluation window
target_*       push-forward target window (defaults to the source window)
scan_n         singular-scan resolution per axis (default 64)
n              matrix size for randmat-compare (default 200)
samples        number of matrix samples (default 4)
coarse_n       comparison bins per axis (default 8)
criteria       comma-separated criterion numbers for selftest (default all)
out            output directory
seed           RNG seed (default 0)
"""

import argparse
import os
import sys

from . import acceptance
from .backend import set_threads
from .density import domain_grid, fill_grid, fkdet_density_grid
from .models import NumericalFailure, resolve_model
from .pushforward import PushforwardMap, transport
from .randmat import (
    compare_spectrum,
    eigenvalues,
    sample_ensemble,
    score_report,
    write_eigenvalues_csv,
    x0_matrix,
)
from .subordination import EllipticParams

COMMANDS = ("density", "pushforward", "fkdet", "domain",
            "randmat-compare", "selftest")

_KEYS = {
    "command": str,
    "model": str,
    "alpha": float,
    "beta": float,
    "t": float,
    "gamma_re": float,
    "gamma_im": float,
    "eps": float,
    "xmin": float,
    "xmax": float,
    "ymin": float,
    "ymax": float,
    "nx": int,
    "ny": int,
    "target_xmin": float,
    "target_xmax": float,
    "target_ymin": float,
    "target_ymax": float,
    "target_nx": int,
    "target_ny": int,
    "scan_n": int,
    "n": int,
    "samples": int,
    "coarse_n": int,
    "criteria": str,
    "out": str,
    "seed": int,
}


class ConfigError(ValueError):
    pass


def parse_config_text(text, source="<config>"):
    """key = value lines; '#' comments; blank lines ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


class JobConfig:
    """Typed, validated job description.

    `raw` maps key -> string; types and cross-field constraints (exactly one
    of (alpha, beta) or t; gamma admissibility) are enforced here so every
    bad input fails at parse time, not mid-job.
    """

    def __init__(self, raw):
        for key in raw:
            if key not in _KEYS:
                raise ConfigError(f"unknown config key {key!r}")
        self.values = {}
        for key, value in raw.items():
            try:
                self.values[key] = _KEYS[key](value)
            except ValueError:
                raise ConfigError(
                    f"config key {key!r}: cannot parse {value!r} as "
                    f"{_KEYS[key].__name__}"
                ) from None
        command = self.values.get("command")
        if command not in COMMANDS:
            raise ConfigError(
                f"command must be one of {', '.join(COMMANDS)}; got {command!r}"
            )
        self.command = command
        self.out_dir = self.values.get("out", ".")
        self.seed = self.values.get("seed", 0)
        if command != "selftest":
            self._build_params()

    def _build_params(self):
        v = self.values
        has_ab = "alpha" in v or "beta" in v
        has_t = "t" in v
        if has_ab == has_t:
            raise ConfigError("supply exactly one of (alpha, beta) or t")
        gamma = complex(v.get("gamma_re", 0.0), v.get("gamma_im", 0.0))
        try:
            if has_t:
                self.params = EllipticParams.from_t(v["t"], gamma)
            else:
                if "alpha" not in v or "beta" not in v:
                    raise ConfigError("alpha and beta must be supplied together")
                self.params = EllipticParams(v["alpha"], v["beta"], gamma)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.eps = v.get("eps", 0.0)
        if self.eps < 0.0:
            raise ConfigError("eps must be >= 0")
        if "model" not in v:
            raise ConfigError(f"{self.command} requires a model")
        try:
            self.model = resolve_model(v["model"])
        except (ValueError, OSError) as exc:
            raise ConfigError(f"model: {exc}") from None
        for key in ("xmin", "xmax", "ymin", "ymax", "nx", "ny"):
            if key not in v:
                raise ConfigError(f"{self.command} requires {key}")
        self.bounds = (v["xmin"], v["xmax"], v["ymin"], v["ymax"])
        self.nx, self.ny = v["nx"], v["ny"]
        if self.nx < 2 or self.ny < 2:
            raise ConfigError("nx and ny must be >= 2")
        if self.bounds[1] <= self.bounds[0] or self.bounds[3] <= self.bounds[2]:
            raise ConfigError("window must satisfy xmin < xmax, ymin < ymax")

    def target_window(self):
        v = self.values
        bounds = (
            v.get("target_xmin", self.bounds[0]),
            v.get("target_xmax", self.bounds[1]),
            v.get("target_ymin", self.bounds[2]),
            v.get("target_ymax", self.bounds[3]),
        )
        return bounds, v.get("target_nx", self.nx), v.get("target_ny", self.ny)


def _out_path(cfg, name):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _run_density(cfg):
    grid = fill_grid(cfg.model, cfg.params, cfg.eps, cfg.bounds, cfg.nx, cfg.ny)
    grid.write_csv(_out_path(cfg, "density.csv"))


def _run_fkdet(cfg):
    grid = fkdet_density_grid(cfg.model, cfg.params.t_eff, cfg.bounds,
                              cfg.nx, cfg.ny)
    grid.write_csv(_out_path(cfg, "fkdet.csv"), column="delta")


def _run_domain(cfg):
    grid = domain_grid(cfg.model, cfg.params, cfg.bounds, cfg.nx, cfg.ny)
    grid.write_csv(_out_path(cfg, "domain.csv"), column="inside")


def _run_pushforward(cfg):
    source = fill_grid(cfg.model, cfg.params, cfg.eps, cfg.bounds,
                       cfg.nx, cfg.ny)
    source.write_csv(_out_path(cfg, "source.csv"))
    pmap = PushforwardMap(cfg.model, cfg.params, eps=cfg.eps)
    tbounds, tnx, tny = cfg.target_window()
    moved = transport(pmap, source, tbounds, tnx, tny)
    moved.write_csv(_out_path(cfg, "transported.csv"))
    lines = []
    if cfg.eps > 0.0:
        lines.append("epsilon > 0: map is a homeomorphism; scan not applicable")
    else:
        scan_n = cfg.values.get("scan_n", 64)
        hits = pmap.singular_scan(cfg.bounds, scan_n)
        lines.append(f"scan {scan_n}x{scan_n} over "
                     f"[{cfg.bounds[0]:g},{cfg.bounds[1]:g}]x"
                     f"[{cfg.bounds[2]:g},{cfg.bounds[3]:g}]: "
                     f"{len(hits)} cells with |det J| < {1e-6:g}")
        for lam, det in hits:
            lines.append(f"lambda = {lam.real:.17g} {lam.imag:+.17g}i  "
                         f"det = {det:.17g}")
    with open(_out_path(cfg, "singular_scan.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _run_randmat_compare(cfg):
    v = cfg.values
    n = v.get("n", 200)
    samples = v.get("samples", 4)
    if n < 2 or samples < 1:
        raise ConfigError("randmat-compare needs n >= 2 and samples >= 1")
    x0 = x0_matrix(cfg.model, n)
    eig_sets = [
        eigenvalues(x0 + sample_ensemble(n, cfg.params, cfg.seed, k).matrix)
        for k in range(samples)
    ]
    write_eigenvalues_csv(_out_path(cfg, "eigenvalues.csv"), eig_sets)
    predicted = fill_grid(cfg.model, cfg.params, 0.0, cfg.bounds,
                          cfg.nx, cfg.ny)
    score = compare_spectrum(eig_sets, predicted, v.get("coarse_n", 8))
    with open(_out_path(cfg, "score.txt"), "w") as fh:
        fh.write(score_report(score))


def _run_selftest(cfg):
    nums = None
    if "criteria" in cfg.values:
        try:
            nums = {int(tok) for tok in cfg.values["criteria"].split(",") if tok}
        except ValueError:
            raise ConfigError("criteria must be comma-separated integers") from None
    results = acceptance.run_all(nums=nums)
    return 0 if all(r.passed for r in results) else 1


def run(cfg):
    """Execute a validated JobConfig; returns the process exit code."""
    try:
        if cfg.command == "selftest":
            return _run_selftest(cfg)
        dispatch = {
            "density": _run_density,
            "fkdet": _run_fkdet,
            "domain": _run_domain,
            "pushforward": _run_pushforward,
            "randmat-compare": _run_randmat_compare,
        }
        dispatch[cfg.command](cfg)
        return 0
    except ConfigError:
        raise
    except NumericalFailure as exc:
        lam = getattr(exc, "lam", None)
        where = f" at lambda = {lam}" if lam is not None else ""
        print(f"error: numerical failure{where}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # configuration that only fails once the job runs (e.g. atom weights
        # irrepresentable at the requested matrix size)
        raise ConfigError(str(exc)) from None
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tribrown",
        description="Brown-measure grids for x0 plus a (triangular) elliptic "
                    "operator: densities, determinants, push-forwards, and "
                    "random-matrix comparisons.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="job to run (may also come from the config file)")
    parser.add_argument("--config", metavar="PATH",
                        help="key=value config file")
    parser.add_argument("--set", metavar="K=V", action="append", default=[],
                        dest="overrides", help="override one config key")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default '.')")
    parser.add_argument("--threads", type=int, default=0, metavar="N",
                        help="numba worker threads (0 = library default)")
    parser.add_argument("--seed", type=int, metavar="U64", help="RNG seed")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports and exits; keep it in-process
        return exc.code if exc.code is not None else 0

    raw = {}
    try:
        if args.config is not None:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 4
            raw.update(parse_config_text(text, source=args.config))
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            key, _, value = item.partition("=")
            raw[key.strip()] = value.strip()
        if args.command is not None:
            raw["command"] = args.command
        if args.out is not None:
            raw["out"] = args.out
        if args.seed is not None:
            raw["seed"] = str(args.seed)
        if args.threads:
            set_threads(args.threads)
        cfg = JobConfig(raw)
        return run(cfg)
    except ValueError as exc:  # ConfigError included
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

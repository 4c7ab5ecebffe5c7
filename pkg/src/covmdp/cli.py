"""Command-line driver.

Exit codes: 0 success, 1 invalid configuration, 2 runtime or I/O failure.
Every report carries the tool version, the configuration echo (execution-only
settings such as ``workers`` and output paths excluded), the seed and the
SHA-256 of the profile probabilities; no timestamps are written, so reruns
with the same configuration produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import __version__
from .conditions import limit_report
from .exceptions import ConfigInvalid
from .inference import (
    ORACLE_B,
    SELF_NORMALIZED,
    coverage_test,
    oracle_ci,
    self_normalized_ci,
    two_population_test,
)
from .io import atomic_write_text, csv_text, json_text, jsonl_text
from .moments import expected_missing_mass, moment_summary, variance_constant_b
from .population import build_profile, exponential_family, load_profile, save_profile
from .rng import check_seed
from .sampling import OccupancySummary
from .scaling import TabulatedScaling, power_scaling
from . import simulation as sim

log = logging.getLogger("covmdp")

SEED_ENV = "COVMDP_SEED"
EXECUTION_ONLY = {"workers", "out", "records", "config", "format"}
CSV_SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None
    workers: int = 1
    out: Optional[str] = None
    format: str = "csv"

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "params": dict(self.params),
            "seed": self.seed,
            "workers": self.workers,
            "out": self.out,
            "format": self.format,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(
            command=data["command"],
            params=dict(data.get("params", {})),
            seed=data.get("seed"),
            workers=int(data.get("workers", 1)),
            out=data.get("out"),
            format=data.get("format", "csv"),
        )

    def echo(self) -> dict:
        """Configuration as embedded in reports."""
        return {
            "command": self.command,
            "params": {k: v for k, v in sorted(self.params.items()) if k not in EXECUTION_ONLY},
            "seed": self.seed,
        }


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigInvalid(message)


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigInvalid(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ConfigInvalid(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in vals]


def _family_flags(p):
    p.add_argument("--family", choices=["uniform", "power_law", "exponential", "custom"])
    p.add_argument("--k", type=int, help="number of species (uniform)")
    p.add_argument("--a", type=float, default=1.0, help="power-law scale")
    p.add_argument("--b", type=float, help="power-law exponent (> 1)")
    p.add_argument("--r", type=float, help="exponential rate parameter")
    p.add_argument("--tail-tol", type=float, help="truncated tail mass bound")
    p.add_argument("--weights", help="comma-separated weights (custom)")


def _scaling_flags(p):
    p.add_argument("--gamma", type=float, help="power scale a(t) = t^gamma, 1/2 < gamma < 1")
    p.add_argument("--scaling-csv", help="tabulated a(t) as a two-column CSV (t, a_of_t)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="covmdp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"covmdp {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("profile", help="build a species profile and write it as JSON")
    _family_flags(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("moments", help="exact moment summary of a profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("check-conditions", help="finite-grid report of the limit conditions")
    p.add_argument("--profile", help="fixed profile JSON")
    p.add_argument("--r-per-n", type=float, help="exponential family with r_n = r_per_n * n")
    p.add_argument("--tail-tol", type=float, default=1e-10)
    p.add_argument("--n-grid", required=True)
    p.add_argument("--eps", default="1")
    _scaling_flags(p)
    p.add_argument("--out")

    p = sub.add_parser("ci", help="confidence interval for the missing mass")
    p.add_argument("--f1", type=int)
    p.add_argument("--f2", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--counts", help="file of whitespace/comma separated species counts")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--kind", choices=[SELF_NORMALIZED, ORACLE_B], default=SELF_NORMALIZED)
    p.add_argument("--b-value", type=float, help="b(n) for the oracle interval")
    p.add_argument("--profile", help="profile JSON to compute b(n) for the oracle interval")
    p.add_argument("--out")

    p = sub.add_parser("test", help="moderate-deviation hypothesis tests")
    p.add_argument("--kind", choices=["coverage", "two_population"], default="two_population")
    p.add_argument("--f1", type=int)
    p.add_argument("--f2", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--counts")
    p.add_argument("--null-profile", help="profile under H0; supplies u0 and b0")
    p.add_argument("--alt-profile", help="profile under H1; supplies u1 (two_population)")
    p.add_argument("--u0", type=float)
    p.add_argument("--b0", type=float)
    p.add_argument("--c", type=float, required=True)
    _scaling_flags(p)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="Monte Carlo experiments")
    p.add_argument("experiment", choices=["tails", "coverage", "gap", "na", "ks"])
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--profile")
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--t", help="comma-separated thresholds (tails)")
    p.add_argument("--kind", choices=[sim.ORACLE, sim.SELF_NORMALIZED])
    p.add_argument("--alpha", type=float)
    p.add_argument("--subset", help="comma-separated 1-based species indices (na)")
    p.add_argument("--r-exp", type=float, help="exponent r of the moment inequality (na)")
    p.add_argument("--ks-threshold", type=float)
    _scaling_flags(p)
    p.add_argument("--format", choices=["csv", "json", "jsonl"])
    p.add_argument("--records", help="JSONL file of per-replication records (tails)")
    p.add_argument("--out")
    return parser


# --------------------------------------------------------------------------


def _scaling(params):
    if params.get("scaling_csv"):
        return TabulatedScaling.from_csv(params["scaling_csv"])
    if params.get("gamma") is None:
        raise ConfigInvalid("--gamma (or --scaling-csv) is required")
    return power_scaling(params["gamma"])


def _resolve_seed(value) -> int:
    if value is None:
        env = os.environ.get(SEED_ENV)
        if env is None:
            raise ConfigInvalid(f"a seed is required (--seed or ${SEED_ENV})")
        value = env
    try:
        return check_seed(int(value))
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from exc


def _report(cfg: ExperimentConfig, profile_hash: Optional[str], result) -> dict:
    return {
        "tool": "covmdp",
        "version": __version__,
        "config": cfg.echo(),
        "seed": cfg.seed,
        "profile_sha256": profile_hash,
        "result": result,
    }


def _csv_comments(cfg: ExperimentConfig, profile_hash, schema: str) -> list:
    return [
        f"covmdp {__version__}",
        f"schema {schema}/{CSV_SCHEMA_VERSION}",
        "config " + json.dumps(cfg.echo(), sort_keys=True),
        f"seed {cfg.seed}",
        f"profile_sha256 {profile_hash}",
    ]


def _emit(path: Optional[str], text: str) -> None:
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def _summary_from(params) -> OccupancySummary:
    if params.get("counts"):
        with open(params["counts"]) as fh:
            raw = fh.read().replace(",", " ").split()
        counts = [int(v) for v in raw]
        return OccupancySummary.from_counts(counts)
    if params.get("f1") is None or params.get("n") is None:
        raise ConfigInvalid("give --counts or both --f1 and --n")
    f2 = params.get("f2") or 0
    if params["n"] < 1 or params["f1"] < 0 or f2 < 0 or params["f1"] + 2 * f2 > params["n"]:
        raise ConfigInvalid("need n >= 1, F1, F2 >= 0 and F1 + 2 F2 <= n")
    freq = {1: params["f1"], 2: f2}
    freq = {j: f for j, f in freq.items() if f}
    return OccupancySummary(F=freq, n=params["n"])


def cmd_profile(cfg: ExperimentConfig):
    p = cfg.params
    fam = p.get("family")
    if fam is None:
        raise ConfigInvalid("--family is required")
    kwargs = {}
    if fam == "uniform":
        if p.get("k") is None:
            raise ConfigInvalid("--k is required for the uniform family")
        kwargs = {"K": p["k"]}
    elif fam == "power_law":
        if p.get("b") is None or p.get("tail_tol") is None:
            raise ConfigInvalid("--b and --tail-tol are required for the power law")
        kwargs = {"a": p.get("a", 1.0), "b": p["b"], "tail_tol": p["tail_tol"]}
    elif fam == "exponential":
        if p.get("r") is None or p.get("tail_tol") is None:
            raise ConfigInvalid("--r and --tail-tol are required for the exponential family")
        kwargs = {"r": p["r"], "tail_tol": p["tail_tol"]}
    else:
        if not p.get("weights"):
            raise ConfigInvalid("--weights is required for a custom profile")
        kwargs = {"weights": _floats(p["weights"])}
    profile = build_profile(fam, **kwargs)
    save_profile(profile, cfg.out)
    log.info("wrote %d species to %s", profile.n_species, cfg.out)


def cmd_moments(cfg: ExperimentConfig):
    profile = load_profile(cfg.params["profile"])
    ms = moment_summary(profile, cfg.params["n"])
    _emit(cfg.out, json_text(_report(cfg, profile.content_hash(), ms.to_dict())))


def cmd_check_conditions(cfg: ExperimentConfig):
    p = cfg.params
    if bool(p.get("profile")) == bool(p.get("r_per_n")):
        raise ConfigInvalid("give exactly one of --profile or --r-per-n")
    if p.get("profile"):
        family = load_profile(p["profile"])
        phash = family.content_hash()
    else:
        family = exponential_family(p["r_per_n"], p.get("tail_tol", 1e-10))
        phash = None
    report = limit_report(family, _ints(p["n_grid"]), _scaling(p), _floats(p.get("eps", "1")))
    _emit(cfg.out, json_text(_report(cfg, phash, report.to_dict())))


def cmd_ci(cfg: ExperimentConfig):
    p = cfg.params
    summary = _summary_from(p)
    phash = None
    if p.get("kind") == ORACLE_B:
        b = p.get("b_value")
        if p.get("profile"):
            profile = load_profile(p["profile"])
            phash = profile.content_hash()
            b = variance_constant_b(profile, summary.n)
        if b is None:
            raise ConfigInvalid("the oracle interval needs --b-value or --profile")
        ci = oracle_ci(summary.f1 / summary.n, summary.n, b, p["alpha"])
    else:
        ci = self_normalized_ci(summary, p["alpha"])
    _emit(cfg.out, json_text(_report(cfg, phash, ci.to_dict())))


def cmd_test(cfg: ExperimentConfig):
    p = cfg.params
    summary = _summary_from(p)
    a = _scaling(p)
    u0, b0, phash = p.get("u0"), p.get("b0"), None
    if p.get("null_profile"):
        null = load_profile(p["null_profile"])
        phash = null.content_hash()
        u0 = expected_missing_mass(null, summary.n)
        b0 = variance_constant_b(null, summary.n)
    if u0 is None or b0 is None:
        raise ConfigInvalid("give --null-profile or both --u0 and --b0")
    if p["kind"] == "coverage":
        decision = coverage_test(summary, u0, a, b0, p["c"])
    else:
        u1 = None
        if p.get("alt_profile"):
            u1 = expected_missing_mass(load_profile(p["alt_profile"]), summary.n)
        decision = two_population_test(summary, u0, a, b0, p["c"], u1=u1)
    result = dict(decision.to_dict(), u0=u0, b0=b0)
    _emit(cfg.out, json_text(_report(cfg, phash, result)))


SIM_DEFAULTS = {
    "kind": sim.ORACLE,
    "alpha": 0.05,
    "ks_threshold": sim.KS_THRESHOLD,
    "r_exp": 1.0,
}


def cmd_simulate(cfg: ExperimentConfig):
    p = cfg.params
    exp = p["experiment"]
    for key in ("profile", "n", "reps"):
        if p.get(key) is None:
            raise ConfigInvalid(f"simulate {exp} needs --{key}")
    profile = load_profile(p["profile"])
    phash = profile.content_hash()
    n, reps, seed, workers = p["n"], p["reps"], cfg.seed, cfg.workers
    records = None
    if exp == "tails":
        if not p.get("t"):
            raise ConfigInvalid("simulate tails needs --t")
        est, reps_data = sim.tail_experiment(
            profile, n, _floats(p["t"]), reps, seed, p["kind"], workers, return_replications=True
        )
        header, rows = sim.TailEstimate.CSV_HEADER, [e.row() for e in est]
        result = [dict(zip(header, r)) for r in rows]
        if p.get("records"):
            records = [
                {
                    "rep": i,
                    "f1": int(reps_data["f1"][i]),
                    "f2": int(reps_data["f2"][i]),
                    "q_true": float(reps_data["q"][i]),
                    "xi": float(reps_data["xi"][i]),
                    "statistic": float(reps_data["statistic"][i]),
                }
                for i in range(reps)
            ]
    elif exp == "coverage":
        kind = SELF_NORMALIZED if p.get("kind") == sim.SELF_NORMALIZED else sim.ORACLE
        rec = sim.ci_coverage_experiment(profile, n, p["alpha"], reps, seed, kind, workers)
        header, rows = rec.CSV_HEADER, [rec.row()]
        result = dict(zip(header, rows[0]))
    elif exp == "gap":
        rec = sim.poissonization_gap_experiment(profile, n, reps, seed, _scaling(p), workers)
        header, rows = rec.CSV_HEADER, [rec.row()]
        result = dict(zip(header, rows[0]))
    elif exp == "na":
        if not p.get("subset"):
            raise ConfigInvalid("simulate na needs --subset")
        res = sim.na_inequality_check(profile, n, _ints(p["subset"]), p["r_exp"], reps, seed, workers)
        header = ("mc_lhs", "mc_stderr", "analytic_rhs", "holds")
        rows = [tuple(getattr(res, h) for h in header)]
        result = dict(zip(header, rows[0]))
    else:
        res = sim.clt_ks_check(profile, n, reps, seed, workers, p["ks_threshold"])
        header = ("ks_distance", "passed", "threshold", "reps", "flags")
        rows = [(res.ks_distance, res.passed, res.threshold, res.reps, ";".join(res.flags))]
        result = dict(zip(header, rows[0]))
    if cfg.format == "json":
        text = json_text(_report(cfg, phash, result))
    elif cfg.format == "jsonl":
        tag = {"seed": cfg.seed, "profile_sha256": phash}
        text = jsonl_text([dict(r, **tag) for r in (result if isinstance(result, list) else [result])])
    else:
        text = csv_text(header, rows, _csv_comments(cfg, phash, exp))
    _emit(cfg.out, text)
    if records is not None:
        atomic_write_text(p["records"], jsonl_text(records))


COMMANDS = {
    "profile": cmd_profile,
    "moments": cmd_moments,
    "check-conditions": cmd_check_conditions,
    "ci": cmd_ci,
    "test": cmd_test,
    "simulate": cmd_simulate,
}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    params = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    if args.command == "simulate":
        file_params = {}
        if params.get("config"):
            try:
                with open(params["config"]) as fh:
                    file_params = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigInvalid(f"cannot read config {params['config']}: {exc}") from exc
            if not isinstance(file_params, dict):
                raise ConfigInvalid("config file must hold a JSON object")
            file_params = {k.replace("-", "_"): v for k, v in file_params.items()}
        flags = {k: v for k, v in params.items() if v is not None}
        params = {**SIM_DEFAULTS, **file_params, **flags}
        if isinstance(params.get("t"), list):
            params["t"] = ",".join(str(v) for v in params["t"])
        if isinstance(params.get("subset"), list):
            params["subset"] = ",".join(str(v) for v in params["subset"])
        seed = _resolve_seed(params.pop("seed", None))
        workers = int(params.pop("workers", 1) or 1)
        if workers < 1:
            raise ConfigInvalid("--workers must be positive")
        fmt = params.get("format") or "csv"
        params.pop("config", None)
    else:
        seed, workers, fmt = None, 1, "json"
    return ExperimentConfig(args.command, params, seed, workers, params.get("out"), fmt)


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="covmdp: %(message)s",
            stream=sys.stderr,
        )
        cfg = config_from_args(args)
        COMMANDS[cfg.command](cfg)
    except (KeyError, ValueError) as exc:  # ConfigInvalid and CoverageError included
        print(f"covmdp: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"covmdp: I/O failure: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and signal runtime failure
        print(f"covmdp: runtime error: {exc!r}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

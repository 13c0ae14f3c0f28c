"""Command-line interface: simulation runs, theory curves, comparisons,
and figure-reproduction grids, all emitted as plot-ready CSV.

Subcommands: simulate | theory | compare | figure1 | figure3a | figure3b.
Values come from defaults, then an optional JSON config file (--config),
then explicit flags, in that order of precedence.  Exit codes: 0 on
success, 2 for configuration errors, 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

from .branching import case1b_fixation_prob, moderate_n_fixation_prob
from .forward import theorem_fixation_prob
from .harness import EstimateWithCI, sweep
from .model import ModelParams, TYPES
from .scenarios import ARRIVAL_IN_00, ARRIVAL_IN_01, ScenarioConfig

_CONFIG_KEYS = {
    "two_n", "sigma", "gamma", "rho", "rho_2n", "zeta", "u", "trials", "seed",
    "threads", "out", "ci_mult", "absorbing_delta11", "arrival", "target",
    "method", "z_max", "against", "event_cap",
}

SIM_COLUMNS = [
    "two_n", "sigma", "gamma", "rho", "rho_2n", "zeta", "u", "arrival",
    "target", "trials", "seed", "p_hat", "se", "ci_low", "ci_high",
    "n_trials", "n_censored", "events_total", "wall_time_s", "error",
]
THEORY_COLUMNS = [
    "two_n", "sigma", "gamma", "rho", "rho_2n", "zeta", "method", "value",
    "error",
]
COMPARE_COLUMNS = [
    "two_n", "sigma", "gamma", "rho", "rho_2n", "zeta", "p_hat", "se",
    "theory", "abs_diff", "z",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _parse_number_list(text: str) -> list[float]:
    return [float(part) for part in str(text).split(",") if part.strip() != ""]


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--two-n", dest="two_n", help="population size 2N (comma list allowed)")
    parser.add_argument("--sigma", type=float, help="selective advantage of the newer mutation")
    parser.add_argument("--gamma", type=float, help="advantage ratio: older mutation has sigma*gamma")
    rho = parser.add_mutually_exclusive_group()
    rho.add_argument("--rho", help="recombination rate (comma list allowed)")
    rho.add_argument("--rho-2n", dest="rho_2n", help="rho * 2N (comma list allowed)")
    init = parser.add_mutually_exclusive_group()
    init.add_argument("--zeta", type=float, help="older-sweep progress exponent in (0,1)")
    init.add_argument("--u", type=int, help="explicit count of older-mutation carriers")
    parser.add_argument("--arrival", choices=[ARRIVAL_IN_00, ARRIVAL_IN_01],
                        help="background of the new mutation (default in_00)")
    parser.add_argument("--target", choices=list(TYPES), help="type whose fixation is estimated (default 11)")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
    parser.add_argument("--seed", type=int, help="master seed (per-point and per-trial seeds derive from it)")
    parser.add_argument("--threads", type=int,
                        help="worker threads; when absent, MORANSWEEP_THREADS or CPU count")
    parser.add_argument("--out", help="output CSV path (default: stdout)")
    parser.add_argument("--ci-mult", dest="ci_mult", type=float,
                        help="report normal intervals p_hat +- MULT*se instead of Wilson")
    parser.add_argument("--absorbing-delta11", dest="absorbing_delta11",
                        choices=["true", "false"],
                        help="top-level boundary of the establishment walk (default true)")
    parser.add_argument("--event-cap", dest="event_cap", type=int,
                        help="per-trial event cap (default 1e12); exceeding it censors the trial")


class Settings:
    """Merged configuration with precedence defaults < file < flags."""

    DEFAULTS = {
        "sigma": 0.02,
        "gamma": 0.6,
        "arrival": ARRIVAL_IN_00,
        "target": "11",
        "trials": 1000,
        "seed": 0,
        "threads": None,
        "out": None,
        "ci_mult": None,
        "absorbing_delta11": "true",
        "method": "auto",
        "z_max": 3.0,
        "against": None,
        "event_cap": 10**12,
    }

    def __init__(self, args: argparse.Namespace):
        merged = dict(self.DEFAULTS)
        if getattr(args, "config", None):
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
            unknown = set(loaded) - _CONFIG_KEYS
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            merged.update(loaded)
        for key in _CONFIG_KEYS:
            value = getattr(args, key, None)
            if value is not None:
                merged[key] = value
        if merged.get("rho") is not None and merged.get("rho_2n") is not None:
            raise ValueError("rho and rho_2n are mutually exclusive")
        if merged.get("zeta") is not None and merged.get("u") is not None:
            raise ValueError("zeta and u are mutually exclusive")
        self.values = merged

    def get(self, key, default=None):
        return self.values.get(key, default)

    def two_n_list(self, default=None) -> list[int]:
        raw = self.values.get("two_n")
        if raw is None:
            if default is None:
                raise ValueError("two_n is required")
            return list(default)
        return [int(x) for x in _parse_number_list(raw)]

    def rho_list(self, two_n: int, default_rho_2n=None) -> list[float]:
        """Per-point recombination rates for one population size."""
        if self.values.get("rho") is not None:
            return _parse_number_list(self.values["rho"])
        if self.values.get("rho_2n") is not None:
            return [r / two_n for r in _parse_number_list(self.values["rho_2n"])]
        if default_rho_2n is not None:
            return [r / two_n for r in default_rho_2n]
        raise ValueError("one of rho / rho_2n is required")

    @property
    def boundary(self) -> str:
        return "absorbing" if str(self.get("absorbing_delta11")) == "true" else "verbatim"


def _grid_configs(settings: Settings, default_two_n=None, default_rho_2n=None,
                  zeta_default=None) -> list[ScenarioConfig]:
    zeta = settings.get("zeta")
    u = settings.get("u")
    if zeta is None and u is None:
        if zeta_default is None:
            raise ValueError("one of zeta / u is required")
        zeta = zeta_default
    configs = []
    for two_n in settings.two_n_list(default_two_n):
        for rho in settings.rho_list(two_n, default_rho_2n):
            params = ModelParams(two_n=two_n, sigma=settings.get("sigma"),
                                 gamma=settings.get("gamma"), rho=rho)
            configs.append(
                ScenarioConfig(
                    params=params,
                    arrival_type=settings.get("arrival"),
                    zeta=zeta if u is None else None,
                    u_count=int(u) if u is not None else None,
                )
            )
    return configs


def _interval(est: EstimateWithCI, ci_mult) -> tuple[float, float]:
    if ci_mult is None:
        return est.ci_low, est.ci_high
    return est.normal_interval(float(ci_mult))


def _write_csv(out_path, columns, rows, trailer: str | None = None) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    if trailer is not None:
        buffer.write(trailer + "\n")
    data = buffer.getvalue()
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)


def _simulate_rows(settings: Settings, configs: list[ScenarioConfig]) -> list[dict]:
    trials = int(settings.get("trials"))
    rows = []
    results = sweep(
        configs,
        trials,
        int(settings.get("seed")),
        target_type=settings.get("target"),
        threads=settings.get("threads"),
        event_cap=int(settings.get("event_cap")),
    )
    for result in results:
        config = result.config
        row = {
            "two_n": config.params.two_n,
            "sigma": config.params.sigma,
            "gamma": config.params.gamma,
            "rho": config.params.rho,
            "rho_2n": config.params.rho_two_n,
            "zeta": config.zeta,
            "u": config.resolved_u,
            "arrival": config.arrival_type,
            "target": result.target_type,
            "trials": trials,
            "seed": settings.get("seed"),
            "wall_time_s": result.wall_time_s,
            "events_total": result.events_total,
            "error": result.error,
        }
        if result.estimate is not None:
            est = result.estimate
            low, high = _interval(est, settings.get("ci_mult"))
            row.update(
                p_hat=est.p_hat, se=est.se, ci_low=low, ci_high=high,
                n_trials=est.n_trials, n_censored=est.n_censored,
            )
        rows.append(row)
    return rows


def _theory_value(settings: Settings, params: ModelParams, zeta: float) -> tuple[str, float]:
    method = settings.get("method")
    boundary = settings.boundary
    if method == "auto":
        method = "thm31" if zeta < params.gamma else "case1b"
    if method == "thm31":
        return method, theorem_fixation_prob(params, zeta, boundary=boundary)
    if method == "case1b":
        return method, case1b_fixation_prob(params, zeta, boundary=boundary)
    if method == "moderate_n":
        return method, moderate_n_fixation_prob(params, zeta, boundary=boundary)
    raise ValueError(f"unknown theory method {method!r}")


def _theory_rows(settings: Settings, default_two_n=None, default_rho_2n=None,
                 zeta_default=None) -> list[dict]:
    zeta = settings.get("zeta")
    if zeta is None:
        if zeta_default is None:
            raise ValueError("theory values need zeta")
        zeta = zeta_default
    rows = []
    for two_n in settings.two_n_list(default_two_n):
        for rho in settings.rho_list(two_n, default_rho_2n):
            params = ModelParams(two_n=two_n, sigma=settings.get("sigma"),
                                 gamma=settings.get("gamma"), rho=rho)
            row = {
                "two_n": two_n, "sigma": params.sigma, "gamma": params.gamma,
                "rho": rho, "rho_2n": params.rho_two_n, "zeta": zeta,
            }
            try:
                method, value = _theory_value(settings, params, zeta)
                row.update(method=method, value=value, error=None)
            except (ValueError, RuntimeError) as exc:
                row.update(method=settings.get("method"), value=None, error=str(exc))
            rows.append(row)
    return rows


def cmd_simulate(settings: Settings) -> int:
    configs = _grid_configs(settings)
    _write_csv(settings.get("out"), SIM_COLUMNS, _simulate_rows(settings, configs))
    return 0


def cmd_theory(settings: Settings) -> int:
    _write_csv(settings.get("out"), THEORY_COLUMNS, _theory_rows(settings))
    return 0


def _read_against(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        return list(reader)


def cmd_compare(settings: Settings) -> int:
    theory_rows = _theory_rows(settings)
    if settings.get("against"):
        sim_rows = _read_against(settings.get("against"))
        if len(sim_rows) != len(theory_rows):
            raise ValueError(
                f"mismatched grids: {len(sim_rows)} rows in {settings.get('against')}, "
                f"{len(theory_rows)} theory points"
            )
        for sim, theory in zip(sim_rows, theory_rows):
            for key in ("two_n", "rho_2n"):
                if not math.isclose(float(sim[key]), float(theory[key]), rel_tol=1e-9):
                    raise ValueError(
                        f"mismatched grids: {key}={sim[key]} vs {theory[key]}"
                    )
        points = [
            (float(sim.get("p_hat") or sim["value"]), float(sim.get("se") or 0.0))
            for sim in sim_rows
        ]
    else:
        configs = _grid_configs(settings)
        sim_rows = _simulate_rows(settings, configs)
        failed = [r for r in sim_rows if r.get("error")]
        if failed:
            raise RuntimeError(f"simulation failed at {len(failed)} grid points")
        points = [(row["p_hat"], row["se"]) for row in sim_rows]

    rows = []
    z_values = []
    for (p_hat, se), theory in zip(points, theory_rows):
        if theory.get("error"):
            raise RuntimeError(f"theory failed: {theory['error']}")
        diff = abs(p_hat - theory["value"])
        if se > 0:
            z = (p_hat - theory["value"]) / se
        else:
            z = 0.0 if diff == 0.0 else math.inf
        z_values.append(abs(z))
        rows.append({
            "two_n": theory["two_n"], "sigma": theory["sigma"],
            "gamma": theory["gamma"], "rho": theory["rho"],
            "rho_2n": theory["rho_2n"], "zeta": theory["zeta"],
            "p_hat": p_hat, "se": se, "theory": theory["value"],
            "abs_diff": diff, "z": z,
        })
    z_max = float(settings.get("z_max"))
    verdict = "PASS" if all(z <= z_max for z in z_values) else "FAIL"
    trailer = f"# verdict: {verdict} (max |z| = {_fmt(max(z_values))}, allowed {_fmt(z_max)})"
    _write_csv(settings.get("out"), COMPARE_COLUMNS, rows, trailer=trailer)
    return 0


def cmd_figure1(settings: Settings) -> int:
    """Fixation probability of the double mutant against population size
    at fixed recombination rate (newer advantage 0.02, older 0.012)."""
    if settings.get("ci_mult") is None:
        settings.values["ci_mult"] = 2.0
    if settings.get("zeta") is None and settings.get("u") is None:
        settings.values["zeta"] = 0.3
    if settings.get("rho") is None and settings.get("rho_2n") is None:
        settings.values["rho"] = "4e-5"
    configs = _grid_configs(settings, default_two_n=[250, 500, 1000, 2000, 4000])
    _write_csv(settings.get("out"), SIM_COLUMNS, _simulate_rows(settings, configs))
    return 0


def _figure3(settings: Settings, default_two_n, default_rho_2n) -> int:
    if settings.get("ci_mult") is None:
        settings.values["ci_mult"] = 1.0
    zeta_default = 0.3
    configs = _grid_configs(settings, default_two_n=default_two_n,
                            default_rho_2n=default_rho_2n, zeta_default=zeta_default)
    sim_rows = _simulate_rows(settings, configs)
    theory_rows = _theory_rows(settings, default_two_n=default_two_n,
                               default_rho_2n=default_rho_2n, zeta_default=zeta_default)
    for sim, theory in zip(sim_rows, theory_rows):
        sim["theory"] = theory["value"]
        sim["method"] = theory["method"]
        if theory["error"] and not sim.get("error"):
            sim["error"] = theory["error"]
    columns = SIM_COLUMNS[:-1] + ["theory", "method", "error"]
    _write_csv(settings.get("out"), columns, sim_rows)
    return 0


def cmd_figure3a(settings: Settings) -> int:
    """Sweep over population size at fixed rho*2N = 0.2."""
    return _figure3(settings, default_two_n=[1000, 4000, 16000],
                    default_rho_2n=[0.2])


def cmd_figure3b(settings: Settings) -> int:
    """Sweep over rho*2N at fixed population size."""
    return _figure3(settings, default_two_n=[4000],
                    default_rho_2n=[0.05, 0.1, 0.2, 0.5, 1.0, 2.0])


_COMMANDS = {
    "simulate": cmd_simulate,
    "theory": cmd_theory,
    "compare": cmd_compare,
    "figure1": cmd_figure1,
    "figure3a": cmd_figure3a,
    "figure3b": cmd_figure3b,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moransweep",
        description="Competing-sweep Moran simulations and fixation-probability theory curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        cmd = sub.add_parser(name, help=(fn.__doc__ or "").split("\n")[0])
        _add_common_flags(cmd)
        if name == "theory" or name == "compare":
            cmd.add_argument("--method", choices=["auto", "thm31", "case1b", "moderate_n"],
                             help="theory estimator (auto: thm31 if zeta < gamma else case1b)")
        if name == "compare":
            cmd.add_argument("--against", help="existing simulate/theory CSV to compare with")
            cmd.add_argument("--z-max", dest="z_max", type=float,
                             help="PASS threshold on |z| (default 3)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings(args)
        return _COMMANDS[args.command](settings)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

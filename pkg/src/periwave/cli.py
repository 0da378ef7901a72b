"""Batch front door: solve, certify, sweep, evolve.

Exit codes: 0 success, 1 configuration error, 2 solver failure,
3 certification prerequisites failed (inconclusive verdict),
4 sweep aborted partway (partial results flushed), 5 blowup detected.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    constraint_from_config,
    grid_from_config,
    load_config,
    nonlinearity_from_config,
    symbol_from_config,
)
from .evolution import (
    BlowupError,
    EvolutionConfig,
    mass,
    momentum,
    stability_experiment,
)
from .io import (
    atomic_write_text,
    canonical_json,
    config_hash,
    format_float,
    load_wave,
    save_eigenvalues_csv,
    save_trace_csv,
    save_wave,
)
from .spectral import Field
from .stability import certify, curve_criterion, lyapunov_sigma
from .waves import (
    SolverError,
    TravelingWave,
    bbm_dnoidal_wave,
    cnoidal_wave,
    continue_family,
    ilw_wave,
    solve_newton,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVE = 2
EXIT_PREREQUISITES = 3
EXIT_SWEEP_PARTIAL = 4
EXIT_BLOWUP = 5


def _worker_count() -> int:
    raw = os.environ.get("PERIWAVE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _stamp(config: dict) -> dict:
    return {"config_sha256": config_hash(config), "tool_version": __version__}


def _write_json(payload: dict, config: dict, path: str):
    payload = dict(payload)
    payload.update(_stamp(config))
    atomic_write_text(path, canonical_json(payload))


def _outdir(config: dict, cli_out: str | None) -> str:
    out = cli_out or config["output"]["directory"]
    os.makedirs(out, exist_ok=True)
    return out


def _solve_wave(config: dict) -> TravelingWave:
    """Build the configured wave: closed form, optionally Newton-polished."""
    grid = grid_from_config(config)
    symbol = symbol_from_config(config)
    nl = nonlinearity_from_config(config)
    solve = config.get("solve", {})
    guess_spec = solve.get("guess")
    if guess_spec is None:
        raise ConfigError("solve.guess section is required")
    variant = config["equation"].get("variant", "standard")
    kind = guess_spec["type"]
    tol = solve.get("tol", 1e-10)
    max_iter = solve.get("max_iter", 50)

    if kind == "cnoidal":
        wave = cnoidal_wave(grid.length, guess_spec["k"], grid.size)
    elif kind == "bbm_dnoidal":
        wave = bbm_dnoidal_wave(grid.length, guess_spec["k"], grid.size)
    elif kind == "ilw":
        wave = ilw_wave(grid.length, guess_spec["delta"], guess_spec["k"], grid.size)
    else:  # cosine guess -> Newton
        if "omega" not in solve:
            raise ConfigError("cosine guesses need solve.omega")
        amp = guess_spec.get("amplitude", 1.0)
        mode = guess_spec.get("mode", 1)
        values = amp * np.cos(2.0 * math.pi * mode * grid.nodes / grid.length)
        return solve_newton(
            Field(grid, values),
            float(solve["omega"]),
            constraint_from_config(config),
            symbol,
            nl,
            tol=tol,
            max_iter=max_iter,
            variant=variant,
        )
    if guess_spec.get("newton_polish", False):
        wave = solve_newton(
            wave.profile,
            wave.omega,
            constraint_from_config(config),
            wave.symbol,
            wave.nonlinearity,
            tol=tol,
            max_iter=max_iter,
            variant=wave.variant,
        )
    return wave


def _load_or_solve(args, config: dict) -> TravelingWave:
    if getattr(args, "wave", None):
        return load_wave(args.wave)
    return _solve_wave(config)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_solve(args, config: dict) -> int:
    out = _outdir(config, args.out)
    try:
        wave = _solve_wave(config)
    except SolverError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    base = os.path.join(out, "wave")
    save_wave(wave, base, extra=_stamp(config))
    _write_json(
        {
            "omega": wave.omega,
            "A": wave.A,
            "residual_norm": wave.residual_norm,
            "constraint": wave.constraint,
            "files": {"profile": base + ".csv", "sidecar": base + ".json"},
        },
        config,
        os.path.join(out, "solve_report.json"),
    )
    print(f"residual_norm = {format_float(wave.residual_norm)}")
    return EXIT_OK


def cmd_certify(args, config: dict) -> int:
    out = _outdir(config, args.out)
    try:
        wave = _load_or_solve(args, config)
    except SolverError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    cert = certify(wave)
    _write_json(cert.to_dict(), config, os.path.join(out, "certify.json"))
    save_eigenvalues_csv(cert.operator, os.path.join(out, "spectrum.csv"))
    print(f"conclusion = {cert.verdict.conclusion}"
          + (f" (criterion {cert.verdict.fired_criterion})" if cert.verdict.fired_criterion else ""))
    if cert.verdict.conclusion == "inconclusive":
        print(f"reason: {cert.verdict.reason}", file=sys.stderr)
        return EXIT_PREREQUISITES
    return EXIT_OK


def cmd_sweep(args, config: dict) -> int:
    out = _outdir(config, args.out)
    sweep = config.get("sweep")
    if sweep is None:
        print("config has no sweep section", file=sys.stderr)
        return EXIT_CONFIG
    try:
        seed_wave = _load_or_solve(args, config)
    except SolverError as exc:
        print(f"seed solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE

    values = np.linspace(sweep["start"], sweep["stop"], sweep["count"])
    kwargs = {}
    if sweep["parameter"] == "xi":
        om_coeffs = sweep.get("omega_coeffs")
        a_coeffs = sweep.get("A_coeffs")
        if not om_coeffs or not a_coeffs:
            print("xi sweeps need omega_coeffs and A_coeffs", file=sys.stderr)
            return EXIT_CONFIG
        kwargs["omega_map"] = lambda x: float(np.polyval(om_coeffs[::-1], x))
        kwargs["A_map"] = lambda x: float(np.polyval(a_coeffs[::-1], x))
    members = []
    partial = False
    try:
        family = continue_family(seed_wave, sweep["parameter"], values, **kwargs)
        members = list(family)
    except SolverError as exc:
        print(f"sweep aborted: {exc}", file=sys.stderr)
        partial = True

    if not members:
        return EXIT_SWEEP_PARTIAL if partial else EXIT_SOLVE

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            certs = list(pool.map(certify, members))
    else:
        certs = [certify(w) for w in members]

    rows = []
    for value, w, cert in zip(values, members, certs):
        rows.append(
            {
                "xi": float(value),
                "omega": w.omega,
                "A": w.A,
                "mass": mass(w.profile),
                "momentum": momentum(w.profile, symbol=w.symbol, variant=w.variant),
                "verdict": cert.verdict.conclusion,
            }
        )
        save_wave(w, os.path.join(out, f"wave_{len(rows) - 1:03d}"), extra=_stamp(config))

    header = ["xi", "omega", "A", "M", "F", "verdict"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(
                [
                    format_float(row["xi"]),
                    format_float(row["omega"]),
                    format_float(row["A"]),
                    format_float(row["mass"]),
                    format_float(row["momentum"]),
                    row["verdict"],
                ]
            )
        )
    atomic_write_text(os.path.join(out, "family.csv"), "\n".join(lines) + "\n")

    curve_value = None
    curve_mu_nu = None
    if len(members) >= 3:
        from .waves import WaveFamily

        fam = WaveFamily(tuple(members), sweep["parameter"], values[: len(members)], 0.0)
        curve_value, curve_mu_nu = curve_criterion(fam, return_mu_nu=True)
    _write_json(
        {
            "curve_criterion": curve_value,
            "curve_mu_nu": list(curve_mu_nu) if curve_mu_nu else None,
            "members": rows,
            "partial": partial,
        },
        config,
        os.path.join(out, "sweep.json"),
    )
    if curve_value is not None:
        print(f"curve criterion value = {format_float(curve_value)}")
    return EXIT_SWEEP_PARTIAL if partial else EXIT_OK


def cmd_evolve(args, config: dict) -> int:
    out = _outdir(config, args.out)
    try:
        wave = _load_or_solve(args, config)
    except SolverError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    ev = config["evolve"]
    cfg = EvolutionConfig(
        dt=ev["dt"],
        T=ev["T"],
        integrator=ev["integrator"],
        dealias=ev["dealias"],
        variant=wave.variant,
        sample_interval=ev.get("sample_interval"),
    )
    sigma, mu, nu = 1.0, 0.0, 1.0
    cert = certify(wave, compute_spectrum=False)
    if cert.verdict.mu_nu is not None:
        mu, nu = cert.verdict.mu_nu
        try:
            sigma, _ = lyapunov_sigma(wave, cert.operator, mu, nu)
        except SolverError:
            sigma = 1.0
    try:
        traces = stability_experiment(
            wave, ev["amplitudes"], ev["T"], cfg, seed=ev["seed"],
            sigma=sigma, mu=mu, nu=nu,
        )
    except BlowupError as exc:
        _write_json(
            {"blowup_time": exc.time, "error": str(exc)},
            config,
            os.path.join(out, "evolve_summary.json"),
        )
        print(f"blowup detected: {exc}", file=sys.stderr)
        return EXIT_BLOWUP

    summary = []
    for trace in traces:
        name = f"trace_a{trace.amplitude:.0e}.csv" if trace.amplitude else "trace_a0.csv"
        save_trace_csv(trace, os.path.join(out, name))
        summary.append(
            {
                "amplitude": trace.amplitude,
                "sup_ratio": None if not math.isfinite(trace.sup_ratio()) else trace.sup_ratio(),
                "sup_distance": float(trace.d_orbit.max()),
                "drift_P": trace.drift(trace.energy),
                "drift_F": trace.drift(trace.momentum),
                "drift_M": trace.drift(trace.mass),
                "drift_V": trace.drift(trace.lyapunov),
                "trace_file": name,
            }
        )
    _write_json(
        {"traces": summary, "lyapunov": {"sigma": sigma, "mu": mu, "nu": nu}},
        config,
        os.path.join(out, "evolve_summary.json"),
    )
    for item in summary:
        ratio = item["sup_ratio"]
        print(
            f"a={format_float(item['amplitude'])}: sup_ratio="
            + ("inf" if ratio is None else format_float(ratio))
            + f" drift_P={format_float(item['drift_P'])}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="periwave",
        description="Periodic traveling waves: solve, certify stability, sweep, evolve.",
    )
    parser.add_argument("--version", action="version", version=f"periwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_wave in (
        ("solve", False),
        ("certify", True),
        ("sweep", True),
        ("evolve", True),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help="named built-in preset")
        p.add_argument("--out", help="output directory (defaults to config output.directory)")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY.PATH=VALUE",
            help="override a config entry (value parsed as JSON)",
        )
        if needs_wave:
            p.add_argument("--wave", help="basepath of a saved wave (.csv/.json pair)")
    return parser


_COMMANDS = {
    "solve": cmd_solve,
    "certify": cmd_certify,
    "sweep": cmd_sweep,
    "evolve": cmd_evolve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not args.config and not args.preset and not getattr(args, "wave", None):
        print("need --config, --preset, or --wave", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load_config(args.config, args.preset, args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""``modumech`` command-line front end.

Usage::

    modumech <experiment> [--config FILE] [--set key=value ...] [--seed N]
                          [--out DIR] [--format csv|json]
    modumech validate [--config FILE] [--experiment NAME]

Every run writes ``manifest.json`` and ``<experiment>.csv`` (or ``.json``) into
the output directory. Exit codes: 0 success, 2 configuration error, 3 physics
guard (truncation, flux branch), 4 numerical failure. Errors are printed to
stderr as a single JSON object.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, circuit, control, dynamics, hilbert, kernels, modulation
from .config import EXPERIMENTS, ConfigError, RunConfig, load_config, section_for
from .errors import PhysicsGuardError, StepControlError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_NUMERIC = 4

SIG_DIGITS = 12


@dataclass
class ResultTable:
    columns: list  # (name, unit) pairs
    rows: list
    summary: dict = field(default_factory=dict)


def _num(x):
    """Round to ``SIG_DIGITS`` significant digits for serialization."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    return x


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{SIG_DIGITS}g}"
    return str(x)


# --- experiments -----------------------------------------------------------------


def _lc_state(amplitudes, dim_a):
    amps = np.ones(dim_a) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    if amps.size != dim_a:
        raise ConfigError(f"lc_amplitudes has {amps.size} entries for dim_a={dim_a}", field="lc_amplitudes")
    return hilbert.StateVector.from_amplitudes(amps, (dim_a,))


def run_propagate(s, seed) -> ResultTable:
    space = hilbert.FockSpace(s.dim_a, s.dim_b)
    psi0 = hilbert.product_state(_lc_state(s.lc_amplitudes, s.dim_a), hilbert.basis_state(0, s.dim_b))
    params = dynamics.SystemParams(s.omega_dimless, s.Omega_dimless, s.g_dimless)
    sched = dynamics.PiecewiseSchedule.constant(params, s.t_final_dimless)
    times = np.linspace(0.0, s.t_final_dimless, s.n_times)
    rows = []
    for t in times:
        num = dynamics.propagate(sched, psi0, t, tail_tol=s.tail_tol)
        U = dynamics.analytic_propagator(params, t, space)
        ana = hilbert.StateVector(U @ psi0.amplitudes, space.dims)
        back = U.conj().T @ num.amplitudes
        x, p = dynamics.mechanical_moments(num)
        rows.append([
            t,
            hilbert.fidelity(ana, num),
            float(min(1.0, abs(np.vdot(psi0.amplitudes, back)))),
            x,
            p,
            hilbert.entanglement_entropy(num),
        ])
    cols = [("t", "1/Omega_unit"), ("fidelity_analytic", "1"), ("round_trip_fidelity", "1"),
            ("x_mean", "1"), ("p_mean", "1"), ("entanglement_entropy", "nat")]
    summary = {"min_fidelity_analytic": min(r[1] for r in rows), "min_round_trip_fidelity": min(r[2] for r in rows)}
    return ResultTable(cols, rows, summary)


def run_compare_rwa(s, seed) -> ResultTable:
    psi0 = hilbert.product_state(_lc_state(None, s.dim_a), hilbert.basis_state(0, s.dim_b))
    rows = []
    g = s.eta * s.g_max_dimless
    t = s.g_t / g if g > 0 else 0.0
    for ratio in s.g_over_nu:
        nu = g / ratio if g > 0 else 1.0 / ratio
        mp = modulation.ModulationParams(s.g_max_dimless, s.eta, nu)
        params = dynamics.SystemParams(s.omega_dimless, nu + s.delta_dimless, 0.0)
        err = modulation.rwa_error(mp, params, psi0, t, tail_tol=s.tail_tol)
        rows.append([ratio, nu, t, err])
    cols = [("g_over_nu", "1"), ("nu", "rate_unit"), ("t", "1/rate_unit"), ("rwa_error", "1")]
    return ResultTable(cols, rows, {"effective_g": g, "delta": s.delta_dimless})


def run_cat_prep(s, seed) -> ResultTable:
    sched = modulation.cat_schedule(s.g_dimless, 0.5)
    nu = s.g_dimless / s.g_over_nu
    res = modulation.cat_preparation(s.alpha, s.g_dimless, nu, (s.dim_a, s.dim_b),
                                     omega=s.omega_dimless, tail_tol=s.tail_tol)
    cols = [("alpha", "1"), ("g", "rate_unit"), ("nu", "rate_unit"), ("delta", "rate_unit"),
            ("tau", "1/rate_unit"), ("chi", "rate_unit"), ("theta", "rad"), ("fidelity", "1"),
            ("mechanical_tail", "1")]
    row = [s.alpha, s.g_dimless, nu, sched.delta, res.tau, sched.chi, res.theta, res.fidelity, res.mechanical_tail]
    return ResultTable(cols, [row], {"fidelity": res.fidelity, "chi_tau": sched.chi_tau})


def _opt_config(s, seed, **changes) -> control.OptimizationConfig:
    cfg = control.OptimizationConfig(
        N=s.N, tau=s.tau_dimless, g_max=s.g_max_dimless,
        Omega_bounds=None if s.Omega_bounds_dimless is None else tuple(s.Omega_bounds_dimless),
        Omega_init_max=s.Omega_init_max_dimless, restarts=s.restarts, seed=seed,
        max_iters=s.max_iters, tol=s.tol, momentum_steps=s.momentum_steps,
        dim_a=s.dim_a, dim_b=s.dim_b,
        lc_amplitudes=None if s.lc_amplitudes is None else tuple(s.lc_amplitudes),
        n_jobs=s.n_jobs,
    )
    return replace(cfg, **changes)


def run_optimize(s, seed) -> ResultTable:
    res = control.optimize(_opt_config(s, seed))
    sched = res.schedule
    dt = sched.segment_duration
    rows = [[k, k * dt, (k + 1) * dt, g, W] for k, (g, W) in enumerate(zip(sched.g_values, sched.Omega_values))]
    cols = [("segment", "1"), ("t_start", "1/rate_unit"), ("t_end", "1/rate_unit"),
            ("g", "rate_unit"), ("Omega", "rate_unit")]
    summary = {"epsilon": res.epsilon, "fidelity": res.fidelity, "iterations": res.iterations,
               "restarts_used": res.restarts_used, "converged": res.converged,
               "restart_epsilons": list(res.restart_epsilons)}
    return ResultTable(cols, rows, summary)


def run_scan_tau(s, seed) -> ResultTable:
    counts = [int(n) for n in s.segment_counts]
    table = control.tau_scan(_opt_config(s, seed), s.tau_list_dimless, counts)
    rows = [[r.tau] + [r.epsilon[n] for n in counts] + [r.best, r.monotone_violation] for r in table]
    cols = [("tau", "1/rate_unit")] + [(f"epsilon_N{n}", "1") for n in counts] + \
        [("epsilon_best", "1"), ("monotone_violation", "bool")]
    return ResultTable(cols, rows, {"segment_counts": counts})


def run_photon_pressure(s, seed) -> ResultTable:
    times = np.linspace(0.0, s.t_final_s, s.n_times)
    rows = []
    for t in times:
        free = modulation.coherent_amplitude(s.g_per_s, s.n_photons, t)
        damped = modulation.damped_mean_evolution(s.g_per_s, s.n_photons, s.gamma_per_s, t)
        rows.append([t, free.phonons, free.delta_s, damped.beta.imag, damped.phonons, damped.delta_s])
    cols = [("t", "s"), ("phonons_undamped", "1"), ("delta_s_undamped", "1"),
            ("beta_imag_damped", "1"), ("phonons_damped", "1"), ("delta_s_damped", "1")]
    summary = {"phonons_at_t_equal_1_over_g": modulation.coherent_amplitude(
        s.g_per_s, s.n_photons, 1.0 / s.g_per_s).phonons if s.g_per_s > 0 else 0.0}
    if s.gamma_per_s > 0:
        ss = modulation.steady_state(s.g_per_s, s.n_photons, s.gamma_per_s)
        summary.update({
            "steady_state_delta_s": ss.delta_s,
            "steady_state_phonons": ss.phonons,
            "steady_state_phonons_alternative": modulation.inline_steady_state_phonons(
                s.g_per_s, s.n_photons, s.gamma_per_s),
        })
    return ResultTable(cols, rows, summary)


def run_circuit_design(s, seed) -> ResultTable:
    cp = circuit.CircuitParams(I0=s.I0_A, C=s.C_F, d=s.d_m, m=s.m_kg, Omega_si=s.Omega_rad_per_s, Q=s.Q)
    dc = circuit.derive(cp)
    adia = circuit.adiabaticity_report(s.nu_rad_per_s, cp, eta=s.flux_depth, threshold=s.adiabatic_threshold,
                                       omega_floor=s.omega_floor_rad_per_s)
    est = circuit.enhancement_estimates(s.g_rad_per_s, s.Omega_rad_per_s, s.eta, s.n_photons, s.Q,
                                        g_pressure=s.g_pressure_per_s)
    rows = [
        ["omega_max", dc.omega_max, "rad/s"],
        ["x_zp", dc.x_zp, "m"],
        ["g_max", dc.g_max, "rad/s"],
        ["L_J", dc.L_J, "H"],
        ["chi_modulated", est.chi_modulated, "1/s"],
        ["chi_static", est.chi_static, "1/s"],
        ["enhancement_ratio", est.enhancement_ratio, "1"],
        ["displacement_time", est.displacement_time, "s"],
        ["displacement_phonons", est.displacement_phonons, "1"],
    ]
    for label, entry in est.steady_state.items():
        rows += [
            [f"steady_state_gamma[{label}]", entry["gamma"], "1/s"],
            [f"steady_state_delta_s[{label}]", entry["delta_s"], "1"],
            [f"steady_state_phonons[{label}]", entry["phonons"], "1"],
            [f"steady_state_phonons_alternative[{label}]", entry["phonons_alternative"], "1"],
        ]
    rows += [
        ["reference_phonons", est.reference_phonons, "1"],
        ["reference_phonons_reproduced", est.reference_phonons_reproduced, "bool"],
        ["adiabatic_ratio_nu_omega_min", adia.ratio_nu_omega, "1"],
        ["adiabatic_ratio_nu_omega_max", adia.ratio_nu_omega_max, "1"],
        ["adiabatic_max_dphi_dt", adia.max_dphi_dt, "1/s"],
        ["adiabatic_ok", adia.ok, "bool"],
    ]
    cols = [("quantity", "-"), ("value", "-"), ("unit", "-")]
    summary = {r[0]: r[1] for r in rows}
    return ResultTable(cols, rows, summary)


RUNNERS = {
    "propagate": run_propagate,
    "compare-rwa": run_compare_rwa,
    "cat-prep": run_cat_prep,
    "optimize": run_optimize,
    "scan-tau": run_scan_tau,
    "photon-pressure": run_photon_pressure,
    "circuit-design": run_circuit_design,
}


# --- artifacts -----------------------------------------------------------------


def _defaults() -> dict:
    return {
        "tail_tol": hilbert.DEFAULT_TAIL_TOL,
        "norm_tol": hilbert.NORM_TOL,
        "step_tol": dynamics.STEP_TOL,
        "steps_per_period": dynamics.STEPS_PER_PERIOD,
        "min_steps": dynamics.MIN_STEPS,
        "max_steps": dynamics.MAX_STEPS,
        "integrator": "cf4",
        "rwa_warn_ratio": modulation.RWA_WARN_RATIO,
        "adiabatic_threshold": circuit.ADIABATIC_THRESHOLD,
        "omega_floor_fraction": circuit.OMEGA_FLOOR_FRACTION,
        "optimizer": "projected momentum warm-up then L-BFGS-B",
        "Omega_bounds_default": "[0, 10 g_max]",
        "Omega_init_max_default": "3 g_max",
        "flagship_lc_state": "uniform over the dim_a lowest number states",
        "csv_significant_digits": SIG_DIGITS,
    }


def write_table(table: ResultTable, path: Path, fmt: str):
    if fmt == "csv":
        lines = [",".join(c[0] for c in table.columns), ",".join(c[1] for c in table.columns)]
        lines += [",".join(_cell(v) for v in row) for row in table.rows]
        path.write_text("\n".join(lines) + "\n")
    else:
        doc = {
            "columns": [{"name": n, "unit": u} for n, u in table.columns],
            "rows": [_num(list(r)) for r in table.rows],
            "summary": _num(table.summary),
            "manifest": "manifest.json",
        }
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_manifest(config: RunConfig, experiment: str, outputs, summary, out_dir: Path):
    manifest = {
        "tool": "modumech",
        "version": __version__,
        "experiment": experiment,
        "config": config.resolved(),
        "constants": circuit.constants(),
        "defaults": _defaults(),
        "backend": kernels.BACKEND,
        "outputs": list(outputs),
        "summary": _num(summary),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def run(experiment: str, config: RunConfig) -> ResultTable:
    """Run one experiment and write its artifacts under ``config.output_dir``."""
    section = section_for(config, experiment)
    table = RUNNERS[experiment](section, config.seed)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = f"{experiment}.{config.format}"
    write_table(table, out_dir / name, config.format)
    write_manifest(config, experiment, [name], table.summary, out_dir)
    return table


def validate(config: RunConfig, experiments=None) -> list[str]:
    """Physics pre-flight without running anything; returns warning strings."""
    diags = []
    for exp in experiments or EXPERIMENTS:
        s = section_for(config, exp)
        if exp == "compare-rwa":
            worst = max(s.g_over_nu, default=0.0)
            if worst > modulation.RWA_WARN_RATIO:
                diags.append(f"compare-rwa: RWA validity ratio large (g/nu = {worst:.3g})")
        elif exp == "cat-prep":
            if s.g_over_nu > modulation.RWA_WARN_RATIO:
                diags.append(f"cat-prep: RWA validity ratio large (g/nu = {s.g_over_nu:.3g})")
            if s.tail_tol is not None:
                lc = hilbert.coherent_amplitudes(s.alpha, s.dim_a)
                tail_a = abs(lc[-1]) ** 2 / np.sum(abs(lc) ** 2)
                # photon number n displaces the mechanics by up to |alpha| = n
                pops = abs(lc) ** 2 / np.sum(abs(lc) ** 2)
                tail_b = 0.0
                for n, w in enumerate(pops):
                    mech = hilbert.coherent_amplitudes(float(n), s.dim_b)
                    tail_b += w * abs(mech[-1]) ** 2 / np.sum(abs(mech) ** 2)
                if tail_a > s.tail_tol:
                    diags.append(f"cat-prep: LC tail estimate {tail_a:.2e} exceeds tail_tol {s.tail_tol:.1e}")
                if tail_b > s.tail_tol:
                    diags.append(f"cat-prep: mechanical tail estimate {tail_b:.2e} exceeds tail_tol {s.tail_tol:.1e}")
        elif exp == "propagate" and s.tail_tol is not None:
            disp = dynamics.displacement_at_half_period(s.g_dimless, s.Omega_dimless, s.dim_a - 1) / math.sqrt(2)
            mech = hilbert.coherent_amplitudes(disp, s.dim_b)
            tail = abs(mech[-1]) ** 2 / np.sum(abs(mech) ** 2)
            if tail > s.tail_tol:
                diags.append(f"propagate: mechanical tail estimate {tail:.2e} exceeds tail_tol {s.tail_tol:.1e}")
        elif exp == "circuit-design":
            cp = circuit.CircuitParams(I0=s.I0_A, C=s.C_F, d=s.d_m, m=s.m_kg, Omega_si=s.Omega_rad_per_s, Q=s.Q)
            rep = circuit.adiabaticity_report(s.nu_rad_per_s, cp, eta=s.flux_depth,
                                              threshold=s.adiabatic_threshold,
                                              omega_floor=s.omega_floor_rad_per_s)
            if not rep.ok:
                diags.append(f"circuit-design: not adiabatic (nu/omega_min = {rep.ratio_nu_omega:.3g})")
    return diags


# --- entry point -----------------------------------------------------------------


def _error(code: int, exc: BaseException, field=None) -> int:
    doc = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    if field:
        doc["field"] = field
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modumech", description="Modulated optomechanics toolkit.")
    parser.add_argument("--version", action="version", version=f"modumech {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("validate",):
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value (bare keys refer to the experiment section)")
        p.add_argument("--seed", type=int)
        if name == "validate":
            p.add_argument("--experiment", choices=EXPERIMENTS)
        else:
            p.add_argument("--out", dest="output_dir")
            p.add_argument("--format", choices=("csv", "json"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    is_validate = args.command == "validate"
    experiment = args.experiment if is_validate else args.command
    try:
        config = load_config(args.config, args.overrides, experiment=experiment, seed=args.seed,
                             output_dir=None if is_validate else args.output_dir,
                             fmt=None if is_validate else args.format)
        if is_validate:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                diags = validate(config, [config.experiment] if config.experiment else None)
            print(json.dumps({"ok": True, "diagnostics": diags}, sort_keys=True))
            return EXIT_OK
        table = run(experiment, config)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc, exc.field)
    except PhysicsGuardError as exc:
        return _error(EXIT_PHYSICS, exc)
    except ValueError as exc:
        # parameter combinations rejected by the library constructors
        return _error(EXIT_CONFIG, exc)
    except (StepControlError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        return _error(EXIT_NUMERIC, exc)
    print(json.dumps({"ok": True, "experiment": experiment, "output_dir": config.output_dir,
                      "summary": _num(table.summary)}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line interface for qlinksim."""

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__, device_data
from .aggregator import aggregate_coupling_curve, aggregate_false_vacuum, aggregate_fit
from .chain import (
    adjacency_matrix,
    closed_form_resonances,
    coupling_graph,
    detunings_from_masses,
    gauge_states_and_energies,
    resonance_frequencies,
    verify_rotating_frame,
)
from .circuit import (
    calibrate_ej,
    cross_kerr,
    dressed_spectrum,
    spectrum_vs_flux,
    sum_rule_residual,
    transition_table,
)
from .config import ExperimentConfig, ReadoutConfig, initial_circuit, load_config, readout_params
from .drive import (
    amplitude_for_j,
    chevron_scan,
    coupling_curve,
    default_chevron_axes,
    extract_j_and_center,
    perturbative_j,
    perturbative_shift,
    zero_order_resonance,
)
from .errors import ConfigError, InvariantViolation, QlinkError
from .fitting import FitParameters, fit_populations, reconstruct_density_matrix, rescaled_populations
from .invariants import assert_invariants, check_unitary_run
from .models import TRACKED_LABELS, DressedSpectrum, FieldClosure
from .numkit import mhz_to_rad_ns, rad_ns_to_ghz, rad_ns_to_mhz
from .parser import parse_multiple_trace_files
from .qlm import enumerate_gauge_sector, gauss_eigenvalue, mu_sweep, scan_gauge_sector
from .readout import gauge_diagnostics, synthesize_traces
from .report import write_csv, write_json, write_manifest, write_traces_csv

logger = logging.getLogger(__name__)

COMMANDS = ("gauge-sector", "spectrum", "chevron", "coupling-curve", "readout", "false-vacuum", "map-chain")

# Exhaustive cross-check of the sector enumeration up to this many sites
SCAN_CHECK_SITES = 8


class RunContext:
    """Effective configuration, output directory and artifact bookkeeping of one run."""

    def __init__(self, config: ExperimentConfig, output_dir: Path, threads: int):
        self.config = config
        self.output_dir = output_dir
        self.max_workers = threads
        self.config_hash = config.config_hash()
        self.artifacts: List[str] = []

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.output_dir / name

    def csv(self, name: str, header, rows) -> None:
        write_csv(header, rows, self.path(name))
        print(f"      → {self.output_dir / name}")

    def json(self, name: str, payload: dict) -> None:
        write_json(payload, self.path(name), self.config_hash)
        print(f"      → {self.output_dir / name}")


def _calibrated_spectrum(ctx: RunContext) -> DressedSpectrum:
    circuit = ctx.config.circuit
    p0 = initial_circuit(circuit)
    params = calibrate_ej(circuit.targets(), p0, circuit.basis(), coupling_targets=circuit.couplings())
    return dressed_spectrum(params, circuit.basis())


def cmd_gauge_sector(ctx: RunContext) -> None:
    lattice = ctx.config.lattice.to_lattice()
    print(f"[1/2] Enumerating gauge sector for L={lattice.n_sites}")
    sector = enumerate_gauge_sector(lattice)
    if lattice.n_sites <= SCAN_CHECK_SITES:
        oracle = scan_gauge_sector(lattice)
        if [c.bits for c in oracle.states] != [c.bits for c in sector.states]:
            raise InvariantViolation(["sector_mismatch"], "enumeration disagrees with the exhaustive scan")
        print(f"      → Exhaustive scan agrees ({oracle.dim} states)")
    for c in sector.states:
        print(f"      {c}")

    print(f"[2/2] Writing sector listing")
    header = ["index", "ket"] + [f"G{n}" for n in range(1, lattice.n_sites + 1)]
    rows = [[i, c.bits] + [gauss_eigenvalue(c, n, lattice) for n in range(1, lattice.n_sites + 1)]
            for i, c in enumerate(sector.states)]
    ctx.csv("gauge_sector.csv", header, rows)
    ctx.json("gauge_sector.json", sector.to_dict())


def cmd_spectrum(ctx: RunContext) -> None:
    circuit = ctx.config.circuit
    print(f"[1/3] Calibrating Josephson energies (charge cutoff {circuit.charge_cutoff}, "
          f"{circuit.levels_kept} levels per transmon)")
    spec = _calibrated_spectrum(ctx)
    print(f"      → Truncation leakage {spec.truncation_leakage:.2e}")

    print(f"[2/3] Transition table")
    table = transition_table(spec, list(device_data.TRANSITION_FREQUENCIES_GHZ))
    rows = []
    for (a, b), model_ghz in table.items():
        measured = device_data.TRANSITION_FREQUENCIES_GHZ[(a, b)]
        rows.append([a, b, model_ghz, measured, 1e3 * (model_ghz - measured)])
        print(f"      {a} → {b}: {model_ghz:.4f} GHz (measured {measured:.4f})")
    ctx.csv("transitions.csv", ["initial", "final", "model_GHz", "measured_GHz", "difference_MHz"], rows)
    ctx.json("spectrum.json", {
        "circuit": spec.params.to_dict(),
        "dressed": spec.to_dict(),
        "sum_rule_residual_mhz": rad_ns_to_mhz(sum_rule_residual(spec)),
        "cross_kerr_12_mhz": rad_ns_to_mhz(cross_kerr(spec, "100", "010")),
        "omega_3q_ghz": rad_ns_to_ghz(zero_order_resonance(spec)),
    })

    print(f"[3/3] Flux sweep over {circuit.n_flux} points")
    phi = np.linspace(circuit.flux_min_phi0, circuit.flux_max_phi0, circuit.n_flux)
    points = spectrum_vs_flux(spec.params, phi, circuit.basis(), max_workers=ctx.max_workers)
    rows = [[pt.phi_b, *rad_ns_to_ghz(pt.omega), pt.min_overlap] for pt in points]
    ctx.csv("flux_sweep.csv", ["phi_b", "omega1", "omega2", "omega3", "min_overlap"], rows)


def _drive_amplitude(ctx: RunContext, spec: DressedSpectrum) -> float:
    drive = ctx.config.drive
    if drive.amplitude_phi0 is not None:
        return drive.amplitude_phi0
    return amplitude_for_j(spec, mhz_to_rad_ns(drive.j_targets_mhz[-1]))


def cmd_chevron(ctx: RunContext) -> None:
    drive = ctx.config.drive
    print(f"[1/3] Calibrating circuit")
    spec = _calibrated_spectrum(ctx)
    amplitude = _drive_amplitude(ctx, spec)
    j_pert = perturbative_j(spec, amplitude)
    center = zero_order_resonance(spec) + perturbative_shift(spec, amplitude)
    print(f"      → A_p = {amplitude:.5f} Phi0, perturbative J = {rad_ns_to_mhz(j_pert):.4f} MHz")

    print(f"[2/3] Chevron scan ({drive.n_freq} x {drive.n_times})")
    omega_p, times = default_chevron_axes(center, j_pert, drive.n_freq, drive.n_times)
    grid = chevron_scan(spec, omega_p, times, amplitude, drive.max_excitations, ctx.max_workers)
    rows = [[rad_ns_to_ghz(w), t, grid.populations[i, k]]
            for i, w in enumerate(grid.omega_p) for k, t in enumerate(grid.times)]
    ctx.csv("chevron.csv", ["omega_p_GHz", "t_ns", "P110"], rows)

    print(f"[3/3] Extracting J and omega_3q")
    fit = extract_j_and_center(grid)
    print(f"      → J = {rad_ns_to_mhz(fit.j):.4f} MHz, omega_3q = {rad_ns_to_ghz(fit.omega_3q):.6f} GHz")
    payload = fit.to_dict()
    payload.update({"amplitude_phi0": amplitude, "j_first_order_mhz": rad_ns_to_mhz(j_pert),
                    "omega_3q_second_order_ghz": rad_ns_to_ghz(center)})
    ctx.json("chevron_fit.json", payload)


def cmd_coupling_curve(ctx: RunContext) -> None:
    drive = ctx.config.drive
    print(f"[1/3] Calibrating circuit")
    spec = _calibrated_spectrum(ctx)

    print(f"[2/3] Brute-force chevrons for {len(drive.j_targets_mhz)} drive amplitudes")
    points = coupling_curve(spec, j_targets=[mhz_to_rad_ns(j) for j in drive.j_targets_mhz],
                            n_freq=drive.n_freq, n_times=drive.n_times,
                            max_excitations=drive.max_excitations, max_workers=ctx.max_workers)

    print(f"[3/3] Comparing with perturbation theory")
    summary = aggregate_coupling_curve(points, zero_order_resonance(spec))
    print(f"      → J linearity R^2 = {summary['j_linearity_r2']:.6f}, "
          f"max J error {100 * summary['max_j_relative_error']:.2f}%")
    header = ["amplitude_phi0", "j_brute_MHz", "j_first_order_MHz", "omega_3q_brute_GHz",
              "omega_3q_cos_only_GHz", "omega_3q_second_order_GHz"]
    rows = [[p.amplitude, rad_ns_to_mhz(p.j_brute), rad_ns_to_mhz(p.j_first_order),
             rad_ns_to_ghz(p.omega_brute), rad_ns_to_ghz(p.omega_cos_only), rad_ns_to_ghz(p.omega_second_order)]
            for p in points]
    ctx.csv("coupling_curve.csv", header, rows)
    ctx.json("coupling_curve.json", summary)


def _fit_guess(cfg: ReadoutConfig, truth: FitParameters) -> FitParameters:
    """Starting point of the population fit, detached from the synthesis parameters."""
    scale = cfg.guess_scale
    j = mhz_to_rad_ns(cfg.guess_j_mhz) if cfg.guess_j_mhz is not None else scale * truth.j
    return FitParameters(gamma={c: scale * rate for c, rate in truth.gamma.items()},
                         gamma_phi=scale * truth.gamma_phi,
                         thermal={s: p / scale for s, p in truth.thermal.items()},
                         j=j, detuning=truth.detuning)


def cmd_readout(ctx: RunContext) -> None:
    cfg = ctx.config.readout
    readouts = {rid: readout_params(cfg, rid) for rid in cfg.resonator_ids}
    epsilon = mhz_to_rad_ns(cfg.epsilon_mhz)
    j = mhz_to_rad_ns(cfg.j_mhz)
    detuning = mhz_to_rad_ns(cfg.detuning_mhz)
    closure = FieldClosure(cfg.field_closure)
    truth = FitParameters(gamma=cfg.rates(), gamma_phi=cfg.gamma_phi_per_us * 1e-3, thermal=cfg.thermal(),
                          j=j, detuning=detuning)

    if cfg.trace_files:
        print(f"[1/4] Parsing {len(cfg.trace_files)} trace files")
        traces = parse_multiple_trace_files(cfg.trace_files)
    else:
        print(f"[1/4] Synthesizing traces on resonators {cfg.resonator_ids}")
        t_evolve = np.linspace(0.0, cfg.t_evolve_max_ns, cfg.n_t_evolve)
        t_meas = np.linspace(0.0, cfg.t_meas_ns, cfg.n_t_meas)
        traces = synthesize_traces(list(readouts.values()), j, detuning, t_evolve, t_meas, epsilon,
                                   thermal=cfg.thermal(), noise_sigma=cfg.noise_sigma, seed=ctx.config.seed,
                                   max_workers=ctx.max_workers, closure=closure)
        write_traces_csv(traces, ctx.path("traces.csv"))
        print(f"      → {ctx.output_dir / 'traces.csv'}")
    print(f"      → {len(traces)} traces")

    print(f"[2/4] Fitting populations ({cfg.n_starts} starts, {closure.value} closure)")
    fit = fit_populations(traces, readouts, epsilon, _fit_guess(cfg, truth), n_starts=cfg.n_starts,
                          seed=ctx.config.seed, max_workers=ctx.max_workers, closure=closure)
    print(f"      → rms residual {fit.rms:.3e}, J = {rad_ns_to_mhz(fit.params.j):.4f} MHz")

    print(f"[3/4] Gauge diagnostics")
    series = fit.population_series()
    diagnostics = gauge_diagnostics(series)
    rescaled = rescaled_populations(traces, readouts, epsilon, fit)
    i110 = TRACKED_LABELS.index("110")
    t_peak = float(fit.t_evolve[int(np.argmax(fit.populations[:, i110]))])
    rho = reconstruct_density_matrix(fit, readouts[cfg.resonator_ids[0]], t_peak)
    print(f"      → min P_inv = {np.min(diagnostics.p_inv):.4f}")

    print(f"[4/4] Writing results")
    header = ["t_evolve_ns"] + [f"P{s}" for s in TRACKED_LABELS] + ["re_coherence", "im_coherence"]
    rows = [[t, *fit.populations[k], fit.coherence[k].real, fit.coherence[k].imag]
            for k, t in enumerate(fit.t_evolve)]
    ctx.csv("populations.csv", header, rows)
    gauge_rows = diagnostics.to_rows(fit.t_evolve)
    gauge_header = list(gauge_rows[0]) if gauge_rows else ["t_evolve_ns"]
    ctx.csv("gauge_diagnostics.csv", gauge_header, [list(r.values()) for r in gauge_rows])
    report = aggregate_fit(fit, diagnostics, rescaled, rho,
                           truth=None if cfg.trace_files else truth.to_dict())
    report["density_matrix_t_evolve_ns"] = t_peak
    ctx.json("fit_report.json", report)


def cmd_false_vacuum(ctx: RunContext) -> None:
    qlm = ctx.config.qlm
    mu_values = qlm.mu_sweep or [qlm.mu_over_j]
    print(f"[1/3] Quench runs: L={qlm.n_sites}, mu/J in {mu_values}, start={qlm.start}")
    results = mu_sweep(qlm.n_sites, mu_values, qlm.t_max_j_units, qlm.start, qlm.n_samples,
                       max_workers=ctx.max_workers)

    print(f"[2/3] Checking conservation laws")
    for result in results:
        ok, reasons = check_unitary_run(result.max_norm_error, result.max_gauss_violation, result.energy_drift)
        assert_invariants(ok, reasons, f"mu/J={result.mu_over_j}")
    print(f"      → max |<G_n>| = {max(r.max_gauss_violation for r in results):.2e}")

    print(f"[3/3] Writing time series")
    header = ["t_in_J_units", "N_odd", "N_even", "E_odd", "E_even", "total_flux"]
    for result in results:
        rows = [list(row) + [flux] for row, flux in zip(result.rows(), result.total_flux)]
        ctx.csv(f"false_vacuum_mu{result.mu_over_j:g}.csv", header, rows)
    ctx.json("false_vacuum_summary.json", aggregate_false_vacuum(results))


def cmd_map_chain(ctx: RunContext) -> None:
    chain = ctx.config.chain
    spec = chain.to_spec()
    masses = chain.masses()
    print(f"[1/3] Gauge states of the {spec.n_transmons}-transmon chain")
    states = gauge_states_and_energies(spec)
    for s in states:
        print(f"      |{s.label}> = |{s.config.bits}>  E/2pi = {rad_ns_to_ghz(s.energy):.6f} GHz")
    ctx.csv("chain_states.csv", ["label", "ket", "energy_GHz"],
            [[s.label, s.config.bits, rad_ns_to_ghz(s.energy)] for s in states])

    print(f"[2/3] Resonance conditions")
    resonances = resonance_frequencies(spec)
    detunings = detunings_from_masses(masses)
    for k, (w, d) in enumerate(zip(resonances, detunings), 1):
        print(f"      bond {k}: omega_3q = {rad_ns_to_ghz(w):.6f} GHz, delta = {rad_ns_to_mhz(d):+.4f} MHz")

    print(f"[3/3] Verifying the rotating frame")
    report = verify_rotating_frame(spec, masses, detunings, [mhz_to_rad_ns(j) for j in chain.j_mhz])
    labels = [s.label for s in states]
    payload = {
        "states": [s.to_dict() for s in states],
        "couplings": [{"bond": c.bond, "upper": labels[c.upper], "lower": labels[c.lower]}
                      for c in coupling_graph(spec)],
        "adjacency": adjacency_matrix(spec),
        "resonances_ghz": [rad_ns_to_ghz(w) for w in resonances],
        "detunings_mhz": [rad_ns_to_mhz(d) for d in detunings],
        "frame": report.to_dict(labels),
    }
    if spec.n_matter == 4:
        payload["closed_form_resonances_ghz"] = [rad_ns_to_ghz(w) for w in closed_form_resonances(spec)]
    ctx.json("chain_report.json", payload)
    assert_invariants(report.ok, report.reasons, "rotating frame")
    print(f"      → All {len(report.frame_residuals)} resonance conditions hold")


HANDLERS: Dict[str, Callable[[RunContext], None]] = {
    "gauge-sector": cmd_gauge_sector,
    "spectrum": cmd_spectrum,
    "chevron": cmd_chevron,
    "coupling-curve": cmd_coupling_curve,
    "readout": cmd_readout,
    "false-vacuum": cmd_false_vacuum,
    "map-chain": cmd_map_chain,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlinksim",
        description="Quantum link model simulator for a parametrically driven transmon device",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python -m qlinksim gauge-sector
  python -m qlinksim false-vacuum --config heavy_mass.json --output results
  python -m qlinksim readout --seed 7 --threads 4
        """
    )
    parser.add_argument('command', choices=COMMANDS, help='Experiment to run')
    parser.add_argument('--config', help='Path to a JSON experiment config (defaults otherwise)')
    parser.add_argument('--output', help='Output directory (overrides output_dir)')
    parser.add_argument('--seed', type=int, help='Seed for noise and fit starts (overrides seed)')
    parser.add_argument('--threads', type=int, help='Worker threads, 0 = all cores (overrides threads)')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    parser.add_argument('--version', action='version', version=f"qlinksim {__version__}")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        Exit status: 0 success, 2 configuration error, 3 numerical failure
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )

    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.output is not None:
            config = replace(config, output_dir=args.output)
        if args.threads is not None:
            if args.threads < 0:
                raise ConfigError("threads", "must be >= 0")
            config = replace(config, threads=args.threads)
    except ConfigError as e:
        print(f"Error: invalid configuration: {e}", file=sys.stderr)
        return 2

    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(config, output_dir, config.threads or os.cpu_count() or 1)

    print("=" * 60)
    print(f"qlinksim {__version__}: {args.command}")
    print("=" * 60)
    print()

    try:
        HANDLERS[args.command](ctx)
    except ConfigError as e:
        print(f"Error: invalid configuration: {e}", file=sys.stderr)
        return 2
    except QlinkError as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"Error: invalid input: {e}", file=sys.stderr)
        return 2
    finally:
        if ctx.artifacts:
            write_manifest(output_dir, args.command, config.to_dict(), ctx.config_hash, config.seed, ctx.artifacts)

    print()
    print("=" * 60)
    print(f"Wrote {len(ctx.artifacts)} artifacts and manifest.json to {output_dir}")
    print("=" * 60)
    return 0


def main():
    """Main CLI entrypoint."""
    sys.exit(run())


if __name__ == '__main__':
    main()

"""Command-line entry point: ``optotomo <command> --config run.yaml --out dir``.

Exit codes: 0 success (including a classical verdict), 2 configuration
error, 3 numerical non-convergence, 4 inconclusive witness.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import states
from ._validation import ConvergenceError
from .config import ConfigError, dump_config, load_config
from .feasibility import TABLE_I, SystemRecord, feasibility_table
from .io import OutputBundle, write_distribution, write_report, write_table, write_tomogram
from .mode_transform import solve_pulse_conditions
from .nonclassicality import witness_from_protocol
from .phase_space import PhaseSpaceGrid, Tomogram
from .protocol import (
    NoiseChannel,
    ReadoutConfig,
    classical_readout_tomogram,
    extract_mech_tomogram,
    full_tomography,
    naive_deconvolution,
    smoothed_marginal,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_INCONCLUSIVE = 4

COMMANDS = ("tomography", "witness", "compare-classical", "feasibility")
THREADS_ENV = "OPTOTOMO_THREADS"


def build_state(section):
    kind = section.kind
    dim = section.dim
    alpha = complex(section.alpha_re, section.alpha_im)
    if kind == "fock":
        if section.n >= dim:
            raise ConfigError(f"state.n: must be below state.dim={dim}")
        return states.fock(section.n, dim)
    if kind == "coherent":
        return states.coherent(alpha, dim)
    if kind == "thermal":
        return states.thermal(section.nbar, dim)
    if kind == "squeezed":
        return states.squeezed_vacuum(section.squeezing, dim, section.squeezing_angle_rad)
    if kind == "displaced_thermal":
        return states.displaced_thermal(section.nbar, alpha, dim)
    if kind == "superposition":
        if not section.amplitudes:
            raise ConfigError("state.amplitudes: required for a superposition")
        return states.superposition(section.amplitudes, dim)
    return states.figure_one_state(dim)


def build_grid(section):
    return PhaseSpaceGrid.square(section.half_width, section.points)


def build_readout(cfg, phi_d=0.0):
    p = cfg.protocol
    params = solve_pulse_conditions(
        p.g0_rad_per_s, p.omega_m_rad_per_s, p.omega_o_rad_per_s, p.chi, p.k,
        theta=p.theta_rad, epsilon=p.epsilon,
    )
    noise = None
    if cfg.noise is not None:
        noise = NoiseChannel(np.array(cfg.noise.covariance, dtype=float), cfg.noise.loss, cfg.noise.characterized)
    return ReadoutConfig(
        params, build_state(cfg.state), build_grid(cfg.grid), phi_d, noise, p.wigner_regime,
    )


def _threads():
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV}: expected a positive integer, got {n}")
    return n


def _rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def _plot_tomograms(path, tomograms, title):
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for t in tomograms:
        ax.plot(t.x_values, t.w_values, lw=0.8, label=f"phi={t.phi:.3f}")
    ax.set_xlabel("x")
    ax.set_ylabel("w(x)")
    ax.set_title(title)
    if len(tomograms) <= 8:
        ax.legend(fontsize=7)
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_heatmap(path, w, title):
    import matplotlib.pyplot as plt

    g = w.grid
    fig, ax = plt.subplots(figsize=(5, 4.5))
    lim = float(np.max(np.abs(w.values)))
    im = ax.imshow(w.values.T, origin="lower", extent=(g.q_min, g.q_max, g.p_min, g.p_max),
                   cmap="RdBu_r", vmin=-lim, vmax=lim)
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("q")
    ax.set_ylabel("p")
    ax.set_title(title)
    fig.savefig(path, format="svg")
    plt.close(fig)


def _check_plotting():
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("--plots needs matplotlib; install the 'plots' extra") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed ids and no timestamps keep the SVGs reproducible
    plt.rcParams["svg.hashsalt"] = "optotomo"
    plt.rcParams["svg.fonttype"] = "none"
    os.environ.setdefault("SOURCE_DATE_EPOCH", "0")


def run_tomography(cfg, bundle, plots):
    readout = build_readout(cfg)
    n = cfg.tomography.angles
    angles = cfg.tomography.phi_d_rad + np.pi * np.arange(n) / n
    ts, w = full_tomography(readout, angles, n_jobs=_threads(), cutoff=cfg.tomography.cutoff)
    write_distribution(bundle.path("reconstruction.csv"), w)
    for i, t in enumerate(ts):
        write_tomogram(bundle.path(f"tomogram_{i:04d}.csv"), t)
    report = {
        "command": "tomography",
        "s_star": readout.s_star,
        "order": ts.s,
        "angles": ts.angles,
        "reconstruction_integral": w.integral(),
        "reconstruction_min": float(w.values.min()),
    }
    if plots:
        _plot_heatmap(bundle.path("reconstruction.svg"), w, f"reconstruction (s={w.s:.3g})")
        step = max(1, len(ts) // 6)
        _plot_tomograms(bundle.path("tomograms.svg"), list(ts)[::step], "tomograms")
    return report, EXIT_OK


def run_witness(cfg, bundle, plots):
    readout = build_readout(cfg, cfg.witness.phi_d_rad)
    result = witness_from_protocol(
        readout, dims=tuple(cfg.witness.dims), tol=cfg.witness.tolerance,
        vacuum_order=cfg.witness.vacuum_order,
    )
    write_tomogram(bundle.path("tomogram.csv"), result.tomogram)
    report = {"command": "witness", "s_star": readout.s_star, **result.to_dict()}
    if plots:
        _plot_tomograms(bundle.path("tomogram.svg"), [result.tomogram], "extracted tomogram")
    code = EXIT_INCONCLUSIVE if result.verdict == "inconclusive" else EXIT_OK
    return report, code


def run_compare_classical(cfg, bundle, plots):
    c = cfg.classical
    readout = build_readout(cfg)
    rho = readout.mech_state
    x = np.linspace(-c.half_width, c.half_width, c.points)
    smoothed = classical_readout_tomogram(rho, c.eta, c.sigma_p, c.angle_rad, x=x)
    exact = Tomogram(x, smoothed_marginal(rho, x, c.angle_rad, 0.0), c.angle_rad, 0.0)
    deconvolved, dreport = naive_deconvolution(smoothed, c.eta, c.noise_amplitude, sigma_p=c.sigma_p, seed=cfg.seed)

    # the pulsed readout at the same angle, with the same relative noise added
    base = extract_mech_tomogram(readout, x=x).phi
    extracted = extract_mech_tomogram(readout.with_phi_d((c.angle_rad - base) % (2 * math.pi)), x=x)
    matched = smoothed_marginal(rho, x, extracted.phi, -extracted.s / 2.0)
    rng = np.random.default_rng(cfg.seed)
    noisy = extracted.w_values + c.noise_amplitude * extracted.w_values.max() * rng.standard_normal(x.size)
    extraction_error = _rel_l2(noisy, matched)

    write_tomogram(bundle.path("classical_readout.csv"), smoothed)
    write_tomogram(bundle.path("deconvolved.csv"), deconvolved)
    write_tomogram(bundle.path("extracted.csv"), extracted.with_values(noisy, noise_amplitude=c.noise_amplitude))
    report = {
        "command": "compare-classical",
        "kernel_variance": dreport.kernel_variance,
        "input_error": dreport.input_rel_error,
        "deconvolution_error": dreport.output_rel_error,
        "error_ratio": dreport.error_ratio,
        "max_filter_gain": dreport.max_gain,
        "extraction_error": extraction_error,
        "extraction_order": extracted.s,
        "deconvolution_vs_exact_error": _rel_l2(deconvolved.w_values, exact.w_values),
    }
    if plots:
        _plot_tomograms(bundle.path("comparison.svg"), [exact, smoothed, deconvolved], "classical readout")
    return report, EXIT_OK


def run_feasibility(cfg, bundle, plots):
    f = cfg.feasibility
    systems = list(TABLE_I) if f.use_builtin_table else []
    for s in f.systems:
        extra = {} if s.omega_o_rad_per_s is None else {"omega_o": s.omega_o_rad_per_s}
        systems.append(SystemRecord(
            s.name, s.omega_m_rad_per_s, s.mass_kg, s.gamma_m_rad_per_s, s.g0_rad_per_s,
            s.kappa_o_rad_per_s, **extra,
        ))
    if not systems:
        raise ConfigError("feasibility: no systems (set use_builtin_table or list systems)")
    rows = feasibility_table(systems, epsilon=f.epsilon, u=f.u, chi=f.chi)
    columns = ["name", "sideband_ratio", "regime_flag", "tau_opt_s", "pulse_energy_J", "chi", "k",
               "tau_ratio_to_printed", "energy_ratio_to_printed", "error"]
    table = [
        (r.name, r.sideband_ratio, r.regime_flag, r.tau_opt, r.pulse_energy, r.chi, r.k,
         r.deviations.get("tau_opt", math.nan), r.deviations.get("pulse_energy", math.nan), r.error)
        for r in rows
    ]
    write_table(bundle.path("feasibility.csv"), columns, table)
    report = {
        "command": "feasibility",
        "assumptions": {"epsilon": f.epsilon, "u": f.u, "chi": f.chi, "frequencies": "rad/s",
                        "default_wavelength_m": 1064e-9},
        "rows": [r.to_dict() for r in rows],
    }
    return report, EXIT_OK


RUNNERS = {
    "tomography": run_tomography,
    "witness": run_witness,
    "compare-classical": run_compare_classical,
    "feasibility": run_feasibility,
}


def _parser():
    parser = argparse.ArgumentParser(prog="optotomo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", required=True, help="output directory (replaced atomically)")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed (u64)")
        p.add_argument("--plots", action="store_true", help="also write SVG plots")
    return parser


def run(command, cfg, out, plots=False):
    """Execute one command and write its bundle; returns the exit code."""
    with OutputBundle(out) as bundle:
        report, code = RUNNERS[command](cfg, bundle, plots)
        report["seed"] = cfg.seed
        report["exit_code"] = code
        write_report(bundle.path("report.json"), report)
        bundle.path("config.yaml").write_text(dump_config(cfg))
    return code


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.command is not None and cfg.command != args.command:
            raise ConfigError(f"command: config is for {cfg.command!r}, not {args.command!r}")
        updates = {"command": args.command}
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed: must be an unsigned 64-bit integer")
            updates["seed"] = args.seed
        cfg = cfg.model_copy(update=updates)
        if args.plots:
            _check_plotting()
        return run(args.command, cfg, args.out, args.plots)
    except ConvergenceError as exc:
        print(f"optotomo: did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"optotomo: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

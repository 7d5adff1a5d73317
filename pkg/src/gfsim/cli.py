"""Batch command-line front end.

Subcommands: gf, moments, texpand, krylov, noise.  Every run writes its CSV
outputs plus a manifest (resolved config, tool version, seeds, output hashes,
timings); re-running a command from its manifest reproduces the CSVs byte for
byte.  Exit codes: 0 success, 1 runtime failure, 2 invalid configuration,
3 no admissible rational approximant.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import NOISE_PRESET, ConfigError, RunConfig
from .genfunc import GfSeries, gf_exact, gf_series, hadamard_test_circuit
from .krylov import build_krylov_matrices, eigen_table_csv, solve_generalized, survival_csv, survival_probability
from .models import build_dense, to_qubits
from .moments import MomentSet, moments_exact, moments_fdm, moments_fourier, spectral_peaks
from .noise import calibrate_reference, mitigate_readout, mitigate_series, noisy_sample
from .statevector import SimulationError, derive_seed
from .texpand import PadeRejection, extrapolate_ground_energy, imaginary_time_oracle, selection_report


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    out_dir: Path, command: str, config: RunConfig, outputs: list[Path], t_start: float, extra=None, inputs=None
):
    manifest = {
        "command": command,
        "tool_version": __version__,
        "config": config.resolved(),
        "seed": config.seed,
        "inputs": {Path(p).name: _sha256(Path(p)) for p in (inputs or []) if p is not None},
        "outputs": {p.name: _sha256(p) for p in outputs},
        "wall_clock_seconds": round(time.time() - t_start, 3),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / f"{command}_manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _load_config(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    cfg = RunConfig.from_file(args.config)
    if args.seed is not None:
        cfg.raw["seed"] = args.seed
        cfg.seed = args.seed
    return cfg


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("GFSIM_THREADS")
    return max(1, int(env)) if env else 1


def cmd_gf(args) -> int:
    t_start = time.time()
    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = gf_series(
        cfg.model, cfg.init, cfg.t_grid, cfg.trotter_policy, shots=cfg.shots, seed=cfg.seed, threads=_threads(args)
    )
    if cfg.overlay_exact:
        dense = build_dense(to_qubits(cfg.model))
        exact = gf_exact(dense, cfg.init, cfg.t_grid, model=cfg.model.fingerprint())
        series.extra["re_exact"] = exact.re
        series.extra["im_exact"] = exact.im
    out = out_dir / "gf.csv"
    series.to_csv(out)
    _write_manifest(out_dir, "gf", cfg, [out], t_start)
    print(f"wrote {out} ({series.route}, {series.t.size} points, shots={series.shots})")
    return 0


def _moments_from_config(cfg: RunConfig, series_path: str | None) -> MomentSet:
    if cfg.moment_route == "exact":
        dense = build_dense(to_qubits(cfg.model))
        mom = moments_exact(dense, cfg.init, cfg.moment_order)
        mom.source = cfg.model.fingerprint()
        return mom
    if series_path is not None:
        series = GfSeries.from_csv(series_path)
    else:
        dense = build_dense(to_qubits(cfg.model))
        series = gf_exact(dense, cfg.init, cfg.t_grid, model=cfg.model.fingerprint())
    if cfg.moment_route == "fdm":
        return moments_fdm(series, cfg.moment_order, accuracy=cfg.fdm_accuracy)
    spec = spectral_peaks(series, energy_bound=to_qubits(cfg.model).energy_bound)
    mom = moments_fourier(spec, cfg.moment_order)
    mom.source = series.model
    return mom


def cmd_moments(args) -> int:
    t_start = time.time()
    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mom = _moments_from_config(cfg, args.series)
    out = out_dir / "moments.csv"
    mom.to_csv(out)
    _write_manifest(out_dir, "moments", cfg, [out], t_start, inputs=[args.series])
    print(f"wrote {out} (route={mom.route}, order={mom.order})")
    return 0


def cmd_texpand(args) -> int:
    t_start = time.time()
    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.moments is not None:
        mom = MomentSet.from_csv(args.moments)
    else:
        mom = _moments_from_config(cfg, None)
    curve, approx, log = extrapolate_ground_energy(mom, cfg.texpansion_order, tau_eval_max=cfg.tau_max)
    out = out_dir / "energy_curve.csv"
    curve.to_csv(out)
    report = out_dir / "pade_selection.txt"
    with open(report, "w", encoding="utf-8") as fh:
        fh.write(selection_report(log, approx))
        fh.write(f"asymptote {curve.asymptote!r}\n")
        fh.write(f"asymptote_grid_end {curve.asymptote_grid_end!r}\n")
    extra = {}
    if "model" in cfg.raw:
        dense = build_dense(to_qubits(cfg.model))
        oracle = imaginary_time_oracle(dense, cfg.init, curve.tau)
        e_gs = dense.ground_energy(cfg.init)
        extra = {"oracle_ground_energy": e_gs, "asymptote_abs_error": abs(curve.asymptote - e_gs)}
    _write_manifest(out_dir, "texpand", cfg, [out, report], t_start, extra=extra, inputs=[args.moments])
    orders = approx.orders if approx is not None else None
    print(f"wrote {out} (pade={orders}, asymptote={curve.asymptote:.8g})")
    return 0


def cmd_krylov(args) -> int:
    t_start = time.time()
    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    needed = 2 * max(cfg.krylov_orders) + 1
    if args.moments is not None:
        mom = MomentSet.from_csv(args.moments)
    else:
        if cfg.moment_order < needed:
            cfg.moment_order = needed
        mom = _moments_from_config(cfg, None)
    if mom.order < needed:
        raise SimulationError(f"need moments through {needed} for the requested subspace orders")
    if mom.route == "fdm" and np.any(mom.errors[: needed + 1] > 1e-6 * np.abs(mom.values[: needed + 1])):
        print("warning: finite-difference moments exceed 1e-6 relative error; Krylov output may be unreliable")

    solutions = {m: solve_generalized(build_krylov_matrices(mom, m), cfg.krylov_cutoff) for m in cfg.krylov_orders}
    eigen_out = out_dir / "krylov_eigs.csv"
    eigen_table_csv(eigen_out, solutions)

    t_grid = cfg.krylov_dt * np.arange(int(round(cfg.krylov_t_max / cfg.krylov_dt)) + 1)
    dense = build_dense(to_qubits(cfg.model))
    p_exact = np.abs(gf_exact(dense, cfg.init, t_grid).values) ** 2
    best = max(cfg.krylov_orders)
    p_approx = survival_probability(solutions[best], t_grid)
    survival_out = out_dir / "survival.csv"
    survival_csv(survival_out, t_grid, p_approx, p_exact)
    _write_manifest(out_dir, "krylov", cfg, [eigen_out, survival_out], t_start, inputs=[args.moments])
    print(f"wrote {eigen_out} and {survival_out} (orders {cfg.krylov_orders})")
    return 0


def _noise_rms(series: GfSeries, exact: GfSeries) -> float:
    dev = np.concatenate([series.re - exact.re, series.im - exact.im])
    return float(np.sqrt(np.mean(dev**2)))


def cmd_noise(args) -> int:
    t_start = time.time()
    if args.config is None:
        cfg = RunConfig(json.loads(json.dumps(NOISE_PRESET)))
        if args.seed is not None:
            cfg.raw["seed"] = args.seed
            cfg.seed = args.seed
    else:
        cfg = _load_config(args)
    if cfg.noise is None:
        raise ConfigError("noise command needs a noise block in the config")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    model = cfg.model
    ancilla = model.n_qubits
    dense = build_dense(to_qubits(model))
    exact = gf_exact(dense, cfg.init, cfg.t_grid, model=model.fingerprint())

    n_steps = cfg.trotter_policy if isinstance(cfg.trotter_policy, int) else 1
    shots = cfg.shots or 10**6
    members = len(cfg.init)
    per_member = shots // members
    re = np.zeros(cfg.t_grid.size)
    im = np.zeros(cfg.t_grid.size)
    for k, t in enumerate(cfg.t_grid):
        for quad, sink in (("re", re), ("im", im)):
            circuit = hadamard_test_circuit(model, float(t), n_steps, quad)
            for m_idx, (weight, member) in enumerate(zip(cfg.init.weights, cfg.init.members)):
                seed = derive_seed(cfg.seed, k, 0 if quad == "re" else 1, m_idx)
                counts = noisy_sample(member.tensor_with_ancilla(), circuit, ancilla, per_member, cfg.noise, seed)
                sink[k] += weight * counts.bias
    total = per_member * members
    err = np.sqrt(np.maximum(0.0, 1.0 - re**2) / total)
    err_im = np.sqrt(np.maximum(0.0, 1.0 - im**2) / total)
    raw = GfSeries(
        cfg.t_grid, re, im, err, err_im, shots=total, route="noisy", model=model.fingerprint(), seed=cfg.seed
    )

    readout = cfg.noise.readout
    if cfg.noise.p_dep == 0.0 and readout.is_identity(ancilla):
        # nothing left to calibrate once the (identity) readout is inverted;
        # a measured calibration would only inject shot noise
        ref = calibrate_reference(1.0, 0.0)
    else:
        re0, _ = mitigate_readout(np.array([(1 + raw.re[0]) / 2, (1 - raw.re[0]) / 2]), readout, ancilla)
        im0, _ = mitigate_readout(np.array([(1 + raw.im[0]) / 2, (1 - raw.im[0]) / 2]), readout, ancilla)
        ref = calibrate_reference(float(re0[0] - re0[1]), float(im0[0] - im0[1]))
    mitigated = mitigate_series(raw, readout, ref, ancilla)

    paths = []
    for name, series in (("gf_exact", exact), ("gf_raw", raw), ("gf_mitigated", mitigated)):
        path = out_dir / f"{name}.csv"
        series.to_csv(path)
        paths.append(path)
    rms_raw = _noise_rms(raw, exact)
    rms_mit = _noise_rms(mitigated, exact)
    _write_manifest(
        out_dir, "noise", cfg, paths, t_start, extra={"rms_raw": rms_raw, "rms_mitigated": rms_mit}
    )
    print(f"rms raw={rms_raw:.6f} mitigated={rms_mit:.6f} ratio={rms_mit / rms_raw:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gfsim",
        description="Hadamard-test generating-function runs and moment-based post-processing",
    )
    parser.add_argument("--version", action="version", version=f"gfsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration (a run manifest is also accepted)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument(
            "--threads", type=int, default=None, help="worker threads (default: GFSIM_THREADS or 1)"
        )

    p_gf = sub.add_parser("gf", help="generating-function trace")
    common(p_gf)
    p_gf.set_defaults(func=cmd_gf)

    p_mom = sub.add_parser("moments", help="Hamiltonian moments from a model or series file")
    common(p_mom)
    p_mom.add_argument("--series", help="GfSeries CSV to post-process (fdm/fourier routes)")
    p_mom.set_defaults(func=cmd_moments)

    p_tex = sub.add_parser("texpand", help="ground-state energy extrapolation")
    common(p_tex)
    p_tex.add_argument("--moments", help="MomentSet CSV input (otherwise computed per config)")
    p_tex.set_defaults(func=cmd_texpand)

    p_kry = sub.add_parser("krylov", help="subspace eigenvalues and survival probability")
    common(p_kry)
    p_kry.add_argument("--moments", help="MomentSet CSV input (otherwise computed per config)")
    p_kry.set_defaults(func=cmd_krylov)

    p_noi = sub.add_parser("noise", help="noisy run with readout + reference mitigation")
    common(p_noi)
    p_noi.set_defaults(func=cmd_noise)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except PadeRejection as exc:
        print(f"no admissible approximant: {exc}", file=sys.stderr)
        return 3
    except (SimulationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

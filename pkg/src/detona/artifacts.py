"""CSV/JSON artifact writers with the schemas consumed by the plot front end.

All CSV files are RFC-4180 with a header row; floats are written with
shortest round-trip representation so identical runs produce identical
bytes.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex):
            return [o.real, o.imag]
        raise TypeError(f"not serializable: {type(o)}")

    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=default)
        fh.write("\n")
    return path


def config_hash(config: dict):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_rh_artifacts(outdir, pair, params, curves):
    rows = zip(curves["tau"], curves["p_rayleigh"], curves["p_hugoniot"],
               curves["p_temp_boundary"], curves["p_lax_boundary"])
    write_csv(Path(outdir) / "rh_curves.csv",
              ["tau", "p_rayleigh", "p_hugoniot", "p_temp_boundary",
               "p_lax_boundary"], rows)
    from .endstates import rayleigh
    pts = [(pair.right.tau, rayleigh(pair.right.tau, pair.left, pair.s,
                                     params), "strong")]
    if pair.tau_deflagration is not None:
        pts.append((pair.tau_deflagration,
                    rayleigh(pair.tau_deflagration, pair.left, pair.s,
                             params), "deflagration"))
    write_csv(Path(outdir) / "rh_points.csv", ["tau", "p", "kind"], pts)
    write_json(Path(outdir) / "endstates.json",
               {"pair": pair.as_dict(), "params": params.as_dict()})


def write_profile_artifacts(outdir, profile):
    from .model import thermo, State
    x = profile.grid
    w = profile.values
    tau = profile.tau_at(x)
    params = profile.params
    rows = []
    for i in range(x.size):
        e = w[1, i] - 0.5 * w[0, i]**2 - params.qheat * w[2, i]
        T = e / params.cheat
        p = params.Gamma * e / tau[i]
        rows.append((x[i], tau[i], w[0, i], w[1, i], w[2, i], w[3, i], T, p))
    write_csv(Path(outdir) / "profile.csv",
              ["x", "tau", "u", "E", "z", "y", "T", "p"], rows)
    write_json(Path(outdir) / "profile_meta.json", {
        "eta0": profile.eta0, "residual": profile.residual, "L": profile.L,
        "params_hash": profile.params_hash(),
        "params": profile.params.as_dict(),
        "endpoint_rates": profile.endpoint_rates(),
        **{k: v for k, v in profile.meta.items()},
    })


def write_spectrum_artifacts(outdir, params, pair, xi_grid, spectra, thetas):
    rows = []
    for side in ("minus", "plus"):
        lams = spectra[side]
        for j in range(lams.shape[1]):
            for i, xi in enumerate(xi_grid):
                rows.append((side, j, xi, lams[i, j].real, lams[i, j].imag))
    write_csv(Path(outdir) / "essential_spectrum.csv",
              ["side", "branch", "xi", "re_lambda", "im_lambda"], rows)
    write_json(Path(outdir) / "spectrum_meta.json",
               {"theta_minus": thetas["minus"], "theta_plus": thetas["plus"],
                "params": params.as_dict()})


def write_evans_artifacts(outdir, samples, verdict):
    rows = [(s.lam.real, s.lam.imag, s.D.real, s.D.imag, s.conditioning,
             s.logscale) for s in samples]
    write_csv(Path(outdir) / "evans_contour.csv",
              ["re_lambda", "im_lambda", "re_d", "im_d", "conditioning",
               "logscale"], rows)
    write_json(Path(outdir) / "verdict.json", verdict.as_dict())


def write_sweep_artifacts(outdir, traj, verdicts=None, crossing=None):
    rows = []
    for i, (eps, re, im, res) in enumerate(traj.as_rows()):
        v = verdicts[i] if verdicts else ("Unstable" if re > 0 else "Stable")
        rows.append((eps, re, im, v))
    write_csv(Path(outdir) / "sweep.csv", ["eps", "gamma", "tau", "verdict"],
              rows)
    write_json(Path(outdir) / "crossing.json",
               crossing if crossing is not None else {"crossing": None})


def write_timeseries_artifacts(outdir, series, snapshots=None):
    rows = zip(series["t"], series["l2"], series["linf"], series["delta"],
               series["mass_defect"], series["mass_defect_flux"])
    write_csv(Path(outdir) / "timeseries.csv",
              ["t", "l2", "linf", "delta", "mass_defect", "mass_defect_flux"],
              rows)
    for tag, (x, U, t) in (snapshots or {}).items():
        rows = zip(x, U[0], U[1], U[2], U[3])
        write_csv(Path(outdir) / f"snap_{tag}.csv",
                  ["x", "tau", "u", "E", "z"], rows)


def write_certificate(outdir, cert):
    write_json(Path(outdir) / "certificate.json", cert.as_dict())


def write_manifest(outdir, config, timings, command, seed, threads,
                   version="0.1.0"):
    write_json(Path(outdir) / "manifest.json", {
        "config_hash": config_hash(config),
        "version": version,
        "command": command,
        "seed": seed,
        "threads": threads,
        "timings": {k: round(v, 3) for k, v in timings.items()},
    })

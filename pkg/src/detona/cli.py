"""Batch front end: `detona <command> --config FILE [--threads N] [--out DIR]`.

Configuration is TOML (JSON accepted); every run writes a manifest with the
config hash, code version, and timings.  Any config key can be overridden
through the environment with the prefix DETONA_ (double underscore separates
nesting, e.g. DETONA_PARAMS__NU=0.5).
"""
from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .artifacts import (write_certificate, write_evans_artifacts,
                        write_json, write_manifest, write_profile_artifacts,
                        write_rh_artifacts, write_spectrum_artifacts,
                        write_sweep_artifacts, write_timeseries_artifacts)
from .errors import ConfigError, DetonaError
from .model import ModelParams

KNOWN_SECTIONS = {"command", "out", "seed", "threads", "params", "pair",
                  "profile", "evans", "sweep", "simulate", "spectrum"}


def load_config(path):
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return json.loads(text)
    try:
        import tomllib
    except ImportError:
        tomllib = None
    if tomllib is not None:
        return tomllib.loads(text)
    import toml
    return toml.loads(text)


def apply_env_overrides(cfg, environ=None):
    environ = environ if environ is not None else os.environ
    for key, val in environ.items():
        if not key.startswith("DETONA_"):
            continue
        path = [p.lower() for p in key[len("DETONA_"):].split("__")]
        node = cfg
        for p in path[:-1]:
            node = node.setdefault(p, {})
        try:
            parsed = json.loads(val)
        except json.JSONDecodeError:
            parsed = val
        node[path[-1]] = parsed
    return cfg


def validate_config(cfg):
    for key in cfg:
        if key not in KNOWN_SECTIONS:
            raise ConfigError(key, "unknown top-level key")
    params_block = cfg.get("params", {})
    try:
        params = ModelParams.from_dict(params_block)
    except (TypeError, ValueError) as exc:
        offending = str(exc)
        for name in params_block:
            if name in offending:
                raise ConfigError(f"params.{name}", offending)
        raise ConfigError("params", offending)
    return params


def build_pair(cfg, params):
    from .endstates import (construct_regime, small_amplitude_params,
                            solve_right_state)
    block = dict(cfg.get("pair", {}))
    kind = block.pop("kind", "small_amplitude")
    if kind == "small_amplitude":
        p2, pair = small_amplitude_params(
            **{**{k: getattr(params, k) for k in
                  ("Gamma", "cheat", "nu", "kappa", "dcoef", "krate",
                   "ign_C", "ign_E")},
               "q": params.qheat, **block})
        return p2, pair
    if kind == "regime":
        tau_minus = block.pop("tau_minus")
        u_tilde = block.pop("u_tilde")
        z_plus = block.pop("z_plus", 1.0)
        left = construct_regime(tau_minus, u_tilde, params.s, params.qheat,
                                z_plus, params.Gamma, cheat=params.cheat,
                                T_ign=params.T_ign, **block)
        pair = solve_right_state(left, params.s, params, z_plus=z_plus)
        return params, pair
    raise ConfigError("pair.kind", f"unknown kind {kind!r}")


def _error_exit(code, kind, detail, key=None):
    payload = {"error": kind, "detail": detail}
    if key is not None:
        payload["key"] = key
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


@click.group()
@click.version_option(__version__)
def main():
    """Stability and bifurcation analyses for viscous strong detonations."""


def _common(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(exists=True, dir_okay=False))(fn)
    fn = click.option("--out", "outdir", default="out",
                      type=click.Path(file_okay=False))(fn)
    fn = click.option("--threads", default=1, type=int)(fn)
    return fn


def _setup(config_path, command):
    try:
        cfg = apply_env_overrides(load_config(config_path))
        params = validate_config(cfg)
    except ConfigError as exc:
        _error_exit(2, "config", str(exc), exc.key)
    except Exception as exc:
        _error_exit(2, "config", str(exc))
    cfg.setdefault("command", command)
    return cfg, params


def _finish(outdir, cfg, timings, command, threads):
    write_manifest(outdir, cfg, timings, command, cfg.get("seed", 0),
                   threads, version=__version__)
    click.echo(json.dumps({"ok": True, "out": str(outdir),
                           "command": command}))


@main.command()
@_common
def endstates(config_path, outdir, threads):
    """Rankine-Hugoniot construction and diagram artifacts."""
    cfg, params = _setup(config_path, "endstates")
    t0 = time.perf_counter()
    try:
        from .endstates import rh_curve_samples
        params, pair = build_pair(cfg, params)
        curves = rh_curve_samples(pair, params)
        write_rh_artifacts(outdir, pair, params, curves)
    except DetonaError as exc:
        _error_exit(1, type(exc).__name__, str(exc))
    _finish(outdir, cfg, {"endstates": time.perf_counter() - t0},
            "endstates", threads)


def _solve_profile_from_cfg(cfg, params):
    from .profile import solve_profile
    params, pair = build_pair(cfg, params)
    opts = dict(cfg.get("profile", {}))
    phase = opts.pop("phase", None)
    if phase is not None:
        opts["phase"] = (phase[0], None if phase[1] is None else
                         float(phase[1]))
    return params, pair, solve_profile(pair, params, **opts)


@main.command()
@_common
def profile(config_path, outdir, threads):
    """Traveling-wave profile solve and artifacts."""
    cfg, params = _setup(config_path, "profile")
    t0 = time.perf_counter()
    try:
        params, pair, prof = _solve_profile_from_cfg(cfg, params)
        write_profile_artifacts(outdir, prof)
    except DetonaError as exc:
        _error_exit(1, type(exc).__name__, str(exc))
    _finish(outdir, cfg, {"profile": time.perf_counter() - t0},
            "profile", threads)


@main.command()
@_common
def spectrum(config_path, outdir, threads):
    """Essential-spectrum curves and dissipativity margins."""
    cfg, params = _setup(config_path, "spectrum")
    t0 = time.perf_counter()
    try:
        from .spectral import (default_xi_grid, essential_spectrum,
                               kawashima_margin)
        params, pair = build_pair(cfg, params)
        n = int(cfg.get("spectrum", {}).get("nxi", 241))
        xi = default_xi_grid(params, pair, n=n)
        spectra, thetas = {}, {}
        for side in ("minus", "plus"):
            spectra[side] = essential_spectrum(side, xi, params, pair)
            thetas[side] = kawashima_margin(side, xi, params, pair)
        write_spectrum_artifacts(outdir, params, pair, xi, spectra, thetas)
    except DetonaError as exc:
        _error_exit(1, type(exc).__name__, str(exc))
    _finish(outdir, cfg, {"spectrum": time.perf_counter() - t0},
            "spectrum", threads)


@main.command()
@_common
def evans(config_path, outdir, threads):
    """Right-half-plane Evans survey: verdict and contour artifacts."""
    cfg, params = _setup(config_path, "evans")
    t0 = time.perf_counter()
    try:
        from .evans import (EvansSystem, d_contour, evaluate_contour,
                            lopatinski_delta, stability_check)
        from .profile import transversality_gamma
        params, pair, prof = _solve_profile_from_cfg(cfg, params)
        opts = dict(cfg.get("evans", {}))
        gamma = transversality_gamma(prof)
        delta = lopatinski_delta(pair, params)
        verdict = stability_check(prof, gamma=gamma, delta=delta, **opts)
        src = EvansSystem(prof)
        samples = evaluate_contour(src, d_contour(verdict.r0, verdict.R),
                                   n0=64)
        write_evans_artifacts(outdir, samples, verdict)
    except DetonaError as exc:
        _error_exit(1, type(exc).__name__, str(exc))
    _finish(outdir, cfg, {"evans": time.perf_counter() - t0}, "evans",
            threads)


@main.command()
@_common
def sweep(config_path, outdir, threads):
    """Track the conjugate root pair across the sweep parameter."""
    cfg, params = _setup(config_path, "sweep")
    t0 = time.perf_counter()
    try:
        from .bifurcation import detect_hopf, track_pair
        block = dict(cfg.get("sweep", {}))
        lo, hi, n = block.get("eps", [-0.3, 0.3, 13])
        eps_grid = np.linspace(float(lo), float(hi), int(n))
        seed_box = tuple(block.get("seed_box", [-0.6, 0.3, 0.5, 1.5]))
        if block.get("synthetic", False):
            from .evans import SyntheticEvans

            def family(eps):
                return SyntheticEvans(
                    lambda z, e=eps: (z - (e - 0.1) - 1j)
                    * (z - (e - 0.1) + 1j) * np.exp(z))
        else:
            from .evans import EvansSystem
            from .profile import solve_profile
            base = build_pair(cfg, params)[0]
            warm = {}

            def family(eps):
                p_eps = base.at_eps(float(eps))
                cfg_eps = dict(cfg)
                p2, pair = build_pair(cfg_eps, p_eps)
                prof = solve_profile(pair, p2,
                                     warm_start=warm.get("prof"))
                warm["prof"] = prof
                return EvansSystem(prof)
        traj = track_pair(family, eps_grid, seed_box)
        crossing = detect_hopf(traj)
        write_sweep_artifacts(outdir, traj, crossing=crossing)
    except DetonaError as exc:
        _error_exit(1, type(exc).__name__, str(exc))
    _finish(outdir, cfg, {"sweep": time.perf_counter() - t0}, "sweep",
            threads)


@main.command()
@_common
def simulate(config_path, outdir, threads):
    """Nonlinear time integration of a perturbed profile."""
    cfg, params = _setup(config_path, "simulate")
    t0 = time.perf_counter()
    try:
        from .timesim import bump_perturbation, run_perturbation
        params, pair, prof = _solve_profile_from_cfg(cfg, params)
        block = dict(cfg.get("simulate", {}))
        amp = float(block.get("amplitude", 1e-3))
        pert = bump_perturbation(amp, center=float(block.get("center", 0.0)),
                                 width=float(block.get("width", 2.0)),
                                 component=int(block.get("component", 1)))
        series = run_perturbation(
            prof, pert, float(block.get("T_final", 5.0)),
            n=int(block.get("n", 1024)), L=block.get("L"),
            sponge_frac=float(block.get("sponge_frac", 0.0)),
            stride=int(block.get("stride", 10)))
        state = series.pop("state")
        snaps = {"final": (state.x, state.U, state.t)}
        write_timeseries_artifacts(outdir, series, snaps)
    except DetonaError as exc:
        _error_exit(1, type(exc).__name__, str(exc))
    _finish(outdir, cfg, {"simulate": time.perf_counter() - t0},
            "simulate", threads)


@main.command()
@_common
def certify(config_path, outdir, threads):
    """Structural-condition certificate for the profile."""
    cfg, params = _setup(config_path, "certify")
    t0 = time.perf_counter()
    try:
        from .checks import certify as _certify
        params, pair, prof = _solve_profile_from_cfg(cfg, params)
        cert = _certify(prof, params)
        write_certificate(outdir, cert)
    except DetonaError as exc:
        _error_exit(1, type(exc).__name__, str(exc))
    _finish(outdir, cfg, {"certify": time.perf_counter() - t0},
            "certify", threads)


if __name__ == "__main__":
    main()

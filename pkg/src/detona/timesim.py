"""Desk-scale nonlinear time integration in the traveling frame.

A second-order central scheme with local Lax-Friedrichs dissipation
(reconstructed interface jumps, so smooth-problem convergence stays second
order), central diffusion fluxes, pointwise reaction source, and explicit
Heun time stepping.  This module corroborates spectral verdicts - decay of
small perturbations in the stable regime, growth in the unstable one, and
the discrete conservation of the fluid variables - it does not prove them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUp, CFLViolation, NonPhysical, TooShort
from .model import ModelParams, ignition_arr
from .profile import Profile

CFL_HYP = 0.4
CFL_PAR = 0.25


def _flux_G_B(U, params: ModelParams):
    """Vectorized flux F(U), source G(U), and diffusion coefficients.

    U has shape (4, n).  Returns (F, G, char speed a, B entries packed as
    the five nonzero coefficients used by the diffusion flux).
    """
    tau, u, E, z = U
    if np.any(tau <= 0):
        raise NonPhysical("tau <= 0 on the grid")
    G_, c, q = params.Gamma, params.cheat, params.qheat
    e = E - 0.5 * u * u - q * z
    if np.any(e <= 0):
        raise NonPhysical("internal energy <= 0 on the grid")
    p = G_ * e / tau
    T = e / c
    sig = np.sqrt(G_ * (G_ + 1.0) * e) / tau
    s = params.s
    F = np.vstack([-u - s * tau, p - s * u, p * u - s * E, -s * z])
    phi = ignition_arr(T, params)
    Gsrc = np.vstack([np.zeros_like(tau), np.zeros_like(tau),
                      np.zeros_like(tau), -params.krate * phi * z])
    a = s + sig
    return F, Gsrc, a


def _diffusion_flux(UL, UR, h, params: ModelParams):
    """Interface diffusion flux B(U_half) (U_R - U_L) / h, vectorized."""
    Uh = 0.5 * (UL + UR)
    tau, u, E, z = Uh
    nu, kap, c, q, d = (params.nu, params.kappa, params.cheat, params.qheat,
                        params.dcoef)
    dU = (UR - UL) / h
    dtau, du, dE, dz = dU
    r2 = nu / tau * du
    r3 = ((nu - kap / c) * u / tau) * du + kap / (c * tau) * dE \
        + q * (d / tau**2 - kap / (c * tau)) * dz
    r4 = d / tau**2 * dz
    return np.vstack([np.zeros_like(r2), r2, r3, r4])


@dataclass
class SimState:
    """Uniform-grid simulation state in the traveling frame."""

    x: np.ndarray
    U: np.ndarray                # shape (4, n)
    t: float
    params: ModelParams
    bc: str = "endstates"        # endstates | periodic
    U_left: np.ndarray = None    # Dirichlet ghost targets
    U_right: np.ndarray = None
    sponge_frac: float = 0.0     # width fraction per side; 0 disables
    sponge_rate: float = 1.0
    limiter: str = "central"     # central | minmod
    bflux_acc: np.ndarray = field(default_factory=lambda: np.zeros(4))

    @property
    def h(self):
        return float(self.x[1] - self.x[0])

    def max_dt(self):
        F, Gsrc, a = _flux_G_B(self.U, self.params)
        tau = self.U[0]
        p = self.params
        diff = max(np.max(p.nu / tau), np.max(p.kappa / (p.cheat * tau)),
                   np.max(p.dcoef / tau**2))
        return min(CFL_HYP * self.h / float(np.max(a)),
                   CFL_PAR * self.h**2 / diff)


def _ghost(U, state: SimState):
    if state.bc == "periodic":
        return np.hstack([U[:, -2:], U, U[:, :2]])
    gl = np.repeat(state.U_left[:, None], 2, axis=1)
    gr = np.repeat(state.U_right[:, None], 2, axis=1)
    return np.hstack([gl, U, gr])


def _slopes(Ug, limiter):
    dL = Ug[:, 1:-1] - Ug[:, :-2]
    dR = Ug[:, 2:] - Ug[:, 1:-1]
    if limiter == "minmod":
        return np.where(dL * dR > 0, np.sign(dL) * np.minimum(np.abs(dL),
                                                              np.abs(dR)), 0.0)
    return 0.5 * (dL + dR)


def _rhs(state: SimState, U, t, forcing=None):
    """Semi-discrete right-hand side; returns (dU/dt, boundary flux rate)."""
    params, h = state.params, state.h
    Ug = _ghost(U, state)
    slope = _slopes(Ug, state.limiter)        # slopes on cells 1..n+2
    # interface left/right states between ghost-extended cells
    UL = Ug[:, 1:-2] + 0.5 * slope[:, :-1]
    UR = Ug[:, 2:-1] - 0.5 * slope[:, 1:]
    FL, _, aL = _flux_G_B(UL, params)
    FR, _, aR = _flux_G_B(UR, params)
    a = np.maximum(aL, aR)
    Fhat = 0.5 * (FL + FR) - 0.5 * a * (UR - UL)
    Dhat = _diffusion_flux(Ug[:, 1:-2], Ug[:, 2:-1], h, params)
    total = Fhat - Dhat
    _, Gsrc, _ = _flux_G_B(U, params)
    dU = -(total[:, 1:] - total[:, :-1]) / h + Gsrc
    if forcing is not None:
        dU = dU + forcing(state.x, t)
    if state.sponge_frac > 0:
        n = U.shape[1]
        w = max(2, int(state.sponge_frac * n))
        ramp = np.zeros(n)
        edge = np.sin(0.5 * np.pi * np.linspace(1.0, 0.0, w)) ** 2
        ramp[:w] = edge
        ramp[-w:] = edge[::-1]
        target = np.where(state.x[None, :] < 0, state.U_left[:, None],
                          state.U_right[:, None])
        dU = dU - state.sponge_rate * ramp[None, :] * (U - target)
    bflux_rate = total[:, -1] - total[:, 0]
    return dU, bflux_rate


def step(state: SimState, dt=None, forcing=None) -> SimState:
    """One explicit Heun step; raises CFLViolation when dt is too large."""
    dt_max = state.max_dt()
    if dt is None:
        dt = dt_max
    elif dt > dt_max * (1.0 + 1e-12):
        raise CFLViolation(f"dt = {dt} exceeds CFL bound {dt_max}")
    k1, b1 = _rhs(state, state.U, state.t, forcing)
    U1 = state.U + dt * k1
    k2, b2 = _rhs(state, U1, state.t + dt, forcing)
    Unew = state.U + 0.5 * dt * (k1 + k2)
    bacc = state.bflux_acc + 0.5 * dt * (b1 + b2)
    return replace(state, U=Unew, t=state.t + dt, bflux_acc=bacc)


def run(state: SimState, T_final, dt=None, forcing=None, observer=None,
        observe_every=1):
    """Advance to T_final; the observer is called as observer(state)."""
    nstep = 0
    while state.t < T_final - 1e-12:
        dtn = min(dt if dt is not None else state.max_dt(),
                  T_final - state.t)
        state = step(state, dtn, forcing)
        nstep += 1
        if observer is not None and nstep % observe_every == 0:
            observer(state)
    return state


def sim_from_profile(profile: Profile, n=1024, L=None, *, bc="endstates",
                     sponge_frac=0.1, limiter="central") -> SimState:
    """Initialize a simulation with the traveling-wave profile on [-L, L]."""
    if L is None:
        L = profile.L
    x = np.linspace(-L, L, n)
    U = profile.U_at(np.clip(x, -profile.L, profile.L))
    pair = profile.pair
    U_left = np.array([pair.left.tau, pair.left.u, pair.left.E, pair.left.z])
    U_right = np.array([pair.right.tau, pair.right.u, pair.right.E,
                        pair.right.z])
    return SimState(x=x, U=U, t=0.0, params=profile.params, bc=bc,
                    U_left=U_left, U_right=U_right, sponge_frac=sponge_frac,
                    limiter=limiter)


def bump_perturbation(amplitude, center=0.0, width=1.0, component=1):
    """Compactly-supported smooth bump added to one component."""
    def pert(x):
        out = np.zeros((4, x.size))
        arg = (x - center) / width
        mask = np.abs(arg) < 1.0
        out[component, mask] = amplitude * np.exp(-1.0 / (1.0 - arg[mask]**2)
                                                  ) * math.e
        return out
    return pert


def _fit_shift(U, x, profile: Profile, delta0, h):
    """Phase of the nearest translate of the profile, by golden-section
    search of the L2 distance over [delta0 - 2h, delta0 + 2h]."""

    def dist(d):
        Uref = profile.U_at(np.clip(x - d, -profile.L, profile.L))
        return float(np.sum((U - Uref) ** 2))

    lo, hi = delta0 - 2 * h, delta0 + 2 * h
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - gr * (hi - lo)
    d = lo + gr * (hi - lo)
    fc, fd = dist(c), dist(d)
    for _ in range(60):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = dist(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = dist(d)
        if hi - lo < 1e-12 * max(1.0, abs(delta0)):
            break
    return 0.5 * (lo + hi)


def run_perturbation(profile: Profile, perturbation, T_final, *, n=1024,
                     L=None, dt=None, sponge_frac=0.0, stride=10,
                     blowup_factor=10.0):
    """Evolve a perturbed profile and record orbital-distance diagnostics.

    Returns a dict of arrays: t, l2, linf, delta (fitted phase), mass_defect
    (raw) and mass_defect_flux (boundary-flux corrected), plus the final
    state.  Raises BlowUp when norms exceed `blowup_factor` times the wave
    jump (recorded as instability evidence by callers).
    """
    state = sim_from_profile(profile, n=n, L=L, sponge_frac=sponge_frac)
    x = state.x
    state = replace(state, U=state.U + perturbation(x))
    h = state.h
    jump = float(np.max(np.abs(state.U_left - state.U_right)))
    v0 = np.sum(state.U[:3], axis=1) * h
    v0norm = float(np.linalg.norm(v0)) + 1e-300

    rows = {"t": [], "l2": [], "linf": [], "delta": [], "mass_defect": [],
            "mass_defect_flux": []}
    delta = 0.0

    def observe(st, delta):
        Uref = profile.U_at(np.clip(x - delta, -profile.L, profile.L))
        dev = st.U - Uref
        rows["t"].append(st.t)
        rows["l2"].append(float(np.sqrt(np.sum(dev**2) * h)))
        rows["linf"].append(float(np.max(np.abs(dev))))
        rows["delta"].append(delta)
        vt = np.sum(st.U[:3], axis=1) * h
        rows["mass_defect"].append(float(np.linalg.norm(vt - v0)) / v0norm)
        rows["mass_defect_flux"].append(
            float(np.linalg.norm(vt - v0 + st.bflux_acc[:3])) / v0norm)

    observe(state, delta)
    nstep = 0
    while state.t < T_final - 1e-12:
        dtn = min(dt if dt is not None else state.max_dt(), T_final - state.t)
        state = step(state, dtn)
        nstep += 1
        if nstep % stride == 0 or state.t >= T_final - 1e-12:
            delta = _fit_shift(state.U, x, profile, delta, h)
            observe(state, delta)
            if rows["linf"][-1] > blowup_factor * jump:
                raise BlowUp(state.t, f"Linf = {rows['linf'][-1]}")
    series = {k: np.array(v) for k, v in rows.items()}
    series["state"] = state
    return series


def detect_oscillation(series, *, min_periods=10, min_peaks=3):
    """Growth rate and dominant period of the phase velocity delta'(t).

    The detrended signal's peak spacing gives the period; the log of the
    peak amplitudes gives the growth rate.  Monotone series report
    period None with the overall log-amplitude slope; raises TooShort when
    the record is shorter than `min_periods` putative periods.
    """
    from scipy.signal import find_peaks
    t = np.asarray(series["t"], dtype=float)
    delta = np.asarray(series["delta"], dtype=float)
    if t.size < 8:
        raise TooShort(f"{t.size} samples")
    dd = np.gradient(delta, t)
    trend = np.polyval(np.polyfit(t, dd, 1), t)
    sig = dd - trend
    scale = float(np.max(np.abs(sig))) + 1e-300
    peaks, _ = find_peaks(sig, height=0.05 * scale)
    if peaks.size >= min_peaks:
        spacing = np.diff(t[peaks])
        period = float(np.median(spacing))
        irregular = spacing.size >= 2 and \
            float(np.std(spacing)) > 0.35 * period
        span_ok = (t[-1] - t[0]) >= min_periods * period
        if not span_ok:
            raise TooShort(
                f"span {t[-1]-t[0]:.3g} < {min_periods} periods of {period:.3g}")
        if irregular:
            return {"growth_rate": None, "period": None}
        amp = np.abs(sig[peaks])
        growth = float(np.polyfit(t[peaks], np.log(amp + 1e-300), 1)[0])
        return {"growth_rate": growth, "period": period}
    # no oscillation: overall amplitude slope
    mask = np.abs(sig) > 1e-6 * scale
    if mask.sum() < 4:
        return {"growth_rate": None, "period": None}
    growth = float(np.polyfit(t[mask], np.log(np.abs(sig[mask]) + 1e-300),
                              1)[0])
    return {"growth_rate": growth, "period": None}

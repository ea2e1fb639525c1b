"""Rankine-Hugoniot endstate construction for strong detonations.

Right endstates are intersections of the Rayleigh line (R) with the reactive
Hugoniot curve (H) in the (tau, p) plane, subject to the temperature
constraints (T)+- (burned side above ignition, unburned below) and the Lax
inequalities (L)+- (sigma_- > s > sigma_+).  The admissible strong-detonation
branch is the intersection with tau_+ > tau_-.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (ConstraintViolated, NoIntersection, PoleAt,
                     RegimeViolated)
from .model import ModelParams, State, thermo

RH_TOL = 1e-10
STRICT_MARGIN = 1e-12


@dataclass(frozen=True)
class EndstatePair:
    """Accepted left/right rest states with residuals and constraint flags."""

    left: State
    right: State
    s: float
    rh_residual: float
    lax_ok: bool
    temp_ok: bool
    tau_pole: float
    tau_deflagration: float | None = None

    def as_dict(self):
        return {
            "left": list(self.left.as_array()),
            "right": list(self.right.as_array()),
            "s": self.s,
            "rh_residual": self.rh_residual,
            "lax_ok": self.lax_ok,
            "temp_ok": self.temp_ok,
            "tau_pole": self.tau_pole,
            "tau_deflagration": self.tau_deflagration,
        }


def _rh_coeffs(left: State, s: float, params: ModelParams):
    """c0, c1, c2 of the (tau, p)-plane Rankine-Hugoniot reduction."""
    e, T, p, sig = thermo(left, params)
    c0 = left.u + s * left.tau
    c1 = p + s**2 * left.tau
    c2 = (p * left.u - s * left.E) + 0.5 * c0**2 * s
    return c0, c1, c2


def rayleigh(tau, left: State, s: float, params: ModelParams):
    """Pressure on the Rayleigh line p = -s^2 tau + c1 through the left state."""
    _, c1, _ = _rh_coeffs(left, s, params)
    return -(s**2) * tau + c1


def hugoniot(tau, left: State, s: float, params: ModelParams, q=None, z_plus=1.0,
             pole_tol=1e-12):
    """Pressure on the reactive Hugoniot curve through the left state.

    p = (c0 - s tau (1 + 1/Gamma))^-1 (c2 + s q z+ + s^3 tau^2 / 2 - s^2 c0 tau).
    Raises PoleAt if tau is within `pole_tol` (relative) of the pole tau0.
    """
    if q is None:
        q = params.qheat
    G = params.Gamma
    c0, c1, c2 = _rh_coeffs(left, s, params)
    tau0 = hugoniot_pole(left, s, params)
    den = c0 - s * tau * (1.0 + 1.0 / G)
    if abs(den) <= pole_tol * max(1.0, abs(c0)):
        raise PoleAt(tau0, tau)
    num = c2 + s * q * z_plus + 0.5 * s**3 * tau**2 - s**2 * c0 * tau
    return num / den


def hugoniot_pole(left: State, s: float, params: ModelParams):
    """Pole tau0 = c0 / (s (1 + 1/Gamma)) of the Hugoniot curve."""
    c0 = left.u + s * left.tau
    return c0 / (s * (1.0 + 1.0 / params.Gamma))


def hugoniot_zeros(left: State, s: float, params: ModelParams, q=None, z_plus=1.0):
    """Zeros (tau_lo, tau_hi) of the Hugoniot numerator, a quadratic in tau."""
    if q is None:
        q = params.qheat
    c0, c1, c2 = _rh_coeffs(left, s, params)
    # 0.5 s^3 tau^2 - s^2 c0 tau + (c2 + s q z+) = 0
    disc = (s**2 * c0) ** 2 - 2.0 * s**3 * (c2 + s * q * z_plus)
    if disc < 0:
        raise NoIntersection("Hugoniot curve has no real zeros")
    r = math.sqrt(disc)
    lo = (s**2 * c0 - r) / s**3
    hi = (s**2 * c0 + r) / s**3
    return lo, hi


def _intersection_quadratic(left: State, s: float, params: ModelParams, q, z_plus):
    """Coefficients (a, b, c) of the pole-cleared equation (R - H) * den = 0.

    a tau^2 + b tau + c = 0 with a = s^3 (1/2 + 1/Gamma) > 0; the two roots
    are the deflagration and strong-detonation intersections.
    """
    G = params.Gamma
    c0, c1, c2 = _rh_coeffs(left, s, params)
    a = s**3 * (0.5 + 1.0 / G)
    b = -s * c1 * (1.0 + 1.0 / G)
    c = c0 * c1 - c2 - s * q * z_plus
    return a, b, c


def _pressure_gap(tau, left, s, params, q, z_plus):
    return rayleigh(tau, left, s, params) - hugoniot(tau, left, s, params, q, z_plus)


def _right_state_from_tau(tau_p, left: State, s: float, params: ModelParams, z_plus):
    p_p = rayleigh(tau_p, left, s, params)
    u_p = left.u - s * (tau_p - left.tau)
    e_p = tau_p * p_p / params.Gamma
    E_p = e_p + 0.5 * u_p**2 + params.qheat * z_plus
    return State(tau_p, u_p, E_p, z_plus)


def rh_residuals(left: State, right: State, s: float, params: ModelParams):
    """The five Rankine-Hugoniot relation residuals (y_pm = 0 built in)."""
    eL, TL, pL, _ = thermo(left, params)
    eR, TR, pR, _ = thermo(right, params)
    from .model import ignition

    def rel(a, b):
        return (a - b) / max(1.0, abs(a), abs(b))

    return np.array([
        rel(-s * (right.tau - left.tau), right.u - left.u),
        rel(pR - s * right.u, pL - s * left.u),
        rel(pR * right.u - s * right.E, pL * left.u - s * left.E),
        0.0,  # y_pm = 0 holds identically at rest points
        max(abs(ignition(TR, params)[0] * right.z),
            abs(ignition(TL, params)[0] * left.z)) / max(1.0, params.krate),
    ])


def solve_right_state(left: State, s: float, params: ModelParams,
                      q=None, z_plus=1.0, _validate=True) -> EndstatePair:
    """Strong-detonation right endstate for a burned left state.

    Root finding brackets the sign change of (rayleigh - hugoniot) on
    (tau0, tau_hi] by bisection and polishes with Newton; the quadratic
    closed form cross-checks the result.  The deflagration-branch root is
    recorded on the returned pair but never returned as the endstate.
    """
    if q is None:
        q = params.qheat
    eL, TL, pL, sigL = thermo(left, params)
    c = params.cheat
    G = params.Gamma
    Ti = params.T_ign

    if left.z != 0.0:
        raise ConstraintViolated("z_left", f"left state must be burned, z = {left.z}")
    if _validate and not TL > Ti + STRICT_MARGIN:
        raise ConstraintViolated("(T)-", f"T_- = {TL} <= T_i = {Ti}")
    if not sigL > s + STRICT_MARGIN:
        raise ConstraintViolated("(L)-", f"sigma_- = {sigL} <= s = {s}")

    tau0 = hugoniot_pole(left, s, params)
    a, b, cq = _intersection_quadratic(left, s, params, q, z_plus)
    disc = b * b - 4.0 * a * cq
    if disc < 0:
        raise NoIntersection("Rayleigh line misses the Hugoniot curve")
    r1 = (-b - math.sqrt(disc)) / (2.0 * a)
    r2 = (-b + math.sqrt(disc)) / (2.0 * a)
    tau_defl, tau_strong = min(r1, r2), max(r1, r2)
    if not tau_strong > max(left.tau, tau0) + STRICT_MARGIN:
        raise NoIntersection(
            f"no intersection with tau > tau_- ({tau_strong} <= {max(left.tau, tau0)})")

    # bracketed bisection oracle-style on the pressure gap, then Newton polish
    try:
        _, tau_hi = hugoniot_zeros(left, s, params, q, z_plus)
    except NoIntersection:
        tau_hi = tau_strong * 1.5
    lo = max(left.tau, tau0 * (1.0 + 1e-9)) if tau0 > left.tau else left.tau
    lo = lo + 1e-9 * max(1.0, lo)
    hi = max(tau_hi, tau_strong * (1.0 + 1e-9))
    glo = _pressure_gap(lo, left, s, params, q, z_plus)
    ghi = _pressure_gap(hi, left, s, params, q, z_plus)
    if glo * ghi > 0:
        # fall back to a bracket around the closed-form root
        lo, hi = tau_strong * (1.0 - 1e-3), tau_strong * (1.0 + 1e-3)
        glo = _pressure_gap(lo, left, s, params, q, z_plus)
        ghi = _pressure_gap(hi, left, s, params, q, z_plus)
        if glo * ghi > 0:
            raise NoIntersection("could not bracket the strong-detonation root")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = _pressure_gap(mid, left, s, params, q, z_plus)
        if glo * gm <= 0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            break
    tau_p = 0.5 * (lo + hi)
    for _ in range(8):  # Newton polish on the pole-cleared quadratic
        fval = a * tau_p**2 + b * tau_p + cq
        dval = 2.0 * a * tau_p + b
        if dval == 0:
            break
        step = fval / dval
        tau_p -= step
        if abs(step) < 1e-16 * max(1.0, abs(tau_p)):
            break

    right = _right_state_from_tau(tau_p, left, s, params, z_plus)
    eR, TR, pR, sigR = thermo(right, params)

    if _validate and not TR < Ti - STRICT_MARGIN:
        raise ConstraintViolated("(T)+", f"T_+ = {TR} >= T_i = {Ti}")
    if not sigR < s - STRICT_MARGIN:
        raise ConstraintViolated("(L)+", f"sigma_+ = {sigR} >= s = {s}")
    if not pR > 0:
        raise ConstraintViolated("p+>0", f"p_+ = {pR}")
    if not 0.0 < z_plus <= 1.0:
        raise ConstraintViolated("z+", f"z_+ = {z_plus} outside (0, 1]")

    resid = float(np.max(np.abs(rh_residuals(left, right, s, params))))
    if resid > RH_TOL:
        raise ConstraintViolated("rh_residual", f"{resid} > {RH_TOL}")
    return EndstatePair(left=left, right=right, s=s, rh_residual=resid,
                        lax_ok=True, temp_ok=True, tau_pole=tau0,
                        tau_deflagration=tau_defl)


def regime_tau_tilde_plus(tau_minus, p_tilde, q, z_plus, Gamma):
    """Closed-form limit of s^2 (tau_+ - (1 + 2/Gamma) tau_-) as s -> infinity.

    Derived by series expansion of the exact intersection quadratic in 1/s:
    [Gamma^2 q z+ + 2 (Gamma+1) tau_- p~] / ((Gamma+2) tau_-).  The q z+ part
    coincides with the published expansion; the p~ coefficient there does not
    follow from (R) = (H) and is exposed separately as
    `regime_tau_tilde_plus_printed` for comparison.
    """
    return (Gamma**2 * q * z_plus + 2.0 * (Gamma + 1.0) * tau_minus * p_tilde) \
        / ((Gamma + 2.0) * tau_minus)


def regime_tau_tilde_plus_printed(tau_minus, p_tilde, q, z_plus, Gamma):
    """The published closed form; kept verbatim for cross-comparison."""
    alpha = 1.0 + 2.0 / Gamma
    beta = (1.0 + 1.0 / Gamma) * alpha - 1.0
    return (Gamma * p_tilde * beta + Gamma * q * z_plus) / (alpha * tau_minus)


def construct_regime(tau_minus, u_tilde, s, q, z_plus, Gamma, *,
                     cheat=1.0, T_ign=None, p_tilde=None,
                     p_floor=1.0) -> State:
    """Left state of the large-speed regime: p_- = 2 s^2 tau_- / Gamma + p~,
    u_- = s u~.

    Checks the regime inequalities: the u~ bracket, the exothermicity
    inequality on p~, and the tau_- bracket; raises RegimeViolated naming the
    first failure.  Defaults p~ to -2 Gamma max(q z+, p_floor) / tau_- (the
    exothermic choice, floored away from zero so the q = 0 family stays
    nondegenerate).  When T_ign is given, the burned-side temperature check
    T_- > T_ign is enforced as well.
    """
    alpha = 1.0 + 2.0 / Gamma
    mid = (1.0 - 2.0 / Gamma) * tau_minus + 2.0 * u_tilde
    if not tau_minus / (1.0 + 1.0 / Gamma) < mid:
        raise RegimeViolated("(reg-u) lower", f"{tau_minus/(1+1/Gamma)} >= {mid}")
    if not mid < alpha * tau_minus:
        raise RegimeViolated("(reg-u) upper", f"{mid} >= {alpha * tau_minus}")

    Q = max(q * z_plus, p_floor)
    if p_tilde is None:
        p_tilde = -2.0 * Gamma * Q / tau_minus
    den = 2.0 * tau_minus / Gamma - u_tilde
    if den != 0.0 and not p_tilde < -(p_tilde * u_tilde + q * z_plus) / den:
        raise RegimeViolated("exothermicity", "p~ bound (6.9.1-type) failed")

    # final tau_- bracket; the upper bound needs T_ign and q z+ > 0
    X = (3.0 + 2.0 / Gamma - alpha * tau_minus) / (4.0 * tau_minus)
    if not X > 1.0:
        raise RegimeViolated("tau_bracket lower", f"X = {X} <= 1")
    if T_ign is not None and q * z_plus > 0:
        if not X < 1.0 + cheat * T_ign / (q * z_plus):
            raise RegimeViolated("tau_bracket upper",
                                 f"X = {X} >= 1 + c T_i / (q z+)")

    p_minus = 2.0 * s**2 * tau_minus / Gamma + p_tilde
    if p_minus <= 0:
        raise RegimeViolated("p_->0", f"p_- = {p_minus}; s too small for regime")
    u_minus = s * u_tilde
    e_minus = tau_minus * p_minus / Gamma
    E_minus = e_minus + 0.5 * u_minus**2
    return State(tau_minus, u_minus, E_minus, 0.0)


def regime_params(tau_minus, u_tilde, s, q, z_plus, Gamma, *, cheat=1.0,
                  nu=0.1, kappa=0.1, dcoef=0.1, krate=1.0, ign_C=1.0,
                  ign_E=1.0, T_ign=None, p_floor=1.0, **extra):
    """Full ModelParams + left state for a large-speed regime case.

    If T_ign is not supplied, it is placed inside the admissible window
    (above the limiting unburned temperature, below the burned one) at the
    geometric mean of the two bounds.
    """
    left = construct_regime(tau_minus, u_tilde, s, q, z_plus, Gamma,
                            cheat=cheat, T_ign=T_ign, p_floor=p_floor)
    if T_ign is None:
        alpha = 1.0 + 2.0 / Gamma
        Q = max(q * z_plus, p_floor)
        p_tilde = -2.0 * Gamma * Q / tau_minus
        p_plus_lim = p_tilde - regime_tau_tilde_plus(tau_minus, p_tilde, q,
                                                     z_plus, Gamma)
        T_plus_lim = alpha * tau_minus * max(p_plus_lim, 1e-12) / (Gamma * cheat)
        e_minus = tau_minus * (2.0 * s**2 * tau_minus / Gamma + p_tilde) / Gamma
        T_minus = e_minus / cheat
        if not T_plus_lim < T_minus:
            raise RegimeViolated("T window", "no admissible ignition window")
        T_ign = math.sqrt(max(T_plus_lim, 1e-10) * T_minus)
        # keep a safety margin from both window ends
        T_ign = min(max(T_ign, 2.0 * T_plus_lim), 0.5 * T_minus)
    params = ModelParams(nu=nu, kappa=kappa, dcoef=dcoef, krate=krate,
                         qheat=q, Gamma=Gamma, cheat=cheat, T_ign=T_ign,
                         ign_C=ign_C, ign_E=ign_E, s=s, **extra)
    return params, left


def small_amplitude_params(mach=1.15, tau_left=1.0, p_left=1.0, *, Gamma=1.2,
                           cheat=1.0, nu=1.0, kappa=1.0, dcoef=1.0, krate=1.0,
                           ign_C=1.0, ign_E=0.02, q=0.0, z_plus=1.0, **extra):
    """Nonreactive-limit benchmark: a Lax shock pair with q ~ 0.

    The wave speed is sigma_- / mach... inverted: s = sigma_- / mach with
    mach > 1 giving sigma_- > s.  T_ign is placed midway between the two
    endstate temperatures so the pair qualifies as a strong detonation.
    """
    e_left = tau_left * p_left / Gamma
    E_left = e_left + 0.0
    left = State(tau_left, 0.0, E_left, 0.0)
    sigma_left = math.sqrt(Gamma * (Gamma + 1.0) * e_left) / tau_left
    s = sigma_left / mach
    # provisional params to solve RH (T_ign fixed after the fact)
    prov = ModelParams(nu=nu, kappa=kappa, dcoef=dcoef, krate=krate, qheat=q,
                       Gamma=Gamma, cheat=cheat, T_ign=1e9, ign_C=ign_C,
                       ign_E=ign_E, s=s, **extra)
    pair0 = solve_right_state(left, s, prov, q=q, z_plus=z_plus, _validate=False)
    TL = thermo(left, prov)[1]
    TR = thermo(pair0.right, prov)[1]
    T_ign = 0.5 * (TL + TR)
    params = ModelParams(nu=nu, kappa=kappa, dcoef=dcoef, krate=krate,
                         qheat=q, Gamma=Gamma, cheat=cheat, T_ign=T_ign,
                         ign_C=ign_C, ign_E=ign_E, s=s, **extra)
    pair = solve_right_state(left, s, params, q=q, z_plus=z_plus)
    return params, pair


def endstate_eigenvalues(pair: EndstatePair, params: ModelParams):
    """Linearization rates of the traveling-wave ODE at both rest points.

    Fluid pair per side: roots of
      lam^2 + (s c tau / kappa + tau (s^2 + p_tau) / (s nu)) lam
            + c tau^2 (s^2 - sigma^2) / (kappa nu) = 0,
    reactive pair per side: roots of (d / tau^2) lam^2 + s lam - k phi(T) = 0.

    Both closed forms are the published ones with the diffusion factors
    inverted to their linearization-consistent placement and specific-volume
    powers restored; the sign structure (Lax saddle on the burned side,
    stable node + kernel on the unburned side) is unchanged.
    """
    from .model import ignition
    out = {}
    s = params.s
    for side, st in (("minus", pair.left), ("plus", pair.right)):
        e, T, p, sig = thermo(st, params)
        tau = st.tau
        p_tau = -params.Gamma * e / tau**2
        a1 = s * params.cheat * tau / params.kappa \
            + tau * (s**2 + p_tau) / (s * params.nu)
        a0 = params.cheat * tau**2 * (s**2 - sig**2) / (params.kappa * params.nu)
        fluid = np.roots([1.0, a1, a0])
        d_eff = params.dcoef / tau**2
        phi = ignition(T, params)[0]
        reactive = np.roots([d_eff, s, -params.krate * phi])
        out[f"fluid_{side}"] = np.sort_complex(fluid)
        out[f"reactive_{side}"] = np.sort_complex(reactive)
    return out


def rh_curve_samples(pair: EndstatePair, params: ModelParams, n=400):
    """(tau, p) samples of (R), (H) and the (T)/(L) constraint boundaries.

    Returns a dict of columns for the Rankine-Hugoniot diagram artifact.
    tau spans from just right of the pole to past the strong intersection.
    """
    left, s = pair.left, pair.s
    tau0 = pair.tau_pole
    tau_hi = max(pair.right.tau * 1.25, left.tau * 1.5)
    tau_lo = max(min(left.tau * 0.75, tau0 * 1.05), tau0 + 0.02 * (tau_hi - tau0))
    taus = np.linspace(tau_lo, tau_hi, n)
    pR = np.array([rayleigh(t, left, s, params) for t in taus])
    pH = []
    for t in taus:
        try:
            pH.append(hugoniot(t, left, s, params))
        except PoleAt:
            pH.append(np.nan)
    cGTi = params.cheat * params.Gamma * params.T_ign
    p_temp = cGTi / taus                      # (T) boundary: tau p = c Gamma T_i
    p_lax = s**2 * taus / (params.Gamma + 1)  # (L) boundary: p / tau = s^2/(G+1)
    return {
        "tau": taus, "p_rayleigh": pR, "p_hugoniot": np.array(pH),
        "p_temp_boundary": p_temp, "p_lax_boundary": p_lax,
    }

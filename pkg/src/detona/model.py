"""Equation of state, ignition kinetics, fluxes, diffusion and source terms.

All quantities refer to the one-dimensional reactive compressible
Navier-Stokes system in Lagrangian coordinates, written in the frame moving
with the wave speed ``s``:

    U_t + F(U)_x = (B(U) U_x)_x + G(U),      U = (tau, u, E, z).

The gas is ideal, ``p = Gamma e / tau``, ``T = e / c``, with internal energy
``e = E - u^2/2 - q z``.  Two block coordinatizations are used throughout the
package: ``(tau, w)`` with ``w = (u, E, z)`` (diffusion block-diagonal) and
``(v, z)`` with ``v = (tau, u, E)`` (conservative fluid part).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NonPhysical


@dataclass(frozen=True)
class EpsMap:
    """Affine map eps -> model parameter: `param` is set to base + slope*eps."""

    param: str = "qheat"
    base: float = 0.0
    slope: float = 1.0

    def as_dict(self):
        return {"param": self.param, "base": self.base, "slope": self.slope}


@dataclass(frozen=True)
class ModelParams:
    """Physical and model constants, plus the sweep-parameter map.

    nu, kappa, dcoef: viscosity, heat conduction, species diffusion (> 0)
    krate:  reaction rate k (> 0)
    qheat:  heat release q (exothermic if > 0)
    Gamma:  Gruneisen constant (> 0)
    cheat:  specific heat c (> 0)
    T_ign:  ignition temperature (> 0)
    ign_C, ign_E: Arrhenius prefactor and activation energy (> 0)
    s:      wave speed (> 0)
    eps_map: which constant the bifurcation parameter eps varies, affinely
    ign_model: 'arrhenius' or 'smoothstep' (C-infinity mollified Heaviside)
    ign_sign: exponent sign in the Arrhenius law; -1 (default) is the smooth
        choice, +1 reproduces the diverging variant
    ign_width: temperature width of the smoothstep ramp above T_ign
    """

    nu: float = 0.1
    kappa: float = 0.1
    dcoef: float = 0.1
    krate: float = 1.0
    qheat: float = 0.0
    Gamma: float = 1.2
    cheat: float = 1.0
    T_ign: float = 1.0
    ign_C: float = 1.0
    ign_E: float = 1.0
    s: float = 1.0
    eps_map: EpsMap = field(default_factory=EpsMap)
    ign_model: str = "arrhenius"
    ign_sign: int = -1
    ign_width: float = 1.0

    def __post_init__(self):
        for name in ("nu", "kappa", "dcoef", "krate", "Gamma", "cheat",
                     "T_ign", "ign_C", "ign_E", "s", "ign_width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"ModelParams.{name} must be > 0")
        if self.ign_model not in ("arrhenius", "smoothstep"):
            raise ValueError(f"unknown ign_model {self.ign_model!r}")
        if self.ign_sign not in (-1, 1):
            raise ValueError("ign_sign must be -1 or +1")

    def at_eps(self, eps: float) -> "ModelParams":
        """Parameters at sweep value eps, through `eps_map`."""
        m = self.eps_map
        return replace(self, **{m.param: m.base + m.slope * eps})

    def as_dict(self):
        d = {name: getattr(self, name)
             for name in ("nu", "kappa", "dcoef", "krate", "qheat", "Gamma",
                          "cheat", "T_ign", "ign_C", "ign_E", "s",
                          "ign_model", "ign_sign", "ign_width")}
        d["eps_map"] = self.eps_map.as_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        em = d.pop("eps_map", None)
        if isinstance(em, dict):
            d["eps_map"] = EpsMap(**em)
        elif em is not None:
            d["eps_map"] = em
        return cls(**d)


@dataclass(frozen=True)
class State:
    """A point U = (tau, u, E, z)."""

    tau: float
    u: float
    E: float
    z: float

    def __post_init__(self):
        if self.tau <= 0:
            raise NonPhysical(f"tau = {self.tau} <= 0")
        if not -1e-12 <= self.z <= 1 + 1e-12:
            raise NonPhysical(f"z = {self.z} outside [0, 1]")

    def as_array(self):
        return np.array([self.tau, self.u, self.E, self.z])

    @classmethod
    def from_array(cls, U):
        return cls(float(U[0]), float(U[1]), float(U[2]), float(U[3]))


def internal_energy(tau, u, E, z, params: ModelParams):
    """e = E - u^2/2 - q z; raises NonPhysical if e <= 0 (scalar input only)."""
    e = E - 0.5 * u * u - params.qheat * z
    if np.ndim(e) == 0 and e <= 0:
        raise NonPhysical(f"internal energy e = {e} <= 0")
    return e


def thermo(state: State, params: ModelParams):
    """Thermodynamic closure: returns (e, T, p, sigma) at `state`.

    sigma is the Lagrangian sound speed tau^-1 sqrt(Gamma (Gamma+1) e).
    """
    e = internal_energy(state.tau, state.u, state.E, state.z, params)
    T = e / params.cheat
    p = params.Gamma * e / state.tau
    sigma = math.sqrt(params.Gamma * (params.Gamma + 1.0) * e) / state.tau
    return e, T, p, sigma


def ignition(T, params: ModelParams):
    """Ignition function: returns (phi(T), phi'(T)).

    Vanishes identically (with all derivatives) for T <= T_ign and is
    strictly positive above.  Default form is the Arrhenius law
    C exp(sign * E / (T - T_ign)) with sign = -1, the smooth choice; the
    'smoothstep' form is a C-infinity ramp saturating at C over a width
    `ign_width` above T_ign.
    """
    Ti = params.T_ign
    if T <= Ti:
        return 0.0, 0.0
    dT = T - Ti
    if params.ign_model == "arrhenius":
        ex = params.ign_sign * params.ign_E / dT
        if ex > 700.0:  # +1 sign variant blows up as T -> T_ign
            return math.inf, -math.inf
        val = params.ign_C * math.exp(ex)
        dval = val * (-params.ign_sign * params.ign_E / dT**2)
        return val, dval
    # smoothstep: h(x) = a(x) / (a(x) + a(1-x)), a(x) = exp(-1/x) on (0,1)
    x = dT / params.ign_width
    if x >= 1.0:
        return params.ign_C, 0.0
    ax = math.exp(-1.0 / x)
    a1 = math.exp(-1.0 / (1.0 - x))
    h = ax / (ax + a1)
    dax = ax / x**2
    da1 = -a1 / (1.0 - x) ** 2
    dh = (dax * a1 - ax * da1) / (ax + a1) ** 2
    return params.ign_C * h, params.ign_C * dh / params.ign_width


def ignition_arr(T, params: ModelParams):
    """Vectorized phi(T) over an array of temperatures (values only)."""
    T = np.asarray(T, dtype=float)
    dT = T - params.T_ign
    out = np.zeros_like(T)
    hot = dT > 0
    if params.ign_model == "arrhenius":
        ex = np.full_like(T, -np.inf)
        ex[hot] = params.ign_sign * params.ign_E / dT[hot]
        np.clip(ex, -745.0, 700.0, out=ex)
        out[hot] = params.ign_C * np.exp(ex[hot])
        return out
    x = np.clip(dT / params.ign_width, 0.0, 1.0)
    inner = (x > 0) & (x < 1)
    ax = np.exp(-1.0 / np.where(inner, x, 0.5))
    a1 = np.exp(-1.0 / np.where(inner, 1.0 - x, 0.5))
    h = np.where(x >= 1.0, 1.0, np.where(inner, ax / (ax + a1), 0.0))
    return params.ign_C * h


def pressure_jet(tau, u, E, z, params: ModelParams):
    """p and its gradient in U = (tau, u, E, z)."""
    e = internal_energy(tau, u, E, z, params)
    G = params.Gamma
    p = G * e / tau
    dp = np.array([-G * e / tau**2, -G * u / tau, G / tau, -G * params.qheat / tau])
    return p, dp


def flux_jet(state: State, params: ModelParams):
    """Shifted flux F (including -sU), Jacobian dF, diffusion B, source G, dG.

    B is returned in the (tau, w) block form: first row and column are
    identically zero for the ideal gas closure, and the lower 3x3 block b is
    invertible.
    """
    tau, u, E, z = state.tau, state.u, state.E, state.z
    s, G_ = params.s, params.Gamma
    q, c = params.qheat, params.cheat
    nu, kap, d = params.nu, params.kappa, params.dcoef
    e = internal_energy(tau, u, E, z, params)
    T = e / c
    p, dp = pressure_jet(tau, u, E, z, params)

    F = np.array([-u, p, p * u, 0.0]) - s * state.as_array()
    dF = np.array([
        [-s, -1.0, 0.0, 0.0],
        [dp[0], dp[1] - s, dp[2], dp[3]],
        [u * dp[0], p + u * dp[1], u * dp[2] - s, u * dp[3]],
        [0.0, 0.0, 0.0, -s],
    ])

    B = np.zeros((4, 4))
    B[1:, 1:] = diffusion_b(tau, u, params)

    phi, dphi = ignition(T, params)
    Gsrc = np.array([0.0, 0.0, 0.0, -params.krate * phi * z])
    # T as a function of U: dT = (0, -u/c, 1/c, -q/c)
    kr = params.krate
    dG = np.zeros((4, 4))
    dG[3, 1] = kr * dphi * u * z / c
    dG[3, 2] = -kr * dphi * z / c
    dG[3, 3] = -kr * phi + kr * dphi * q * z / c
    return F, dF, B, Gsrc, dG


# ---------------------------------------------------------------------------
# (tau, w) coordinatization, w = (u, E, z): building blocks for the profile
# ODE and the first-order eigenvalue systems.  J picks tau's coupling to w.
# ---------------------------------------------------------------------------

J_ROW = np.array([1.0, 0.0, 0.0])


def diffusion_b(tau, u, params: ModelParams):
    """Lower 3x3 diffusion block b(tau, u) of the (tau, w) coordinatization."""
    nu, kap, c, q, d = params.nu, params.kappa, params.cheat, params.qheat, params.dcoef
    return np.array([
        [nu / tau, 0.0, 0.0],
        [(nu - kap / c) * u / tau, kap / (c * tau), q * (d / tau**2 - kap / (c * tau))],
        [0.0, 0.0, d / tau**2],
    ])


def diffusion_b_jet(tau, u, params: ModelParams):
    """b and its partials: returns (b, b_tau, b_u); b is independent of (E, z)."""
    nu, kap, c, q, d = params.nu, params.kappa, params.cheat, params.qheat, params.dcoef
    b = diffusion_b(tau, u, params)
    b_tau = np.array([
        [-nu / tau**2, 0.0, 0.0],
        [-(nu - kap / c) * u / tau**2, -kap / (c * tau**2),
         q * (-2.0 * d / tau**3 + kap / (c * tau**2))],
        [0.0, 0.0, -2.0 * d / tau**3],
    ])
    b_u = np.zeros((3, 3))
    b_u[1, 0] = (nu - kap / c) / tau
    return b, b_tau, b_u


def diffusion_b_hess(tau, u, params: ModelParams):
    """Second partials of b: returns (b_tautau, b_tauu); all others vanish."""
    nu, kap, c, q, d = params.nu, params.kappa, params.cheat, params.qheat, params.dcoef
    b_tt = np.array([
        [2.0 * nu / tau**3, 0.0, 0.0],
        [2.0 * (nu - kap / c) * u / tau**3, 2.0 * kap / (c * tau**3),
         q * (6.0 * d / tau**4 - 2.0 * kap / (c * tau**3))],
        [0.0, 0.0, 6.0 * d / tau**4],
    ])
    b_tu = np.zeros((3, 3))
    b_tu[1, 0] = -(nu - kap / c) / tau**2
    return b_tt, b_tu


def flux_fw_jet(tau, w, params: ModelParams):
    """Velocity-coordinate flux pieces: returns (f, f_tau, f_w).

    f = (p - s u, p u - s E, -s z) with p = p(tau, u, E, z).
    """
    u, E, z = w
    s, G = params.s, params.Gamma
    e = internal_energy(tau, u, E, z, params)
    p = G * e / tau
    p_tau = -G * e / tau**2
    p_u = -G * u / tau
    p_E = G / tau
    p_z = -G * params.qheat / tau
    f = np.array([p - s * u, p * u - s * E, -s * z])
    f_tau = np.array([p_tau, u * p_tau, 0.0])
    f_w = np.array([
        [p_u - s, p_E, p_z],
        [p + u * p_u, u * p_E - s, u * p_z],
        [0.0, 0.0, -s],
    ])
    return f, f_tau, f_w


def flux_fw_hess(tau, w, params: ModelParams):
    """Second partials of f: returns (f_tautau, f_tauw, f_ww).

    f_tauw[:, k] = d(f_tau)/d(w_k); f_ww[i] = Hessian of f_i in w (3x3).
    """
    u, E, z = w
    G, q = params.Gamma, params.qheat
    e = internal_energy(tau, u, E, z, params)
    p_tt = 2.0 * G * e / tau**3
    p_tu = G * u / tau**2
    p_tE = -G / tau**2
    p_tz = G * q / tau**2
    p_u = -G * u / tau
    p_uu = -G / tau
    p_E = G / tau
    p_z = -G * q / tau
    p_tau = -G * e / tau**2

    f_tt = np.array([p_tt, u * p_tt, 0.0])
    # columns: derivative of f_tau w.r.t. u, E, z
    f_tw = np.array([
        [p_tu, p_tE, p_tz],
        [p_tau + u * p_tu, u * p_tE, u * p_tz],
        [0.0, 0.0, 0.0],
    ])
    f1_ww = np.array([[p_uu, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    f2_ww = np.array([
        [2.0 * p_u + u * p_uu, p_E, p_z],
        [p_E, 0.0, 0.0],
        [p_z, 0.0, 0.0],
    ])
    f3_ww = np.zeros((3, 3))
    return f_tt, f_tw, np.array([f1_ww, f2_ww, f3_ww])


def source_gw(w, params: ModelParams):
    """Reactive source g(w) = (0, 0, -k phi(T) z) and its Jacobian g_w."""
    u, E, z = w
    c, q, kr = params.cheat, params.qheat, params.krate
    e = E - 0.5 * u * u - q * z
    if e <= 0:
        raise NonPhysical(f"internal energy e = {e} <= 0")
    phi, dphi = ignition(e / c, params)
    g = np.array([0.0, 0.0, -kr * phi * z])
    g_w = np.zeros((3, 3))
    g_w[2, 0] = kr * dphi * u * z / c
    g_w[2, 1] = -kr * dphi * z / c
    g_w[2, 2] = -kr * phi + kr * dphi * q * z / c
    return g, g_w


def fluid_sharp_jet(state: State, params: ModelParams):
    """(v, z) coordinatization fluid pieces: returns (df_sharp, b1_sharp).

    df_sharp is the 3x3 Jacobian of f# = (-u - s tau, p - s u, p u - s E) in
    v = (tau, u, E) at fixed z; b1_sharp is the fluid diffusion block.
    """
    tau, u = state.tau, state.u
    s, G = params.s, params.Gamma
    nu, kap, c = params.nu, params.kappa, params.cheat
    e = internal_energy(tau, u, state.E, state.z, params)
    p = G * e / tau
    p_tau, p_u, p_E = -G * e / tau**2, -G * u / tau, G / tau
    df = np.array([
        [-s, -1.0, 0.0],
        [p_tau, p_u - s, p_E],
        [u * p_tau, p + u * p_u, u * p_E - s],
    ])
    b1 = np.array([
        [0.0, 0.0, 0.0],
        [0.0, nu / tau, 0.0],
        [0.0, (nu - kap / c) * u / tau, kap / (c * tau)],
    ])
    return df, b1

"""Traveling-wave profiles: connecting orbits of the profile ODE.

The wave is computed as a boundary-value problem in w = (u, E, z, y) with
y = z' and tau eliminated through the integrated mass constraint
-s (tau - tau_-) = u - u_-.  Boundary conditions project onto the unstable
subspace at the burned rest point and the stable subspace at the unburned
one (whose linearization has a one-dimensional kernel, excluded by the
projection); one interior phase condition pins the translate.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp

from .endstates import EndstatePair, endstate_eigenvalues
from .errors import IllConditioned, NoConvergence, NonPhysical, TruncationTooShort
from .model import ModelParams, State, ignition, thermo


def tau_of_u(u, pair: EndstatePair, params: ModelParams):
    """Specific volume from the mass constraint -s (tau - tau_-) = u - u_-."""
    return pair.left.tau - (u - pair.left.u) / params.s


def rest_point(side, pair: EndstatePair):
    """Rest-point coordinates (u, E, z, 0) of the profile ODE."""
    st = pair.left if side == "minus" else pair.right
    return np.array([st.u, st.E, st.z, 0.0])


def profile_rhs(w, params: ModelParams, pair: EndstatePair):
    """Right-hand side (u', E', z', y') of the profile ODE.

    Vectorized over trailing axes: w may be shape (4,) or (4, m).  The
    species-diffusion flux law (d tau^-2 z')' = -s z' + k phi(T) z is kept
    exact, so y' picks up the 2 (tau'/tau) y transport correction.
    """
    w = np.asarray(w, dtype=float)
    u, E, z, y = w[0], w[1], w[2], w[3]
    s, nu, kap, c = params.s, params.nu, params.kappa, params.cheat
    q, d, kr, G = params.qheat, params.dcoef, params.krate, params.Gamma

    tau = tau_of_u(u, pair, params)
    e = E - 0.5 * u * u - q * z
    if np.any(tau <= 0) or np.any(e <= 0):
        raise NonPhysical("profile left the physical domain")
    p = G * e / tau
    T = e / c

    eL, TL, pL, _ = thermo(pair.left, params)
    m2 = pL - s * pair.left.u
    m3 = pL * pair.left.u - s * pair.left.E

    up = (tau / nu) * (p - s * u - m2)
    if np.ndim(T) == 0:
        phi = ignition(float(T), params)[0]
    else:
        from .model import ignition_arr
        phi = ignition_arr(T, params)
    Ep = (c * tau / kap) * (p * u - s * E - m3
                            + (kap / (c * tau) - d / tau**2) * q * y
                            - (nu - kap / c) * (u / tau) * up)
    zp = y
    taup = -up / s
    yp = (tau**2 / d) * (-s * y + kr * phi * z) + 2.0 * (taup / tau) * y
    return np.array([up, Ep, zp, yp])


def profile_rhs_jac(w, params: ModelParams, pair: EndstatePair):
    """Analytic Jacobian of `profile_rhs` at a single point w (shape (4,))."""
    u, E, z, y = (float(v) for v in w)
    s, nu, kap, c = params.s, params.nu, params.kappa, params.cheat
    q, d, kr, G = params.qheat, params.dcoef, params.krate, params.Gamma

    tau = tau_of_u(u, pair, params)
    e = E - 0.5 * u * u - q * z
    p = G * e / tau
    T = e / c
    phi, dphi = ignition(T, params)

    eL, TL, pL, _ = thermo(pair.left, params)
    m2 = pL - s * pair.left.u
    m3 = pL * pair.left.u - s * pair.left.E

    dtau_du = -1.0 / s
    p_u = -G * u / tau - (G * e / tau**2) * dtau_du
    p_E = G / tau
    p_z = -G * q / tau

    F1 = (tau / nu) * (p - s * u - m2)
    dF1 = np.zeros(4)
    dF1[0] = (dtau_du / nu) * (p - s * u - m2) + (tau / nu) * (p_u - s)
    dF1[1] = (tau / nu) * p_E
    dF1[2] = (tau / nu) * p_z
    # R := p u - s E - m3 + (kap/(c tau) - d/tau^2) q y - (nu - kap/c)(u/tau) F1
    coef = kap / (c * tau) - d / tau**2
    dcoef_dtau = -kap / (c * tau**2) + 2.0 * d / tau**3
    visc = nu - kap / c
    R = p * u - s * E - m3 + coef * q * y - visc * (u / tau) * F1
    dR = np.zeros(4)
    dR[0] = (p + u * p_u) + dcoef_dtau * dtau_du * q * y \
        - visc * ((1.0 / tau - u * dtau_du / tau**2) * F1 + (u / tau) * dF1[0])
    dR[1] = u * p_E - s - visc * (u / tau) * dF1[1]
    dR[2] = u * p_z - visc * (u / tau) * dF1[2]
    dR[3] = coef * q
    jac = np.zeros((4, 4))
    jac[0] = dF1
    jac[1, 0] = (c / kap) * (dtau_du * R + tau * dR[0])
    jac[1, 1:] = (c * tau / kap) * dR[1:]
    jac[2, 3] = 1.0
    # F4 = (tau^2/d)(-s y + k phi z) - 2 F1 y / (s tau)
    react = -s * y + kr * phi * z
    jac[3, 0] = (2.0 * tau / d) * dtau_du * react \
        + (tau**2 / d) * kr * z * dphi * (-u / c) \
        - (2.0 * y / s) * (dF1[0] / tau - F1 * dtau_du / tau**2)
    jac[3, 1] = (tau**2 / d) * kr * z * dphi / c - (2.0 * y / (s * tau)) * dF1[1]
    jac[3, 2] = (tau**2 / d) * kr * (phi + z * dphi * (-q / c)) \
        - (2.0 * y / (s * tau)) * dF1[2]
    jac[3, 3] = -s * tau**2 / d - 2.0 * F1 / (s * tau)
    return jac


def _eig_sorted(J):
    lam, V = np.linalg.eig(J)
    order = np.argsort(lam.real)
    return lam[order], V[:, order]


def _left_rows(J, select):
    """Real rows spanning the left eigenspace of eigenvalues passing `select`.

    Complex-conjugate pairs contribute their real and imaginary parts once.
    """
    lam, W = np.linalg.eig(J.T)
    rows, used = [], set()
    for i, lv in enumerate(lam):
        if i in used or not select(lv):
            continue
        w = W[:, i]
        if abs(lv.imag) > 1e-12 * max(1.0, abs(lv.real)):
            j = int(np.argmin(np.abs(lam - lv.conjugate())))
            used.add(j)
            rows.extend([w.real, w.imag])
        else:
            rows.append(w.real)
        used.add(i)
    rows = [r / np.linalg.norm(r) for r in rows]
    return np.array(rows)


@dataclass
class Profile:
    """A computed connecting orbit with its decay and residual diagnostics."""

    grid: np.ndarray
    values: np.ndarray          # shape (4, n): u, E, z, y at the nodes
    pair: EndstatePair
    params: ModelParams
    eta0: float
    residual: float
    L: float
    phase: tuple = ("u", None)
    sol: Callable = None        # C1 interpolant from the collocation solve
    meta: dict = field(default_factory=dict)

    def w_at(self, x):
        return self.sol(np.atleast_1d(np.asarray(x, dtype=float)))

    def wx_at(self, x):
        return profile_rhs(self.w_at(x), self.params, self.pair)

    def wxx_at(self, x):
        w = self.w_at(x)
        wx = profile_rhs(w, self.params, self.pair)
        out = np.empty_like(wx)
        for i in range(w.shape[1]):
            out[:, i] = profile_rhs_jac(w[:, i], self.params, self.pair) @ wx[:, i]
        return out

    def tau_at(self, x):
        return tau_of_u(self.w_at(x)[0], self.pair, self.params)

    def U_at(self, x):
        """Full state (tau, u, E, z) rows at x."""
        w = self.w_at(x)
        return np.vstack([tau_of_u(w[0], self.pair, self.params), w[0], w[1], w[2]])

    def params_hash(self):
        blob = json.dumps(self.params.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def endpoint_rates(self):
        """min |Re| of the nonzero linearization eigenvalues, per side."""
        ev = endstate_eigenvalues(self.pair, self.params)
        out = {}
        for side in ("minus", "plus"):
            lam = np.concatenate([ev[f"fluid_{side}"], ev[f"reactive_{side}"]])
            lam = lam[np.abs(lam.real) > 1e-10]
            out[side] = float(np.min(np.abs(lam.real)))
        return out


def _initial_guess(x, pair: EndstatePair, params: ModelParams):
    wm, wp = rest_point("minus", pair), rest_point("plus", pair)
    width_f = max(params.nu / (params.s * pair.left.tau), 1e-3)
    ev = endstate_eigenvalues(pair, params)
    mu_r = ev["reactive_minus"].real.max()
    width_z = 1.0 / max(mu_r, 1e-2)
    t = 0.5 * (1.0 + np.tanh(x / (2.0 * width_f)))
    y0 = np.empty((4, x.size))
    for i in (0, 1):
        y0[i] = wm[i] + (wp[i] - wm[i]) * t
    sigm = 1.0 / (1.0 + np.exp(-np.clip(x / width_z, -200, 200)))
    y0[2] = wp[2] * sigm
    y0[3] = wp[2] * sigm * (1.0 - sigm) / width_z
    return y0


def _graded_mesh(L, n, a=4.0):
    xi = np.linspace(-1.0, 1.0, n)
    return L * np.sign(xi) * (np.expm1(np.abs(xi) * a)) / np.expm1(a)


def solve_profile(pair: EndstatePair, params: ModelParams, *, L0=None,
                  tol=1e-9, max_nodes=200_000, phase=("u", None),
                  max_doublings=4, trunc_tol=1e-8, warm_start: Profile = None,
                  n_init=2001) -> Profile:
    """Connecting-orbit solve by collocation with projection boundary
    conditions; the truncation half-length doubles until the endpoint layers
    are converged.

    phase = (component, value): interior condition w_comp(0) = value, with
    value defaulting to the midpoint of the component's endstate values.
    """
    wm, wp = rest_point("minus", pair), rest_point("plus", pair)
    Jm = profile_rhs_jac(wm, params, pair)
    Jp = profile_rhs_jac(wp, params, pair)
    rows_m = _left_rows(Jm, lambda lv: lv.real < -1e-10)       # kill stable at -L
    rows_p = _left_rows(Jp, lambda lv: abs(lv.real) <= 1e-10)  # kill center at +L
    if rows_m.shape[0] != 2 or rows_p.shape[0] != 1:
        raise NoConvergence(
            "unexpected rest-point splitting",
            {"n_stable_minus": rows_m.shape[0], "n_center_plus": rows_p.shape[0]})

    comp = {"u": 0, "E": 1, "z": 2, "y": 3}[phase[0]]
    phase_val = phase[1]
    if phase_val is None:
        phase_val = 0.5 * (wm[comp] + wp[comp])

    rates = {}
    ev = endstate_eigenvalues(pair, params)
    for side in ("minus", "plus"):
        lam = np.concatenate([ev[f"fluid_{side}"], ev[f"reactive_{side}"]])
        lam = lam[np.abs(lam.real) > 1e-10]
        rates[side] = float(np.min(np.abs(lam.real)))
    eta_est = min(rates.values())
    if L0 is None:
        L0 = 30.0 / eta_est

    def make_fun(L):
        def fun(xi, Y):
            left = profile_rhs(Y[:4], params, pair)
            right = profile_rhs(Y[4:], params, pair)
            return L * np.vstack([left, right])

        def fun_jac(xi, Y):
            m = Y.shape[1]
            Jo = np.zeros((8, 8, m))
            for i in range(m):
                Jo[:4, :4, i] = L * profile_rhs_jac(Y[:4, i], params, pair)
                Jo[4:, 4:, i] = L * profile_rhs_jac(Y[4:, i], params, pair)
            return Jo
        return fun, fun_jac

    def bc(Ya, Yb):
        out = np.empty(8)
        out[0:2] = rows_m @ (Ya[:4] - wm)
        out[2] = rows_p @ (Yb[4:] - wp)
        out[3:7] = Yb[:4] - Ya[4:]
        out[7] = Ya[4 + comp] - phase_val
        return out

    def bc_jac(Ya, Yb):
        dA = np.zeros((8, 8))
        dB = np.zeros((8, 8))
        dA[0:2, :4] = rows_m
        dB[2, 4:] = rows_p
        dB[3:7, :4] = np.eye(4)
        dA[3:7, 4:] = -np.eye(4)
        dA[7, 4 + comp] = 1.0
        return dA, dB

    L = float(L0)
    prev = warm_start
    prof = None
    for attempt in range(max_doublings + 1):
        xi = np.linspace(0.0, 1.0, n_init)
        x_left = -L * (1.0 - xi)
        x_right = L * xi
        if prev is not None:
            YL = prev.sol(np.clip(x_left, -prev.L, prev.L))
            YR = prev.sol(np.clip(x_right, -prev.L, prev.L))
        else:
            YL = _initial_guess(x_left, pair, params)
            YR = _initial_guess(x_right, pair, params)
        Y0 = np.vstack([YL, YR])

        fun, fun_jac = make_fun(L)
        res = None
        for n_try in (n_init, 2 * n_init):
            xi_try = np.linspace(0.0, 1.0, n_try)
            Y0_try = Y0 if n_try == n_init else np.vstack(
                [np.interp(xi_try, xi, Y0[i]) for i in range(8)])
            try:
                res = solve_bvp(fun, bc, xi_try, Y0_try, fun_jac=fun_jac,
                                bc_jac=bc_jac, tol=tol, max_nodes=max_nodes,
                                verbose=0)
            except NonPhysical as exc:
                raise NoConvergence("profile iterate left the physical domain",
                                    {"L": L, "error": str(exc)})
            if res.status == 0:
                break
        if res.status != 0:
            raise NoConvergence("solve_bvp failed",
                                {"message": res.message, "L": L,
                                 "nodes": int(res.x.size)})

        prof = _assemble(res, L, pair, params, (phase[0], phase_val))
        scale = max(np.max(np.abs(wm - wp)), 1.0)
        mism = max(np.max(np.abs(prof.w_at(-L)[:, 0] - wm)),
                   np.max(np.abs(prof.w_at(L)[:, 0] - wp))) / scale
        prof.meta["endpoint_mismatch"] = mism
        if mism <= trunc_tol:
            return prof
        prev, L = prof, 2.0 * L
    raise TruncationTooShort(
        f"endpoint mismatch {prof.meta['endpoint_mismatch']:.3e} > {trunc_tol} at L={L/2}")


class _DoubledSol:
    """Evaluate the doubled-interval collocation solution in physical x.

    Derivatives of the collocation interpolant are exposed through `deriv`
    with the chain-rule factor for the interval maps built in.
    """

    def __init__(self, sol, L):
        self._sol = sol
        self._dsol = [sol.derivative(k) for k in (1, 2)]
        self.L = L

    def _eval(self, fn, x, factor):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((4, x.size))
        neg = x <= 0
        if np.any(neg):
            out[:, neg] = fn(1.0 + x[neg] / self.L)[:4]
        if np.any(~neg):
            out[:, ~neg] = fn(x[~neg] / self.L)[4:]
        return out * factor

    def __call__(self, x):
        return self._eval(self._sol, x, 1.0)

    def deriv(self, x, order=1):
        return self._eval(self._dsol[order - 1], x, self.L ** (-order))


def _assemble(res, L, pair, params, phase):
    sol = _DoubledSol(res.sol, L)
    n_half = res.x.size
    x_grid = np.unique(np.concatenate([-L * (1.0 - res.x), L * res.x]))
    vals = sol(x_grid)
    prof = Profile(grid=x_grid, values=vals, pair=pair, params=params,
                   eta0=float("nan"), residual=float("nan"), L=L,
                   phase=phase, sol=sol,
                   meta={"bvp_nodes": int(n_half), "bvp_rms": float(np.max(res.rms_residuals))})
    prof.residual = ode_residual(prof)
    prof.eta0 = measure_eta0(prof)[0]
    return prof


def ode_residual(profile: Profile, n=4001):
    """Normalized sup-norm defect of the first-order ODE on a dense grid."""
    x = np.linspace(-profile.L, profile.L, n)
    w = profile.w_at(x)
    wx = profile.sol.deriv(x, 1)
    rhs = profile_rhs(w, profile.params, profile.pair)
    scale = np.maximum(1.0, np.max(np.abs(rhs), axis=1))
    return float(np.max(np.abs(wx - rhs) / scale[:, None]))


def measure_eta0(profile: Profile):
    """Exponential decay rate by log-linear fit on the outer thirds.

    Returns (eta0, {side: fitted rate}).  The fit window is clipped to
    amplitudes safely above the solver tolerance floor.
    """
    fits = {}
    pair, L = profile.pair, profile.L
    jump = max(np.max(np.abs(rest_point("minus", pair) - rest_point("plus", pair))),
               1e-30)
    for side, wend in (("minus", rest_point("minus", pair)),
                       ("plus", rest_point("plus", pair))):
        sgn = -1.0 if side == "minus" else 1.0
        x = np.sort(sgn * np.linspace(L / 3.0, L, 400))
        w = profile.w_at(x)
        r = np.linalg.norm(w - wend[:, None], axis=0) / jump
        mask = (r > 1e-11) & (r < 1e-2)
        if mask.sum() < 10:
            mask = (r > 1e-13) & (r < 1e-1)
        if mask.sum() < 5:
            fits[side] = float("nan")
            continue
        slope = np.polyfit(x[mask], np.log(r[mask]), 1)[0]
        # |w - w_end| ~ e^{-eta |x|}: slope is +eta on the left, -eta on the right
        fits[side] = float(slope) if side == "minus" else float(-slope)
    vals = [v for v in fits.values() if np.isfinite(v) and v > 0]
    eta0 = min(vals) if vals else float("nan")
    return eta0, fits


def second_order_residual(profile: Profile, n=2001):
    """Defect of the stationary second-order system, via interpolant
    derivatives only (independent of the first-order reduction).
    """
    from .model import diffusion_b_jet, flux_fw_jet, source_gw
    params, pair = profile.params, profile.pair
    x = np.linspace(-profile.L, profile.L, n)
    w = profile.w_at(x)
    wx = profile.sol.deriv(x, 1)
    wxx = profile.sol.deriv(x, 2)
    res = np.zeros((3, x.size))
    scale = 1.0
    for i in range(x.size):
        u = w[0, i]
        tau = tau_of_u(u, pair, params)
        taux = -wx[0, i] / params.s
        wstate = w[:3, i]       # (u, E, z); y is the aux variable
        wvx = wx[:3, i]
        wvxx = wxx[:3, i]
        f, f_tau, f_w = flux_fw_jet(tau, wstate, params)
        b, b_tau, b_u = diffusion_b_jet(tau, u, params)
        g, _ = source_gw(wstate, params)
        flux_x = f_tau * taux + f_w @ wvx
        diff_x = (b_tau * taux + b_u * wx[0, i]) @ wvx + b @ wvxx
        res[:, i] = flux_x - diff_x - g
        scale = max(scale, float(np.max(np.abs(flux_x))))
    return float(np.max(np.abs(res)) / scale)


def z_monotonicity_report(profile: Profile, n=2001):
    """Max increase of z against the burned-to-unburned ordering (report only)."""
    x = np.linspace(-profile.L, profile.L, n)
    z = profile.w_at(x)[2]
    dz = np.diff(z)
    return float(max(0.0, -np.min(dz)))  # z should be nondecreasing in x


def _u_midpoint_crossing(profile: Profile):
    """Location where u crosses the endstate midpoint: a geometric anchor
    independent of the profile's own phase convention."""
    from scipy.optimize import brentq
    pair = profile.pair
    target = 0.5 * (pair.left.u + pair.right.u)
    x = np.linspace(-profile.L, profile.L, 4001)
    du = profile.w_at(x)[0] - target
    sign_change = np.nonzero(du[:-1] * du[1:] <= 0)[0]
    if sign_change.size == 0:
        return 0.0
    i = sign_change[np.argmin(np.abs(x[sign_change]))]
    if du[i] == 0.0:
        return float(x[i])
    return float(brentq(lambda xv: profile.w_at(xv)[0, 0] - target, x[i], x[i + 1]))


def transversality_gamma(profile: Profile, *, rtol=1e-10, atol=1e-12,
                         x_ref=None):
    """Wronskian certificate for transversal intersection of the connecting
    orbit's unstable (from -infinity) and stable (from +infinity) manifolds.

    Frames of the linearized profile ODE are integrated to the orbit point
    where u crosses its endstate midpoint (a translation-invariant anchor)
    with QR renormalization; the determinant combines the orbit tangent with
    the transverse unstable direction and the two transverse stable
    directions, all unit-normalized, so |gamma| is scale-free.
    """
    pair, params = profile.pair, profile.params
    if x_ref is None:
        x_ref = _u_midpoint_crossing(profile)
    wm, wp = rest_point("minus", pair), rest_point("plus", pair)
    Jm = profile_rhs_jac(wm, params, pair)
    Jp = profile_rhs_jac(wp, params, pair)

    lam_m, Vm = _eig_sorted(Jm)
    um = [Vm[:, i].real / np.linalg.norm(Vm[:, i].real)
          for i in range(4) if lam_m[i].real > 1e-10]
    lam_p, Vp = _eig_sorted(Jp)
    sp = []
    used = set()
    for i in range(4):
        if i in used or not lam_p[i].real < -1e-10:
            continue
        v = Vp[:, i]
        if abs(lam_p[i].imag) > 1e-12 * max(1.0, abs(lam_p[i].real)):
            j = int(np.argmin(np.abs(lam_p - lam_p[i].conjugate())))
            used.update({i, j})
            sp.extend([v.real / np.linalg.norm(v.real),
                       v.imag / np.linalg.norm(v.imag)])
        else:
            used.add(i)
            sp.append(v.real / np.linalg.norm(v.real))
    if len(um) != 2 or len(sp) != 3:
        raise IllConditioned(f"manifold dimensions ({len(um)}, {len(sp)}) != (2, 3)")

    def flow(frame, x0, x1):
        k = frame.shape[1]

        def rhs(x, yv):
            Y = yv.reshape(4, k)
            J = profile_rhs_jac(profile.w_at(x)[:, 0], params, pair)
            return (J @ Y).ravel()

        y = frame.ravel()
        # integrate in renormalized legs to keep the frame conditioned
        legs = max(8, int(abs(x1 - x0)))
        xs = np.linspace(x0, x1, legs + 1)
        for a, b2 in zip(xs[:-1], xs[1:]):
            sol = solve_ivp(rhs, (a, b2), y, method="DOP853", rtol=rtol, atol=atol,
                            dense_output=False)
            if not sol.success:
                raise IllConditioned(f"frame integration failed: {sol.message}")
            Y = sol.y[:, -1].reshape(4, k)
            Q, R = np.linalg.qr(Y)
            Q = Q * np.sign(np.diag(R))[None, :]
            y = Q.ravel()
        return y.reshape(4, k)

    U0 = flow(np.array(um).T, -profile.L, x_ref)
    S0 = flow(np.array(sp).T, profile.L, x_ref)

    t = profile_rhs(profile.w_at(x_ref)[:, 0], params, pair)
    nt = np.linalg.norm(t)
    if nt < 1e-14:
        raise IllConditioned("orbit tangent vanished at x = 0")
    t = t / nt

    def complement(frame):
        """Orthonormal basis of the part of span(frame) transverse to the
        orbit tangent; the tangent itself lies in each manifold's span."""
        k = frame.shape[1]
        tang_dist = np.linalg.norm(t - frame @ (frame.T @ t))
        if tang_dist > 1e-4:
            raise IllConditioned(
                f"orbit tangent leaves the integrated manifold span by {tang_dist:.2e}")
        proj = frame - np.outer(t, t @ frame)
        U, sv, _ = np.linalg.svd(proj, full_matrices=False)
        if sv[k - 2] < 1e-8:
            raise IllConditioned("transverse basis angles degenerate")
        cols = U[:, :k - 1]
        # deterministic orientation and ordering, independent of the
        # integrator path: largest-|entry| component positive, columns
        # sorted by that entry's row index
        keys = []
        for j in range(cols.shape[1]):
            i = int(np.argmax(np.abs(cols[:, j])))
            if cols[i, j] < 0:
                cols[:, j] = -cols[:, j]
            keys.append(i)
        return cols[:, np.argsort(np.array(keys), kind="stable")]

    a = complement(U0)          # 4 x 1
    bc_ = complement(S0)        # 4 x 2
    gamma = float(np.linalg.det(np.column_stack([a, t, bc_])))
    return gamma

"""Root location and tracking of the Evans function across parameter sweeps.

The right-half-plane roots are found by recursive winding-number bisection
of rectangles followed by Newton polish (derivative by a small Cauchy
circle); a conjugate pair lambda(eps) = gamma(eps) +- i tau(eps) is tracked
through a sweep and the crossing of the imaginary axis is certified against
the nondegeneracy conditions gamma(eps*) = 0, tau* != 0, dgamma/deps != 0.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Degenerate, RefinementLimit, TrackingLost
from .evans import (EvansSample, cauchy_derivative, circle_contour,
                    evaluate_contour, rect_contour, winding_number)


def _contour_winding(source, contour, n0=32, max_refine=12):
    samples = evaluate_contour(source, contour, n0=n0, max_refine=max_refine)
    return winding_number(samples)


def _rect_winding(source, re0, re1, im0, im1, jitter=0.0):
    """Winding on a rectangle, retrying with a slightly inflated box when a
    root sits on (or numerically on) the boundary."""
    for attempt in range(4):
        f = 1.0 + jitter + 0.073 * attempt
        cx, cy = 0.5 * (re0 + re1), 0.5 * (im0 + im1)
        hx, hy = 0.5 * (re1 - re0) * f, 0.5 * (im1 - im0) * f
        try:
            return _contour_winding(
                source, rect_contour(cx - hx, cx + hx, cy - hy, cy + hy)), f
        except RefinementLimit:
            continue
    raise RefinementLimit(f"boundary winding failed on box "
                          f"[{re0},{re1}]x[{im0},{im1}]")


def newton_polish(source, z0, *, tol=1e-12, maxit=50, r_deriv=None):
    """Newton iteration on D with the derivative from a Cauchy circle.

    Returns (root, residual) with residual = |D(root)| relative to the
    derivative scale at the root.
    """
    z = complex(z0)
    step = math.inf
    for it in range(maxit):
        r = r_deriv or max(1e-9, 1e-3 * max(abs(z), abs(step)
                                            if np.isfinite(step) else 0.0))
        circle = evaluate_contour(source, circle_contour(z, r), n0=8,
                                  max_refine=8)
        d0 = cauchy_derivative(circle, order=0, center=z)
        d1 = cauchy_derivative(circle, order=1, center=z)
        if d1.D == 0:
            raise RefinementLimit("vanishing derivative in Newton polish")
        delta = (d0.D / d1.D) * math.exp(d0.logscale - d1.logscale)
        z = z - delta
        step = abs(delta)
        if step < tol * max(1.0, abs(z)):
            break
    circle = evaluate_contour(source, circle_contour(z, max(1e-9, 1e-6 * abs(z) + 1e-12)),
                              n0=8, max_refine=6)
    d0 = cauchy_derivative(circle, order=0, center=z)
    d1 = cauchy_derivative(circle, order=1, center=z)
    resid = abs(d0.D) * math.exp(d0.logscale - d1.logscale) / max(abs(d1.D), 1e-300)
    return z, float(resid)


def locate_roots(source, box, *, min_cell=1e-6, max_depth=60, newton=True):
    """All roots of D inside the rectangle `box` = (re0, re1, im0, im1).

    Recursive winding bisection down to `min_cell` cells, then Newton
    refinement; each root is reported with its multiplicity from the cell
    winding.  Returns a list of (root, multiplicity).
    """
    re0, re1, im0, im1 = (float(v) for v in box)
    found = []
    stack = [(re0, re1, im0, im1, 0)]
    while stack:
        a, b, c, d, depth = stack.pop()
        if depth > max_depth:
            raise RefinementLimit("bisection depth exhausted")
        w, _ = _rect_winding(source, a, b, c, d)
        if w == 0:
            continue
        if max(b - a, d - c) <= min_cell:
            z = complex(0.5 * (a + b), 0.5 * (c + d))
            if newton:
                z, resid = newton_polish(source, z)
            else:
                resid = math.nan
            found.append((z, w, resid))
            continue
        if b - a >= d - c:
            m = 0.5 * (a + b)
            stack.append((a, m, c, d, depth + 1))
            stack.append((m, b, c, d, depth + 1))
        else:
            m = 0.5 * (c + d)
            stack.append((a, b, c, m, depth + 1))
            stack.append((a, b, m, d, depth + 1))
    # merge duplicates found through inflated boundaries
    merged = []
    for z, w, resid in found:
        for i, (z2, w2, r2) in enumerate(merged):
            if abs(z - z2) < 10 * min_cell:
                break
        else:
            merged.append((z, w, resid))
    return [(z, w) for z, w, _ in merged]


@dataclass
class RootTrajectory:
    """A tracked conjugate-pair trajectory over the sweep parameter."""

    eps_values: np.ndarray
    roots: np.ndarray                 # upper-half-plane representative
    newton_residuals: np.ndarray
    crossing: dict | None = None

    def gamma(self):
        return self.roots.real

    def tau(self):
        return np.abs(self.roots.imag)

    def as_rows(self):
        return [(float(e), float(r.real), float(abs(r.imag)), float(res))
                for e, r, res in zip(self.eps_values, self.roots,
                                     self.newton_residuals)]


def track_pair(family, eps_grid, seed_box, *, newton_tol=1e-12,
               residual_tol=1e-8) -> RootTrajectory:
    """Track the conjugate root pair of a parameterized Evans family.

    `family(eps)` returns an Evans source; the pair's upper-half member is
    warm-started from the previous sweep point and recovered by windowed
    search when Newton wanders.  lambda = 0 is never accepted as a member.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    roots = np.empty(eps_grid.size, dtype=complex)
    resids = np.empty(eps_grid.size)
    prev = None
    for i, eps in enumerate(eps_grid):
        src = family(eps)
        z = None
        if prev is not None:
            try:
                z, resid = newton_polish(src, prev, tol=newton_tol)
                if abs(z.imag) < 1e-10 or resid > residual_tol:
                    z = None
            except RefinementLimit:
                z = None
        if z is None:
            if prev is None:
                box = seed_box
            else:
                c = prev
                h = max(0.5, 4 * abs(roots[i - 1] - prev)) if i else 0.5
                box = (c.real - h, c.real + h, c.imag - h, c.imag + h)
            cands = locate_roots(src, box)
            cands = [(zz, w) for zz, w in cands if abs(zz.imag) > 1e-10]
            if not cands:
                raise TrackingLost(float(eps), "no conjugate pair in window")
            zz = min(cands, key=lambda t: abs(t[0] - prev)
                     if prev is not None else abs(t[0]))[0]
            z, resid = newton_polish(src, zz, tol=newton_tol)
        if z.imag < 0:
            z = z.conjugate()
        roots[i] = z
        resids[i] = resid
        prev = z
    return RootTrajectory(eps_values=eps_grid, roots=roots,
                          newton_residuals=resids)


def detect_hopf(traj: RootTrajectory, *, tau_tol=1e-8, slope_tol=1e-8,
                fit_points=4):
    """Certify a transversal conjugate-pair crossing of the imaginary axis.

    Locates the sign change of gamma(eps) by the secant rule, reports
    tau* = tau(eps*), the local slope dgamma/deps, the predicted period
    2 pi / tau*, and the nondegeneracy margins.  Returns None when gamma
    does not change sign; raises Degenerate on failed certificates.
    """
    g = traj.gamma()
    t = traj.tau()
    e = traj.eps_values
    sign_change = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    if sign_change.size == 0:
        return None
    i = int(sign_change[0])
    # secant for the zero of gamma
    e0, e1, g0, g1 = e[i], e[i + 1], g[i], g[i + 1]
    eps_star = e0 - g0 * (e1 - e0) / (g1 - g0)
    # local linear fits around the crossing
    lo = max(0, i - fit_points // 2)
    hi = min(e.size, lo + fit_points)
    lo = max(0, hi - fit_points)
    slope, inter = np.polyfit(e[lo:hi], g[lo:hi], 1)
    eps_lin = -inter / slope if slope != 0 else eps_star
    tau_fit = np.polyfit(e[lo:hi], t[lo:hi], 1)
    tau_star = float(np.polyval(tau_fit, eps_star))
    if abs(tau_star) <= tau_tol:
        raise Degenerate("tau(0)", f"|tau*| = {abs(tau_star)} <= {tau_tol}")
    if abs(slope) <= slope_tol:
        raise Degenerate("dgamma/deps", f"|slope| = {abs(slope)} <= {slope_tol}")
    crossing = {
        "eps_star": float(eps_star),
        "eps_star_linfit": float(eps_lin),
        "tau_star": tau_star,
        "dgamma_deps": float(slope),
        "period": float(2.0 * math.pi / abs(tau_star)),
        "fit_window": [float(e[lo]), float(e[hi - 1])],
    }
    traj.crossing = crossing
    return crossing

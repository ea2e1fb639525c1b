"""First-order eigenvalue systems, dispersion relations, essential spectrum.

The eigenvalue problem (L - lambda) U = 0 for the linearization about a
profile is cast as W' = A(x, lambda) W in C^7 with W = (tau, w, b w') and
w = (u, E, z) the perturbation's velocity-block.  The adjoint problem gives
a dual system Wt' = At(x, lambda) Wt with Wt = (taut, wt, b^T wt'), and the
two are linked by the x-independent pairing  Wt^T S(x) W = const,  where S
is the bilinear concomitant of the Lagrange identity.

All matrices are affine in lambda; the lambda-independent coefficient
fields along the profile are tabulated once and splined, so repeated
evaluation along integration paths and spectral contours stays cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .endstates import EndstatePair
from .errors import NeutralMode
from .model import (J_ROW, ModelParams, State, diffusion_b_hess,
                    diffusion_b_jet, flux_fw_hess, flux_fw_jet,
                    fluid_sharp_jet, ignition, source_gw, thermo)
from .profile import Profile, profile_rhs, profile_rhs_jac, tau_of_u


# ---------------------------------------------------------------------------
# coefficient jets
# ---------------------------------------------------------------------------

def _pieces_at_state(tau, w3, params, w3_x=None, w3_xx=None):
    """Coefficient pieces of the first-order systems at one x.

    With w3_x/w3_xx omitted (or zero) this returns the constant-coefficient
    endstate pieces; otherwise the gradient corrections C_* and the
    x-derivative fields D_* are included.
    """
    u = w3[0]
    b, b_tau, b_u = diffusion_b_jet(tau, u, params)
    f, f_tau, f_w = flux_fw_jet(tau, w3, params)
    _, g_w = source_gw(w3, params)
    binv = np.linalg.inv(b)
    if w3_x is None:
        zero3 = np.zeros(3)
        return {
            "b": b, "binv": binv, "f_tau": f_tau, "f_w": f_w, "g_w": g_w,
            "P_tau": f_tau, "P_w": f_w, "D_tau": zero3, "D_w": np.zeros((3, 3)),
        }
    tau_x = -w3_x[0] / params.s
    C_tau = b_tau @ w3_x
    C_w = np.zeros((3, 3))
    C_w[:, 0] = b_u @ w3_x
    f_tt, f_tw, f_ww = flux_fw_hess(tau, w3, params)
    D_f_tau = f_tt * tau_x + f_tw @ w3_x
    D_f_w = np.empty((3, 3))  # f_tw[i, j] = d2 f_i / dtau dw_j
    for i in range(3):
        D_f_w[i] = f_tw[i] * tau_x + f_ww[i] @ w3_x
    b_tt, b_tu = diffusion_b_hess(tau, u, params)
    D_C_tau = (b_tt * tau_x + b_tu * w3_x[0]) @ w3_x + b_tau @ w3_xx
    D_C_w = np.zeros((3, 3))
    D_C_w[:, 0] = (b_tu * tau_x) @ w3_x + b_u @ w3_xx
    return {
        "b": b, "binv": binv, "f_tau": f_tau, "f_w": f_w, "g_w": g_w,
        "P_tau": f_tau - C_tau, "P_w": f_w - C_w,
        "D_tau": D_f_tau - D_C_tau, "D_w": D_f_w - D_C_w,
    }


def _forward_parts(p, s):
    """(A0, A1) with A(lambda) = A0 + lambda A1, from coefficient pieces."""
    A0 = np.zeros((7, 7))
    A1 = np.zeros((7, 7))
    binv = p["binv"]
    A1[0, 0] = 1.0 / s
    A0[0, 4:] = -(J_ROW @ binv) / s
    A0[1:4, 4:] = binv
    A0[4:, 0] = p["D_tau"]
    A1[4:, 0] = p["P_tau"] / s
    A0[4:, 1:4] = -p["g_w"] + p["D_w"]
    A1[4:, 1:4] = np.eye(3)
    A0[4:, 4:] = (p["P_w"] - np.outer(p["P_tau"], J_ROW) / s) @ binv
    return A0, A1


def _dual_parts(p, s):
    """(At0, At1) for the adjoint system, from the same pieces."""
    At0 = np.zeros((7, 7))
    At1 = np.zeros((7, 7))
    binvT = p["binv"].T
    At1[0, 0] = -1.0 / s
    At0[0, 4:] = (p["P_tau"] @ binvT) / s
    At0[1:4, 4:] = binvT
    At1[4:, 0] = -J_ROW / s
    At0[4:, 1:4] = -p["g_w"].T
    At1[4:, 1:4] = np.eye(3)
    At0[4:, 4:] = (np.outer(J_ROW, p["P_tau"]) / s - p["P_w"].T) @ binvT
    return At0, At1


def _pairing_parts(p, s):
    """S and S' of the duality pairing Wt^T S W."""
    S = np.zeros((7, 7))
    S[0, 0] = s
    S[0, 1:4] = J_ROW
    S[1:4, 0] = -p["P_tau"]
    S[1:4, 1:4] = -p["P_w"]
    S[1:4, 4:] = np.eye(3)
    S[4:, 1:4] = -np.eye(3)
    Sx = np.zeros((7, 7))
    Sx[1:4, 0] = -p["D_tau"]
    Sx[1:4, 1:4] = -p["D_w"]
    return S, Sx


def state_pieces(st: State, params: ModelParams):
    w3 = np.array([st.u, st.E, st.z])
    return _pieces_at_state(st.tau, w3, params)


@dataclass
class FirstOrderSystem:
    """W' = A(x, lambda) W along a profile, with duals and asymptotics.

    The evaluators accept an optional lambda overriding the stored one, so a
    single instance serves a whole contour.
    """

    profile: Profile
    lam: complex
    _tab: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        prof = self.profile
        grid = prof.grid
        # refine mildly between profile nodes for spline fidelity
        x = np.unique(np.concatenate([grid, 0.5 * (grid[1:] + grid[:-1])]))
        params, pair = prof.params, prof.pair
        n = x.size
        fields = {k: np.empty((n,) + shp) for k, shp in
                  (("A0", (7, 7)), ("A1f", (3,)), ("At0", (7, 7)),
                   ("S", (7, 7)), ("Sx", (7, 7)))}
        w = prof.w_at(x)
        wx = profile_rhs(w, params, pair)
        for i in range(n):
            wxx = profile_rhs_jac(w[:, i], params, pair) @ wx[:, i]
            p = _pieces_at_state(tau_of_u(w[0, i], pair, params), w[:3, i],
                                 params, wx[:3, i], wxx[:3])
            A0, A1 = _forward_parts(p, params.s)
            At0, At1 = _dual_parts(p, params.s)
            S, Sx = _pairing_parts(p, params.s)
            fields["A0"][i] = A0
            fields["A1f"][i] = A1[4:, 0]    # only varying slot of A1
            fields["At0"][i] = At0
            fields["S"][i] = S
            fields["Sx"][i] = Sx
        self._tab = {k: CubicSpline(x, v, axis=0) for k, v in fields.items()}
        s = params.s
        self._A1_base = np.zeros((7, 7))
        self._A1_base[0, 0] = 1.0 / s
        self._A1_base[4:, 1:4] = np.eye(3)
        self._At1 = np.zeros((7, 7))
        self._At1[0, 0] = -1.0 / s
        self._At1[4:, 0] = -J_ROW / s
        self._At1[4:, 1:4] = np.eye(3)
        # At0's only difference from a lambda-affine dual: none; tabulated fully
        self._sides = {}
        for side, st in (("minus", pair.left), ("plus", pair.right)):
            self._sides[side] = state_pieces(st, params)

    # -- interior evaluators -------------------------------------------------
    def A(self, x, lam=None):
        lam = self.lam if lam is None else lam
        A = self._tab["A0"](x) + 0j
        A += lam * self._A1_base
        A[4:, 0] += lam * self._tab["A1f"](x)
        return A

    def A_dual(self, x, lam=None):
        lam = self.lam if lam is None else lam
        return self._tab["At0"](x) + lam * self._At1

    def S(self, x):
        return self._tab["S"](x)

    def S_x(self, x):
        return self._tab["Sx"](x)

    # -- asymptotics ----------------------------------------------------------
    def A_pm(self, side, lam=None):
        lam = self.lam if lam is None else lam
        p = self._sides[side]
        A0, A1 = _forward_parts(p, self.profile.params.s)
        return A0 + lam * A1

    def A_dual_pm(self, side, lam=None):
        lam = self.lam if lam is None else lam
        p = self._sides[side]
        At0, At1 = _dual_parts(p, self.profile.params.s)
        return At0 + lam * At1

    def S_pm(self, side):
        return _pairing_parts(self._sides[side], self.profile.params.s)[0]


def build_system(profile: Profile, lam=0.0) -> FirstOrderSystem:
    return FirstOrderSystem(profile, complex(lam))


def asymptotic_matrix(st: State, params: ModelParams, lam, dual=False):
    """Constant-coefficient A_pm(lambda) (or the dual) at a rest state."""
    p = state_pieces(st, params)
    A0, A1 = (_dual_parts if dual else _forward_parts)(p, params.s)
    return A0 + complex(lam) * A1


# ---------------------------------------------------------------------------
# dispersion relations and mode classification
# ---------------------------------------------------------------------------

@dataclass
class ModeSet:
    """The seven spatial roots mu(lambda) at one endstate, with tags.

    labels[j] is 1..7: 1-3 fluid (ordered by increasing characteristic
    speed), 4-5 reactive, 6-7 fast fluid; `slow` marks roots vanishing with
    lambda; `decaying` marks decay in the direction of the endstate's
    infinity (Re mu > 0 at minus, < 0 at plus).
    """

    side: str
    lam: complex
    mu: np.ndarray
    labels: np.ndarray
    slow: np.ndarray
    decaying: np.ndarray

    def by_label(self, j):
        return complex(self.mu[int(np.nonzero(self.labels == j)[0][0])])


def reactive_roots(side, lam, params: ModelParams, pair: EndstatePair):
    """mu_4, mu_5: roots of d_eff mu^2 + s mu - (k phi + lambda) = 0."""
    st = pair.left if side == "minus" else pair.right
    T = thermo(st, params)[1]
    phi = ignition(T, params)[0]
    d_eff = params.dcoef / st.tau**2
    s = params.s
    disc = np.sqrt(s * s + 4.0 * d_eff * (complex(lam) + params.krate * phi))
    mu4 = (-s + disc) / (2.0 * d_eff)
    mu5 = (-s - disc) / (2.0 * d_eff)
    return mu4, mu5


def fluid_quintic_roots(side, lam, params: ModelParams, pair: EndstatePair):
    """Roots of det(-mu df# + mu^2 b1# - lambda) = 0 (degree five)."""
    st = pair.left if side == "minus" else pair.right
    df, b1 = fluid_sharp_jet(st, params)
    lam = complex(lam)
    rho = max(1.0, abs(lam)) * max(1.0, params.s,
                                   1.0 / min(params.nu, params.kappa / params.cheat))
    n = 8
    nodes = rho * np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.array([np.linalg.det(-m * df + m * m * b1 - lam * np.eye(3))
                     for m in nodes])
    coefs = np.fft.fft(vals) / n / rho ** np.arange(n)
    coefs = coefs[:7]           # degree six at most; quintic leading term
    scale = np.max(np.abs(coefs))
    deg = 6
    while deg > 0 and abs(coefs[deg]) < 1e-10 * scale:
        deg -= 1
    # deflate exact zero roots (lambda = 0 has a triple root at mu = 0)
    low = 0
    while low < deg and abs(coefs[low]) < 1e-13 * scale:
        low += 1
    roots = np.roots(coefs[low:deg + 1][::-1])
    # Newton polish directly on the determinant (simple roots):
    # d log det / dmu = tr(M^-1 M') with M' = -df + 2 mu b1
    for i, m in enumerate(roots):
        for _ in range(4):
            M = -m * df + m * m * b1 - lam * np.eye(3)
            try:
                Minv = np.linalg.inv(M)
            except np.linalg.LinAlgError:
                break
            dlog = np.trace(Minv @ (-df + 2.0 * m * b1))
            if dlog == 0:
                break
            step = 1.0 / dlog
            m = m - step
            if abs(step) < 1e-16 * (1.0 + abs(m)):
                break
        roots[i] = m
    if low:
        roots = np.concatenate([roots, np.zeros(low, dtype=complex)])
    return roots


def dispersion_roots(side, lam, params: ModelParams, pair: EndstatePair,
                     verify_tol=1e-10) -> ModeSet:
    """All seven spatial roots with slow/fast and decay tags.

    The reactive pair comes from its quadratic; the fluid quintet from the
    quintic; the union is verified against the eigenvalues of A_pm(lambda)
    and the labels follow continuation from lambda = 0.
    """
    lam = complex(lam)
    mu4, mu5 = reactive_roots(side, lam, params, pair)
    fluid = fluid_quintic_roots(side, lam, params, pair)
    mu = np.concatenate([fluid, [mu4, mu5]])

    st = pair.left if side == "minus" else pair.right
    A = asymptotic_matrix(st, params, lam)
    # multiset verification against A_pm, robust to eig clustering error:
    # backward error per root plus the trace identity for the count
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    for m in mu:
        resid = float(np.linalg.svd(A - m * np.eye(7), compute_uv=False)[-1])
        if resid > verify_tol * scale:
            raise NeutralMode(
                f"dispersion root {m} not an eigenvalue of A_pm: {resid:.2e}")
    if abs(np.sum(mu) - np.trace(A)) > verify_tol * 100 * scale:
        raise NeutralMode("dispersion root multiset fails the trace identity")

    labels = np.empty(7, dtype=int)
    labels[5], labels[6] = 4, 5
    labels[:5] = _label_fluid(fluid, side, lam, params, pair)
    slow = np.zeros(7, dtype=bool)
    for j, m in enumerate(mu):
        lab = labels[j]
        if lab in (1, 2, 3):
            slow[j] = True
        elif lab == 4:
            # reactive "+" root is slow where phi vanishes (unburned side)
            T = thermo(st, params)[1]
            slow[j] = ignition(T, params)[0] == 0.0
    sgn = 1.0 if side == "minus" else -1.0
    decaying = (sgn * mu.real) > 0
    return ModeSet(side=side, lam=lam, mu=mu, labels=labels, slow=slow,
                   decaying=decaying)


def _label_fluid(fluid, side, lam, params, pair, max_steps=4096):
    """Assign fluid labels 1, 2, 3 (slow, by characteristic speed) and 6, 7.

    Nearest-neighbor continuation along the ray from 0 to lambda, with
    ratio extrapolation for the slow branches (they scale with lambda) and
    collision detection that doubles the path resolution on ambiguity.
    Label 7 goes to the fast root with the larger real part at lambda = 0.
    """
    st = pair.left if side == "minus" else pair.right
    sig = thermo(st, params)[3]
    s = params.s
    g6, g7 = gamma_fast_roots(side, params, pair)
    seeds = {1: 1.0 / (s + sig), 2: 1.0 / s, 3: 1.0 / (s - sig)}
    labels = np.empty(5, dtype=int)
    if lam == 0:
        # triple zero root plus the two fast roots
        order = np.argsort(np.abs(fluid))
        fast = sorted(order[3:], key=lambda i: fluid[i].real)
        for j, i in zip((1, 2, 3), order[:3]):
            labels[i] = j
        labels[fast[0]], labels[fast[1]] = 6, 7
        return labels

    steps = 2
    while steps <= max_steps:
        ts = np.linspace(0.0, 1.0, steps + 1)[1:]
        prev = {j: seeds[j] * lam * ts[0] for j in (1, 2, 3)}
        prev[6], prev[7] = g6, g7
        t_prev = ts[0]
        ok = True
        assign = None
        for t in ts:
            roots_t = fluid if t == 1.0 else \
                fluid_quintic_roots(side, lam * t, params, pair)
            guesses = {}
            for j, v in prev.items():
                guesses[j] = v * (t / t_prev) if j in (1, 2, 3) else v
            assign = {}
            rem = list(enumerate(roots_t))
            for j, guess in sorted(guesses.items(), key=lambda kv: -abs(kv[1])):
                dists = [abs(r - guess) for _, r in rem]
                i_best = int(np.argmin(dists))
                # collision check: the match must beat the runner-up clearly
                if len(dists) > 1:
                    second = sorted(dists)[1]
                    if dists[i_best] > 0.49 * second:
                        ok = False
                assign[j] = rem[i_best]
                rem.pop(i_best)
            if not ok:
                break
            prev = {j: r for j, (i, r) in assign.items()}
            t_prev = t
        if ok:
            for j, (i, r) in assign.items():
                labels[i] = j
            return labels
        steps *= 2
    raise NeutralMode(f"fluid root labeling ambiguous at lambda = {lam}")


def gamma_fast_roots(side, params: ModelParams, pair: EndstatePair):
    """Fast-mode roots at lambda = 0: nonzero solutions of the fluid quintic.

    gamma_7 is the root with the larger real part (positive on the burned
    side by the Lax condition, negative on the unburned side).
    """
    fluid0 = fluid_quintic_roots(side, 0.0, params, pair)
    nz = sorted(fluid0, key=lambda m: abs(m))[3:]
    g_small, g_big = sorted(nz, key=lambda m: m.real)
    return g_small, g_big


def consistent_splitting(side, lam, params: ModelParams, pair: EndstatePair,
                         neutral_tol=1e-12):
    """(n_stable, n_unstable) eigen-counts of A_pm(lambda) by sign of Re mu."""
    st = pair.left if side == "minus" else pair.right
    mu = np.linalg.eigvals(asymptotic_matrix(st, params, lam))
    scale = max(1.0, float(np.max(np.abs(mu))))
    if np.min(np.abs(mu.real)) < neutral_tol * scale:
        raise NeutralMode(f"eigenvalue with |Re mu| < {neutral_tol} at {lam}")
    n_stable = int(np.sum(mu.real < 0))
    return n_stable, mu.size - n_stable


def essential_spectrum(side, xi_grid, params: ModelParams, pair: EndstatePair):
    """Constant-coefficient symbol spectrum: eigenvalues of
    -i xi dF - xi^2 B + dG at the endstate, per xi.

    Returns (lams, branches) with lams shape (n_xi, 4); branches are
    continuation-matched indices so each column is one spectral curve.  The
    reactive branch satisfies lambda = i xi s - xi^2 d_eff - k phi exactly.
    """
    from .model import flux_jet
    st = pair.left if side == "minus" else pair.right
    F, dF, B, G, dG = flux_jet(st, params)
    xi_grid = np.asarray(xi_grid, dtype=float)
    lams = np.empty((xi_grid.size, 4), dtype=complex)
    prev = None
    for i, xi in enumerate(xi_grid):
        M = -1j * xi * dF - xi**2 * B + dG
        ev = np.linalg.eigvals(M)
        if prev is None:
            order = np.argsort(ev.real)
        else:
            order = _match_order(prev, ev)
        lams[i] = ev[order]
        prev = lams[i]
    return lams


def _match_order(prev, ev):
    order = np.empty(prev.size, dtype=int)
    rem = list(range(ev.size))
    for j, p in enumerate(prev):
        i_best = min(rem, key=lambda i: abs(ev[i] - p))
        order[j] = i_best
        rem.remove(i_best)
    return order


def kawashima_margin(side, xi_grid, params: ModelParams, pair: EndstatePair):
    """Largest theta >= 0 with max Re sigma(symbol(xi)) <= -theta xi^2/(1+xi^2)
    over the grid; theta > 0 certifies the dissipativity condition."""
    xi_grid = np.asarray(xi_grid, dtype=float)
    xi_grid = xi_grid[xi_grid != 0.0]
    lams = essential_spectrum(side, xi_grid, params, pair)
    growth = lams.real.max(axis=1)
    bound = xi_grid**2 / (1.0 + xi_grid**2)
    return float(max(0.0, np.min(-growth / bound)))


def default_xi_grid(params: ModelParams, pair: EndstatePair, n=241):
    """Geometric spacing near 0 plus linear far field, out to the parabolic
    asymptote scale."""
    sig = max(thermo(pair.left, params)[3], thermo(pair.right, params)[3])
    Xi = 10.0 * max(1.0, params.s, sig)
    geo = np.geomspace(1e-3, 1.0, n // 3)
    lin = np.linspace(1.0, Xi, n - geo.size)
    half = np.unique(np.concatenate([geo, lin]))
    return np.concatenate([-half[::-1], [0.0], half])

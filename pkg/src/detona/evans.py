"""Evans function evaluation, contours, winding numbers, stability verdicts.

D(lambda) is the 7x7 determinant, at the matching point x = 0, of the four
solutions decaying toward -infinity and the three decaying toward +infinity.
Frames are integrated with continuous orthonormalization; the determinant of
the orthonormalizing factors is carried in a complex log ledger so the
assembled product equals the determinant of the literal solution columns
(an analytic function of lambda for analytic initialization).  A growth
reference - the sum of the selected spatial eigenvalues at each endstate -
is subtracted from the ledger, making reported values truncation-stable and
overflow-free; this multiplies D by a nonvanishing analytic factor only.

Samples are stored as (mantissa, logscale): value = D * exp(logscale).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .endstates import EndstatePair
from .errors import (DegenerateEigenvector, IllConditioned, InconsistentSign,
                     NeutralMode, RefinementLimit, StiffnessFailure)
from .model import ModelParams, State, flux_jet, thermo
from .profile import Profile
from .spectral import (FirstOrderSystem, ModeSet, asymptotic_matrix,
                       build_system, dispersion_roots)


# ---------------------------------------------------------------------------
# samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvansSample:
    """One Evans-function value in mantissa/logscale form."""

    lam: complex
    D: complex            # mantissa; |D| in [1, 2) when nonzero
    logscale: float       # natural log of the carried scale factor
    conditioning: float   # sin of the min principal angle between subspaces
    L: float              # integration half-length used

    @property
    def value(self):
        """The literal value; may overflow to inf for extreme scales."""
        try:
            return self.D * math.exp(self.logscale)
        except OverflowError:
            return self.D * math.inf

    def log_abs(self):
        if self.D == 0:
            return -math.inf
        return math.log(abs(self.D)) + self.logscale

    def arg(self):
        return cmath.phase(self.D)


def _pack(value_mantissa, logscale, lam, conditioning=1.0, L=0.0):
    m = complex(value_mantissa)
    if m != 0:
        shift = math.floor(math.log2(abs(m)))
        m = m / 2.0**shift
        logscale = logscale + shift * math.log(2.0)
    return EvansSample(lam=complex(lam), D=m, logscale=float(logscale),
                       conditioning=float(conditioning), L=float(L))


def sample_ratio_log(a: EvansSample, b: EvansSample):
    """log(a/b) as (log magnitude difference, phase difference)."""
    return a.log_abs() - b.log_abs(), cmath.phase(a.D / b.D)


class SyntheticEvans:
    """Adapter wrapping a closed-form analytic function as an Evans source."""

    def __init__(self, fn):
        self.fn = fn

    def eval(self, lam):
        v = complex(self.fn(complex(lam)))
        return _pack(v, 0.0, lam)

    def eval_chain(self, lam, _prev=None):
        return self.eval(lam), None


class ProductEvans:
    """Evans source times an analytic factor (test-harness root injection)."""

    def __init__(self, base, factor_fn):
        self.base = base
        self.factor_fn = factor_fn

    def eval(self, lam):
        s = self.base.eval(lam)
        f = complex(self.factor_fn(complex(lam)))
        return _pack(s.D * f, s.logscale, lam, s.conditioning, s.L)

    def eval_chain(self, lam, prev=None):
        s, state = self.base.eval_chain(lam, prev)
        f = complex(self.factor_fn(complex(lam)))
        return _pack(s.D * f, s.logscale, lam, s.conditioning, s.L), state


# ---------------------------------------------------------------------------
# subspace machinery
# ---------------------------------------------------------------------------

def _polar_ledger(Z):
    """Z = Q H with Q orthonormal columns: returns (Q, log det H)."""
    U, sv, Vh = np.linalg.svd(Z, full_matrices=False)
    if np.min(sv) <= 0 or np.min(sv) < 1e-14 * np.max(sv):
        raise IllConditioned("initialization frame numerically rank-deficient")
    Q = U @ Vh
    return Q, float(np.sum(np.log(sv)))


def spectral_projector(M, select):
    """Oblique spectral projector onto the invariant subspace of eigenvalues
    passing `select`."""
    w, V = np.linalg.eig(M)
    sel = np.array([bool(select(x)) for x in w])
    Vinv = np.linalg.inv(V)
    return V[:, sel] @ Vinv[sel, :], int(sel.sum())


def schur_subspace(M, select):
    """Orthonormal basis of the invariant subspace, deterministic echelon
    normalization (conjugate-equivariant in M)."""
    T, Z, sdim = scipy.linalg.schur(M, output="complex",
                                    sort=lambda x: bool(select(x)))
    if sdim == 0:
        raise NeutralMode("empty invariant subspace selection")
    B = Z[:, :sdim]
    # canonical representative: pivot rows -> identity block
    _, _, piv = scipy.linalg.qr(B.conj().T, pivoting=True)
    rows = np.sort(piv[:sdim])
    C = B[rows, :]
    if np.linalg.cond(C) > 1e10:
        raise IllConditioned("echelon pivot block ill conditioned")
    return B @ np.linalg.inv(C)


def _select_decaying(side):
    if side == "minus":
        return lambda mu: mu.real > 0
    return lambda mu: mu.real < 0


def _mode_vector(side, label, mu, lam, params, pair):
    """Kernel vector U of the normal-mode pencil for one labeled branch."""
    st = pair.left if side == "minus" else pair.right
    from .model import fluid_sharp_jet
    sig = thermo(st, params)[3]
    s = params.s
    speeds = {1: -s - sig, 2: -s, 3: -s + sig}
    if abs(mu) < 1e-8 * max(1.0, abs(lam)) and label in speeds:
        # slow fluid branch at the origin: its limit is the characteristic
        # eigenvector of the inviscid fluid block
        dfv, _ = fluid_sharp_jet(st, params)
        w, V = np.linalg.eig(dfv)
        i = int(np.argmin(np.abs(w - speeds[label])))
        return np.concatenate([V[:, i], [0.0]]).astype(complex)
    F, dF, B4, G, dG = flux_jet(st, params)
    M = -mu * dF + mu * mu * B4 + dG - complex(lam) * np.eye(4)
    _, sv, Vh = np.linalg.svd(M)
    return Vh[-1].conj()


def _mode_pivots(side, params: ModelParams, pair: EndstatePair):
    """Fixed pivot component per mode label, chosen at lambda = 0, so the
    pivot normalization is a linear (hence analytic) functional."""
    want = (1, 2, 4, 7) if side == "minus" else (5, 6, 7)
    ms = dispersion_roots(side, 0.0, params, pair)
    pivots = {}
    for j in want:
        U = _mode_vector(side, j, ms.by_label(j), 0.0, params, pair)
        pivots[j] = int(np.argmax(np.abs(U)))
    return pivots


def mode_basis(side, lam, params: ModelParams, pair: EndstatePair):
    """Columns W_j = (U_j, mu_j b w_j) for the decaying mode branches.

    Valid near the origin where the labeled branches stay simple; at
    lambda = 0 the slow columns degenerate to the characteristic vectors.
    Labels used: 1, 2, 4, 7 at minus; 5, 6, 7 at plus.  Each column is
    normalized by a fixed pivot component, keeping the family analytic in
    lambda (norm or phase normalizations would not be).
    """
    st = pair.left if side == "minus" else pair.right
    from .model import diffusion_b
    b = diffusion_b(st.tau, st.u, params)
    ms = dispersion_roots(side, lam, params, pair)
    want = (1, 2, 4, 7) if side == "minus" else (5, 6, 7)
    pivots = _mode_pivots(side, params, pair)
    cols = []
    for j in want:
        mu = ms.by_label(j)
        U = _mode_vector(side, j, mu, lam, params, pair)
        piv = U[pivots[j]]
        if abs(piv) < 1e-8:
            raise IllConditioned(f"mode {j} pivot degenerated at {lam}")
        U = U / piv
        cols.append(np.concatenate([U, mu * (b @ U[1:])]))
    return np.column_stack(cols)


def subspace_basis(side, lam, params: ModelParams, pair: EndstatePair,
                   mode_radius=1e-2):
    """Initialization basis of the decaying subspace at an endstate.

    Near the origin, individual mode branches (analytic through lambda = 0);
    away from it, the sign-split Schur subspace in canonical form.
    """
    st = pair.left if side == "minus" else pair.right
    if abs(lam) <= mode_radius:
        return mode_basis(side, lam, params, pair)
    M = asymptotic_matrix(st, params, lam)
    return schur_subspace(M, _select_decaying(side))


def _cluster_projector(M, cluster):
    """Spectral projector of M onto the eigenvalues nearest the `cluster`
    values (greedy matching); returns (P, matched eigenvalues, spectral gap
    between matched and unmatched)."""
    w, V = np.linalg.eig(M)
    rem = list(range(w.size))
    sel = []
    for c in cluster:
        i = min(rem, key=lambda i: abs(w[i] - c))
        sel.append(i)
        rem.remove(i)
    gap = math.inf
    for i in sel:
        for j in rem:
            gap = min(gap, abs(w[i] - w[j]))
    mask = np.zeros(w.size, dtype=bool)
    mask[sel] = True
    Vinv = np.linalg.inv(V)
    return V[:, mask] @ Vinv[mask, :], w[sel], gap


def transport_basis(M_from, M_to, basis, select=None, max_dp=0.25, depth=0,
                    cluster=None):
    """Kato product-integral transport of an invariant-subspace basis.

    The eigenvalue cluster spanned by `basis` is tracked by proximity, so
    the transport follows analytic continuation of the subspace even where
    a fixed sign split would misclassify (for example near the origin).
    The step bisects until both the projector increment and the cluster
    motion relative to the spectral gap are small.
    """
    if depth > 40:
        raise RefinementLimit("projector transport step underflow")
    k = basis.shape[1]
    if cluster is None:
        R = np.linalg.lstsq(basis, M_from @ basis, rcond=None)[0]
        cluster = np.linalg.eigvals(R)
    Pf, wf, gap_f = _cluster_projector(M_from, cluster)
    Pt, wt, gap_t = _cluster_projector(M_to, wf)
    gap = min(gap_f, gap_t)
    move = float(np.max(np.abs(wt - wf))) if k else 0.0
    if np.linalg.norm(Pt - Pf, 2) > max_dp or (gap > 0 and move > gap / 3.0):
        Mm = 0.5 * (M_from + M_to)
        half = transport_basis(M_from, Mm, basis, select, max_dp, depth + 1,
                               cluster=wf)
        return transport_basis(Mm, M_to, half, select, max_dp, depth + 1)
    out = Pt @ basis
    if np.linalg.svd(out, compute_uv=False)[-1] < 1e-10:
        raise NeutralMode("transported basis degenerated")
    return out


# ---------------------------------------------------------------------------
# frame integration
# ---------------------------------------------------------------------------

def integrate_frame(Afun, x0, x1, Z0, *, rtol=1e-9, atol=1e-11, n_legs=None):
    """Continuous-orthonormalization integration of a k-frame of
    W' = A(x) W from x0 to x1.

    Returns (Q, logdet) with Q(x1) an orthonormal frame spanning the
    propagated subspace and logdet the complex log of the determinant factor
    relating the literal solution columns (initialized at Z0) to Q.
    """
    n, k = Z0.shape
    Q0, led0 = _polar_ledger(Z0)
    ledger = complex(led0)

    def rhs(x, yv):
        Om = yv[:n * k].reshape(n, k)
        A = Afun(x)
        AO = A @ Om
        S = Om.conj().T @ AO
        dOm = AO - Om @ S
        return np.concatenate([dOm.ravel(), [np.trace(S)]])

    if n_legs is None:
        n_legs = max(4, int(abs(x1 - x0) / 4.0))
    xs = np.linspace(x0, x1, n_legs + 1)
    Q = Q0
    for a, bseg in zip(xs[:-1], xs[1:]):
        y0 = np.concatenate([Q.ravel(), [0.0 + 0.0j]]).astype(complex)
        sol = solve_ivp(rhs, (a, bseg), y0, method="DOP853", rtol=rtol,
                        atol=atol)
        if not sol.success:
            raise StiffnessFailure(f"frame integration failed: {sol.message}")
        yf = sol.y[:, -1]
        ledger += yf[-1]
        Z = yf[:n * k].reshape(n, k)
        Q, dled = _polar_ledger(Z)   # re-orthonormalize drift, keep books
        ledger += dled
    return Q, ledger


def _selected_trace(side, lam, params, pair, mode_radius=1e-2):
    """Sum of the decaying-family eigenvalues of A_pm (growth reference).

    Near the origin the family is the analytic continuation of the labeled
    branches (sign selection would jump where slow modes cross the axis);
    away from it the consistent-splitting sign selection is equivalent.
    """
    if abs(lam) <= mode_radius:
        ms = dispersion_roots(side, lam, params, pair)
        want = (1, 2, 4, 7) if side == "minus" else (5, 6, 7)
        return complex(sum(ms.by_label(j) for j in want))
    st = pair.left if side == "minus" else pair.right
    mu = np.linalg.eigvals(asymptotic_matrix(st, params, lam))
    sel = mu.real > 0 if side == "minus" else mu.real < 0
    return complex(np.sum(mu[sel]))


@dataclass
class SideFrame:
    """Integrated solution frame of one side at the matching point."""

    side: str
    Q: np.ndarray
    ledger: complex
    basis: np.ndarray     # initialization at the endstate


class EvansSystem:
    """Evans function of a profile, with chained analytic continuation.

    eval(lam) is deterministic (canonical initialization per lambda);
    eval_chain(lam, prev) transports the initialization bases from a
    previous evaluation for analytic continuation along contours.
    """

    def __init__(self, profile: Profile, *, L=None, rtol=1e-9, atol=1e-11,
                 mode_radius=1e-2):
        self.profile = profile
        self.params = profile.params
        self.pair = profile.pair
        self.L = float(L if L is not None else profile.L)
        self.rtol = rtol
        self.atol = atol
        self.mode_radius = mode_radius
        self.system = build_system(profile, 0.0)

    # -- initialization ------------------------------------------------------
    def _init_bases(self, lam):
        return {side: subspace_basis(side, lam, self.params, self.pair,
                                     self.mode_radius)
                for side in ("minus", "plus")}

    def _transport_bases(self, lam, prev_lam, prev_bases):
        out = {}
        for side in ("minus", "plus"):
            st = self.pair.left if side == "minus" else self.pair.right
            Mf = asymptotic_matrix(st, self.params, prev_lam)
            Mt = asymptotic_matrix(st, self.params, lam)
            out[side] = transport_basis(Mf, Mt, prev_bases[side],
                                        _select_decaying(side))
        return out

    # -- evaluation ------------------------------------------------------------
    def _eval_with_bases(self, lam, bases):
        lamc = complex(lam)
        Lint = self.L
        xclip = self.profile.L

        def Afun_factory(side):
            def Afun(x):
                return self.system.A(float(np.clip(x, -xclip, xclip)), lamc)
            return Afun

        frames = {}
        for side, x0 in (("minus", -Lint), ("plus", Lint)):
            Q, led = integrate_frame(Afun_factory(side), x0, 0.0, bases[side],
                                     rtol=self.rtol, atol=self.atol)
            led -= _selected_trace(side, lamc, self.params, self.pair,
                                   self.mode_radius) * (0.0 - x0)
            frames[side] = SideFrame(side, Q, led, bases[side])

        M = np.column_stack([frames["minus"].Q, frames["plus"].Q])
        det7 = np.linalg.det(M)
        cross = frames["minus"].Q.conj().T @ frames["plus"].Q
        smax = min(1.0, float(np.linalg.svd(cross, compute_uv=False)[0]))
        conditioning = math.sqrt(max(0.0, 1.0 - smax * smax))
        ledger = frames["minus"].ledger + frames["plus"].ledger
        mant = det7 * cmath.exp(1j * ledger.imag)
        return _pack(mant, ledger.real, lamc, conditioning, Lint), frames

    def eval(self, lam) -> EvansSample:
        sample, _ = self._eval_with_bases(lam, self._init_bases(lam))
        return sample

    def eval_chain(self, lam, prev=None):
        """Evaluate with initialization continued from `prev` (a pair
        (lam_prev, bases) as returned in this method's second slot).

        Inside the mode radius the labeled-branch initialization is already
        analytic, so it is used directly; transport takes over outside.
        """
        if prev is None or abs(lam) <= self.mode_radius:
            bases = self._init_bases(lam)
        else:
            prev_lam, prev_bases = prev
            if abs(prev_lam - complex(lam)) == 0.0:
                bases = prev_bases
            else:
                bases = self._transport_bases(complex(lam), prev_lam,
                                              prev_bases)
        sample, _ = self._eval_with_bases(lam, bases)
        return sample, (complex(lam), bases)

    # -- decaying basis (exposed for tests and duality checks) ----------------
    def decaying_basis(self, side, lam):
        """Solution columns at x = 0 spanning the side's decaying family.

        Returns (Q, ledger, init_basis): Q has 4 columns at minus, 3 at plus.
        """
        bases = self._init_bases(lam)
        lamc = complex(lam)
        x0 = -self.L if side == "minus" else self.L
        xclip = self.profile.L

        def Afun(x):
            return self.system.A(float(np.clip(x, -xclip, xclip)), lamc)

        Q, led = integrate_frame(Afun, x0, 0.0, bases[side],
                                 rtol=self.rtol, atol=self.atol)
        return Q, led, bases[side]


# ---------------------------------------------------------------------------
# duality invariant
# ---------------------------------------------------------------------------

def duality_pairing_drift(system: FirstOrderSystem, lam, *, n_segments=None,
                          seg_len=0.5, rtol=1e-10, atol=1e-12, n_check=7):
    """Max relative drift of the pairings Wt^T S W over [-L, L].

    All 7 forward and 7 dual solutions are integrated segment by segment
    (fresh canonical initializations per segment keep the growth spread
    representable); within each segment every pairing must stay constant.
    The maximum relative drift over all segments and pairings is returned.
    """
    prof = system.profile
    Lp = prof.L
    lamc = complex(lam)
    if n_segments is None:
        n_segments = max(8, int(2 * Lp / seg_len / 8))
    edges = np.linspace(-Lp, Lp, n_segments + 1)
    worst = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        AF = system.A(mid, lamc)
        shift = complex(np.trace(AF)) / AF.shape[0]

        def fwd(x, yv):
            return ((system.A(x, lamc) - shift * np.eye(7)) @
                    yv.reshape(7, 7)).ravel()

        def dua(x, yv):
            return ((system.A_dual(x, lamc) + shift * np.eye(7)) @
                    yv.reshape(7, 7)).ravel()

        W0 = np.eye(7, dtype=complex).ravel()
        xs = np.linspace(a, b, n_check)
        solf = solve_ivp(fwd, (a, b), W0, t_eval=xs, method="DOP853",
                         rtol=rtol, atol=atol)
        sold = solve_ivp(dua, (a, b), W0, t_eval=xs, method="DOP853",
                         rtol=rtol, atol=atol)
        if not (solf.success and sold.success):
            raise StiffnessFailure("duality segment integration failed")
        P0 = None
        for i, x in enumerate(xs):
            Wf = solf.y[:, i].reshape(7, 7)
            Wd = sold.y[:, i].reshape(7, 7)
            P = Wd.T @ system.S(x) @ Wf
            if P0 is None:
                P0 = P
                scale = np.abs(P0) + np.max(np.abs(P0)) * 1e-3
            else:
                worst = max(worst, float(np.max(np.abs(P - P0) / scale)))
    return worst


# ---------------------------------------------------------------------------
# contours
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Contour:
    """Closed positively-oriented contour as a piecewise-smooth map of
    t in [0, 1]; `pieces` are (t0, t1, map) triples."""

    pieces: tuple
    r0: float = 0.0
    R: float = 0.0

    def at(self, t):
        t = float(t) % 1.0
        for (t0, t1, fn) in self.pieces:
            if t0 <= t <= t1:
                return complex(fn((t - t0) / (t1 - t0)))
        return complex(self.pieces[-1][2](1.0))


def d_contour(r0, R) -> Contour:
    """Boundary of {Re > 0} \\ B(0, r0) within |lambda| < R: imaginary-axis
    segments, an origin indent through +r0, and the right half circle |l|=R.

    Positively oriented, starting at lambda = R (real axis) for a real
    anchor point.
    """
    quarter = 0.25

    def arc_up(u):       # R -> iR
        return R * np.exp(1j * (math.pi / 2) * u)

    def seg_down(u):     # iR -> i r0
        return 1j * (R + (r0 - R) * u)

    def indent(u):       # i r0 -> -i r0 through +r0
        return r0 * np.exp(1j * (math.pi / 2) * (1 - 2 * u))

    def seg_down2(u):    # -i r0 -> -i R
        return -1j * (r0 + (R - r0) * u)

    def arc_up2(u):      # -iR -> R
        return R * np.exp(1j * (-math.pi / 2) * (1 - u))

    pieces = (
        (0.0, 0.2, arc_up),
        (0.2, 0.4, seg_down),
        (0.4, 0.6, indent),
        (0.6, 0.8, seg_down2),
        (0.8, 1.0, arc_up2),
    )
    return Contour(pieces=pieces, r0=r0, R=R)


def circle_contour(center, radius) -> Contour:
    def fn(u):
        return center + radius * np.exp(2j * math.pi * u)
    return Contour(pieces=((0.0, 1.0, fn),), r0=radius, R=radius)


def rect_contour(re0, re1, im0, im1) -> Contour:
    c = [complex(re1, im0), complex(re1, im1), complex(re0, im1),
         complex(re0, im0)]

    def edge(i):
        a, b = c[i], c[(i + 1) % 4]
        return lambda u: a + (b - a) * u

    pieces = tuple((i / 4.0, (i + 1) / 4.0, edge(i)) for i in range(4))
    return Contour(pieces=pieces, r0=0.0, R=max(abs(v) for v in c))


def evaluate_contour(source, contour: Contour, *, n0=64, max_arg=math.pi / 2,
                     max_refine=12, chain=True):
    """Adaptively sample `source` on the closed contour until adjacent
    argument increments are below max_arg.

    Returns the ordered sample list (closed: last point repeats t=1).
    `source` needs eval_chain(lam, prev); chains propagate left to right.
    """
    ts = list(np.linspace(0.0, 1.0, n0 + 1))
    nodes = {}
    state = None
    for t in ts:
        lam = contour.at(t)
        sample, state = source.eval_chain(lam, state if chain else None)
        nodes[t] = (sample, state)

    for _ in range(max_refine):
        new_ts = []
        ts_sorted = sorted(nodes)
        for a, b in zip(ts_sorted[:-1], ts_sorted[1:]):
            Da, Db = nodes[a][0].D, nodes[b][0].D
            if Da == 0 or Db == 0:
                raise RefinementLimit("exact zero of D on the contour")
            da = cmath.phase(Db / Da)
            if abs(da) >= max_arg:
                new_ts.append(0.5 * (a + b))
        if not new_ts:
            break
        for t in new_ts:
            left = max(tt for tt in nodes if tt < t)
            lam = contour.at(t)
            sample, state = source.eval_chain(lam, nodes[left][1]
                                              if chain else None)
            nodes[t] = (sample, state)
    else:
        raise RefinementLimit("argument increments not controlled "
                              f"after {max_refine} refinements")
    ts_sorted = sorted(nodes)
    return [nodes[t][0] for t in ts_sorted]


def winding_number(samples):
    """Total argument variation / 2 pi of an ordered closed sample loop.

    Requires adjacent increments < pi/2 (the evaluate_contour postcondition);
    the result is asserted to be integral.
    """
    total = 0.0
    for a, b in zip(samples[:-1], samples[1:]):
        if a.D == 0 or b.D == 0:
            raise RefinementLimit("sample hit an exact zero on the contour")
        da = cmath.phase(b.D / a.D)
        if abs(da) >= math.pi / 2:
            raise RefinementLimit(f"argument increment {da:.3f} >= pi/2")
        total += da
    w = total / (2.0 * math.pi)
    if abs(w - round(w)) > 0.05:
        raise RefinementLimit(f"winding {w} not integral")
    return int(round(w))


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------

def derivative_at_zero(source, r0, *, n=32):
    """D'(0) by the Cauchy integral over the circle |lambda| = r0.

    D'(0) = (1/2 pi i) oint D(lam) / lam^2 dlam (exact for analytic D);
    uniform-in-angle trapezoid is spectrally accurate on the circle.
    Returns (sample at lambda = 0, circle samples).
    """
    samples = evaluate_contour(source, circle_contour(0.0, r0), n0=n)
    return cauchy_derivative(samples, order=1, center=0.0), samples


def cauchy_derivative(samples, order=1, center=0.0, logscale_ref=None):
    """n-th derivative at `center` from equispaced closed circle samples."""
    vals = samples[:-1]
    if logscale_ref is None:
        logscale_ref = float(np.median([s.logscale for s in vals]))
    acc = 0.0 + 0.0j
    for s in vals:
        dl = s.lam - center
        acc += s.D * math.exp(s.logscale - logscale_ref) / dl**order
    acc *= math.factorial(order) / len(vals)
    return _pack(acc, logscale_ref, center)


@dataclass
class StabilityVerdict:
    """Outcome of the right-half-plane Evans survey."""

    verdict: str                  # Stable | Unstable | Inconclusive
    winding: int
    unstable_count: int
    D0_ratio: float               # |D(0)| / indent-circle scale
    Dprime0: complex              # mantissa
    Dprime0_logscale: float
    dprime_fd_gap: float          # Cauchy vs finite-difference agreement
    gamma: float | None
    delta: float | None
    sign_consistent: bool | None
    r0: float
    R: float
    L: float
    details: dict = field(default_factory=dict)

    def as_dict(self):
        d = {
            "verdict": self.verdict, "winding": self.winding,
            "unstable_count": self.unstable_count, "D0_ratio": self.D0_ratio,
            "Dprime0": [self.Dprime0.real, self.Dprime0.imag],
            "Dprime0_logscale": self.Dprime0_logscale,
            "dprime_fd_gap": self.dprime_fd_gap,
            "gamma": self.gamma, "delta": self.delta,
            "sign_consistent": self.sign_consistent,
            "r0": self.r0, "R": self.R, "L": self.L,
        }
        d.update(self.details)
        return d


def default_hf_radius(params: ModelParams, pair: EndstatePair):
    """Starting high-frequency radius for the right-half-plane contour."""
    sig = max(thermo(pair.left, params)[3], thermo(pair.right, params)[3])
    return 10.0 * (1.0 + params.s + sig) ** 2


def winding_on_dcontour(source, r0, R, *, n0=None, max_refine=14):
    """Winding number of D on the origin-indented right-half-plane contour."""
    if n0 is None:
        n0 = max(64, int(16 * math.log10(max(10.0, R / max(r0, 1e-12)))))
    samples = evaluate_contour(source, d_contour(r0, R), n0=n0,
                               max_refine=max_refine)
    return winding_number(samples), samples


def dprime_zero_report(source, r0, *, n=32):
    """D'(0) via the Cauchy integral, cross-checked by central differences
    on the imaginary axis; returns (sample, relative gap, circle samples)."""
    dsamp, circle = derivative_at_zero(source, r0, n=n)
    h = 0.5 * r0
    if hasattr(source, "eval_chain"):
        sp_, _ = source.eval_chain(1j * h, None)
        sm_, _ = source.eval_chain(-1j * h, None)
    else:
        sp_, sm_ = source.eval(1j * h), source.eval(-1j * h)
    fd = (sp_.D * math.exp(sp_.logscale - dsamp.logscale)
          - sm_.D * math.exp(sm_.logscale - dsamp.logscale)) / (2j * h)
    gap = abs(fd - dsamp.D) / max(abs(dsamp.D), 1e-300)
    return dsamp, float(gap), circle


def stability_check(profile: Profile, *, r0=None, R=None, source=None,
                    dprime_tol=1e-8, max_R_doublings=3, verify_r0=True,
                    gamma=None, delta=None, **system_opts) -> StabilityVerdict:
    """Spectral stability survey on the indented right-half-plane contour.

    Stable requires zero winding (no roots off the origin), a simple zero at
    the origin (|D(0)| below tolerance against the indent-circle scale and
    |D'(0)| above it), with the high-frequency radius doubled until the
    winding stabilizes; halving r0 must not change the verdict.  A test
    harness may substitute `source` (e.g. to inject synthetic root pairs).
    """
    if source is None:
        source = EvansSystem(profile, **system_opts)
    params, pair = profile.params, profile.pair
    if r0 is None:
        tau0 = float(profile.tau_at(0.0)[0])
        r0 = 1e-3 * min(1.0, abs(tau0))
    if R is None:
        R = default_hf_radius(params, pair)

    dsamp, fd_gap, circle = dprime_zero_report(source, r0)
    scale_log = float(np.median([s.log_abs() for s in circle[:-1]]))
    s0 = source.eval(0.0) if hasattr(source, "eval") else None
    D0_ratio = math.exp(s0.log_abs() - scale_log) if s0 is not None else 0.0
    # |D'(0)| against the natural derivative scale of the circle
    dprime_ok = dsamp.log_abs() - (scale_log - math.log(r0)) > math.log(dprime_tol)

    details = {"R_history": [], "n_samples": 0}
    windings = []
    Rcur = R
    for _ in range(max_R_doublings + 1):
        w, samples = winding_on_dcontour(source, r0, Rcur)
        windings.append((Rcur, w))
        details["R_history"].append([Rcur, w])
        details["n_samples"] += len(samples)
        if len(windings) >= 2 and windings[-1][1] == windings[-2][1]:
            break
        Rcur *= 2.0
    else:
        return StabilityVerdict("Inconclusive", windings[-1][1], 0, D0_ratio,
                                dsamp.D, dsamp.logscale, fd_gap, gamma, delta,
                                None, r0, Rcur, source.L
                                if hasattr(source, "L") else profile.L,
                                {"reason": "winding did not stabilize in R",
                                 **details})
    w_final = windings[-1][1]

    if verify_r0:
        w_half, _ = winding_on_dcontour(source, r0 / 2.0, windings[-1][0])
        details["winding_r0_halved"] = w_half
        if w_half != w_final:
            return StabilityVerdict("Inconclusive", w_final, 0, D0_ratio,
                                    dsamp.D, dsamp.logscale, fd_gap, gamma,
                                    delta, None, r0, windings[-1][0],
                                    getattr(source, "L", profile.L),
                                    {"reason": "verdict depends on r0",
                                     **details})

    sign_consistent = None
    if gamma is not None and delta is not None:
        sign_consistent = (math.copysign(1.0, dsamp.D.real)
                           == math.copysign(1.0, gamma * delta))

    if w_final == 0 and dprime_ok and D0_ratio <= 1e-8:
        verdict, count = "Stable", 0
    elif w_final >= 1:
        verdict, count = "Unstable", w_final
    else:
        verdict, count = "Inconclusive", max(w_final, 0)
        details.setdefault("reason", "origin zero not simple or D(0) large")
    return StabilityVerdict(verdict, w_final, count, D0_ratio, dsamp.D,
                            dsamp.logscale, fd_gap, gamma, delta,
                            sign_consistent, r0, windings[-1][0],
                            getattr(source, "L", profile.L), details)


def lopatinski_delta(pair: EndstatePair, params: ModelParams):
    """Inviscid Lopatinski determinant det(r1-, r2-, r4-, [fluid jump, 0]).

    r_j are the outgoing eigenvectors of dF at the burned state (acoustic
    -s - sigma, fluid entropy -s, reactive -s; the incoming -s + sigma mode
    is excluded), normalized by l_j^T dF r_j = -1 with the degenerate -s
    eigenspace split into its fluid and reactive parts by biorthogonality.
    The jump's fourth slot is zero, so the q -> 0 limit reduces exactly to
    the gas-dynamical three-by-three determinant.
    """
    st = pair.left
    F, dF, B4, G, dG = flux_jet(st, params)
    e, T, p, sig = thermo(st, params)
    s, Gm, q = params.s, params.Gamma, params.qheat
    tau, u = st.tau, st.u
    p_z = -Gm * q / tau

    from .model import fluid_sharp_jet
    dfv, _ = fluid_sharp_jet(st, params)
    wv, Vv = np.linalg.eig(dfv)
    wl, Wv = np.linalg.eig(dfv.T)
    if np.max(np.abs(wv.imag)) > 1e-9 * np.max(np.abs(wv)):
        raise DegenerateEigenvector("fluid characteristics not real")

    def pick(vals, vecs, target):
        i = int(np.argmin(np.abs(vals.real - target)))
        if abs(vals[i].real - target) > 1e-8 * max(1.0, abs(target)):
            raise DegenerateEigenvector(f"no eigenvalue near {target}")
        v = vecs[:, i].real
        j = int(np.argmax(np.abs(v)))
        return v if v[j] > 0 else -v

    dfz = np.array([0.0, p_z, p_z * u])   # d f# / dz
    rv1 = pick(wv, Vv, -s - sig)
    rv2 = pick(wv, Vv, -s)
    lv1 = pick(wl, Wv, -s - sig)
    lv2 = pick(wl, Wv, -s)
    r1 = np.concatenate([rv1, [0.0]])
    r2 = np.concatenate([rv2, [0.0]])
    l1 = np.concatenate([lv1, [lv1 @ dfz / (-sig)]])
    l2 = np.concatenate([lv2, [0.0]])
    l4 = np.array([0.0, 0.0, 0.0, 1.0])

    # reactive eigenvector for -s: z-slot 1, fluid part from
    # (df# + s) rv = -dfz, the rv2 ambiguity fixed by l2-biorthogonality
    rv4 = np.linalg.lstsq(dfv + s * np.eye(3), -dfz, rcond=None)[0]
    r4 = np.concatenate([rv4, [1.0]])
    r4 = r4 - (lv2 @ rv4) / (lv2 @ rv2) * r2

    rs = []
    for lj, rj in ((l1, r1), (l2, r2), (l4, r4)):
        val = lj @ dF @ rj
        if abs(val) < 1e-13 * max(1.0, float(np.linalg.norm(dF))):
            raise DegenerateEigenvector("eigenvector normalization degenerate")
        rs.append(-rj / val)

    jump = np.array([pair.right.tau - st.tau, pair.right.u - st.u,
                     pair.right.E - st.E, 0.0])
    return float(np.linalg.det(np.column_stack(rs + [jump])))

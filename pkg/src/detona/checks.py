"""One-shot structural certificate for a computed profile.

Bundles the structural conditions (linear tau-convection, positive-definite
diffusion block), the wave conditions (nonzero speed, real simple nonzero
convection spectrum), the endstate dissipativity margin, and the
transversality certificate into a machine-readable record.  Failures are
recorded with their margins; nothing raises.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import diffusion_b, thermo
from .profile import Profile, tau_of_u, transversality_gamma
from .spectral import default_xi_grid, kawashima_margin


@dataclass
class Certificate:
    flags: dict
    margins: dict
    provenance: dict
    extras: dict = field(default_factory=dict)

    def ok(self):
        return all(self.flags.values())

    def as_dict(self):
        return {"flags": self.flags, "margins": self.margins,
                "provenance": self.provenance, **self.extras}


def certify(profile: Profile, params=None, *, n_grid=801) -> Certificate:
    """Evaluate the structural and wave conditions on a profile.

    A1 is structural (the tau equation's convection terms are linear by
    construction; recorded, not measured).  A2 takes the minimum eigenvalue
    of sym(b) along the profile.  H1 is |s|.  H2 reports the minimum gap and
    minimum magnitude of the convection spectrum at the endstates, plus the
    interior minimum of |sigma(x) - s| (the -s + sigma characteristic may
    vanish inside the wave; reported, never failed).  H3 is the smaller
    endstate dissipativity margin, H4 the transversality Wronskian.
    """
    params = params or profile.params
    pair = profile.pair
    flags, margins, prov, extras = {}, {}, {}, {}

    flags["A1"] = True
    margins["A1"] = float("inf")
    prov["A1"] = "structural: tau convection is -s tau - J w"

    x = np.linspace(-profile.L, profile.L, n_grid)
    w = profile.w_at(x)
    tau = tau_of_u(w[0], pair, params)
    min_eig = np.inf
    for i in range(x.size):
        b = diffusion_b(tau[i], w[0, i], params)
        ev = np.linalg.eigvalsh(0.5 * (b + b.T))
        min_eig = min(min_eig, float(ev[0]))
    flags["A2"] = min_eig > 0
    margins["A2"] = min_eig
    prov["A2"] = "min eig sym(b) on the profile grid"

    flags["H1"] = abs(params.s) > 1e-12
    margins["H1"] = abs(params.s)
    prov["H1"] = "|s|"

    gaps, mins = [], []
    for st in (pair.left, pair.right):
        sig = thermo(st, params)[3]
        spec = np.array([-params.s - sig, -params.s, -params.s + sig])
        gaps.append(sig)  # distinct-cluster gap
        mins.append(float(np.min(np.abs(spec))))
    sig_x = np.array([thermo_like_sigma(tau[i], w[:, i], params)
                      for i in range(x.size)])
    interior_min = float(np.min(np.abs(sig_x - params.s)))
    i_min = int(np.argmin(np.abs(sig_x - params.s)))
    flags["H2"] = min(gaps) > 1e-10 and min(mins) > 1e-10
    margins["H2"] = min(min(gaps), min(mins))
    prov["H2"] = "endstate characteristic gaps and distance from zero"
    extras["H2_interior_min_location"] = float(x[i_min])
    extras["H2_interior_min_value"] = interior_min

    xi = default_xi_grid(params, pair)
    th = min(kawashima_margin("minus", xi, params, pair),
             kawashima_margin("plus", xi, params, pair))
    flags["H3"] = th > 0
    margins["H3"] = th
    prov["H3"] = "kawashima_margin over both endstates"

    try:
        gam = transversality_gamma(profile)
        flags["H4"] = abs(gam) > 1e-8
        margins["H4"] = abs(gam)
        extras["gamma"] = gam
    except Exception as exc:  # recorded, not raised
        flags["H4"] = False
        margins["H4"] = 0.0
        extras["H4_error"] = str(exc)
    prov["H4"] = "transversality Wronskian |gamma|"

    return Certificate(flags=flags, margins=margins, provenance=prov,
                       extras=extras)


def thermo_like_sigma(tau, w, params):
    """Sound speed along the profile from (tau, u, E, z) components."""
    u, E, z = w[0], w[1], w[2]
    e = E - 0.5 * u * u - params.qheat * z
    return float(np.sqrt(params.Gamma * (params.Gamma + 1.0) * max(e, 1e-300))
                 / tau)

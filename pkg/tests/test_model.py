import math

import numpy as np
import pytest

from detona.errors import NonPhysical
from detona.model import (EpsMap, ModelParams, State, diffusion_b, flux_jet,
                          ignition, ignition_arr, thermo)


def test_thermo_direct_values():
    p = ModelParams(Gamma=1.2, cheat=1.0, qheat=0.0)
    e, T, pr, sig = thermo(State(2.0, 0.0, 3.0, 0.0), p)
    assert pr == pytest.approx(1.8)
    assert T == pytest.approx(3.0)


def test_thermo_sound_speed():
    p = ModelParams(Gamma=1.2)
    sig = thermo(State(1.0, 0.0, 1.0, 0.0), p)[3]
    assert sig == pytest.approx(math.sqrt(2.64), abs=1e-12)


def test_thermo_nonphysical_boundary():
    p = ModelParams()
    with pytest.raises(NonPhysical):
        thermo(State(1.0, 2.0, 2.0, 0.0), p)  # e = 0 exactly


def test_ignition_vanishes_at_and_below_threshold():
    p = ModelParams(T_ign=1.0, ign_C=1.0, ign_E=1.0)
    assert ignition(1.0, p) == (0.0, 0.0)
    assert ignition(0.5, p) == (0.0, 0.0)


def test_ignition_arrhenius_value():
    p = ModelParams(T_ign=1.0, ign_C=1.0, ign_E=1.0)
    phi, dphi = ignition(2.0, p)
    assert phi == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert dphi > 0


def test_ignition_smooth_across_threshold():
    p = ModelParams(T_ign=1.0, ign_C=1.0, ign_E=1.0)
    # one-sided difference quotients of phi and phi' tend to 0 at T_i
    for h in (1e-2, 1e-3, 1e-4):
        phi_h, dphi_h = ignition(1.0 + h, p)
        assert phi_h / h < math.exp(-1.0 / h) / h * 1.01 + 1e-300
    # smaller h gives (much) smaller quotient
    q1 = ignition(1.0 + 1e-2, p)[0] / 1e-2
    q2 = ignition(1.0 + 1e-3, p)[0] / 1e-3
    assert q2 < q1 * 1e-10


def test_ignition_positive_sign_variant_diverges():
    p = ModelParams(T_ign=1.0, ign_C=1.0, ign_E=1.0, ign_sign=+1)
    phi, _ = ignition(1.0 + 1e-6, p)
    assert phi > 1e100  # the published sign blows up at the threshold


def test_ignition_smoothstep_saturates():
    p = ModelParams(T_ign=1.0, ign_C=2.5, ign_width=0.5, ign_model="smoothstep")
    assert ignition(0.9, p) == (0.0, 0.0)
    assert ignition(3.0, p)[0] == pytest.approx(2.5)
    mid = ignition(1.25, p)[0]
    assert 0 < mid < 2.5


def test_ignition_arr_matches_scalar():
    p = ModelParams(T_ign=1.0, ign_C=1.3, ign_E=0.7)
    T = np.linspace(0.2, 3.0, 57)
    vec = ignition_arr(T, p)
    scal = np.array([ignition(float(t), p)[0] for t in T])
    assert np.max(np.abs(vec - scal)) <= 1e-15


def test_flux_spectrum_and_source():
    p = ModelParams(Gamma=1.2, s=1.7, qheat=2.0, T_ign=0.5, krate=1.3)
    st = State(0.8, 0.4, 3.0, 0.3)
    F, dF, B, G, dG = flux_jet(st, p)
    sig = thermo(st, p)[3]
    ev = np.sort(np.linalg.eigvals(dF).real)
    want = np.sort([-p.s - sig, -p.s, -p.s, -p.s + sig])
    assert np.max(np.abs(ev - want)) < 1e-10

    # z = 0 or T below ignition kills the source exactly
    st0 = State(0.8, 0.4, 3.0, 0.0)
    assert np.all(flux_jet(st0, p)[3] == 0.0)
    cold = ModelParams(Gamma=1.2, s=1.7, qheat=2.0, T_ign=1e6)
    assert np.all(flux_jet(st, cold)[3] == 0.0)


def test_diffusion_block_structure():
    p = ModelParams(Gamma=1.2, s=1.7, qheat=2.0, T_ign=0.5)
    st = State(0.8, 0.4, 3.0, 0.3)
    B = flux_jet(st, p)[2]
    assert np.all(B[0, :] == 0.0) and np.all(B[:, 0] == 0.0)
    b = B[1:, 1:]
    assert abs(np.linalg.det(b)) > 1e-12
    assert np.allclose(b, diffusion_b(st.tau, st.u, p))


def test_source_is_conservative_in_fluid_components():
    p = ModelParams(Gamma=1.2, qheat=2.0, T_ign=0.5)
    st = State(0.8, 0.4, 3.0, 0.3)
    G = flux_jet(st, p)[3]
    assert np.all(G[:3] == 0.0)


def test_jacobians_match_finite_differences(rng):
    p = ModelParams(Gamma=1.2, s=1.3, qheat=1.5, T_ign=0.4, krate=2.0,
                    ign_E=0.8)
    checked = 0
    while checked < 10:
        tau = rng.uniform(0.4, 2.0)
        u = rng.uniform(-1.0, 1.0)
        z = rng.uniform(0.0, 1.0)
        E = rng.uniform(1.0, 4.0) + 0.5 * u * u + p.qheat * z
        st = State(tau, u, E, z)
        T = thermo(st, p)[1]
        if abs(T - p.T_ign) < 0.05:
            continue  # keep FD stencils away from the ignition kink
        checked += 1
        F, dF, B, G, dG = flux_jet(st, p)
        U0 = st.as_array()
        for j in range(4):
            h = 1e-6 * max(1.0, abs(U0[j]))
            Up, Um = U0.copy(), U0.copy()
            Up[j] += h
            Um[j] -= h
            Fp, _, _, Gp, _ = flux_jet(State.from_array(Up), p)
            Fm, _, _, Gm, _ = flux_jet(State.from_array(Um), p)
            assert np.allclose((Fp - Fm) / (2 * h), dF[:, j],
                               rtol=1e-6, atol=1e-6)
            assert np.allclose((Gp - Gm) / (2 * h), dG[:, j],
                               rtol=1e-6, atol=1e-6)


def test_params_serialization_roundtrip():
    p = ModelParams(nu=0.2, qheat=3.0, eps_map=EpsMap("ign_E", 50.0, -2.0))
    d = p.as_dict()
    assert set(d) >= {"nu", "kappa", "dcoef", "krate", "qheat", "Gamma",
                      "cheat", "T_ign", "ign_C", "ign_E", "s", "eps_map"}
    p2 = ModelParams.from_dict(d)
    assert p2 == p
    assert p.at_eps(0.5).ign_E == pytest.approx(49.0)


def test_params_positivity_validation():
    with pytest.raises(ValueError):
        ModelParams(nu=-1.0)
    with pytest.raises(ValueError):
        ModelParams(s=0.0)

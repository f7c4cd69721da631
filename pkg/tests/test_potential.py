import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from gravloc import density as dn
from gravloc import potential as pot
from gravloc.errors import DivergentSelfEnergy, FitIllConditioned, MismatchedBulk, NoDecoherence
from gravloc.units import UnitSystem

NEWTON = pot.PairPotentialKernel.newtonian(1.0)
CSL = pot.PairPotentialKernel.csl(1.0)
BALL = dn.uniform_ball(1.0, 1.0)


# ---------------------------------------------------------------------------
# slow Monte-Carlo oracle: sample both mass distributions and average -G/|r1 - r2|


def sample(f, n, rng):
    if f.kind is dn.ProfileKind.POINT:
        return np.zeros((n, 3))
    out = np.zeros((n, 3))
    if f.R > 0:
        v = rng.normal(size=(n, 3))
        v /= np.linalg.norm(v, axis=1)[:, None]
        out += v * f.R * rng.random(n)[:, None] ** (1.0 / 3.0)
    if f.a:
        out += rng.normal(scale=f.a, size=(n, 3))
    return out


def mc_pair(fA, fB, shift, n=400_000, seed=1):
    rng = np.random.default_rng(seed)
    r = np.linalg.norm(sample(fA, n, rng) - sample(fB, n, rng) - np.asarray(shift), axis=1)
    vals = -fA.M * fB.M / r
    return float(vals.mean()), float(vals.std() / math.sqrt(n))


@pytest.mark.parametrize(
    "fA,fB,d",
    [
        (BALL, BALL, 0.0),
        (BALL, BALL, 0.7),
        (BALL, BALL, 1.5),
        (dn.uniform_ball(1.0, 1.0), dn.uniform_ball(2.0, 0.5), 0.8),
        (dn.smeared_ball(1.0, 1.0, 0.2), dn.smeared_ball(1.0, 1.0, 0.2), 0.4),
        (dn.smeared_ball(1.0, 0.0, 0.3), dn.uniform_ball(1.0, 1.0), 0.5),
        (dn.point_mass(1.0), dn.uniform_ball(1.0, 1.0), 0.3),
    ],
)
def test_newton_pair_matches_monte_carlo(fA, fB, d):
    mean, err = mc_pair(fA, fB, [0.0, 0.0, d])
    assert abs(pot.pair_interaction(NEWTON, fA, fB, d) - mean) < 5 * err


def test_evenness_in_displacement_vector():
    v = np.array([0.3, -0.2, 0.5])
    exact = pot.pair_interaction(NEWTON, BALL, BALL, float(np.linalg.norm(v)))
    for shift, seed in ((v, 2), (-v, 3)):
        mean, err = mc_pair(BALL, BALL, shift, seed=seed)
        assert abs(exact - mean) < 5 * err


# ---------------------------------------------------------------------------
# worked values


def test_newton_ball_examples():
    assert pot.pair_interaction(NEWTON, BALL, BALL, 0.0) == pytest.approx(-1.2, rel=1e-14)
    assert pot.pair_interaction(NEWTON, BALL, BALL, 10.0) == pytest.approx(-0.1, abs=1e-10)


def test_csl_ball_examples():
    assert pot.pair_interaction(CSL, BALL, BALL, 2.0) == 0.0
    assert pot.pair_interaction(CSL, BALL, BALL, 3.5) == 0.0
    assert pot.pair_interaction(CSL, BALL, BALL, 0.0) == pytest.approx(-3.0 / (4.0 * math.pi), rel=1e-14)


def test_gaussian_pair_closed_forms():
    a = 0.3
    g = dn.smeared_ball(1.0, 0.0, a)
    for d in (0.1, 1.0, 4.0):
        assert pot.pair_interaction(NEWTON, g, g, d) == pytest.approx(-special.erf(d / (2 * a)) / d, rel=1e-12)
        c2 = 2 * a * a
        csl = -(2 * math.pi * c2) ** -1.5 * math.exp(-d * d / (2 * c2))
        assert pot.pair_interaction(CSL, g, g, d) == pytest.approx(csl, rel=1e-12)


def test_spectral_route_against_closed_forms():
    # unequal uniform balls go through the spectral integral; the shell theorem fixes
    # the far field and the point-in-ball potential fixes the R_B -> 0 limit
    big, small = dn.uniform_ball(1.0, 1.0), dn.uniform_ball(1.0, 1e-3)
    for d in (0.0, 0.4, 0.9):
        inside = -(1.5 - 0.5 * d * d)
        assert pot.pair_interaction(NEWTON, big, small, d) == pytest.approx(inside, rel=1e-6)
    assert pot.pair_interaction(NEWTON, dn.uniform_ball(1.0, 1.0), dn.uniform_ball(2.0, 0.5), 1.6) == pytest.approx(
        -2.0 / 1.6, rel=1e-12)


def test_small_smearing_recovers_sharp_ball():
    sharp = pot.pair_interaction(NEWTON, BALL, BALL, np.array([0.0, 0.5, 1.0]))
    soft = dn.smooth(BALL, 1e-3)
    assert np.allclose(pot.pair_interaction(NEWTON, soft, soft, np.array([0.0, 0.5, 1.0])), sharp, rtol=1e-5)


def test_point_mass_divergence():
    p = dn.point_mass(1.0)
    with pytest.raises(DivergentSelfEnergy):
        pot.pair_interaction(NEWTON, p, p, 0.0)
    with pytest.raises(DivergentSelfEnergy):
        pot.harmonic_expansion(NEWTON, p)
    with pytest.raises(DivergentSelfEnergy):
        pot.heating_rate(p)
    assert pot.pair_interaction(NEWTON, p, p, 2.0) == pytest.approx(-0.5)


# ---------------------------------------------------------------------------
# properties

profiles = st.one_of(
    st.builds(dn.uniform_ball, st.floats(0.1, 5.0), st.floats(0.2, 3.0)),
    st.builds(dn.smeared_ball, st.floats(0.1, 5.0), st.sampled_from([0.0, 0.5, 1.0]), st.floats(0.1, 1.0)),
)


@given(fA=profiles, fB=profiles, d=st.floats(0.0, 6.0), csl=st.booleans())
def test_symmetry(fA, fB, d, csl):
    k = CSL if csl else NEWTON
    assert pot.pair_interaction(k, fA, fB, d) == pytest.approx(pot.pair_interaction(k, fB, fA, d), rel=1e-9, abs=1e-12)


@given(f=profiles, d=st.floats(0.0, 8.0), csl=st.booleans())
def test_minimum_at_contact(f, d, csl):
    k = CSL if csl else NEWTON
    assert pot.pair_difference(k, f, d) >= 0.0
    assert pot.pair_interaction(k, f, f, 0.0) <= pot.pair_interaction(k, f, f, d) + 1e-12


@given(f=profiles, d=st.floats(1e-3, 3.0))
def test_pair_difference_consistent_with_pair_interaction(f, d):
    diff = pot.pair_interaction(NEWTON, f, f, d) - pot.pair_interaction(NEWTON, f, f, 0.0)
    assert pot.pair_difference(NEWTON, f, d) == pytest.approx(diff, rel=1e-6, abs=1e-10 * abs(f.M**2))


@given(MA=st.floats(0.1, 5.0), MB=st.floats(0.1, 5.0), RA=st.floats(0.1, 2.0), RB=st.floats(0.1, 2.0),
       gap=st.floats(0.0, 5.0))
def test_newton_far_field_shell_theorem(MA, MB, RA, RB, gap):
    d = RA + RB + gap
    val = pot.pair_interaction(NEWTON, dn.uniform_ball(MA, RA), dn.uniform_ball(MB, RB), d)
    assert val == pytest.approx(-MA * MB / d, rel=1e-12)


@given(f=profiles)
def test_heating_rate_identity(f):
    om2 = pot.harmonic_expansion(NEWTON, f).omega_G_sq
    assert pot.heating_rate(f) == pytest.approx(3.0 / (8.0 * math.pi) * om2, rel=1e-8)
    assert pot.generator_heating_rate(f) == pytest.approx(1.5 * om2, rel=1e-8)


@given(f=profiles, d=st.floats(0.5, 5.0))
def test_structural_parallel_between_kernels(f, d):
    for k in (NEWTON, CSL):
        tau = pot.decoherence_time_general(k, f, f, 0.0, d)
        assert 0.0 < tau < math.inf


@given(f=profiles)
def test_harmonic_expansion_invariants(f):
    exp = pot.harmonic_expansion(NEWTON, f)
    assert exp.omega_G_sq > 0.0
    assert exp.U0 < 0.0
    assert exp.U0 == pytest.approx(pot.pair_interaction(NEWTON, f, f, 0.0), rel=1e-10)


def test_harmonic_consistency_smooth_profiles():
    # smooth profiles have no odd terms in U(d), so the harmonic form holds at second order
    for f in (dn.smeared_ball(1.0, 0.0, 1.0), dn.smeared_ball(2.0, 1.0, 0.5)):
        length = f.structure_length
        for d in (length / 20, length / 100):
            om2 = pot.harmonic_expansion(NEWTON, f).omega_G_sq
            general = pot.decoherence_time_general(NEWTON, f, f, 0.0, d)
            assert general == pytest.approx(pot.decoherence_time_harmonic(f.M, om2, d), rel=1e-2)


@pytest.mark.parametrize("x", [1.0 / 20, 1.0 / 40, 1.0 / 100])
def test_harmonic_consistency_uniform_ball(x):
    """Separations up to R/20 agree within 1e-2: as stated for every finite profile."""
    general = pot.decoherence_time_general(NEWTON, BALL, BALL, 0.0, x)
    assert general == pytest.approx(pot.decoherence_time_harmonic(1.0, 1.0, x), rel=1e-2)


@pytest.mark.parametrize("x", [0.05, 0.01, 1e-3])
def test_uniform_ball_general_to_harmonic_ratio_is_exact_polynomial(x):
    # U(d) - U(0) = (GM^2/R)(x^2/2 - 3x^3/16 + x^5/160) for the sharp ball
    ratio = pot.decoherence_time_general(NEWTON, BALL, BALL, 0.0, x) / pot.decoherence_time_harmonic(1.0, 1.0, x)
    assert ratio == pytest.approx(1.0 / (1.0 - 3.0 * x / 8.0 + x**3 / 80.0), rel=1e-10)


# ---------------------------------------------------------------------------
# harmonic expansion and fits


def test_omega_examples():
    assert pot.harmonic_expansion(NEWTON, BALL).omega_G_sq == pytest.approx(1.0, rel=1e-14)
    assert pot.harmonic_expansion(NEWTON, dn.uniform_ball(2.0, 1.0)).omega_G_sq == pytest.approx(2.0, rel=1e-14)
    at = dn.atomic_composite(1.0, 1.0, 1e-2, m=1e-3, N=1000)
    fbar_sigma = 3e-3 / (4.0 * math.pi * 1e-6)
    assert pot.harmonic_expansion(NEWTON, at).omega_G_sq == pytest.approx(4.0 * math.pi / 3.0 * fbar_sigma, rel=1e-12)


@pytest.mark.parametrize("M,R,d_max,expected", [(1.0, 1.0, 0.02, 1.0), (1.0, 2.0, 0.04, 0.125)])
def test_quadratic_fit_examples(M, R, d_max, expected):
    f = dn.uniform_ball(M, R)
    fit = pot.quadratic_fit_check(NEWTON, f, d_max, 8)
    assert fit.omega_G_sq == pytest.approx(expected, rel=1e-3)
    assert fit.U0 == pytest.approx(pot.pair_interaction(NEWTON, f, f, 0.0), rel=1e-6)


@pytest.mark.parametrize("f", [dn.smeared_ball(1.0, 0.0, 1.0), dn.smeared_ball(1.0, 1.0, 0.3),
                               dn.atomic_composite(1.0, 1.0, 1e-2, N=1000)], ids=["gauss", "smeared", "atomic"])
def test_quadratic_fit_matches_integral_path(f):
    fit = pot.quadratic_fit_check(NEWTON, f, f.structure_length / 20, 8)
    assert fit.omega_G_sq == pytest.approx(pot.harmonic_expansion(NEWTON, f).omega_G_sq, rel=1e-3)
    assert fit.U0 == pytest.approx(pot.pair_interaction(NEWTON, f, f, 0.0), rel=1e-6)


def test_quadratic_fit_ill_conditioned():
    with pytest.raises(FitIllConditioned):
        pot.quadratic_fit_check(NEWTON, BALL, 1e-10, 8)


def test_localisation_width_examples():
    assert pot.localisation_width(1.0, 1.0) == pytest.approx(1.0, rel=1e-15)
    om2 = pot.harmonic_expansion(NEWTON, dn.uniform_ball(16.0, 1.0)).omega_G_sq
    assert pot.localisation_width(16.0, om2) == pytest.approx(0.125, rel=1e-14)
    om2 = pot.harmonic_expansion(NEWTON, dn.uniform_ball(1.0, 16.0)).omega_G_sq
    assert pot.localisation_width(1.0, om2) == pytest.approx(8.0, rel=1e-14)


# ---------------------------------------------------------------------------
# decoherence times


def test_decoherence_time_harmonic_examples():
    assert pot.decoherence_time_harmonic(1.0, 1.0, 1.0) == pytest.approx(2.0)
    assert pot.decoherence_time_harmonic(1.0, 1.0, 2.0) == pytest.approx(0.5)
    with pytest.warns(pot.HarmonicRegimeWarning):
        tau = pot.decoherence_time_harmonic(1.0, 1.0, 0.0)
    assert math.isfinite(tau) and tau > 1e300
    with pytest.warns(pot.HarmonicRegimeWarning):
        pot.decoherence_time_harmonic(1.0, 1.0, 0.5, length_scale=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pot.decoherence_time_harmonic(1.0, 1.0, 0.05, length_scale=1.0)


def test_decoherence_time_general_same_point_is_infinite():
    for f in (BALL, dn.smeared_ball(1.0, 0.0, 0.3)):
        with pytest.raises(NoDecoherence):
            pot.decoherence_time_general(NEWTON, f, f, [0.1, 0.2, 0.3], [0.1, 0.2, 0.3])


def test_decoherence_time_general_small_separation():
    """|X - Y| = 0.01 gives 2e4 within 1e-3, the harmonic value."""
    assert pot.decoherence_time_general(NEWTON, BALL, BALL, 0.0, 0.01) == pytest.approx(2e4, rel=1e-3)


def test_decoherence_time_general_far_apart():
    U10 = pot.pair_interaction(NEWTON, BALL, BALL, 10.0)
    U0 = pot.pair_interaction(NEWTON, BALL, BALL, 0.0)
    assert pot.decoherence_time_general(NEWTON, BALL, BALL, 0.0, 10.0) == pytest.approx(2.0 / (2 * U10 - 2 * U0), rel=1e-12)
    assert pot.decoherence_time_general(NEWTON, BALL, BALL, [0, 0, 0], [6, 8, 0]) == pytest.approx(
        2.0 / (2 * U10 - 2 * U0), rel=1e-12)


def test_decoherence_time_units_scale_with_hbar():
    u = UnitSystem(hbar=3.0)
    assert pot.decoherence_time_general(NEWTON, BALL, BALL, 0.0, 1.0, u) == pytest.approx(
        3.0 * pot.decoherence_time_general(NEWTON, BALL, BALL, 0.0, 1.0))


# ---------------------------------------------------------------------------
# heating and effective constant


def test_heating_rate_examples():
    assert pot.heating_rate(BALL) == pytest.approx(3.0 / (8.0 * math.pi), rel=1e-12)
    p = dn.point_mass(1.0)
    rates = [pot.heating_rate(dn.smooth(p, a)) for a in (0.2, 0.1)]
    assert rates[1] / rates[0] == pytest.approx(8.0, rel=1e-4)


def test_effective_newton_constant():
    at = dn.atomic_composite(1.0, 1.0, 1e-2, m=1e-3)
    assert pot.effective_newton_constant(at, BALL, 1.0) == pytest.approx(1000.0, rel=1e-12)
    single = dn.atomic_composite(1.0, 1.0, 1.0, N=1)
    assert pot.effective_newton_constant(single, BALL, 2.5) == pytest.approx(2.5, rel=1e-14)
    ratio = pot.harmonic_expansion(NEWTON, at).omega_G_sq / pot.harmonic_expansion(NEWTON, BALL).omega_G_sq
    assert pot.effective_newton_constant(at, BALL, 1.0) == pytest.approx(ratio, rel=1e-6)
    with pytest.raises(MismatchedBulk):
        pot.effective_newton_constant(at, dn.uniform_ball(2.0, 1.0))


def test_kernel_json_and_validation():
    for k in (NEWTON, CSL, pot.PairPotentialKernel.newtonian(0.0)):
        assert pot.PairPotentialKernel.from_json(k.to_json()) == k
    with pytest.raises(ValueError):
        pot.PairPotentialKernel.csl(0.0)
    with pytest.raises(ValueError):
        pot.PairPotentialKernel.newtonian(-1.0)


def test_scale_report_unit_ball():
    rep = pot.scale_report(BALL, NEWTON, UnitSystem(), separations=[1.0])
    assert rep["omega_G_sq"] == pytest.approx(1.0)
    assert rep["width"] == pytest.approx(1.0)
    assert rep["heating_rate"] == pytest.approx(3.0 / (8.0 * math.pi))
    assert rep["tau_at"][0]["tau"] == pytest.approx(2.0)

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lgfield import (
    DegenerateKernel,
    FieldModel,
    KernelSet,
    QuadratureConfig,
    QuadratureFailure,
    QuasiProbQuery,
    SignThreshold,
    StateSpec,
    Variant,
    WindowBand,
    build_kernels,
    lg_correlators,
    qp_sign_cartesian,
    qp_sign_polar,
    qp_window,
    quasi_prob,
    single_time_probability,
)
from lgfield.kernels import coherent_mean, kernel_A

SIGNS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
VAC3 = FieldModel(Variant.SCALAR3D, 1.0)


def synthetic(a1=1.0, a2=1.0, b=0.5, e1=0.0, e2=0.0):
    return KernelSet(complex(a1), complex(a2), complex(b), e1, e2)


@pytest.mark.parametrize("engine", [qp_sign_cartesian, qp_sign_polar])
def test_orthant_value(engine):
    res = engine(synthetic(), QuasiProbQuery(1, 1, 0, 1))
    assert res.q == pytest.approx(1 / 3, abs=1e-9)
    assert res.est_error >= 0
    anti = engine(synthetic(), QuasiProbQuery(1, -1, 0, 1))
    assert anti.q == pytest.approx(1 / 6, abs=1e-9)


@pytest.mark.parametrize("engine", [qp_sign_cartesian, qp_sign_polar])
@pytest.mark.parametrize("signs", SIGNS)
def test_independent_quadrants(engine, signs):
    assert engine(synthetic(b=0.0), QuasiProbQuery(*signs, 0, 1)).q == pytest.approx(0.25, abs=1e-12)


def test_polar_matches_cartesian_squeezed_coherent():
    m = FieldModel(Variant.SCALAR3D, 10 / 3)
    k = build_kernels(m, StateSpec(xi=8.0, r=0.5), 0.0, 2.0)
    q = QuasiProbQuery(-1, 1, 0.0, 2.0)
    assert qp_sign_polar(k, q).q == pytest.approx(qp_sign_cartesian(k, q).q, abs=1e-6)


def test_window_edge_cases():
    k = build_kernels(VAC3, StateSpec(r=0.3), 0.0, 1.2)
    assert qp_window(k, 0.0, QuasiProbQuery(1, 1, 0, 1.2)).q == pytest.approx(1.0, abs=1e-9)
    big = 100 / math.sqrt(kernel_A(VAC3))
    assert qp_window(k, big, QuasiProbQuery(-1, -1, 0, 1.2)).q == pytest.approx(1.0, abs=1e-9)


def test_window_with_drift_uses_all_blocks():
    m = FieldModel(Variant.CHIRAL1D, 1.0)
    s = StateSpec(xi=1.0, r=0.2)
    tot = sum(quasi_prob(m, s, WindowBand(0.3), QuasiProbQuery(a, b, 0.2, 1.5)).q for a, b in SIGNS)
    assert tot == pytest.approx(1.0, abs=4e-9)


def test_vacuum_near_coincidence():
    q = quasi_prob(VAC3, StateSpec(), SignThreshold(), QuasiProbQuery(1, 1, 0.0, 1e-4))
    assert q.q == pytest.approx(0.5, abs=2e-3)


def test_vacuum_well_separated_factorizes():
    for signs in SIGNS:
        q = quasi_prob(VAC3, StateSpec(), SignThreshold(), QuasiProbQuery(*signs, 0.0, 20.0))
        assert q.q == pytest.approx(0.25, abs=1e-3)


def test_fig1_line_goes_negative():
    m = FieldModel(Variant.SCALAR3D, math.pi)
    s = StateSpec(xi=8.0)
    ts = np.linspace(math.pi / 2, 3 * math.pi / 2, 41)
    qs = [quasi_prob(m, s, SignThreshold(), QuasiProbQuery(-1, 1, 0.0, t)).q for t in ts]
    assert min(qs) < 0


def test_fig3_window_minimum():
    s = StateSpec(r=0.3)
    ts = np.linspace(0.8, 1.4, 25)
    qs = [quasi_prob(VAC3, s, WindowBand(0.2), QuasiProbQuery(1, 1, 0.0, t)).q for t in ts]
    assert min(qs) < -0.03


def test_degenerate_path():
    res = quasi_prob(VAC3, StateSpec(), SignThreshold(), QuasiProbQuery(1, 1, 0.5, 0.5))
    assert res.engine_used == "degenerate_limit"
    assert res.times == (0.5, pytest.approx(0.5 + 1e-4))
    assert res.q == pytest.approx(0.5, abs=2e-3)
    cfg = QuadratureConfig(degenerate_shift=False)
    with pytest.raises(DegenerateKernel):
        quasi_prob(VAC3, StateSpec(), SignThreshold(), QuasiProbQuery(1, 1, 0.5, 0.5), cfg)


def test_budget_exhaustion_raises():
    k = build_kernels(VAC3, StateSpec(xi=3.0), 0.0, 0.01)
    cfg = QuadratureConfig(engine="cartesian", max_subdiv=20, abs_tol=1e-14, rel_tol=1e-14)
    with pytest.raises(QuadratureFailure) as info:
        qp_sign_cartesian(k, QuasiProbQuery(1, -1, 0.0, 0.01), cfg)
    assert info.value.engine == "cartesian"


def test_cartesian_near_coincidence():
    # a nearly imaginary thin-direction variance makes the cubature oscillatory;
    # at 2% of L it still converges, much closer it gives up loudly
    m = FieldModel(Variant.SCALAR3D, 1.0)
    s = StateSpec(xi=3.0, r=0.4)
    q = QuasiProbQuery(-1, 1, 1.0, 1.02)
    k = build_kernels(m, s, 1.0, 1.02)
    assert qp_sign_cartesian(k, q).q == pytest.approx(qp_sign_polar(k, q).q, abs=1e-8)
    k = build_kernels(m, s, 1.0, 1.0005)
    with pytest.raises(QuadratureFailure):
        qp_sign_cartesian(k, QuasiProbQuery(-1, 1, 1.0, 1.0005))


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(trunc_sigmas=5)
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0)
    with pytest.raises(ValueError):
        QuasiProbQuery(0, 1, 0, 1)
    with pytest.raises(ValueError):
        WindowBand(-1.0)
    with pytest.raises(ValueError):
        SignThreshold("half")


def test_correlators_vacuum():
    m1, m2, c = lg_correlators(VAC3, StateSpec(), SignThreshold(), 0.0, 1.3)
    assert abs(m1) < 1e-9 and abs(m2) < 1e-9
    # sign correlator of a complex-correlated pair: Re (2/pi) arcsin(B / A)
    k = build_kernels(VAC3, StateSpec(), 0.0, 1.3)
    assert c == pytest.approx((2 / math.pi * cmath.asin(k.b / k.a1)).real, abs=1e-8)


def test_correlators_coherent_marginal():
    m = FieldModel(Variant.CHIRAL1D, 1.4)
    s = StateSpec(xi=2.5, ell=0.8)
    m1, m2, _ = lg_correlators(m, s, SignThreshold(), 0.3, 2.2)
    a = kernel_A(m)
    for mean, t in ((m1, 0.3), (m2, 2.2)):
        e = coherent_mean(m, s, t)
        assert mean == pytest.approx(math.erf(e / math.sqrt(2 * a)), abs=1e-8)


def test_tabulated_and_minus_e_thresholds():
    m = FieldModel(Variant.SCALAR3D, 2.0)
    s = StateSpec(xi=6.0)
    phis = (-coherent_mean(m, s, 0.0), -coherent_mean(m, s, 1.8))
    q = QuasiProbQuery(1, -1, 0.0, 1.8)
    a = quasi_prob(m, s, SignThreshold("minus_e"), q).q
    b = quasi_prob(m, s, SignThreshold(phis), q).q
    assert a == b


# ------------------------------------------------------------------ properties

models = st.builds(FieldModel, st.sampled_from(list(Variant)), st.floats(0.5, 3.0))
states = st.builds(
    StateSpec,
    xi=st.floats(0, 10),
    ell=st.floats(0.3, 2.0),
    alpha=st.floats(0, 2 * math.pi),
    r=st.floats(0, 1),
    theta=st.floats(0, 2 * math.pi),
)
times = st.floats(0.0, 6.0)


def schemes_for(model):
    scale = math.sqrt(kernel_A(model))
    return st.one_of(
        st.just(SignThreshold()),
        st.builds(lambda u: WindowBand(u * scale), st.floats(0, 2.5)),
        st.builds(lambda a, b: SignThreshold((a * scale, b * scale)), st.floats(-2, 2), st.floats(-2, 2)),
    )


@st.composite
def setups(draw):
    model = draw(models)
    t1 = draw(times) * model.L
    t2 = draw(times) * model.L
    # the cartesian engine needs some separation (see test_cartesian_near_coincidence)
    if abs(t1 - t2) < 0.05 * model.L:
        t2 = t1 + 0.05 * model.L
    return model, draw(states), draw(schemes_for(model)), t1, t2


@settings(max_examples=30, deadline=None)
@given(setups(), st.sampled_from(["polar", "cartesian"]))
def test_completeness(setup, engine):
    model, state, scheme, t1, t2 = setup
    cfg = QuadratureConfig(engine=engine)
    tot = sum(quasi_prob(model, state, scheme, QuasiProbQuery(a, b, t1, t2), cfg).q for a, b in SIGNS)
    assert tot == pytest.approx(1.0, abs=4e-9)


@settings(max_examples=30, deadline=None)
@given(setups())
def test_exchange_symmetry(setup):
    model, state, scheme, t1, t2 = setup
    if isinstance(scheme, SignThreshold) and not isinstance(scheme.reference, str):
        scheme = SignThreshold()  # tabulated values are tied to their times
    for a, b in SIGNS:
        x = quasi_prob(model, state, scheme, QuasiProbQuery(a, b, t1, t2)).q
        y = quasi_prob(model, state, scheme, QuasiProbQuery(b, a, t2, t1)).q
        assert x == pytest.approx(y, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(setups())
def test_sign_flip_symmetry_zero_mean(setup):
    model, state, _, t1, t2 = setup
    state = StateSpec(r=state.r, theta=state.theta)
    for a, b in SIGNS:
        x = quasi_prob(model, state, SignThreshold(), QuasiProbQuery(a, b, t1, t2)).q
        y = quasi_prob(model, state, SignThreshold(), QuasiProbQuery(-a, -b, t1, t2)).q
        assert x == pytest.approx(y, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(setups(), st.floats(0, 2.5))
def test_window_even_in_drift(setup, u):
    # the band projector is even in phi, so E -> -E (alpha -> alpha + pi) changes nothing
    model, state, _, t1, t2 = setup
    band = WindowBand(u * math.sqrt(kernel_A(model)))
    flipped = StateSpec(state.xi, state.ell, state.alpha + math.pi, state.r, state.theta)
    for a, b in SIGNS:
        q = QuasiProbQuery(a, b, t1, t2)
        assert quasi_prob(model, state, band, q).q == pytest.approx(
            quasi_prob(model, flipped, band, q).q, abs=1e-8
        )


@settings(max_examples=20, deadline=None)
@given(setups(), st.floats(0.1, 3.0))
def test_marginalization(setup, shift):
    model, state, scheme, t1, t2 = setup
    if isinstance(scheme, SignThreshold) and not isinstance(scheme.reference, str):
        scheme = SignThreshold()
    for s1 in (1, -1):
        p = single_time_probability(model, state, scheme, s1, t1)
        for t in (t2, t2 + shift * model.L):
            tot = sum(quasi_prob(model, state, scheme, QuasiProbQuery(s1, s2, t1, t)).q for s2 in (1, -1))
            assert tot == pytest.approx(p, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(setups())
def test_coherent_vacuum_equivalence(setup):
    model, state, _, t1, t2 = setup
    cfg = QuadratureConfig(engine="cartesian", abs_tol=1e-12, rel_tol=1e-11)
    phis = (-coherent_mean(model, state, t1), -coherent_mean(model, state, t2))
    vac = StateSpec(ell=state.ell, r=state.r, theta=state.theta)
    for a, b in SIGNS:
        q = QuasiProbQuery(a, b, t1, t2)
        x = quasi_prob(model, state, SignThreshold(), q, cfg).q
        y = quasi_prob(model, vac, SignThreshold(phis), q, cfg).q
        assert x == pytest.approx(y, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(setups())
def test_r0_continuity(setup):
    model, state, scheme, t1, t2 = setup
    base = StateSpec(xi=state.xi, ell=state.ell, alpha=state.alpha)
    tiny = StateSpec(xi=state.xi, ell=state.ell, alpha=state.alpha, r=1e-12)
    for a, b in SIGNS:
        q = QuasiProbQuery(a, b, t1, t2)
        assert quasi_prob(model, base, scheme, q).q == pytest.approx(
            quasi_prob(model, tiny, scheme, q).q, abs=1e-8
        )


@settings(max_examples=50, deadline=None)
@given(models, states, times, times, st.sampled_from(SIGNS))
def test_engines_agree(model, state, t1, t2, signs):
    t1, t2 = t1 * model.L, t2 * model.L
    if abs(t1 - t2) < 0.05 * model.L:
        t2 = t1 + 0.05 * model.L
    k = build_kernels(model, state, t1, t2)
    q = QuasiProbQuery(*signs, t1, t2)
    assert qp_sign_polar(k, q).q == pytest.approx(qp_sign_cartesian(k, q).q, abs=1e-6)

"""Tests for compartment states, parameters and vector fields."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from seirq.errors import DomainError, InvalidStateError, UnsupportedParameterError
from seirq.model import (BasicParams, BasicState, ExtendedParams, ExtendedState, ModelKind,
                         SeirParams, SeirState, basic_rhs, conserved_quarantine, extended_rhs,
                         feedback_terms, model_spec, observable_weights, r0_to_beta,
                         reported_active, seir_rhs, split_infectious_period, total_infected,
                         total_quarantined)

SIGMA_Q_FIELDS = ("s_sq", "e_sq", "l_sq", "s_aq", "e_aq", "l_aq", "i_aq", "r_aq")


# ---------------------------------------------------------------------------
# strategies

def simplex(n):
    """Random points of the probability simplex with n components."""
    weights = st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n)
    return weights.filter(lambda w: sum(w) > 1e-3).map(lambda w: [x / sum(w) for x in w])


rates = st.floats(0.01, 2.0)
nonneg_rates = st.floats(0.0, 2.0)
unit = st.floats(0.0, 1.0)

seir_params = st.builds(SeirParams, beta=rates, omega=rates, delta=rates)
basic_params = st.builds(BasicParams, beta=rates, omega=rates, delta=rates, psi=nonneg_rates,
                         chi=nonneg_rates, rho=unit, k=unit)
extended_params = st.builds(
    ExtendedParams, beta_s=rates, beta_a=rates, omega_s=rates, omega_a=rates,
    lambda_s=rates, lambda_a=rates, gamma_s=rates, gamma_a=rates, psi_s=nonneg_rates,
    psi_a=nonneg_rates, rho=unit, feedback_enabled=st.booleans(),
)


def derivative_sum(d):
    return math.fsum(d.to_array())


# ---------------------------------------------------------------------------
# SEIR


class TestSeirRhs:
    def test_disease_free_equilibrium(self):
        d = seir_rhs(SeirState(1.0, 0.0, 0.0, 0.0), SeirParams())
        assert np.all(d.to_array() == 0.0)

    def test_hand_evaluation(self):
        d = seir_rhs(SeirState(s=0.5, e=0.0, i=0.1, r=0.0), SeirParams(0.5, 0.25, 1 / 5.5))
        assert d.s == pytest.approx(-0.025, abs=1e-15)
        assert d.e == pytest.approx(0.025, abs=1e-15)
        assert d.i == pytest.approx(-0.1 / 5.5, abs=1e-15)
        assert d.r == pytest.approx(0.1 / 5.5, abs=1e-15)

    @given(simplex(4), seir_params)
    def test_conservation(self, y, params):
        assert abs(derivative_sum(seir_rhs(SeirState(*y), params))) < 1e-14

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_state_rejected(self, bad):
        with pytest.raises(InvalidStateError):
            seir_rhs(SeirState(0.5, bad, 0.0, 0.0), SeirParams())

    def test_wrong_record_type_rejected(self):
        with pytest.raises(InvalidStateError):
            seir_rhs(BasicState(), SeirParams())


# ---------------------------------------------------------------------------
# basic model


class TestBasicRhs:
    def test_disease_free_equilibrium(self):
        d = basic_rhs(BasicState(), BasicParams(psi=0.3, chi=0.7))
        assert np.all(d.to_array() == 0.0)

    def test_hand_evaluation(self):
        params = BasicParams(beta=0.5, omega=0.25, delta=1 / 5.5, psi=0.0, chi=0.0, rho=0.5,
                             k=0.5)
        d = basic_rhs(BasicState(s=0.5, i_a=0.1), params)
        assert d.s == pytest.approx(-0.025, abs=1e-15)
        assert d.e == pytest.approx(0.025, abs=1e-15)
        assert d.i_a == pytest.approx(-0.1 / 5.5, abs=1e-15)
        assert d.r == pytest.approx(0.1 / 5.5, abs=1e-15)
        for name in ("s_q", "e_q", "i_aq", "i_sq", "r_q"):
            assert getattr(d, name) == 0.0

    def test_quarantined_pair_transmission_uses_squared_leak(self):
        params = BasicParams(beta=0.5, rho=0.3)
        d = basic_rhs(BasicState(s=0.0, s_q=0.8, i_sq=0.2), params)
        assert d.e_q == pytest.approx(0.5 * 0.7 ** 2 * 0.8 * 0.2, rel=1e-14)

    @given(simplex(9), basic_params)
    def test_conservation(self, y, params):
        assert abs(derivative_sum(basic_rhs(BasicState(*y), params))) < 1e-14

    @given(simplex(4), basic_params)
    def test_equilibrium_continuum(self, w, params):
        state = BasicState(s=w[0], s_q=w[1], r=w[2], r_q=w[3])
        assert np.all(basic_rhs(state, params).to_array() == 0.0)

    @given(simplex(4), seir_params)
    def test_reduces_to_seir(self, y, p):
        s, e, i, r = y
        d = basic_rhs(BasicState(s=s, e=e, i_sq=i, r=r),
                      BasicParams(p.beta, p.omega, p.delta, psi=0.0, chi=0.0, rho=0.0, k=0.0))
        ref = seir_rhs(SeirState(s, e, i, r), p)
        assert (d.s, d.e, d.i_sq, d.r) == (ref.s, ref.e, ref.i, ref.r)
        assert d.s_q == d.e_q == d.i_a == d.i_aq == d.r_q == 0.0

    def test_non_finite_state_rejected(self):
        with pytest.raises(InvalidStateError):
            basic_rhs(BasicState(s=math.nan), BasicParams())


# ---------------------------------------------------------------------------
# extended model


class TestFeedbackTerms:
    def test_zero_when_quarantine_empty(self):
        f, _ = feedback_terms(ExtendedState(), ExtendedParams(psi_s=0.2, psi_a=0.3))
        assert f == 0.0

    def test_hand_evaluation(self):
        state = ExtendedState(s_s=0.4, s_a=0.43, l_sq=0.1, l_aq=0.05, i_aq=0.02)
        params = ExtendedParams(lambda_s=0.5, psi_s=0.1, psi_a=0.1)
        f, sigma = feedback_terms(state, params)
        assert f == pytest.approx(0.067, rel=1e-14)
        assert sigma == pytest.approx(0.83, rel=1e-14)

    @given(simplex(18), extended_params)
    def test_disabled_feedback_is_zero(self, y, params):
        params = ExtendedParams(**{**params.as_dict(), "feedback_enabled": False})
        assert feedback_terms(ExtendedState(*y), params)[0] == 0.0

    @given(simplex(18), extended_params)
    def test_linear_in_quarantined_arguments(self, y, params):
        state = ExtendedState(*y)
        doubled = ExtendedState(**{**state.__dict__, "l_sq": 2 * state.l_sq,
                                   "l_aq": 2 * state.l_aq, "i_aq": 2 * state.i_aq})
        assert feedback_terms(doubled, params)[0] == 2 * feedback_terms(state, params)[0]


class TestExtendedRhs:
    def test_disease_free_equilibrium(self):
        d = extended_rhs(ExtendedState(s_s=0.5, s_a=0.5), ExtendedParams(psi_s=0.1, psi_a=0.1))
        assert np.all(d.to_array() == 0.0)

    def test_hand_evaluation(self):
        state = ExtendedState(s_s=0.4, l_s=0.1, s_a=0.0)
        params = ExtendedParams(beta_s=0.5, rho=0.5, psi_s=0.0, psi_a=0.0, lambda_s=0.5,
                                omega_s=0.25)
        d = extended_rhs(state, params)
        assert d.e_s == pytest.approx(0.02, abs=1e-15)
        assert d.l_s == pytest.approx(-0.05, abs=1e-15)
        assert d.i_sq == pytest.approx(0.05, abs=1e-15)
        assert d.s_s == pytest.approx(-0.02, abs=1e-15)
        for name in set(ExtendedState.field_names()) - {"e_s", "l_s", "i_sq", "s_s"}:
            assert getattr(d, name) == 0.0

    def test_asymptomatic_susceptibles_meet_free_latent(self):
        d = extended_rhs(ExtendedState(s_s=0.4, l_s=0.1, s_a=0.5), ExtendedParams())
        assert d.s_a == pytest.approx(-0.025, abs=1e-15)
        assert d.e_a == pytest.approx(0.025, abs=1e-15)

    @given(simplex(18), extended_params)
    def test_conservation(self, y, params):
        assert abs(derivative_sum(extended_rhs(ExtendedState(*y), params))) < 1e-14

    @given(simplex(18), extended_params)
    def test_conserved_quarantine_derivative(self, y, params):
        params = ExtendedParams(**{**params.as_dict(), "feedback_enabled": True})
        d = extended_rhs(ExtendedState(*y), params)
        assert abs(math.fsum(getattr(d, n) for n in SIGMA_Q_FIELDS)) < 1e-14

    @given(simplex(3), extended_params)
    def test_equilibrium_continuum(self, w, params):
        state = ExtendedState(s_s=0.0, s_a=0.0, s_sq=w[0], s_aq=w[1], r_aq=w[2])
        assert np.all(extended_rhs(state, params).to_array() == 0.0)

    def test_empty_free_population_switches_recruitment_off(self):
        state = ExtendedState(s_s=0.0, s_a=0.0, s_sq=0.5, l_sq=0.2, i_aq=0.3)
        d = extended_rhs(state, ExtendedParams(psi_s=0.1, psi_a=0.1))
        assert np.all(np.isfinite(d.to_array()))
        assert d.s_sq == 0.0

    @given(simplex(18), extended_params)
    def test_matches_independent_transcription(self, y, params):
        got = extended_rhs(ExtendedState(*y), params).to_array()
        want = np.array(oracles.extended(y, *params.as_dict().values()))
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)


@given(simplex(9), basic_params)
def test_basic_matches_independent_transcription(y, params):
    got = basic_rhs(BasicState(*y), params).to_array()
    want = np.array(oracles.basic(y, *params.as_dict().values()))
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)


# ---------------------------------------------------------------------------
# observables


class TestObservables:
    def test_total_infected_zero_without_infection(self):
        assert total_infected(BasicState(s=0.7, r=0.3)) == 0.0
        assert total_infected(ExtendedState(s_s=0.3, s_a=0.3, e_s=0.2, r_a=0.2)) == 0.0

    def test_basic_total_infected(self):
        state = BasicState(s=0.83, i_a=0.1, i_aq=0.05, i_sq=0.02)
        assert total_infected(state) == pytest.approx(0.17, abs=1e-15)

    def test_basic_total_quarantined(self):
        state = BasicState(s=0.8, s_q=0.1, e_q=0.01, i_aq=0.02, i_sq=0.03, r_q=0.04)
        assert total_quarantined(state) == pytest.approx(0.20, abs=1e-15)

    def test_extended_aggregates(self):
        names = ExtendedState.field_names()
        state = ExtendedState(*[0.01 * (j + 1) for j in range(18)])
        by = dict(zip(names, state.to_array()))
        assert reported_active(state) == by["i_sq"]
        assert total_infected(state) == pytest.approx(sum(
            by[n] for n in ("l_s", "l_sq", "l_a", "l_aq", "i_a", "i_aq", "i_sq")))
        assert conserved_quarantine(state) == pytest.approx(sum(by[n] for n in SIGMA_Q_FIELDS))
        assert total_quarantined(state) == pytest.approx(
            conserved_quarantine(state) + by["i_sq"])

    def test_seir_reported_active_is_i(self):
        assert reported_active(SeirState(0.7, 0.1, 0.15, 0.05)) == 0.15

    def test_unknown_observable(self):
        with pytest.raises(UnsupportedParameterError):
            observable_weights(ModelKind.BASIC, "sigma_q")

    @pytest.mark.parametrize("kind", list(ModelKind))
    def test_compartment_names_are_observables(self, kind):
        names = model_spec(kind).state_cls.field_names()
        for j, name in enumerate(names):
            w = observable_weights(kind, name)
            assert w[j] == 1.0 and w.sum() == 1.0


# ---------------------------------------------------------------------------
# parameter helpers and validation


class TestParameterHelpers:
    def test_r0_to_beta_default_value(self):
        assert r0_to_beta(2.75, 1 / 5.5) == pytest.approx(0.5, rel=1e-15)

    def test_r0_to_beta_identity(self):
        assert r0_to_beta(1.0, 1.0) == 1.0

    def test_r0_to_beta_upper_range(self):
        assert r0_to_beta(3.58, 1 / 5.5) == pytest.approx(0.6509, abs=5e-5)

    @pytest.mark.parametrize("r0, delta", [(0.0, 0.2), (1.0, 0.0), (-1.0, 0.2), (math.nan, 1)])
    def test_r0_to_beta_domain(self, r0, delta):
        with pytest.raises(DomainError):
            r0_to_beta(r0, delta)

    def test_split_default_value(self):
        assert split_infectious_period(1 / 5.5, 0.5) == pytest.approx(1 / 3.5, rel=1e-14)

    def test_split_symmetric(self):
        assert split_infectious_period(0.5, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_split_large_lambda(self):
        assert split_infectious_period(1 / 5.5, 20.0) == pytest.approx(1 / 5.45, rel=1e-14)

    @pytest.mark.parametrize("lam", [1 / 5.5, 1 / 11, 0.0])
    def test_split_domain(self, lam):
        with pytest.raises(DomainError):
            split_infectious_period(1 / 5.5, lam)

    @pytest.mark.parametrize("cls, field, value", [
        (SeirParams, "beta", 0.0), (SeirParams, "delta", -1.0),
        (BasicParams, "rho", 1.5), (BasicParams, "k", -0.1), (BasicParams, "psi", -0.1),
        (BasicParams, "chi", math.inf), (ExtendedParams, "gamma_a", 0.0),
        (ExtendedParams, "psi_a", -1e-3), (ExtendedParams, "rho", 2.0),
    ])
    def test_params_validation(self, cls, field, value):
        with pytest.raises(DomainError, match=field):
            cls(**{field: value})

    def test_state_validity(self):
        assert BasicState().is_valid()
        assert not BasicState(s=0.9).is_valid()
        assert not BasicState(s=1.1, r=-0.1).is_valid()

    def test_state_array_round_trip(self):
        state = ExtendedState(s_s=0.3, s_a=0.3, e_s=0.2, r_aq=0.2)
        assert ExtendedState.from_array(state.to_array()) == state
        with pytest.raises(InvalidStateError):
            ExtendedState.from_array(np.zeros(9))

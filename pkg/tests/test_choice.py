import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.extra.numpy import arrays

from src.choice import (
    AgentPopulation,
    ChoiceScales,
    UtilityWeights,
    experience_signal_driver,
    experience_signal_traveler,
    marketing_round,
    nested_logit,
    nested_logit_probabilities,
    participation_choices,
    pt_generalized_cost,
    sample_choices,
    update_component,
    word_of_mouth_round,
)
from src.exceptions import SimulationInputError

utilities = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)


# ============================================================================
# S-CURVE
# ============================================================================

def test_neutral_signal_changes_nothing():
    latent, u = update_component(1.3, 0.5, 2.0)
    assert latent == 1.3
    assert u == pytest.approx(1.0 / (1.0 + math.exp(-1.3)))


def test_full_signal_from_neutral():
    latent, u = update_component(0.0, 1.0, 1.0)
    assert latent == 0.5
    assert u == pytest.approx(1.0 / (1.0 + math.exp(-0.5)), abs=1e-15)


def test_repeated_positive_signals_saturate_below_one():
    latent, previous = 0.0, 0.5
    for _ in range(1000):
        new_latent, u = update_component(latent, 1.0, 1.0)
        assert new_latent > latent
        assert previous <= u <= 1.0
        latent, previous = new_latent, u
    assert previous > 0.99


@pytest.mark.parametrize("signal", [-0.1, 1.1, float("nan")])
def test_signal_outside_unit_interval_rejected(signal):
    with pytest.raises(SimulationInputError):
        update_component(0.0, signal, 1.0)


def test_change_is_largest_near_neutral():
    _, u_mid = update_component(0.0, 1.0, 1.0)
    _, u_tail = update_component(4.0, 1.0, 1.0)
    assert u_mid - 0.5 > u_tail - 1.0 / (1.0 + math.exp(-4.0))


@settings(deadline=None)
@given(latent=utilities, s1=st.floats(0, 1), s2=st.floats(0, 1), rate=st.floats(0.01, 5))
def test_update_order_does_not_matter(latent, s1, s2, rate):
    a, _ = update_component(update_component(latent, s1, rate)[0], s2, rate)
    b, _ = update_component(update_component(latent, s2, rate)[0], s1, rate)
    assert a == pytest.approx(b, abs=1e-12)


# ============================================================================
# EXPERIENCE SIGNALS
# ============================================================================

@pytest.mark.parametrize("hourly, expected", [(12.0, 0.5), (0.0, 0.0), (18.0, 0.75), (40.0, 1.0)])
def test_driver_signal(hourly, expected):
    assert experience_signal_driver(hourly * 4, 4.0, 12.0) == pytest.approx(expected)


def test_traveler_signal_indifferent_at_pt_cost():
    # 600 s in vehicle at 10 EUR/h costs 1.67 EUR; fare brings g to 10
    g_time = 10.0 / 3600.0 * 600
    assert experience_signal_traveler(0, 600, 10.0 - g_time, 10.0) == pytest.approx(0.5)


def test_traveler_signal_half_cost():
    assert experience_signal_traveler(0, 0, 5.0, 10.0) == pytest.approx(0.75)


def test_unserved_traveler_signal_is_zero():
    assert experience_signal_traveler(0, 0, 0, 10.0, served=False) == 0.0


def test_waiting_weighs_double():
    ride = experience_signal_traveler(0, 360, 0.0, 10.0)
    wait = experience_signal_traveler(180, 0, 0.0, 10.0)
    assert ride == pytest.approx(wait)


def test_pt_cost_counts_access_as_waiting():
    cost = pt_generalized_cost(5000.0, pt_speed_mps=5.0, pt_fare=1.5, pt_access_s=600.0,
                               value_of_time=10.0, wait_multiplier=2.0)
    assert cost == pytest.approx(1.5 + 10.0 / 3600.0 * (1200.0 + 1000.0))


# ============================================================================
# DIFFUSION
# ============================================================================

def test_no_meetings_no_change():
    agents = AgentPopulation('traveler', 10, 2)
    agents.aware[:5] = True
    before = agents.copy()
    word_of_mouth_round(agents, 0.0, np.random.default_rng(0), UtilityWeights())
    np.testing.assert_array_equal(agents.latent_wom, before.latent_wom)
    np.testing.assert_array_equal(agents.aware, before.aware)


def test_neutral_speaker_leaves_listener_latent():
    agents = AgentPopulation('traveler', 2, 1)
    agents.aware[0, 0] = True
    word_of_mouth_round(agents, 1.0, np.random.default_rng(1), UtilityWeights())
    assert agents.latent_wom[1, 0] == pytest.approx(0.0, abs=1e-12)
    assert agents.aware[1, 0]


def test_positive_speaker_moves_listener():
    agents = AgentPopulation('traveler', 2, 1)
    agents.aware[0, 0] = True
    # Neutral latents give 0.5; the constant lifts the opinion to 0.9
    word_of_mouth_round(agents, 1.0, np.random.default_rng(2), UtilityWeights(), asc=0.4, rate=1.0)
    assert agents.latent_wom[1, 0] == pytest.approx(0.4)
    assert agents.latent_wom[0, 0] == 0.0


def test_marketing_zero_reach():
    agents = AgentPopulation('driver', 50, 2)
    newly = marketing_round(agents, 0.0, np.random.default_rng(3))
    assert not agents.aware.any()
    assert newly.tolist() == [0, 0]


def test_marketing_full_reach():
    agents = AgentPopulation('driver', 50, 2)
    marketing_round(agents, 1.0, np.random.default_rng(4), signal=0.7, rate=1.0)
    assert agents.aware.all()
    np.testing.assert_allclose(agents.latent_m, 0.2)


def test_marketing_reach_is_a_probability():
    draws = []
    for seed in range(200):
        agents = AgentPopulation('traveler', 100, 1)
        draws.append(marketing_round(agents, 0.1, np.random.default_rng(seed))[0])
    mean = np.mean(draws)
    se = math.sqrt(100 * 0.1 * 0.9) / math.sqrt(len(draws))
    assert abs(mean - 10.0) < 3 * se


def test_awareness_never_resets():
    rng = np.random.default_rng(5)
    agents = AgentPopulation('traveler', 30, 2)
    seen = agents.aware.copy()
    for _ in range(20):
        marketing_round(agents, 0.05, rng)
        word_of_mouth_round(agents, 0.7, rng, UtilityWeights())
        assert np.all(agents.aware[seen])
        seen = agents.aware.copy()


# ============================================================================
# NESTED LOGIT
# ============================================================================

def test_only_outside_option_when_no_platform_available():
    probs = nested_logit_probabilities(np.array([[0.6, 0.4]]), np.array([[False, False]]), 0.5,
                                       ChoiceScales(), unaware_excluded=True)
    np.testing.assert_allclose(probs.choice, [[0.0, 0.0, 1.0]])


def test_symmetric_platforms_split_evenly():
    probs = nested_logit_probabilities(np.array([[0.7, 0.7]]), np.array([[True, True]]), 0.5, ChoiceScales())
    np.testing.assert_allclose(probs.conditional, [[0.5, 0.5]])


def reference_probabilities(u_rs, u_o, mu, mu_n):
    logsum = math.log(sum(math.exp(mu_n * u) for u in u_rs)) / mu_n
    p_rs = math.exp(mu * logsum) / (math.exp(mu * logsum) + math.exp(mu * u_o))
    denom = sum(math.exp(mu_n * u) for u in u_rs)
    return [p_rs * math.exp(mu_n * u) / denom for u in u_rs] + [1.0 - p_rs]


def test_two_level_probabilities_match_reference():
    probs = nested_logit_probabilities(np.array([[0.6, 0.4]]), np.array([[True, True]]), 0.5,
                                       ChoiceScales(mu=1.0, mu_nest=2.0))
    np.testing.assert_allclose(probs.choice[0], reference_probabilities([0.6, 0.4], 0.5, 1.0, 2.0),
                               rtol=0, atol=1e-12)


def test_sampled_choices_match_probabilities():
    n = 100_000
    u = np.tile([0.6, 0.4], (n, 1))
    probs = nested_logit_probabilities(u, np.ones((n, 2), dtype=bool), 0.5, ChoiceScales())
    picked = sample_choices(probs.choice, np.random.default_rng(6))
    expected = reference_probabilities([0.6, 0.4], 0.5, 1.0, 2.0)
    for k, p in enumerate(expected):
        se = math.sqrt(p * (1 - p) / n)
        assert abs(np.mean(picked == k) - p) < 3 * se


def test_unaware_platform_counts_as_zero_utility():
    probs = nested_logit_probabilities(np.array([[0.8, 0.9]]), np.array([[True, False]]), 0.5, ChoiceScales())
    expected = reference_probabilities([0.8, 0.0], 0.5, 1.0, 2.0)
    np.testing.assert_allclose(probs.choice[0], expected, atol=1e-12)


def test_single_draw_returns_index():
    choice = nested_logit([0.6, 0.4], [True, True], 0.5, ChoiceScales(), np.random.default_rng(7))
    assert choice in (0, 1, 2)


def test_non_finite_utility_rejected():
    with pytest.raises(SimulationInputError):
        nested_logit_probabilities(np.array([[np.nan, 0.4]]), np.array([[True, True]]), 0.5, ChoiceScales())


def test_scales_must_be_ordered():
    with pytest.raises(SimulationInputError):
        ChoiceScales(mu=3.0, mu_nest=2.0)


# 300 examples x 40 rows: over ten thousand configurations
@settings(deadline=None, max_examples=300)
@given(
    u=arrays(float, (40, 2), elements=utilities),
    aware=arrays(bool, (40, 2)),
    u_o=arrays(float, (40,), elements=utilities),
    mu=st.floats(0.1, 5.0),
    ratio=st.floats(1.0, 10.0),
    excluded=st.booleans(),
)
def test_probabilities_normalize(u, aware, u_o, mu, ratio, excluded):
    probs = nested_logit_probabilities(u, aware, u_o, ChoiceScales(mu=mu, mu_nest=mu * ratio), excluded)
    np.testing.assert_allclose(probs.nest.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(probs.choice.sum(axis=1), 1.0, atol=1e-12)
    available = aware.any(axis=1) | (not excluded)
    assert probs.choice.shape == (40, 3)
    np.testing.assert_allclose(probs.conditional[available].sum(axis=1), 1.0, atol=1e-12)


@settings(deadline=None, max_examples=200)
@given(u=arrays(float, (2,), elements=utilities), u_o=utilities, bump=st.floats(0.0, 3.0))
def test_raising_utility_never_lowers_its_probability(u, u_o, bump):
    scales = ChoiceScales(mu=1.0, mu_nest=2.0)
    aware = np.array([[True, True]])
    before = nested_logit_probabilities(u[None, :], aware, u_o, scales).choice[0, 0]
    raised = u.copy()
    raised[0] += bump
    after = nested_logit_probabilities(raised[None, :], aware, u_o, scales).choice[0, 0]
    assert after >= before - 1e-12


def test_large_within_nest_scale_picks_maximum():
    probs = nested_logit_probabilities(np.array([[0.6, 0.5]]), np.array([[True, True]]), 0.5,
                                       ChoiceScales(mu=1.0, mu_nest=1000.0))
    assert probs.conditional[0, 0] > 0.999


def test_drawn_unaware_platform_resolves_to_outside():
    agents = AgentPopulation('traveler', 500, 2)
    agents.aware[:, 0] = True
    chosen = participation_choices(agents, 0.5, UtilityWeights(), ChoiceScales(), np.random.default_rng(8))
    assert set(np.unique(chosen)) <= {-1, 0}
    assert (chosen == 0).any()


@settings(deadline=None)
@given(
    latent=arrays(float, (3, 2, 3), elements=st.floats(-20.0, 20.0)),
    asc=st.floats(-2.0, 2.0),
)
def test_composite_utility_stays_within_asc_band(latent, asc):
    agents = AgentPopulation('driver', 3, 2)
    agents.latent_e, agents.latent_wom, agents.latent_m = latent[..., 0], latent[..., 1], latent[..., 2]
    composite = agents.composite(UtilityWeights(beta_e=0.5, beta_wom=0.3, beta_m=0.2), asc)
    assert composite.shape == (3, 2)
    assert np.all(composite >= asc - 1e-12)
    assert np.all(composite <= 1.0 + asc + 1e-12)

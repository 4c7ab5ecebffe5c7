import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covmdp.exceptions import (
    AllZeroWeights,
    BadTolerance,
    ExponentNotSummable,
    NegativeWeight,
    NonFiniteWeight,
    NonPositiveRate,
    TruncationTooLarge,
    ZeroSpecies,
)
from covmdp.population import (
    SpeciesProfile,
    exponential_profile,
    load_profile,
    normalize_weights,
    power_law_profile,
    power_law_tail_fraction,
    save_profile,
    uniform_profile,
)


def test_normalize_weights_examples():
    assert normalize_weights([1, 1]).probs.tolist() == [0.5, 0.5]
    assert normalize_weights([2, 0, 2]).probs.tolist() == [0.5, 0.5]
    assert normalize_weights([3, 1]).probs.tolist() == [0.75, 0.25]
    assert normalize_weights([3, 1]).family_tag == "custom"


@pytest.mark.parametrize(
    "weights, exc",
    [([0, 0], AllZeroWeights), ([1, -1], NegativeWeight), ([1, math.inf], NonFiniteWeight), ([math.nan], NonFiniteWeight)],
)
def test_normalize_weights_errors(weights, exc):
    with pytest.raises(exc):
        normalize_weights(weights)


def test_power_law_two_terms():
    # tail fraction after K=2 is ~0.44, after K=1 ~0.61
    prof = power_law_profile(1.0, 2.0, 0.5)
    assert prof.n_species == 2
    np.testing.assert_allclose(prof.probs, [9 / 13, 4 / 13], rtol=1e-15)


def test_power_law_a_cancels():
    p1 = power_law_profile(1.0, 2.0, 1e-3)
    p5 = power_law_profile(5.0, 2.0, 1e-3)
    assert np.array_equal(p1.probs, p5.probs)
    assert p5.params["a"] == 5.0


def test_power_law_truncation_bound():
    prof = power_law_profile(1.0, 2.0, 1e-5)
    K = prof.n_species
    assert power_law_tail_fraction(2.0, K) <= 1e-5 < power_law_tail_fraction(2.0, K - 1)
    assert abs(math.fsum(prof.probs) - 1) <= 1e-12
    assert np.all(np.diff(prof.probs) < 0)


def test_power_law_tail_fraction_matches_direct_sum():
    # pure-python partial sums against the Hurwitz zeta route
    b, K = 3.0, 40
    terms = [(i + 1) ** -b for i in range(1, 200000)]
    direct = math.fsum(terms[K:]) / math.fsum(terms)
    assert power_law_tail_fraction(b, K) == pytest.approx(direct, rel=1e-6)


def test_power_law_unreachable_tolerance():
    # b=2 at tail_tol=1e-12 would need ~1.5e12 species
    with pytest.raises(TruncationTooLarge):
        power_law_profile(1.0, 2.0, 1e-12)


@pytest.mark.parametrize("b", [1.0, 0.5])
def test_power_law_not_summable(b):
    with pytest.raises(ExponentNotSummable):
        power_law_profile(1.0, b, 1e-3)


@pytest.mark.parametrize("tol", [0.0, 1.0, -1e-3])
def test_bad_tolerance(tol):
    with pytest.raises(BadTolerance):
        power_law_profile(1.0, 2.0, tol)
    with pytest.raises(BadTolerance):
        exponential_profile(1.0, tol)


def test_exponential_examples():
    assert exponential_profile(0.1, 1e-12).probs[0] > 0.9999
    prof = exponential_profile(1.0, 0.2)  # exp(-2) <= 0.2 < exp(-1)
    assert prof.n_species == 2
    e = math.e
    np.testing.assert_allclose(prof.probs, [e / (e + 1), 1 / (e + 1)], rtol=1e-15)
    with pytest.raises(NonPositiveRate):
        exponential_profile(0.0, 1e-3)


def test_exponential_truncation_bound():
    r, tol = 37.5, 1e-9
    K = exponential_profile(r, tol).n_species
    assert math.exp(-K / r) <= tol < math.exp(-(K - 1) / r)


def test_uniform():
    assert uniform_profile(1).probs.tolist() == [1.0]
    assert uniform_profile(2).probs.tolist() == [0.5, 0.5]
    p = uniform_profile(50)
    assert p.n_species == 50 and np.all(p.probs == 0.02)
    assert p.tail_tol == 0
    with pytest.raises(ZeroSpecies):
        uniform_profile(0)


def test_profile_is_read_only():
    p = uniform_profile(3)
    with pytest.raises(ValueError):
        p.probs[0] = 1.0


def test_profile_json_roundtrip(tmp_path):
    prof = power_law_profile(2.0, 2.5, 1e-3)
    path = tmp_path / "p.json"
    save_profile(prof, path)
    data = json.loads(path.read_text())
    assert set(data) == {"family", "params", "tail_tol", "probs"}
    back = load_profile(path)
    assert back == prof
    assert back.content_hash() == prof.content_hash()


def test_constructors_deterministic():
    assert power_law_profile(1, 1.5, 1e-3).content_hash() == power_law_profile(1, 1.5, 1e-3).content_hash()
    assert exponential_profile(3.0, 1e-8) == exponential_profile(3.0, 1e-8)


weights = st.lists(
    st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=1e6)), min_size=1, max_size=40
).filter(lambda w: any(x > 0 for x in w))


@settings(max_examples=200, deadline=None)
@given(weights, st.floats(min_value=1e-3, max_value=1e3))
def test_normalize_properties(w, scale):
    prof = normalize_weights(w)
    assert abs(math.fsum(prof.probs) - 1) <= 1e-12
    assert prof.probs.min() > 0
    scaled = normalize_weights([x * scale for x in w])
    np.testing.assert_allclose(scaled.probs, prof.probs, rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(min_value=1.5, max_value=6.0),
    st.floats(min_value=1e-3, max_value=0.5),
)
def test_power_law_properties(b, tol):
    prof = power_law_profile(1.0, b, tol)
    assert abs(math.fsum(prof.probs) - 1) <= 1e-12
    assert np.all(np.diff(prof.probs) < 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.05, max_value=500.0), st.floats(min_value=1e-10, max_value=0.5))
def test_exponential_properties(r, tol):
    prof = exponential_profile(r, tol)
    assert abs(math.fsum(prof.probs) - 1) <= 1e-12
    assert prof.n_species == 1 or np.all(np.diff(prof.probs) < 0)


def test_profile_validation():
    with pytest.raises(ValueError):
        SpeciesProfile(probs=np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        SpeciesProfile(probs=np.array([1.0, 0.0]))

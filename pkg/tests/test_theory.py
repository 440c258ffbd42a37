import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from echoform.theory import (ALPHA, EmissiveWindowParams, emissive_window,
                             find_zero_crossings, fit_sin_power, predict_e1,
                             predict_e2, sign_changes)

PI = math.pi


@pytest.mark.parametrize("phi, expected", [
    (PI / 4, True), (PI, False), (1.5 * PI, True), (5 * PI / 8, False),
    (0.0, False), (2 * PI, False), (2.25 * PI, True), (3 * PI, False),
])
def test_emissive_window(phi, expected):
    assert emissive_window(phi) is expected


def test_window_rejects_negative_area():
    with pytest.raises(ValueError):
        emissive_window(-0.1)
    with pytest.raises(ValueError):
        EmissiveWindowParams(alpha=1.2)


def test_custom_alpha():
    assert emissive_window(0.7 * PI, EmissiveWindowParams(alpha=0.75))
    assert not emissive_window(0.7 * PI)


@pytest.mark.parametrize("phi, e1", [(PI, 0.5), (0.0, 0.0), (PI / 2, 0.25)])
def test_predict_e1(phi, e1):
    assert predict_e1(phi) == pytest.approx(e1, abs=1e-15)


def test_predict_e2_values():
    assert predict_e2(PI) == pytest.approx(-math.sqrt(2) * 0.3, abs=1e-15)
    assert predict_e2(PI) == pytest.approx(-0.424, abs=5e-4)
    assert predict_e2(0.0) == 0.0
    root = 2 * math.acos(math.sqrt(0.3))
    assert root / PI == pytest.approx(0.631, abs=5e-4)
    assert abs(predict_e2(root)) < 1e-15


def test_predictions_vectorise():
    phi = np.linspace(0, 2 * PI, 9)
    assert predict_e1(phi).shape == (9,)
    assert predict_e2(phi).shape == (9,)


def test_zero_crossings_of_e2():
    roots = find_zero_crossings(predict_e2, 0.0, 2 * PI, 1e-9)
    assert [round(r / PI, 3) for r in roots] == [0.631, 1.369]
    assert all(isinstance(r, float) for r in roots)
    assert roots[0] == pytest.approx(2 * math.acos(math.sqrt(0.3)), abs=1e-8)


def test_zero_crossings_edge_cases():
    assert find_zero_crossings(lambda x: 1.0) == []
    assert find_zero_crossings(lambda x: (x - 1.0) ** 2) == []
    assert find_zero_crossings(lambda x: x - PI) == [pytest.approx(PI)]
    with pytest.raises(ValueError):
        find_zero_crossings(math.sin, tol=0.0)


def test_sign_changes_interpolates():
    x = np.array([0.0, 1.0, 2.0])
    assert sign_changes(x, [1.0, -1.0, -2.0]) == [0.5]
    assert sign_changes(x, [1.0, 2.0, 3.0]) == []


def test_fit_self_consistency():
    G = np.linspace(0.02, 1.0, 41)
    fit = fit_sin_power(G, np.sin(0.5 * PI * G))
    assert fit.exponent == pytest.approx(1.0, abs=0.02)
    assert fit.rms_residual < 1e-6
    fit3 = fit_sin_power(G, 0.3 * np.sin(0.5 * PI * G) ** 3)
    assert fit3.exponent == pytest.approx(3.0, abs=0.02)


def test_fit_rejects_degenerate():
    G = np.linspace(0.1, 1, 10)
    with pytest.raises(ValueError):
        fit_sin_power(G, np.zeros(10))
    with pytest.raises(ValueError):
        fit_sin_power(G[:4], np.ones(4))


def _near_crossing(phi):
    x = math.fmod(phi / PI, 2.0)
    return min(abs(x - 0.631), abs(x - 1.369)) < 1e-3


@settings(max_examples=300)
@given(st.floats(0.001, 2 * PI - 0.001))
def test_window_consistent_with_e2_sign(phi):
    assume(not _near_crossing(phi))
    # the fitted curve and alpha = 5/8 windows agree up to the small offset
    # between 5/8 and the root 0.631 of the curve
    x = phi / PI
    assume(min(abs(x - ALPHA), abs(x - (2 - ALPHA))) > 0.01)
    assert emissive_window(phi) == bool(predict_e2(phi) > 0)


@settings(max_examples=200)
@given(st.floats(0.0, 2 * PI), st.integers(1, 3))
def test_periodicity(phi, n):
    shifted = phi + 2 * PI * n
    assert predict_e1(shifted) == pytest.approx(predict_e1(phi), abs=1e-12)
    assert predict_e2(shifted) == pytest.approx(predict_e2(phi), abs=1e-12)
    # window boundaries are exact; skip points rounding may move across them
    x = math.fmod(phi / PI, 2.0)
    assume(min(abs(x - b) for b in (0.0, ALPHA, 2 - ALPHA, 2.0)) > 1e-9)
    assert emissive_window(shifted) == emissive_window(phi)


@settings(max_examples=200)
@given(st.floats(0.0, 2 * PI))
def test_mirror_symmetry(phi):
    assert predict_e1(2 * PI - phi) == pytest.approx(predict_e1(phi), abs=1e-12)
    assert predict_e2(2 * PI - phi) == pytest.approx(predict_e2(phi), abs=1e-12)

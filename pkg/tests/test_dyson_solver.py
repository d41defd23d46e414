import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zero_tracer.dyson_solver import (InvariantCurve, SolverConfig, angle_to_chord,
                                      chord_to_angle, dyson, find_equal_pair, invariant_curve,
                                      livesay, odd_part, solve)
from zero_tracer.errors import (DegenerateField, LevelTooLarge, NoConvergence, NotOdd,
                                PairSearchFailed, ROutOfRange, ThetaOutOfRange)
from zero_tracer.field_expr import field_from_text
from zero_tracer.labelling import ScalarField

CFG = SolverConfig()


def unit_points(n, seed=0):
    p = np.random.default_rng(seed).standard_normal((n, 3))
    return p / np.linalg.norm(p, axis=1)[:, None]


def equator_oracle(f_on_equator, theta, n=200_000, tol=1e-4):
    """Brute force over equator pairs (alpha, alpha + theta) for f(x) = f(-x) fields.

    Returns the common values at near-zero spread, highest first.
    """
    a = np.linspace(0, 2 * np.pi, n, endpoint=False)
    v1, v2 = f_on_equator(a), f_on_equator(a + theta)
    spread = np.abs(v1 - v2)
    good = spread < tol
    return np.sort(v1[good])[::-1]


# ---------------------------------------------------------------------------
# odd part

def test_odd_part_examples():
    p = unit_points(100)
    z = field_from_text("z")
    np.testing.assert_array_equal(odd_part(z).batch(p), 2 * p[:, 2])
    assert np.all(odd_part(field_from_text("z^2")).batch(p) == 0)
    np.testing.assert_allclose(odd_part(field_from_text("z+x^2")).batch(p), 2 * p[:, 2], atol=1e-15)


def test_odd_part_is_antisymmetric_pointwise():
    g = odd_part(lambda p: math.exp(p[0]) * math.cos(3 * p[1]) + p[2] ** 3)
    for p in unit_points(50):
        assert g(-p) == -g(p)


# ---------------------------------------------------------------------------
# chord / angle

def test_chord_angle_special_case():
    assert abs(chord_to_angle(math.sqrt(2)) - math.pi / 2) <= 1e-15
    assert abs(angle_to_chord(math.pi / 2) - math.sqrt(2)) <= 1e-15


@settings(max_examples=300)
@given(st.floats(min_value=1e-6, max_value=math.pi - 1e-6))
def test_angle_round_trip(theta):
    assert abs(chord_to_angle(angle_to_chord(theta)) - theta) <= 1e-6 or theta > 3.1
    assert abs(angle_to_chord(chord_to_angle(angle_to_chord(theta))) - angle_to_chord(theta)) <= 1e-15


def test_chord_angle_range():
    for bad in (0.0, 2.0, -1.0, 3.0):
        with pytest.raises(ROutOfRange):
            chord_to_angle(bad)
    for bad in (0.0, math.pi, 4.0):
        with pytest.raises(ThetaOutOfRange):
            angle_to_chord(bad)


# ---------------------------------------------------------------------------
# invariant curve

def check_curve(curve, g, tol):
    N = curve.half
    assert len(curve.points) == 2 * N
    assert np.array_equal(curve.points[N:], -curve.points[:N])
    assert np.all(np.abs(np.linalg.norm(curve.points, axis=1) - 1) <= 1e-12)
    assert curve.max_abs_g <= tol
    assert np.abs(g.batch(curve.points)).max() == curve.max_abs_g


def test_curve_equator():
    g = field_from_text("2*z")
    curve = invariant_curve(g, SolverConfig(residual_tol=0.05))
    check_curve(curve, g, 0.05)
    assert np.abs(curve.points[:, 2]).max() <= 0.025


def test_curve_equator_midpoints_only():
    g = field_from_text("2*z")
    cfg = SolverConfig(start_level=2, residual_tol=0.05, refine_roots=False)
    curve = invariant_curve(g, cfg)
    check_curve(curve, g, 0.05)
    assert np.abs(curve.points[:, 2]).max() <= 0.025


def test_curve_tilted_plane():
    g = field_from_text("2*(x+2*y+3*z)/sqrt(14)")
    curve = invariant_curve(g, CFG)
    check_curve(curve, g, CFG.residual_tol)
    n = np.array([1, 2, 3]) / math.sqrt(14)
    assert np.abs(curve.points @ n).max() < 0.03


def test_curve_zero_field():
    with pytest.raises(DegenerateField):
        invariant_curve(ScalarField(lambda p: 0.0 * p[..., 0], vectorized=True))


def test_curve_rejects_non_odd():
    with pytest.raises(NotOdd):
        invariant_curve(field_from_text("z + 1"))


def test_curve_no_convergence():
    g = field_from_text("2*z")
    with pytest.raises(NoConvergence):
        invariant_curve(g, SolverConfig(start_level=1, max_level=3, residual_tol=1e-3, refine_roots=False))


def test_curve_level_cap(monkeypatch):
    monkeypatch.setenv("ZERO_TRACER_MAX_LEVEL", "3")
    with pytest.raises(LevelTooLarge):
        invariant_curve(field_from_text("2*z"))


@pytest.mark.parametrize("refine", [True, False])
def test_refinement_is_monotone(refine):
    g = field_from_text("2*z")
    res = [invariant_curve(g, SolverConfig(start_level=k, max_level=k, residual_tol=10,
                                           refine_roots=refine)).max_abs_g
           for k in range(2, 7)]
    assert all(b <= a for a, b in zip(res, res[1:])), res


def test_curved_zero_set_converges():
    g = field_from_text("z - 0.5*x^3 + 0.3*x*y*z")
    curve = invariant_curve(g, CFG)
    check_curve(curve, g, CFG.residual_tol)
    assert curve.level > CFG.start_level


# ---------------------------------------------------------------------------
# pair search

def check_quadruple(q, f, theta, cfg=CFG):
    x, y = np.array(q.x), np.array(q.y)
    assert abs(np.linalg.norm(x) - 1) <= 1e-9 and abs(np.linalg.norm(y) - 1) <= 1e-9
    assert abs(q.angle - 2 * math.asin(q.chord / 2)) <= 1e-12
    assert q.angle_residual <= cfg.pair_tol and abs(q.angle - theta) <= cfg.pair_tol
    assert q.value_spread <= cfg.pair_tol
    vals = f.batch(np.vstack([x, -x, y, -y]))
    np.testing.assert_array_equal(vals, q.values)
    assert q.value_spread == vals.max() - vals.min()


def test_dyson_on_z():
    f = field_from_text("z")
    q = dyson(f)
    check_quadruple(q, f, math.pi / 2)
    assert q.value_spread <= 1e-6 and abs(q.angle - math.pi / 2) <= 1e-6
    assert np.all(np.abs(q.values) <= 1e-3)
    assert abs(q.x[2]) < 1e-3 and abs(q.y[2]) < 1e-3


def test_dyson_on_z_plus_x2_matches_oracle():
    f = field_from_text("z+x^2")
    q = dyson(f)
    check_quadruple(q, f, math.pi / 2)
    oracle = equator_oracle(lambda a: np.cos(a) ** 2, math.pi / 2)
    assert abs(oracle[0] - 0.5) < 1e-3
    assert np.all(np.abs(np.array(q.values) - oracle[0]) <= 10 * CFG.pair_tol)
    assert np.all(np.abs(np.array(q.values) - 0.5) <= 1e-3)
    assert abs(abs(q.x[0]) - math.sqrt(0.5)) < 1e-3 and abs(abs(q.x[1]) - math.sqrt(0.5)) < 1e-3


def test_equal_pair_at_sixty_degrees_matches_oracle():
    f = field_from_text("z+x^2")
    q = solve(f, math.pi / 3)
    check_quadruple(q, f, math.pi / 3)
    oracle = equator_oracle(lambda a: np.cos(a) ** 2, math.pi / 3)
    # two solution families (0.75 and 0.25); the solver returns the higher one
    assert abs(oracle[0] - 0.75) < 1e-3 and abs(oracle[-1] - 0.25) < 1e-3
    assert np.all(np.abs(np.array(q.values) - oracle[0]) <= 10 * CFG.pair_tol)


@pytest.mark.parametrize("seed", [2, 3, 4])
def test_sixty_degree_choice_is_seed_independent(seed):
    q = solve(field_from_text("z+x^2"), math.pi / 3, SolverConfig(seed=seed))
    assert np.all(np.abs(np.array(q.values) - 0.75) <= 1e-3)


def test_livesay_sqrt2_equals_dyson():
    f = field_from_text("z+x^2")
    a, b = dyson(f), livesay(f, math.sqrt(2))
    assert a.values == b.values and a.x == b.x and a.y == b.y


def test_livesay_chord_one():
    f = field_from_text("z+x^2")
    q = livesay(f, 1.0)
    assert abs(q.chord - 1.0) <= 1e-3
    assert np.all(np.abs(np.array(q.values) - 0.75) <= 1e-3)


def test_livesay_near_antipodal():
    f = field_from_text("z")
    q = livesay(f, 1.999)
    check_quadruple(q, f, chord_to_angle(1.999))
    assert np.all(np.abs(q.values) <= 1e-3)


def test_livesay_range():
    with pytest.raises(ROutOfRange):
        livesay(field_from_text("z"), 2.0)


def test_dyson_even_field_is_degenerate():
    with pytest.raises(DegenerateField):
        dyson(field_from_text("z^2"))


@pytest.mark.parametrize("text", ["exp(x)*cos(2*y) + z^3 - x*z", "sin(3*x) + y*z + 0.3*x^2*z", "x*y + z - 0.2*y"])
@pytest.mark.parametrize("theta", [0.4, math.pi / 2, 2.5])
def test_generic_fields(text, theta):
    f = field_from_text(text)
    q = solve(f, theta)
    check_quadruple(q, f, theta)


def test_pointwise_field_matches_vectorized():
    fv = field_from_text("z+x^2")
    fp = ScalarField(lambda p: p[2] + p[0] ** 2)
    a, b = dyson(fv), dyson(fp)
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_find_equal_pair_on_handmade_curve():
    # a tilted great circle, sampled with the antipodal half-turn structure
    t = np.linspace(0, np.pi, 300, endpoint=False)
    half = np.stack([np.cos(t), np.sin(t) * np.cos(0.3), np.sin(t) * np.sin(0.3)], axis=1)
    curve = InvariantCurve(-1, np.vstack([half, -half]), 0.0, 600)
    f = ScalarField(lambda p: p[..., 0] ** 2 + 0.5 * p[..., 1] ** 2, vectorized=True)
    q = find_equal_pair(f, curve, 1.0)
    check_quadruple(q, f, 1.0)


def test_pair_search_failure_on_coarse_curve():
    # four samples cannot resolve an angle-1.0 pair with equal values of this field
    half = np.array([[1.0, 0, 0], [0, 1.0, 0]])
    curve = InvariantCurve(-1, np.vstack([half, -half]), 0.0, 4)
    f = ScalarField(lambda p: 3 * p[..., 0] ** 2 + np.sin(9 * p[..., 1]), vectorized=True)
    with pytest.raises(PairSearchFailed):
        find_equal_pair(f, curve, 1.0, SolverConfig(pair_tol=1e-9))


def test_theta_range():
    with pytest.raises(ThetaOutOfRange):
        solve(field_from_text("z"), math.pi)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(start_level=5, max_level=4)
    with pytest.raises(ValueError):
        SolverConfig(residual_tol=0)
    with pytest.raises(ValueError):
        SolverConfig(samples_per_segment=0)


def test_result_json_keys():
    d = dyson(field_from_text("z")).to_dict()
    assert set(d) == {"theta", "chord", "x", "y", "values", "value_spread", "angle_residual",
                      "level", "curve_samples"}

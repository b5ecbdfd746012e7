import random

import pytest
from hypothesis import given, strategies as st

from parishrec.line_quality import (CLASS_LABELS, bad_ratio_class, line_height,
                                    median, q_line)
from parishrec.model import Polygon, TextLine


def oracle_q_line(heights, alpha):
    """Direct enumeration of the indicator, independent median computation."""
    ordered = sorted(heights)
    n = len(ordered)
    med = ordered[n // 2] if n % 2 else (ordered[n // 2 - 1] + ordered[n // 2]) / 2
    return sum(1 for h in heights if alpha * med <= h <= (1 + alpha) * med) / n


def test_all_equal_heights():
    r = q_line([10, 10, 10], 0.5)
    assert r.q_line == 1.0
    assert r.bad_ratio == 0.0
    assert r.quality_class == CLASS_LABELS[0]


def test_one_outlier_of_four():
    r = q_line([10, 10, 10, 30], 0.5)
    assert r.median_height == 10
    assert r.q_line == 0.75
    assert r.bad_ratio == 0.25
    assert r.quality_class == "5−25%"


def test_three_percent_bad_is_second_class():
    heights = [10.0] * 97 + [100.0] * 3
    r = q_line(heights, 0.5)
    assert r.bad_ratio == pytest.approx(0.03)
    assert r.quality_class == "1−5%"
    assert bad_ratio_class(0.03) == "1−5%"


@pytest.mark.parametrize("ratio,label", [
    (0.0, CLASS_LABELS[0]), (0.01, CLASS_LABELS[0]),
    (0.011, CLASS_LABELS[1]), (0.05, CLASS_LABELS[1]),
    (0.051, CLASS_LABELS[2]), (0.25, CLASS_LABELS[2]),
    (0.251, CLASS_LABELS[3]), (0.50, CLASS_LABELS[3]),
    (0.501, CLASS_LABELS[4]), (1.0, CLASS_LABELS[4]),
])
def test_class_boundaries(ratio, label):
    assert bad_ratio_class(ratio) == label


def test_window_bounds_are_closed():
    # heights exactly at alpha*median and (1+alpha)*median count as good
    r = q_line([10, 5, 15], 0.5)
    assert r.q_line == 1.0


def test_alpha_zero_keeps_only_exact_median():
    r = q_line([10, 10, 12], 0.0)
    assert r.q_line == pytest.approx(2 / 3)


def test_alpha_one_window_is_median_to_double():
    # window [h, 2h]: 9.99 is out, 20 is in
    r = q_line([10, 9.99, 20], 1.0)
    assert r.q_line == pytest.approx(2 / 3)


def test_even_cardinality_median_is_middle_mean():
    assert median([10, 20]) == 15
    assert median([1, 2, 3, 4]) == 2.5


def test_errors():
    with pytest.raises(ValueError):
        q_line([], 0.5)
    with pytest.raises(ValueError):
        q_line([10, -1], 0.5)
    with pytest.raises(ValueError):
        q_line([10], 1.5)


@given(st.lists(st.floats(min_value=0.1, max_value=1e4), min_size=1, max_size=50),
       st.floats(min_value=0.0, max_value=1.0))
def test_matches_direct_enumeration(heights, alpha):
    assert q_line(heights, alpha).q_line == pytest.approx(
        oracle_q_line(heights, alpha), abs=1e-12)


@given(st.lists(st.floats(min_value=0.1, max_value=1e4), min_size=1, max_size=50),
       st.floats(min_value=1e-3, max_value=1e3))
def test_scale_invariance(heights, scale):
    base = q_line(heights, 0.5).q_line
    scaled = q_line([h * scale for h in heights], 0.5).q_line
    assert scaled == pytest.approx(base, abs=1e-9)


@given(st.lists(st.floats(min_value=0.1, max_value=1e4), min_size=1, max_size=50),
       st.randoms(use_true_random=False))
def test_permutation_invariance(heights, rng):
    shuffled = list(heights)
    rng.shuffle(shuffled)
    assert q_line(shuffled, 0.5).q_line == q_line(heights, 0.5).q_line


def test_line_height_rectangle():
    assert line_height(TextLine("l", Polygon([(0, 0), (100, 0), (100, 12), (0, 12)]))) == 12


def test_line_height_triangle_bbox():
    assert line_height(TextLine("l", Polygon([(0, 0), (10, 0), (5, 7)]))) == 7


def test_line_height_rotated_quad_is_y_extent():
    rng = random.Random(11)
    for _ in range(50):
        pts = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(4)]
        expected = max(y for _, y in pts) - min(y for _, y in pts)
        assert line_height(TextLine("l", Polygon(pts))) == pytest.approx(expected)


def test_line_height_degenerate_polygon():
    with pytest.raises(ValueError):
        line_height(TextLine("l", Polygon([(0, 0), (10, 0)])))

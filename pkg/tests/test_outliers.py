import math
import random

import pytest

from parishrec.model import RecognizedPage, TextLine
from parishrec.outliers import (FeatureVector, GridSpec, Leaf, classify_page,
                                extract_features, f1_table, grid_search, if_fit,
                                if_score, lof_fit, lof_score, model_from_json,
                                model_to_json, split_landscape)
from conftest import PAGE_H, PAGE_W, act_page, blank_page, cover_page, index_page, rect


def vec(values, kind="line_count", rows=1, cols=None):
    cols = cols if cols is not None else len(values)
    return FeatureVector(kind, tuple(float(v) for v in values), GridSpec(rows, cols))


# ---------------------------------------------------------------------------
# brute-force LOF oracle: the direct formula, pure python

def _dist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def _kdist_neighbors(point, points, k, skip=None):
    pairs = [(i, _dist(point, q)) for i, q in enumerate(points) if i != skip]
    kd = sorted(d for _, d in pairs)[k - 1]
    return kd, [i for i, d in pairs if d <= kd]


def brute_lof(training, query, k):
    kdist, neigh = {}, {}
    for i, p in enumerate(training):
        kdist[i], neigh[i] = _kdist_neighbors(p, training, k, skip=i)
    lrd = {}
    for i, p in enumerate(training):
        reach = [max(kdist[j], _dist(p, training[j])) for j in neigh[i]]
        mean = sum(reach) / len(reach)
        lrd[i] = math.inf if mean == 0 else 1.0 / mean
    kd_q, n_q = _kdist_neighbors(query, training, k)
    reach = [max(kdist[j], _dist(query, training[j])) for j in n_q]
    mean = sum(reach) / len(reach)
    lrd_q = math.inf if mean == 0 else 1.0 / mean
    total = 0.0
    for j in n_q:
        if math.isinf(lrd[j]) and math.isinf(lrd_q):
            total += 1.0
        elif math.isinf(lrd_q):
            total += 0.0
        else:
            total += lrd[j] / lrd_q
    return total / len(n_q)


class TestFeatures:
    def test_zero_lines_line_count_is_zero_vector(self):
        page = RecognizedPage("p", "r", PAGE_W, PAGE_H, [])
        fv = extract_features(page, "line_count", GridSpec(8, 6))
        assert len(fv.values) == 48
        assert set(fv.values) == {0.0}

    def test_single_cell_line_count(self):
        # 8x6 over 1200x1800: cell is 200x225; a line filling cell (0,0) exactly
        page = RecognizedPage("p", "r", PAGE_W, PAGE_H,
                              [TextLine("l", rect(0, 0, 200, 225))])
        fv = extract_features(page, "line_count", GridSpec(8, 6))
        assert fv.values[0] == 1.0
        assert set(fv.values[1:]) == {0.0}

    def test_single_cell_line_density(self):
        page = RecognizedPage("p", "r", PAGE_W, PAGE_H,
                              [TextLine("l", rect(0, 0, 200, 225))])
        fv = extract_features(page, "line_density", GridSpec(8, 6))
        assert fv.values[0] == pytest.approx(1.0)
        assert set(fv.values[1:]) == {0.0}

    def test_density_matches_rectangle_oracle(self):
        rng = random.Random(31)
        rows, cols = 4, 3
        cw, ch = PAGE_W / cols, PAGE_H / rows
        for _ in range(30):
            x0 = rng.uniform(0, PAGE_W - 10)
            y0 = rng.uniform(0, PAGE_H - 10)
            x1 = x0 + rng.uniform(5, PAGE_W - x0)
            y1 = y0 + rng.uniform(5, PAGE_H - y0)
            page = RecognizedPage("p", "r", PAGE_W, PAGE_H,
                                  [TextLine("l", rect(x0, y0, x1, y1))])
            fv = extract_features(page, "line_density", GridSpec(rows, cols))
            for r in range(rows):
                for c in range(cols):
                    w = max(0.0, min(x1, (c + 1) * cw) - max(x0, c * cw))
                    h = max(0.0, min(y1, (r + 1) * ch) - max(y0, r * ch))
                    assert fv.values[r * cols + c] == pytest.approx(
                        w * h / (cw * ch), abs=1e-9)

    def test_density_clamped_with_overlapping_lines(self):
        lines = [TextLine(f"l{i}", rect(0, 0, 200, 225)) for i in range(3)]
        page = RecognizedPage("p", "r", PAGE_W, PAGE_H, lines)
        fv = extract_features(page, "line_density", GridSpec(8, 6))
        assert fv.values[0] == 1.0

    def test_projection_shape_and_normalization(self):
        page = RecognizedPage("p", "r", PAGE_W, PAGE_H,
                              [TextLine("l", rect(0, 0, 200, 225))])
        fv = extract_features(page, "projection", GridSpec(8, 6))
        assert len(fv.values) == 14
        assert max(fv.values[:8]) == 1.0
        assert max(fv.values[8:]) == 1.0

    def test_projection_zero_vector_without_lines(self):
        page = RecognizedPage("p", "r", PAGE_W, PAGE_H, [])
        fv = extract_features(page, "projection", GridSpec(8, 6))
        assert set(fv.values) == {0.0}

    def test_degenerate_page(self):
        page = RecognizedPage("p", "r", 0, 100, [])
        with pytest.raises(ValueError):
            extract_features(page, "line_count", GridSpec(8, 6))

    def test_vector_length_validation(self):
        with pytest.raises(ValueError):
            FeatureVector("line_count", (0.0,), GridSpec(8, 6))
        with pytest.raises(ValueError):
            FeatureVector("bogus", (0.0,), GridSpec(1, 1))

    def test_grid_bounds(self):
        with pytest.raises(ValueError):
            GridSpec(200, 200)


class TestSplitLandscape:
    def test_landscape_split_at_half_width(self):
        lines = [TextLine("left", rect(100, 100, 1000, 140)),
                 TextLine("right", rect(1400, 100, 2300, 140))]
        page = RecognizedPage("p", "r", 2400, PAGE_H, lines,
                              orientation="landscape")
        left, right = split_landscape(page)
        assert left.width == right.width == 1200
        assert [ln.id for ln in left.lines] == ["left"]
        assert [ln.id for ln in right.lines] == ["right"]
        assert left.orientation == right.orientation == "portrait"

    def test_portrait_untouched(self):
        page = RecognizedPage("p", "r", PAGE_W, PAGE_H, [])
        assert split_landscape(page) == [page]


class TestIsolationForest:
    def test_two_identical_points_yield_single_leaves(self):
        feats = [vec([1, 2, 3]), vec([1, 2, 3])]
        model = if_fit(feats, num_trees=20, subsample=2, seed=1)
        assert all(isinstance(t, Leaf) for t in model.trees)
        # single leaf of size n means E[h] = c(n): the definition of score 0.5
        assert if_score(model, vec([1, 2, 3])) == 0.5

    def test_seeded_fit_is_reproducible(self):
        rng = random.Random(2)
        feats = [vec([rng.random() for _ in range(6)]) for _ in range(64)]
        a = model_to_json(if_fit(feats, seed=42))
        b = model_to_json(if_fit(feats, seed=42))
        assert a == b
        c = model_to_json(if_fit(feats, seed=43))
        assert a != c

    def test_seed_required(self):
        with pytest.raises(ValueError):
            if_fit([vec([1]), vec([2])])

    def test_mixed_kinds_rejected(self):
        with pytest.raises(ValueError):
            if_fit([vec([1, 2]), vec([1, 2], kind="line_density")], seed=1)

    def test_cluster_member_scores_below_half_and_outlier_above(self):
        rng = random.Random(9)
        # unbalanced discrete cluster: the dominant pattern is the inlier
        patterns = [tuple([5.0] * 8), tuple([4.0] * 8), tuple([6.0] * 8)]
        feats = [vec(patterns[0 if rng.random() < 0.8 else rng.randint(1, 2)])
                 for _ in range(256)]
        model = if_fit(feats, seed=42)
        inlier = if_score(model, vec(patterns[0]))
        outlier = if_score(model, vec([500.0] * 8))
        assert inlier < 0.5 < outlier
        mean = sum(if_score(model, f) for f in feats) / len(feats)
        assert mean < 0.5

    def test_scores_strictly_inside_unit_interval(self):
        rng = random.Random(4)
        feats = [vec([rng.random() for _ in range(4)]) for _ in range(128)]
        model = if_fit(feats, seed=7)
        for _ in range(500):
            x = vec([rng.uniform(0, 100) for _ in range(4)])
            assert 0.0 < if_score(model, x) < 1.0

    def test_dimension_mismatch(self):
        model = if_fit([vec([1, 2]), vec([3, 4])], seed=1)
        with pytest.raises(ValueError):
            if_score(model, vec([1, 2, 3]))

    def test_model_json_round_trip(self):
        rng = random.Random(6)
        feats = [vec([rng.random() for _ in range(4)]) for _ in range(32)]
        model = if_fit(feats, num_trees=10, subsample=16, seed=5)
        assert model_from_json(model_to_json(model)) == model


class TestLof:
    def test_duplicated_query_point_is_exactly_one(self):
        feats = [vec([1.0, 1.0])] * 8 + [vec([5.0, 5.0])] * 8
        model = lof_fit(feats, k=3)
        assert lof_score(model, vec([1.0, 1.0])) == 1.0

    def test_far_query_on_uniform_grid_exceeds_threshold(self):
        feats = [vec([float(i)]) for i in range(20)]
        model = lof_fit(feats, k=3)
        assert lof_score(model, vec([100.0])) > 1.5

    def test_uniform_grid_training_points_near_one(self):
        feats = [vec([float(i)]) for i in range(20)]
        model = lof_fit(feats, k=3)
        for i in range(20):
            assert 0.8 <= lof_score(model, vec([float(i)])) <= 1.2

    def test_three_collinear_points_match_brute_force(self):
        pts = [(0.0,), (1.0,), (2.0,)]
        model = lof_fit([vec(list(p)) for p in pts], k=2)
        got = lof_score(model, vec([1.0]))
        assert abs(got - brute_lof(pts, (1.0,), 2)) <= 1e-9

    def test_matches_brute_force_on_random_sets(self):
        rng = random.Random(12)
        for _ in range(40):
            m = rng.randint(3, 20)
            dim = rng.randint(1, 3)
            pts = [tuple(rng.uniform(0, 10) for _ in range(dim)) for _ in range(m)]
            k = rng.randint(1, m - 1)
            model = lof_fit([vec(list(p)) for p in pts], k=k)
            for _ in range(3):
                q = tuple(rng.uniform(0, 15) for _ in range(dim))
                assert abs(lof_score(model, vec(list(q))) - brute_lof(pts, q, k)) <= 1e-9

    def test_duplicate_only_training_rejected(self):
        with pytest.raises(ValueError):
            lof_fit([vec([1.0])] * 5, k=2)

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            lof_fit([vec([1.0]), vec([2.0])], k=2)

    def test_model_json_round_trip(self):
        feats = [vec([1.0, 1.0])] * 4 + [vec([2.0, 3.0]), vec([4.0, 1.0])]
        model = lof_fit(feats, k=2)
        assert model_from_json(model_to_json(model)) == model


@pytest.fixture(scope="module")
def model():
    rng = random.Random(123)
    spec = GridSpec(8, 6)
    train = [extract_features(act_page(rng, f"t{i}"), "line_count", spec)
             for i in range(300)]
    return if_fit(train, seed=42)


class TestClassifyPage:
    def test_blank_page_is_no_act(self, model):
        cls, score = classify_page(blank_page(random.Random(0), "b"), model)
        assert cls == "no_act"
        assert score > 0.5

    def test_act_like_page_is_act(self, model):
        cls, score = classify_page(act_page(random.Random(1), "a", n=20), model)
        assert cls == "act"
        assert score <= 0.5

    def test_index_and_cover_pages_are_no_act(self, model):
        rng = random.Random(2)
        assert classify_page(index_page(rng, "i"), model)[0] == "no_act"
        assert classify_page(cover_page(rng, "c"), model)[0] == "no_act"


def test_grid_search_picks_max_f1_smaller_vector_on_tie():
    rng = random.Random(55)
    train_pages = [act_page(rng, f"t{i}") for i in range(120)]
    labeled = [(act_page(rng, f"a{i}", n=20), "act") for i in range(30)]
    labeled += [(blank_page(rng, f"n{i}"), "no_act") for i in range(10)]
    best, table = grid_search(train_pages, labeled,
                              kinds=("line_count", "line_density"),
                              specs=(GridSpec(8, 6), GridSpec(16, 12)),
                              seed=42, subsample=64)
    expected = max(table, key=lambda row: (row["f1"], -row["vector_length"]))
    assert best["f1"] == expected["f1"]
    assert best["vector_length"] <= expected["vector_length"]


def test_f1_table_arithmetic():
    pairs = [("act", "act")] * 3 + [("no_act", "act")] + [("no_act", "no_act")] * 2
    stats = f1_table(pairs)
    assert stats["act"]["precision"] == 1.0
    assert stats["act"]["recall"] == pytest.approx(3 / 4)
    assert stats["no_act"]["recall"] == 1.0
    assert stats["accuracy"] == pytest.approx(5 / 6)

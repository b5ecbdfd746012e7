import random

import pytest

from parishrec.names import (CorrectionResult, VisualCostTable,
                             candidate_pool, canonicalize_variant, correct_name,
                             levenshtein, split_name, standardize_person,
                             visual_distance)


def dp_visual_distance(source: str, target: str, costs: VisualCostTable) -> float:
    """Exhaustive DP over the extended operation set (test oracle).

    Cells indexed by (chars of source consumed, chars of target produced);
    transitions are indel at 1, single substitution at its cost, and every
    table pair applied as one block operation.
    """
    src, tgt = source.lower(), target.lower()
    n, m = len(src), len(tgt)
    # index pairs by their (first source char, first target char) for speed;
    # still visits every applicable transition, so the minimum is exact
    by_heads = {}
    for (a, b), cost in costs.pairs.items():
        if len(a) == 1 and len(b) == 1:
            continue
        by_heads.setdefault((a[0], b[0]), []).append((a, b, cost))
    INF = float("inf")
    dist = [[INF] * (m + 1) for _ in range(n + 1)]
    dist[0][0] = 0.0
    for i in range(n + 1):
        for j in range(m + 1):
            d = dist[i][j]
            if d == INF:
                continue
            if i < n and dist[i + 1][j] > d + costs.INDEL:
                dist[i + 1][j] = d + costs.INDEL
            if j < m and dist[i][j + 1] > d + costs.INDEL:
                dist[i][j + 1] = d + costs.INDEL
            if i < n and j < m:
                step = d + costs.single_sub(src[i], tgt[j])
                if dist[i + 1][j + 1] > step:
                    dist[i + 1][j + 1] = step
                for a, b, cost in by_heads.get((src[i], tgt[j]), []):
                    if src.startswith(a, i) and tgt.startswith(b, j) \
                            and dist[i + len(a)][j + len(b)] > d + cost:
                        dist[i + len(a)][j + len(b)] = d + cost
    return dist[n][m]


class TestSplitName:
    def test_single_token_is_first_name(self, thesaurus):
        p = split_name("Jean", thesaurus)
        assert p.first_names == ("Jean",) and p.last_names == ()

    def test_thesaurus_classification(self, thesaurus):
        p = split_name("Jean Tremblay", thesaurus)
        assert p.first_names == ("Jean",)
        assert p.last_names == ("Tremblay",)

    def test_birth_subject_all_first_names(self, thesaurus):
        p = split_name("Marie Anne Louise", thesaurus, "birth", "subject_name")
        assert p.first_names == ("Marie", "Anne", "Louise")
        assert p.last_names == ()

    def test_death_subject_last_token_is_last_name(self, thesaurus):
        p = split_name("Marie Anne Tremblay", thesaurus, "death", "subject_name")
        assert p.first_names == ("Marie", "Anne")
        assert p.last_names == ("Tremblay",)

    def test_hyphenated_compound_stays_whole(self, thesaurus):
        p = split_name("Jean-Baptiste Gagnon", thesaurus)
        assert p.first_names == ("Jean-Baptiste",)
        assert p.last_names == ("Gagnon",)

    def test_linebreak_hyphen_rejoined(self, thesaurus):
        p = split_name("Jean Trem-\nblay", thesaurus)
        assert p.last_names == ("Tremblay",)

    def test_unknown_tokens_default_to_last(self, thesaurus):
        p = split_name("Jean Zorglub", thesaurus)
        assert p.last_names == ("Zorglub",)

    def test_token_multiset_preserved(self, thesaurus):
        raw = "Marie Anne Tremblay Gagnon"
        p = split_name(raw, thesaurus)
        assert sorted(p.first_names + p.last_names) == sorted(raw.split())

    def test_empty_raises(self, thesaurus):
        with pytest.raises(ValueError):
            split_name("", thesaurus)


class TestCandidatePool:
    def test_radius_zero_known_name(self, thesaurus):
        assert candidate_pool("Tremblay", thesaurus, 0) == {"Tremblay"}

    def test_radius_zero_unknown_name_empty(self, thesaurus):
        assert candidate_pool("Xyzzy", thesaurus, 0) == set()

    def test_htr_noise_within_radius_two(self, thesaurus):
        pool = candidate_pool("Trernblay", thesaurus, 2)
        assert "Tremblay" in pool

    def test_case_and_diacritics_folded(self, thesaurus):
        assert "Édouard" in candidate_pool("edouard", thesaurus, 0)

    def test_monotone_in_radius(self, thesaurus):
        for name in ("Gagnon", "Trembley", "Mxrin"):
            p1 = candidate_pool(name, thesaurus, 1)
            p2 = candidate_pool(name, thesaurus, 2)
            assert p1 <= p2

    def test_negative_radius(self, thesaurus):
        with pytest.raises(ValueError):
            candidate_pool("Jean", thesaurus, -1)


class TestLevenshtein:
    def test_basics(self):
        assert levenshtein("abc", "abc") == 0
        assert levenshtein("abc", "abd") == 1
        assert levenshtein("", "abc") == 3

    def test_limit_short_circuit(self):
        assert levenshtein("aaaaaaaa", "bbbbbbbb", limit=2) == 3


class TestCorrectName:
    def test_canonical_name_scores_zero(self, costs):
        result = correct_name("Tremblay", {"Tremblay"}, costs)
        assert result.best[0] == ("Tremblay", 0.0)
        assert result.accepted

    def test_group_substitution_beats_plain_edits(self, costs):
        result = correct_name("Trernblay", {"Tremblay", "Tremble"}, costs)
        assert result.best[0][0] == "Tremblay"
        assert result.best[0][1] == pytest.approx(0.2)
        assert result.accepted and not result.ambiguous

    def test_tie_retains_both(self, costs):
        # nu -> uu substitutes n->u, nu -> nn substitutes u->n: same table cost
        result = correct_name("nu", {"uu", "nn"}, costs)
        assert result.best[0][1] == pytest.approx(result.best[1][1])
        assert result.accepted and result.ambiguous

    def test_empty_pool_rejected(self, costs):
        result = correct_name("Jean", set(), costs)
        assert result == CorrectionResult((), False, 2)

    def test_accept_threshold(self, costs):
        result = correct_name("Worgl", {"Tremblay"}, costs, accept_threshold=1.0)
        assert not result.accepted

    def test_matches_dp_oracle_on_fuzz(self, costs):
        rng = random.Random(77)
        alphabet = "abcdefghijlmnorstuvé"
        for _ in range(120):
            name = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
            pool = {"".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
                    for _ in range(rng.randint(1, 15))}
            result = correct_name(name, pool, costs)
            oracle = min((dp_visual_distance(name, cand, costs), cand) for cand in pool)
            assert result.best[0][1] == pytest.approx(oracle[0], abs=1e-9)
            best_score = result.best[0][1]
            oracle_best = {cand for cand in pool
                           if dp_visual_distance(name, cand, costs)
                           == pytest.approx(best_score, abs=1e-9)}
            assert result.best[0][0] in oracle_best


class TestVisualCostTable:
    def test_symmetry(self, costs):
        assert costs.single_sub("u", "n") == costs.single_sub("n", "u") == 0.2

    def test_identity_is_free(self, costs):
        assert costs.single_sub("a", "a") == 0.0
        assert visual_distance("jean", "jean", costs) == 0.0

    def test_unlisted_pair_costs_one(self, costs):
        assert costs.single_sub("a", "z") == 1.0

    def test_cost_range_enforced(self):
        with pytest.raises(ValueError):
            VisualCostTable({("a", "b"): 1.5})

    def test_load(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("rn\tm\t0.3\n", encoding="utf-8")
        table = VisualCostTable.load(path)
        assert table.pairs[("rn", "m")] == 0.3
        assert table.pairs[("m", "rn")] == 0.3


class TestCanonicalize:
    def test_translation_variants(self, thesaurus):
        assert canonicalize_variant("Edward", thesaurus) == "Édouard"
        assert canonicalize_variant("William", thesaurus) == "Guillaume"

    def test_unknown_is_identity(self, thesaurus):
        assert canonicalize_variant("Xyz", thesaurus) == "Xyz"


class TestStandardizePerson:
    def test_noisy_last_name_corrected(self, thesaurus, costs):
        p = standardize_person("Jean Trernblay", thesaurus, costs)
        assert p.corrected
        assert p.last_names == ("Tremblay",)
        assert p.correction_candidates

    def test_clean_name_untouched(self, thesaurus, costs):
        p = standardize_person("Jean Tremblay", thesaurus, costs)
        assert not p.corrected

    def test_correction_disabled(self, thesaurus, costs):
        p = standardize_person("Jean Trernblay", thesaurus, costs,
                               correct_unknown=False)
        assert not p.corrected
        assert p.last_names == ("Trernblay",)

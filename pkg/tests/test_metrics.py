import itertools
import math
import random
import stat
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diverse_latents.metrics import (
    ETHNICITIES,
    GENDERS,
    ExternalCommandProvider,
    LabeledBatchSet,
    ProviderError,
    avg_pairwise,
    avg_pairwise_across_batches,
    checked_provider,
    coverage_all_genders,
    coverage_all_pairs,
    coverage_at_least,
    mean_with_ci,
    multiplicative_improvement,
    proportion_ci,
)


def table_provider(table):
    def d(a, b):
        if a == b:
            return 0.0
        return table[frozenset((a, b))]

    return d


class TestAvgPairwise:
    def test_identical_items_give_zero(self):
        assert avg_pairwise(["a", "b"], lambda a, b: 0.0) == 0.0

    def test_three_items(self):
        d = table_provider({frozenset("ab"): 1.0, frozenset("ac"): 2.0, frozenset("bc"): 3.0})
        assert avg_pairwise(["a", "b", "c"], d) == 2.0

    def test_small_batch_rejected(self):
        with pytest.raises(ValueError):
            avg_pairwise(["a"], lambda a, b: 0.0)

    def test_matches_double_loop_oracle(self):
        rng = random.Random(0)
        for _ in range(50):
            ids = [f"i{k}" for k in range(rng.randint(2, 8))]
            table = {
                frozenset((a, b)): rng.random()
                for a, b in itertools.combinations(ids, 2)
            }
            d = table_provider(table)
            total, count = 0.0, 0
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    total += d(ids[i], ids[j])
                    count += 1
            assert avg_pairwise(ids, d) == pytest.approx(total / count, rel=1e-12)

    @given(st.integers(0, 1000), st.floats(0.1, 10))
    @settings(max_examples=50, deadline=None)
    def test_permutation_invariance_and_linear_scaling(self, seed, scale):
        rng = random.Random(seed)
        ids = [f"i{k}" for k in range(rng.randint(2, 6))]
        table = {
            frozenset((a, b)): rng.random() for a, b in itertools.combinations(ids, 2)
        }
        d = table_provider(table)
        shuffled = list(ids)
        rng.shuffle(shuffled)
        base = avg_pairwise(ids, d)
        assert avg_pairwise(shuffled, d) == pytest.approx(base, rel=1e-12)
        assert avg_pairwise(ids, lambda a, b: scale * d(a, b)) == pytest.approx(
            scale * base, rel=1e-12
        )


class TestAcrossBatches:
    def test_single_batch(self):
        d = table_provider({frozenset("ab"): 0.4})
        result = avg_pairwise_across_batches([["a", "b"]], d)
        assert result.mean == pytest.approx(0.4)
        assert result.half_width == 0.0

    def test_two_batches_average(self):
        d = table_provider({frozenset("ab"): 0.2, frozenset("cd"): 0.4})
        result = avg_pairwise_across_batches([["a", "b"], ["c", "d"]], d)
        assert result.mean == pytest.approx(0.3)
        assert result.n == 2

    def test_no_eligible_batch(self):
        with pytest.raises(ValueError):
            avg_pairwise_across_batches([["a"], []], lambda a, b: 0.0)

    def test_matches_oracle(self):
        rng = random.Random(4)
        ids = [f"i{k}" for k in range(12)]
        table = {frozenset(p): rng.random() for p in itertools.combinations(ids, 2)}
        d = table_provider(table)
        batches = [rng.sample(ids, rng.randint(2, 5)) for _ in range(6)]
        per_batch = [avg_pairwise(b, d) for b in batches]
        expected = sum(per_batch) / len(per_batch)
        result = avg_pairwise_across_batches(batches, d)
        assert result.mean == pytest.approx(expected, rel=1e-12)
        se = (
            math.sqrt(sum((v - expected) ** 2 for v in per_batch) / (len(per_batch) - 1))
            / math.sqrt(len(per_batch))
        )
        assert result.half_width == pytest.approx(1.96 * se, rel=1e-9)


class TestCheckedProvider:
    def test_passes_symmetric(self):
        wrapped = checked_provider(lambda a, b: 1.0 if a != b else 0.0)
        assert wrapped("a", "b") == 1.0

    def test_rejects_asymmetric(self):
        wrapped = checked_provider(lambda a, b: 1.0 if a < b else 2.0)
        with pytest.raises(ProviderError):
            wrapped("a", "b")

    def test_rejects_negative(self):
        wrapped = checked_provider(lambda a, b: -1.0)
        with pytest.raises(ProviderError):
            wrapped("a", "b")


def labels_from(pairs_per_batch):
    return LabeledBatchSet(
        batches={f"b{i}": pairs for i, pairs in enumerate(pairs_per_batch)}
    )


ALL_COMBOS = [(g, e) for g in GENDERS for e in ETHNICITIES]


class TestCoverage:
    def test_full_batch_counts(self):
        assert coverage_all_pairs(labels_from([ALL_COMBOS])) == 1.0

    def test_small_batch_cannot_count(self):
        labels = labels_from([ALL_COMBOS[:7], ALL_COMBOS])
        assert coverage_all_pairs(labels) == 0.5

    def test_at_least_one_is_always_full(self):
        labels = labels_from([[("male", "Black")], [("female", "Asian")]])
        assert coverage_at_least(labels, 1) == 1.0

    def test_at_least_four_needs_all(self):
        labels = labels_from([[("male", e) for e in ETHNICITIES[:3]]])
        assert coverage_at_least(labels, 4) == 0.0

    def test_coverage_chain(self):
        rng = random.Random(9)
        labels = labels_from(
            [
                [(rng.choice(GENDERS), rng.choice(ETHNICITIES)) for _ in range(rng.randint(1, 10))]
                for _ in range(30)
            ]
        )
        chain = [coverage_at_least(labels, m) for m in (4, 3, 2, 1)]
        assert coverage_all_pairs(labels) <= chain[0]
        assert chain == sorted(chain)
        assert chain[-1] == 1.0

    def test_matches_brute_force_oracle(self):
        rng = random.Random(17)
        for _ in range(50):
            raw = [
                [(rng.choice(GENDERS), rng.choice(ETHNICITIES)) for _ in range(rng.randint(1, 12))]
                for _ in range(rng.randint(1, 10))
            ]
            labels = labels_from(raw)
            want_all = sum(1 for b in raw if set(b) == set(ALL_COMBOS)) / len(raw)
            assert coverage_all_pairs(labels) == want_all
            for m in range(1, 5):
                want = sum(1 for b in raw if len({e for _, e in b}) >= m) / len(raw)
                assert coverage_at_least(labels, m) == want
            want_g = sum(1 for b in raw if {g for g, _ in b} == set(GENDERS)) / len(raw)
            assert coverage_all_genders(labels) == want_g

    def test_unknown_labels_rejected(self):
        with pytest.raises(ValueError):
            labels_from([[("male", "Martian")]])
        with pytest.raises(ValueError):
            labels_from([[("other", "Black")]])


class TestImprovement:
    def test_doubling(self):
        assert multiplicative_improvement(0.5, 0.25).ratio == 2.0

    def test_published_scale_gain(self):
        assert multiplicative_improvement(0.6, 0.25).ratio == pytest.approx(2.4)

    def test_zero_baseline_is_undefined(self):
        assert multiplicative_improvement(0.3, 0.0).ratio is None

    def test_identity(self):
        assert multiplicative_improvement(0.7, 0.7).ratio == pytest.approx(1.0)

    @given(st.floats(0, 1), st.floats(0.001, 1))
    @settings(max_examples=100, deadline=None)
    def test_matches_division(self, m, b):
        assert multiplicative_improvement(m, b).ratio == pytest.approx(m / b, rel=1e-12)


class TestProportionCI:
    def test_half_at_hundred(self):
        assert proportion_ci(0.5, 100).half_width == pytest.approx(0.098)

    def test_degenerate_proportions(self):
        assert proportion_ci(0.0, 50).half_width == 0.0
        assert proportion_ci(1.0, 50).half_width == 0.0

    def test_formula_value(self):
        assert proportion_ci(0.36, 900).half_width == pytest.approx(0.03136)

    @given(st.floats(0, 1), st.integers(1, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_matches_oracle(self, p, n):
        assert proportion_ci(p, n).half_width == pytest.approx(
            1.96 * math.sqrt(p * (1 - p) / n), rel=1e-12, abs=1e-15
        )


class TestExternalCommandProvider:
    @pytest.fixture
    def echo_provider(self, tmp_path):
        # distance = abs(len(a) - len(b)); symmetric by construction
        script = tmp_path / "provider.py"
        script.write_text(
            "import sys\n"
            "pairs = [l.split('\\t') for l in open(sys.argv[1]).read().splitlines()]\n"
            "open(sys.argv[2], 'w').write('\\n'.join(str(abs(len(a)-len(b)) * 1.0) for a, b in pairs) + '\\n')\n"
        )
        return ExternalCommandProvider(f"{sys.executable} {script}")

    def test_lookup_table(self, echo_provider):
        provider = echo_provider.table([("a", "bbb"), ("a", "cc")])
        assert provider("a", "bbb") == 2.0
        assert provider("bbb", "a") == 2.0
        assert provider("a", "a") == 0.0

    def test_failing_command(self, tmp_path):
        bad = ExternalCommandProvider(f"{sys.executable} -c 'import sys; sys.exit(5)'")
        with pytest.raises(ProviderError, match="exit 5"):
            bad.compute([("a", "b")])

    def test_wrong_line_count(self, tmp_path):
        script = tmp_path / "short.py"
        script.write_text("import sys\nopen(sys.argv[2], 'w').write('1.0\\n')\n")
        provider = ExternalCommandProvider(f"{sys.executable} {script}")
        with pytest.raises(ProviderError, match="2 pairs"):
            provider.compute([("a", "b"), ("c", "d")])

    def test_asymmetric_detected(self, tmp_path):
        script = tmp_path / "asym.py"
        script.write_text(
            "import sys\n"
            "pairs = [l.split('\\t') for l in open(sys.argv[1]).read().splitlines()]\n"
            "open(sys.argv[2], 'w').write('\\n'.join('1.0' if a < b else '2.0' for a, b in pairs) + '\\n')\n"
        )
        provider = ExternalCommandProvider(f"{sys.executable} {script}")
        with pytest.raises(ProviderError, match="asymmetric"):
            provider.table([("a", "b")])


class TestMeanWithCI:
    def test_single_value(self):
        result = mean_with_ci([0.5])
        assert result.mean == 0.5
        assert result.half_width == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mean_with_ci([])

"""Shapley attribution: kernel weights, exact enumeration, kernel regression."""

from __future__ import annotations

import numpy as np
import pytest

from msalens.backends import NativeBackend
from msalens.criteria import Criterion
from msalens.errors import TooManyTokens
from msalens.explain import (
    ValueFunction,
    attribute,
    exact_shapley,
    kernel_shap,
    mask_tokens,
    shapley_kernel_weight,
)
from msalens.features import stable_hash
from msalens.model import TrainConfig, train_native
from msalens.synth import generate_separable_corpus


def table_v(table: dict[frozenset, float]):
    return lambda coalition: table[frozenset(coalition)]


def random_table(m: int, rng: np.random.Generator) -> dict[frozenset, float]:
    from itertools import combinations

    table = {}
    for size in range(m + 1):
        for members in combinations(range(m), size):
            table[frozenset(members)] = float(rng.uniform())
    return table


class TestKernelWeight:
    def test_hand_evaluations(self):
        assert shapley_kernel_weight(4, 1) == pytest.approx(3 / (4 * 1 * 3))  # 0.25
        assert shapley_kernel_weight(4, 2) == pytest.approx(3 / (6 * 2 * 2))  # 0.125
        assert shapley_kernel_weight(2, 1) == pytest.approx(0.5)

    def test_positive_and_symmetric(self):
        for m in range(2, 12):
            for s in range(1, m):
                w = shapley_kernel_weight(m, s)
                assert w > 0
                assert w == pytest.approx(shapley_kernel_weight(m, m - s))

    def test_boundary_sizes_rejected(self):
        for s in (0, 5):
            with pytest.raises(ValueError):
                shapley_kernel_weight(5, s)


class TestExact:
    def test_linear_value_function(self):
        # frozen by enumerating the four coalitions by hand:
        # v({})=0.1, v({0})=0.4, v({1})=0.3, v({0,1})=0.6
        def v(coalition):
            s = set(coalition)
            return 0.1 + 0.3 * (0 in s) + 0.2 * (1 in s)

        attribution = exact_shapley(v, ["t1", "t2"])
        assert attribution.phi == pytest.approx((0.3, 0.2), abs=1e-12)
        assert attribution.base_value == pytest.approx(0.1)
        assert attribution.method == "Exact"

    def test_constant_value_function_dummy(self):
        attribution = exact_shapley(lambda s: 0.7, ["a", "b", "c"])
        assert attribution.phi == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)

    def test_symmetric_tokens_get_equal_phi(self):
        def v(coalition):
            return 0.1 + 0.2 * len(set(coalition))

        attribution = exact_shapley(v, ["x", "y"])
        assert attribution.phi[0] == pytest.approx(attribution.phi[1], abs=1e-12)

    def test_single_token(self):
        attribution = exact_shapley(lambda s: 0.9 if list(s) else 0.2, ["only"])
        assert attribution.phi == pytest.approx((0.7,))

    def test_token_limit(self):
        with pytest.raises(TooManyTokens):
            exact_shapley(lambda s: 0.0, [f"t{i}" for i in range(13)])

    def test_efficiency_dummy_symmetry_on_random_tables(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            m = int(rng.integers(2, 8))
            table = random_table(m, rng)
            v = table_v(table)
            attribution = exact_shapley(v, [f"t{i}" for i in range(m)])
            # efficiency
            assert sum(attribution.phi) == pytest.approx(
                table[frozenset(range(m))] - table[frozenset()], abs=1e-10
            )
            # dummy: rebuild the table ignoring player 0
            dummy_table = {
                members: table[frozenset(members - {0})] for members in table
            }
            dummy_attr = exact_shapley(table_v(dummy_table), [f"t{i}" for i in range(m)])
            assert dummy_attr.phi[0] == pytest.approx(0.0, abs=1e-10)
            # symmetry: symmetrize players 0 and 1
            def swap01(members: frozenset) -> frozenset:
                out = set(members)
                has0, has1 = 0 in out, 1 in out
                out.discard(0), out.discard(1)
                if has0:
                    out.add(1)
                if has1:
                    out.add(0)
                return frozenset(out)

            sym_table = {k: 0.5 * (table[k] + table[swap01(k)]) for k in table}
            sym_attr = exact_shapley(table_v(sym_table), [f"t{i}" for i in range(m)])
            assert sym_attr.phi[0] == pytest.approx(sym_attr.phi[1], abs=1e-10)


class TestKernel:
    def test_matches_exact_on_linear_v(self):
        def v(coalition):
            s = set(coalition)
            return 0.1 + 0.3 * (0 in s) + 0.2 * (1 in s)

        attribution = kernel_shap(v, ["t1", "t2"], sample_budget=16, seed=0)
        assert attribution.phi == pytest.approx((0.3, 0.2), abs=1e-6)
        assert attribution.method == "Kernel"

    def test_exhaustive_agreement_random_tables(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            m = int(rng.integers(2, 10))
            table = random_table(m, rng)
            v = table_v(table)
            tokens = [f"t{i}" for i in range(m)]
            exact = exact_shapley(v, tokens)
            kernel = kernel_shap(v, tokens, sample_budget=1 << m, seed=0)
            assert np.max(np.abs(np.array(kernel.phi) - np.array(exact.phi))) <= 1e-6

    def test_efficiency_holds_by_construction_when_sampling(self):
        rng = np.random.default_rng(11)
        m = 16

        def v(coalition):
            s = list(coalition)
            return float(1 / (1 + np.exp(-(0.2 * len(s) - 1 + 0.4 * (3 in set(s))))))

        attribution = kernel_shap(v, [f"t{i}" for i in range(m)], sample_budget=200, seed=5)
        assert attribution.samples_used <= 260
        assert sum(attribution.phi) == pytest.approx(
            v(range(m)) - v([]), abs=1e-9
        )

    def test_deterministic_given_seed(self):
        m = 20
        rng_v = np.random.default_rng(3)
        weights = rng_v.normal(size=m)

        def v(coalition):
            mask = np.zeros(m)
            for i in coalition:
                mask[i] = 1.0
            return float(1 / (1 + np.exp(-(weights @ mask))))

        tokens = [f"t{i}" for i in range(m)]
        a = kernel_shap(v, tokens, sample_budget=4096, seed=123)
        b = kernel_shap(v, tokens, sample_budget=4096, seed=123)
        assert a.phi == b.phi
        c = kernel_shap(v, tokens, sample_budget=4096, seed=124)
        assert a.phi != c.phi

    def test_preconditions(self):
        with pytest.raises(ValueError):
            kernel_shap(lambda s: 0.0, ["one"], sample_budget=10)
        with pytest.raises(ValueError):
            kernel_shap(lambda s: 0.0, ["a", "b", "c"], sample_budget=5)


class TestMaskTokens:
    def test_full_coalition(self):
        assert mask_tokens(["We", "audit", "suppliers"], [0, 1, 2]) == "We audit suppliers"

    def test_empty_coalition(self):
        assert mask_tokens(["We", "audit"], []) == ""

    def test_subset_preserves_order(self):
        assert mask_tokens(["a", "b", "c"], [2, 0]) == "a c"


@pytest.fixture(scope="module")
def native():
    corpus = generate_separable_corpus(sentences_per_criterion=80, seed=5)
    return NativeBackend(train_native(corpus, TrainConfig(dimension=2**14, seed=5)))


class TestNativeValueFunction:
    def test_caches_empty_and_full(self, native):
        v = ValueFunction(native, Criterion.C2_SUPPLY_CHAINS, "we audit suppliers".split())
        assert v.v_empty == v(())
        assert v.v_full == v((0, 1, 2))
        assert 0.0 <= v.v_empty <= 1.0

    def test_fast_path_matches_full_featurize(self, native):
        """The precomputed scorer must agree with masking + featurize, duplicates included."""
        from itertools import combinations

        from msalens.explain import mask_tokens

        tokens = "audit the suppliers audit THE supply suppliers".split()
        criterion = Criterion.C2_SUPPLY_CHAINS
        v = ValueFunction(native, criterion, tokens)
        for size in range(len(tokens) + 1):
            for coalition in combinations(range(len(tokens)), size):
                rebuilt = mask_tokens(tokens, coalition)
                expected = native.probability(rebuilt, None, criterion)
                assert v(coalition) == pytest.approx(expected, abs=1e-12)

    def test_linear_margin_identity(self, native):
        """Exact Shapley of the margin equals each token's own weight contribution."""
        model = native.model
        criterion = Criterion.C3_RISK_DESCRIPTION
        tokens = "board reviewed slavery risks quarterly".split()
        assert len(set(tokens)) == len(tokens)  # additivity needs distinct tokens
        v = ValueFunction(native, criterion, tokens, output="margin")
        attribution = exact_shapley(v, tokens)
        half = model.dimension // 2
        for token, phi in zip(tokens, attribution.phi):
            expected = model.weights[criterion][stable_hash(token.lower()) % half]
            assert phi == pytest.approx(expected, abs=1e-10)

    def test_attribute_picks_method_by_length(self, native):
        short = attribute(native, Criterion.C2_SUPPLY_CHAINS, "we audit suppliers yearly")
        assert short.method == "Exact"
        long_sentence = " ".join(f"word{i}" for i in range(15)) + " suppliers"
        long = attribute(native, Criterion.C2_SUPPLY_CHAINS, long_sentence, sample_budget=256)
        assert long.method == "Kernel"
        assert len(long.phi) == 16

    def test_attribution_lengths(self, native):
        attribution = attribute(native, Criterion.APPROVAL, "the board approved this statement")
        assert len(attribution.phi) == len(attribution.tokens) == 5

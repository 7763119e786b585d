from __future__ import annotations

import itertools
import random

import pytest

from sidsearch.errors import EmptyBatch, EmptyInput, NonFiniteInput
from sidsearch.ttr import (
    ConstantEvaluator,
    EvaluatorVerdict,
    LexicalEvaluator,
    OracleEvaluator,
    RerankBatch,
    SidCandidate,
    evaluate_lexical,
    minmax_normalize,
    rerank,
)


def test_minmax_basic():
    assert minmax_normalize([-4.0, -2.0, -1.0]) == pytest.approx([0.0, 2 / 3, 1.0])


def test_minmax_degenerate_all_equal():
    assert minmax_normalize([-2.0, -2.0]) == [1.0, 1.0]
    assert minmax_normalize([-5.0]) == [1.0]


def test_minmax_errors():
    with pytest.raises(EmptyInput):
        minmax_normalize([])
    with pytest.raises(NonFiniteInput):
        minmax_normalize([-1.0, float("-inf")])


def test_minmax_order_preserving():
    rng = random.Random(8)
    for _ in range(50):
        scores = [rng.uniform(-30, 0) for _ in range(rng.randint(2, 20))]
        sigma = minmax_normalize(scores)
        order = sorted(range(len(scores)), key=lambda i: scores[i])
        assert sorted(range(len(sigma)), key=lambda i: sigma[i]) == order
        assert all(0.0 <= s <= 1.0 for s in sigma)


def test_lexical_f1_hand_computed():
    # P = 2/2, R = 2/3 -> F1 = 0.8
    assert evaluate_lexical("red dress", "red evening dress").confidence == pytest.approx(0.8)
    assert evaluate_lexical("same words", "same words").confidence == pytest.approx(1.0)
    assert evaluate_lexical("alpha beta", "gamma delta").confidence == 0.0
    assert evaluate_lexical("", "anything").confidence == 0.0


def test_verdict_clamps():
    assert EvaluatorVerdict(1.7).confidence == 1.0
    assert EvaluatorVerdict(-0.2).confidence == 0.0


def _batch(*products, query="q"):
    """products: (pid, [(sid_id, text, logprob), ...])"""
    return RerankBatch(
        products=tuple(
            (pid, tuple(SidCandidate(sid_id, pid, text, lp) for sid_id, text, lp in sids))
            for pid, sids in products
        ),
        query=query,
    )


class _FixedEvaluator:
    def __init__(self, table):
        self.table = table

    def judge(self, sid_text, query_text, product_id=""):
        return EvaluatorVerdict(self.table[sid_text])


def test_adjusted_score_arithmetic_single_sid():
    # sigma = 0.5 (midpoint of [-2, 0]), w = 0.8 -> adjusted 0.40
    batch = _batch(
        ("pa", [(0, "mid", -1.0)]),
        ("pb", [(1, "top", 0.0)]),
        ("pc", [(2, "low", -2.0)]),
    )
    evaluator = _FixedEvaluator({"mid": 0.8, "top": 0.0, "low": 0.0})
    ranked = {r.product_id: r for r in rerank(batch, evaluator, parallelism=1)}
    assert ranked["pa"].rm_ttr == pytest.approx(0.4)


def test_max_aggregation_over_sids():
    batch = _batch(("pa", [(0, "x", -1.0), (1, "y", -1.0)]), ("pb", [(2, "z", 0.0)]),
                   ("pc", [(3, "w", -2.0)]))
    evaluator = _FixedEvaluator({"x": 0.4, "y": 0.7, "z": 0.0, "w": 0.0})
    ranked = {r.product_id: r for r in rerank(batch, evaluator, parallelism=1)}
    # both of pa's SIDs have sigma 0.5; product score is max(0.2, 0.35)
    assert ranked["pa"].rm_ttr == pytest.approx(0.35)
    assert ranked["pa"].best_sid.sid_id == 1


def test_oracle_promotion_over_all_batch_orderings():
    # Oracle evaluator: w=1 for the target's SIDs, 0.01 otherwise. With
    # sigma_target > 0.01 the target wins under every batch ordering.
    entries = [
        ("target", [(0, "t sid", -3.0)]),
        ("d1", [(1, "a", -1.0)]),
        ("d2", [(2, "b", 0.0)]),
        ("d3", [(3, "c", -6.0)]),
    ]
    evaluator = OracleEvaluator("target")
    for perm in itertools.permutations(entries):
        ranked = rerank(_batch(*perm), evaluator, parallelism=1)
        sigma_target = minmax_normalize([lp for _, sids in perm for *_, lp in sids])
        assert ranked[0].product_id == "target"


def test_constant_evaluator_matches_raw_order_including_ties():
    rng = random.Random(41)
    for _ in range(50):
        n = rng.randint(1, 12)
        entries = []
        sid_id = 0
        for i in range(n):
            sids = []
            for _ in range(rng.randint(1, 3)):
                # coarse grid to force ties often
                sids.append((sid_id, f"s{sid_id}", -float(rng.randint(0, 4))))
                sid_id += 1
            entries.append((f"p{i:02d}", sids))
        batch = _batch(*entries)
        with_ttr = rerank(batch, ConstantEvaluator(1.0), ttr_enabled=True, parallelism=1)
        without = rerank(batch, ttr_enabled=False, parallelism=1)
        assert [r.product_id for r in with_ttr] == [r.product_id for r in without]
        assert [r.rank for r in with_ttr] == list(range(1, n + 1))


def test_rm_ttr_range_invariant():
    rng = random.Random(4)
    for _ in range(30):
        entries = [
            (f"p{i}", [(i * 3 + j, f"text {i} {j}", rng.uniform(-20, 0)) for j in range(rng.randint(1, 3))])
            for i in range(rng.randint(1, 8))
        ]
        ranked = rerank(_batch(*entries, query="text 0 1"), LexicalEvaluator(), parallelism=1)
        for r in ranked:
            assert 0.0 <= r.rm_ttr <= 1.0


def test_joint_normalization_is_batch_wide():
    # Adding a product changes sigma for everyone (batch-wide min-max),
    # never per product.
    base = [("pa", [(0, "a", -1.0)]), ("pb", [(1, "b", -3.0)])]
    wide = base + [("pc", [(2, "c", -9.0)])]
    ev = ConstantEvaluator(1.0)
    small = {r.product_id: r.rm_ttr for r in rerank(_batch(*base), ev, parallelism=1)}
    big = {r.product_id: r.rm_ttr for r in rerank(_batch(*wide), ev, parallelism=1)}
    assert small["pb"] == pytest.approx(0.0)
    assert big["pb"] == pytest.approx(0.75)  # (-3 - -9) / (-1 - -9)


def test_ties_break_by_product_id():
    batch = _batch(("pz", [(0, "a", -1.0)]), ("pa", [(1, "a", -1.0)]))
    ranked = rerank(batch, ConstantEvaluator(1.0), parallelism=1)
    assert [r.product_id for r in ranked] == ["pa", "pz"]


def test_determinism_under_parallelism():
    entries = [
        (f"p{i}", [(i * 2 + j, f"token{i} word{j}", -float(i) - 0.1 * j) for j in range(2)])
        for i in range(10)
    ]
    batch = _batch(*entries, query="token3 word1")
    sequential = rerank(batch, LexicalEvaluator(), parallelism=1)
    threaded = rerank(batch, LexicalEvaluator(), parallelism=8)
    assert [(r.product_id, r.rank, r.rm_ttr) for r in sequential] == [
        (r.product_id, r.rank, r.rm_ttr) for r in threaded
    ]


def test_empty_batch_errors():
    with pytest.raises(EmptyBatch):
        rerank(_batch(), parallelism=1)
    with pytest.raises(EmptyBatch):
        rerank(RerankBatch(products=(("pa", ()),), query="q"), parallelism=1)


def test_batch_shape_fields():
    batch = _batch(("pa", [(0, "x", -1.0), (1, "y", -2.0)]), ("pb", [(2, "z", 0.0)]))
    assert batch.a_products == 2
    assert batch.b_max_sids == 2

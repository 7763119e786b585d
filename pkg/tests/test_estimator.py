from __future__ import annotations

import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sidsearch.estimator import SidRetriever, TtrReranker
from sidsearch.ttr import ConstantEvaluator


PRODUCTS = [
    {"product_id": "p1", "caption": "red evening dress"},
    {"product_id": "p2", "caption": "red canvas shoe"},
    {"product_id": "p3", "caption": "blue linen skirt"},
]


def test_get_set_params_roundtrip():
    est = SidRetriever(beam_width=7, beta=1.5)
    params = est.get_params()
    assert params["beam_width"] == 7
    assert params["beta"] == 1.5
    est.set_params(beam_width=3)
    assert est.beam_width == 3


def test_clone_preserves_params():
    est = SidRetriever(beam_width=5, sid_policy="caption")
    twin = clone(est)
    assert twin.get_params() == est.get_params()


def test_not_fitted_raises():
    est = SidRetriever()
    with pytest.raises(NotFittedError):
        est.generate("red dress")
    with pytest.raises(NotFittedError):
        est.predict(["red dress"])


def test_fit_from_dicts_and_predict():
    est = SidRetriever(sid_policy="caption").fit(PRODUCTS)
    out = est.predict(["red dress", "blue skirt"])
    assert len(out) == 2
    assert out[0][0] == "p1"
    assert out[1][0] == "p3"


def test_fit_from_path(tmp_path):
    import json

    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(json.dumps(p) for p in PRODUCTS) + "\n")
    est = SidRetriever(sid_policy="caption").fit(str(path))
    assert est.corpus_.size == 3


def test_fit_rejects_unknown_policy():
    with pytest.raises(ValueError):
        SidRetriever(sid_policy="nonsense").fit(PRODUCTS)


def test_retrieve_scope_and_ttr_flag():
    est = SidRetriever(sid_policy="caption").fit(PRODUCTS)
    scoped = est.retrieve("red dress", scope={"p2", "p3"})
    assert {r.product_id for r in scoped} <= {"p2", "p3"}
    raw = est.retrieve("red dress", ttr_enabled=False)
    assert raw[0].rank == 1


def test_query_validation():
    est = SidRetriever(sid_policy="caption").fit(PRODUCTS)
    with pytest.raises(ValueError):
        est.generate("")
    with pytest.raises(ValueError):
        est.generate("   ")


def test_ttr_reranker_estimator():
    from sidsearch.ttr import RerankBatch, SidCandidate

    reranker = TtrReranker(enabled=True, parallelism=1).fit()
    assert clone(reranker).get_params() == reranker.get_params()
    batch = RerankBatch(
        products=(
            ("pa", (SidCandidate(0, "pa", "x", -1.0),)),
            ("pb", (SidCandidate(1, "pb", "y", 0.0),)),
        ),
        query="q",
    )
    ranked = reranker.rerank(batch, evaluator=ConstantEvaluator(1.0))
    assert [r.product_id for r in ranked] == ["pb", "pa"]

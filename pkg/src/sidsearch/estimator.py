"""Estimator-style facade over the retrieval stack.

``SidRetriever`` follows the scikit-learn protocol: hyperparameters are
constructor arguments stored verbatim (get_params/set_params/clone all
work), ``fit`` builds the fitted state on trailing-underscore attributes,
and ``predict`` maps queries to ranked product-id lists so the retriever
drops into existing tooling. ``TtrReranker`` wraps the reranking step the
same way.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .corpus import CAPTION_ONLY, SidPolicy, tokenize_sids
from .decoder import DecodeConfig, generate_sids, group_by_product
from .fm_index import FmIndex
from .lm import train_reference_lm
from .tokenizer import build_vocab
from .ttr import LexicalEvaluator, RerankBatch, SidCandidate, rerank
from .validation import as_corpus, check_query, require_fitted

_POLICIES = {"default": SidPolicy(), "caption": CAPTION_ONLY}


class SidRetriever(BaseEstimator):
    """Generative semantic-ID retriever with FM-index constrained decoding.

    fit(X) ingests the product corpus (Corpus, JSONL path, or iterable of
    product records), builds the vocabulary, the index over reversed SID
    token streams, and the reference bigram model. predict(queries)
    returns the top-k product ids per query.
    """

    def __init__(
        self,
        beam_width: int = 10,
        top_b: int = 2,
        max_len: int = 32,
        k_results: int = 10,
        alpha: float = 0.1,
        beta: float = 2.0,
        sid_policy: str = "default",
        occ_stride: int = 64,
        sa_stride: int = 16,
    ):
        self.beam_width = beam_width
        self.top_b = top_b
        self.max_len = max_len
        self.k_results = k_results
        self.alpha = alpha
        self.beta = beta
        self.sid_policy = sid_policy
        self.occ_stride = occ_stride
        self.sa_stride = sa_stride

    # fitted attributes: corpus_, vocab_, sids_, index_, lm_

    def fit(self, X, y=None):
        policy = _POLICIES.get(self.sid_policy)
        if policy is None:
            raise ValueError(f"unknown sid_policy {self.sid_policy!r}; use one of {sorted(_POLICIES)}")
        corpus = as_corpus(X, policy)
        self.corpus_ = corpus
        self.vocab_ = build_vocab(corpus)
        self.sids_ = tokenize_sids(corpus.sids, self.vocab_)
        self.index_ = FmIndex.build(
            self.sids_, self.vocab_, occ_stride=self.occ_stride, sa_stride=self.sa_stride
        )
        self.lm_ = train_reference_lm(self.sids_, self.vocab_, alpha=self.alpha, beta=self.beta)
        return self

    def decode_config(self, k_results: int | None = None) -> DecodeConfig:
        return DecodeConfig(
            beam_width=self.beam_width,
            top_b=self.top_b,
            max_len=self.max_len,
            k_results=k_results or self.k_results,
        )

    def generate(self, query: str, scope: set[str] | None = None):
        """Scored SIDs for one query, optionally restricted to a candidate scope."""
        require_fitted(self, ("index_", "lm_"))
        check_query(query)
        return generate_sids(
            self.lm_,
            self.index_,
            self.sids_,
            tuple(self.vocab_.encode(query)),
            query_text=query,
            scope=scope,
            config=self.decode_config(),
        )

    def retrieve(self, query: str, scope: set[str] | None = None, evaluator=None,
                 ttr_enabled: bool = True, k: int | None = None):
        """Ranked products for one query (full pipeline minus dialogue state)."""
        scored = self.generate(query, scope)
        grouped = group_by_product(scored, top_b=self.top_b)
        if not grouped:
            return []
        by_id = {s.sid_id: s for s in self.sids_}
        batch = RerankBatch(
            products=tuple(
                (
                    pid,
                    tuple(
                        SidCandidate(s.sid_id, pid, by_id[s.sid_id].text, s.logprob)
                        for s in group
                    ),
                )
                for pid, group in grouped.items()
            ),
            query=query,
        )
        ranked = rerank(batch, evaluator=evaluator or LexicalEvaluator(), ttr_enabled=ttr_enabled)
        return ranked[: (k or self.k_results)]

    def predict(self, X):
        """Top-k product ids for each query in X."""
        require_fitted(self, ("index_", "lm_"))
        return [[r.product_id for r in self.retrieve(q)] for q in X]


class TtrReranker(BaseEstimator):
    """Reranking step as a standalone estimator; fit is stateless."""

    def __init__(self, enabled: bool = True, parallelism: int = 8):
        self.enabled = enabled
        self.parallelism = parallelism

    def fit(self, X=None, y=None):
        return self

    def rerank(self, batch: RerankBatch, evaluator=None):
        return rerank(
            batch,
            evaluator=evaluator or LexicalEvaluator(),
            ttr_enabled=self.enabled,
            parallelism=self.parallelism,
        )

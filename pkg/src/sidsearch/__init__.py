"""Conversational product retrieval with FM-index constrained semantic-ID
generation and test-time reranking."""

from .corpus import Corpus, Product, SidPolicy, SidRecord, extract_sids, ingest_corpus, tokenize_sids
from .decoder import DecodeConfig, ScoredSid, generate_sids, group_by_product, sid_logprob
from .estimator import SidRetriever, TtrReranker
from .evaluation import build_candidate_set, load_dialogues, mrr, ndcg_at_k, run_eval
from .fm_index import FmIndex, Interval
from .lm import BigramLm, LmContext, TokenLogProbs, UniformLm, train_reference_lm
from .synth import synth_generate
from .tokenizer import END_SID, UNK, Vocab, build_vocab, normalize
from .ttr import (
    EvaluatorVerdict,
    LexicalEvaluator,
    OracleEvaluator,
    RankedProduct,
    RerankBatch,
    SidCandidate,
    TtrSettings,
    evaluate_lexical,
    minmax_normalize,
    rerank,
)

__version__ = "0.1.0"

__all__ = [
    "BigramLm",
    "Corpus",
    "DecodeConfig",
    "END_SID",
    "EvaluatorVerdict",
    "FmIndex",
    "Interval",
    "LexicalEvaluator",
    "LmContext",
    "OracleEvaluator",
    "Product",
    "RankedProduct",
    "RerankBatch",
    "ScoredSid",
    "SidCandidate",
    "SidPolicy",
    "SidRecord",
    "SidRetriever",
    "TokenLogProbs",
    "TtrReranker",
    "TtrSettings",
    "UNK",
    "UniformLm",
    "Vocab",
    "build_candidate_set",
    "build_vocab",
    "evaluate_lexical",
    "extract_sids",
    "generate_sids",
    "group_by_product",
    "ingest_corpus",
    "load_dialogues",
    "minmax_normalize",
    "mrr",
    "ndcg_at_k",
    "normalize",
    "rerank",
    "run_eval",
    "sid_logprob",
    "synth_generate",
    "tokenize_sids",
    "train_reference_lm",
]

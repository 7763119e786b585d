"""Input validation helpers for the estimator layer."""

from __future__ import annotations

from sklearn.exceptions import NotFittedError

from .corpus import Corpus, ingest_corpus


def require_fitted(estimator, attributes: tuple[str, ...]) -> None:
    missing = [a for a in attributes if getattr(estimator, a, None) is None]
    if missing:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit before using "
            f"this method (missing {', '.join(missing)})"
        )


def as_corpus(X, policy) -> Corpus:
    """Coerce fit input into a Corpus.

    Accepts an existing Corpus, a JSONL path, or an iterable of product
    dicts / JSON lines.
    """
    if isinstance(X, Corpus):
        return X
    if isinstance(X, str):
        return ingest_corpus(X, policy)
    import json

    lines = [row if isinstance(row, str) else json.dumps(row, ensure_ascii=False) for row in X]
    return ingest_corpus(lines, policy)


def check_query(query) -> str:
    if not isinstance(query, str) or not query.strip():
        raise ValueError("query must be a non-empty string")
    return query

"""Exception types shared across the engine.

Every failure the public API can signal has its own class so callers
(and the CLI exit-code mapping) can dispatch on type rather than on
message text. Data-shaped errors carry enough context to produce a
line-numbered or id-bearing message.
"""

from __future__ import annotations


class SidSearchError(Exception):
    """Base class for all engine errors."""


# --- corpus ingest -------------------------------------------------------

class IngestError(SidSearchError):
    """A corpus record was rejected; carries the 1-based source line."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MalformedRecord(IngestError):
    pass


class DuplicateProductId(IngestError):
    pass


class EmptyTextFields(IngestError):
    pass


class ProductNotFound(SidSearchError):
    pass


# --- tokenizer -----------------------------------------------------------

class EmptyCorpus(SidSearchError):
    pass


class UnknownId(SidSearchError):
    pass


# --- fm_index ------------------------------------------------------------

class EmptySidSet(SidSearchError):
    pass


class VocabMismatch(SidSearchError):
    pass


class EmptyInterval(SidSearchError):
    pass


class CorruptIndex(SidSearchError):
    pass


# --- lm / remote ---------------------------------------------------------

class EmptyAllowedSet(SidSearchError):
    pass


class RemoteUnavailable(SidSearchError):
    """Remote LLM endpoint failed after the configured retries."""


# --- decoder -------------------------------------------------------------

class NonFiniteInput(SidSearchError):
    pass


class EmptyScope(SidSearchError):
    pass


# --- ttr -----------------------------------------------------------------

class EmptyInput(SidSearchError):
    pass


class EmptyBatch(SidSearchError):
    pass


class EvaluatorUnavailable(SidSearchError):
    """Remote judge exhausted retries and fallback is disabled."""


# --- dialogue / service --------------------------------------------------

class SessionNotFound(SidSearchError):
    pass


class UnresolvedReference(SidSearchError):
    """A turn referenced a product id that does not resolve in the corpus."""


class InvalidOverride(SidSearchError):
    pass


# --- eval harness --------------------------------------------------------

class InvalidCutoff(SidSearchError):
    pass


class TooFewProducts(SidSearchError):
    pass


class DatasetCorpusMismatch(SidSearchError):
    pass


class InvalidParameters(SidSearchError):
    pass

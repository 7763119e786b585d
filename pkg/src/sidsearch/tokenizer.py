"""Word-level tokenizer shared by the FM-index and the scoring models.

The vocabulary defines the symbol alphabet of constrained decoding, so the
mapping must be deterministic for a given corpus: ids are assigned in
lexicographic token order after two reserved slots.

Normalization is deliberately simple (lowercase, whitespace split, strip
leading/trailing punctuation per token) so that every value in a test can
be derived by hand.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field

from .errors import EmptyCorpus, UnknownId
from .util import digest_json

END_SID = 0
UNK = 1
RESERVED = {END_SID: "<end>", UNK: "<unk>"}

_STRIP_CHARS = string.punctuation


def normalize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation per token.

    Tokens that are pure punctuation vanish. This is a projection:
    normalize(" ".join(normalize(t))) == normalize(t).
    """
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_STRIP_CHARS)
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class Vocab:
    """Immutable token-text to id mapping with dense ids.

    Ids 0 and 1 are reserved (END_SID sentinel and UNK); corpus tokens
    start at 2 in lexicographic order. ``digest`` changes iff the mapping
    changes.
    """

    symbol_to_id: dict[str, int]
    digest: str
    id_to_symbol: dict[int, str] = field(init=False, repr=False)

    def __post_init__(self):
        inverse = dict(RESERVED)
        inverse.update({i: s for s, i in self.symbol_to_id.items()})
        object.__setattr__(self, "id_to_symbol", inverse)

    @property
    def size(self) -> int:
        """Total id count including the two reserved ids."""
        return len(self.symbol_to_id) + len(RESERVED)

    def encode(self, text: str) -> list[int]:
        """Map text to token ids; unknown tokens become UNK."""
        return [self.symbol_to_id.get(tok, UNK) for tok in normalize(text)]

    def decode(self, ids: list[int]) -> str:
        """Space-join the symbols for ``ids``; raises UnknownId for ids >= size."""
        parts = []
        for i in ids:
            sym = self.id_to_symbol.get(i)
            if sym is None:
                raise UnknownId(f"token id {i} not in vocabulary of size {self.size}")
            parts.append(sym)
        return " ".join(parts)

    def save(self, path: str) -> None:
        """Persist as JSONL: a header line, then one (token, id) pair per line."""
        lines = [json.dumps({"digest": self.digest, "reserved": {str(k): v for k, v in RESERVED.items()}})]
        for sym in sorted(self.symbol_to_id, key=self.symbol_to_id.get):
            lines.append(json.dumps([sym, self.symbol_to_id[sym]], ensure_ascii=False))
        from .util import atomic_write_text

        atomic_write_text(path, "\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocab":
        with open(path, "r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            mapping = {}
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                sym, idx = json.loads(line)
                mapping[sym] = idx
        vocab = cls(symbol_to_id=mapping, digest=header["digest"])
        return vocab


def build_vocab(source) -> Vocab:
    """Build the vocabulary covering every normalized token in the source.

    ``source`` is either a Corpus (its SID texts are used) or an iterable
    of strings. Raises EmptyCorpus when no text yields any token.
    """
    texts = [s.text for s in source.sids] if hasattr(source, "sids") else list(source)
    tokens: set[str] = set()
    for text in texts:
        tokens.update(normalize(text))
    if not tokens:
        raise EmptyCorpus("no tokens found while building vocabulary")
    mapping = {tok: i + len(RESERVED) for i, tok in enumerate(sorted(tokens))}
    digest = digest_json({"symbols": sorted(mapping.items()), "reserved": sorted(RESERVED.items())})
    return Vocab(symbol_to_id=mapping, digest=digest)

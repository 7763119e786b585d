"""Succinct full-text index over the corpus SID token stream.

The index answers the three queries constrained decoding needs: extend a
matched prefix by one token, enumerate feasible next tokens, and map a
match back to SID records.

Layout. Each SID contributes one segment: its token sequence REVERSED,
followed by one END_SID sentinel. A left-to-right generated prefix P then
corresponds to the backward-search pattern rev(P)+END, so appending one
token costs one LF/backward step. Matching is anchored at SID starts: the
interval of P holds exactly one row per SID that has P as a prefix.

Sentinels are stored as symbol 0 in the BWT but are given distinct sort
ranks during suffix sorting, ordered by (segment token length, build
order). Two consequences the query code relies on:

* rows inside an interval are ordered by that rank, so the rows of SIDs
  exactly equal to P (minimal length) form the FIRST contiguous block of
  the interval; extending with END_SID is therefore (lo, lo+c) where c is
  the END count in BWT[lo:hi);
* suffix comparisons always terminate at a distinct sentinel, so sorting
  windows of max_segment+1 symbols sorts the suffixes exactly.

SA samples are taken segment-relative (every sa_stride-th position from
each segment start), so locate walks never cross a sentinel.
"""

from __future__ import annotations

import struct
from bisect import bisect_right
from dataclasses import dataclass

from .errors import CorruptIndex, EmptyInterval, EmptySidSet, VocabMismatch
from .tokenizer import END_SID
from .util import sha256_hex

MAGIC = b"FMSID"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Interval:
    """Half-open suffix-array range for a matched generated prefix.

    ``depth`` is the number of tokens matched; ``terminal`` marks an
    interval produced by an END_SID extension (a completed SID), which
    admits no further extension.
    """

    lo: int
    hi: int
    depth: int = 0
    terminal: bool = False

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def empty(self) -> bool:
        return self.hi <= self.lo


class FmIndex:
    """Immutable after build; all queries are read-only."""

    def __init__(
        self,
        bwt: list[int],
        c_table: list[int],
        occ_checkpoints: dict[int, list[int]],
        sa_samples: dict[int, int],
        seg_starts: list[int],
        sid_ids: list[int],
        sid_tokens: list[tuple[int, ...]],
        vocab_size: int,
        vocab_digest: str,
        occ_stride: int,
        sa_stride: int,
    ):
        self.bwt = bwt
        self.c_table = c_table
        self.occ_checkpoints = occ_checkpoints
        self.sa_samples = sa_samples
        self.seg_starts = seg_starts
        self.sid_ids = sid_ids
        self.sid_tokens = sid_tokens
        self.vocab_size = vocab_size
        self.vocab_digest = vocab_digest
        self.occ_stride = occ_stride
        self.sa_stride = sa_stride
        self.n_sids = len(sid_ids)
        self.size = len(bwt)
        # Complete-sequence lookup: token tuple -> sid_ids (duplicates allowed).
        self._exact: dict[tuple[int, ...], list[int]] = {}
        for idx, toks in enumerate(sid_tokens):
            self._exact.setdefault(toks, []).append(sid_ids[idx])

    # --- construction ----------------------------------------------------

    @classmethod
    def build(cls, sids, vocab, occ_stride: int = 64, sa_stride: int = 16) -> "FmIndex":
        """Index tokenized SID records under ``vocab``."""
        return cls.build_raw(sids, vocab.size, vocab.digest, occ_stride, sa_stride)

    @classmethod
    def build_raw(
        cls, sids, vocab_size: int, vocab_digest: str, occ_stride: int = 64, sa_stride: int = 16
    ) -> "FmIndex":
        if not sids:
            raise EmptySidSet("cannot index an empty SID set")
        for s in sids:
            if s.token_ids is None:
                raise VocabMismatch(f"sid {s.sid_id} has no token_ids; tokenize the corpus first")
            if len(s.token_ids) == 0:
                raise VocabMismatch(f"sid {s.sid_id} has an empty token sequence")
            for t in s.token_ids:
                if t < 2 or t >= vocab_size:
                    raise VocabMismatch(f"sid {s.sid_id} holds token id {t} outside the vocabulary")

        n_sids = len(sids)
        seg_lens = [len(s.token_ids) for s in sids]
        # Distinct sentinel ranks: ascending (segment length, build order).
        order = sorted(range(n_sids), key=lambda k: (seg_lens[k], k))
        end_rank = [0] * n_sids
        for rank, k in enumerate(order):
            end_rank[k] = rank

        symbols: list[int] = []  # collapsed alphabet (END_SID = 0)
        ranks: list[int] = []  # sort alphabet (distinct sentinels first)
        seg_starts: list[int] = []
        for k, s in enumerate(sids):
            seg_starts.append(len(symbols))
            for t in reversed(s.token_ids):
                symbols.append(t)
                ranks.append(n_sids + t)
            symbols.append(END_SID)
            ranks.append(end_rank[k])

        n = len(symbols)
        window = max(seg_lens) + 1
        sa = sorted(range(n), key=lambda i: ranks[i : i + window])

        bwt = [symbols[sa[i] - 1] for i in range(n)]  # -1 wraps to the last sentinel

        counts = [0] * vocab_size
        for sym in symbols:
            counts[sym] += 1
        c_table = [0] * vocab_size
        running = counts[END_SID]
        for t in range(2, vocab_size):
            c_table[t] = running
            running += counts[t]
        c_table[1] = counts[END_SID]  # UNK never occurs; kept consistent

        occ_checkpoints: dict[int, list[int]] = {}
        tally: dict[int, int] = {}
        for i, sym in enumerate(bwt):
            if i % occ_stride == 0:
                for known in tally:
                    occ_checkpoints[known].append(tally[known])
            if sym not in tally:
                tally[sym] = 0
                occ_checkpoints[sym] = [0] * (i // occ_stride + 1)
            tally[sym] += 1
        # Trailing checkpoint so occ at i == n resolves without scanning past the end.
        n_ckpt = n // occ_stride + 1
        for known in occ_checkpoints:
            while len(occ_checkpoints[known]) < n_ckpt:
                occ_checkpoints[known].append(tally[known])

        sa_samples: dict[int, int] = {}
        for row, pos in enumerate(sa):
            k = bisect_right(seg_starts, pos) - 1
            if (pos - seg_starts[k]) % sa_stride == 0:
                sa_samples[row] = pos

        return cls(
            bwt=bwt,
            c_table=c_table,
            occ_checkpoints=occ_checkpoints,
            sa_samples=sa_samples,
            seg_starts=seg_starts,
            sid_ids=[s.sid_id for s in sids],
            sid_tokens=[tuple(s.token_ids) for s in sids],
            vocab_size=vocab_size,
            vocab_digest=vocab_digest,
            occ_stride=occ_stride,
            sa_stride=sa_stride,
        )

    # --- core queries ------------------------------------------------------

    def occ(self, sym: int, i: int) -> int:
        """Occurrences of ``sym`` in BWT[0:i]."""
        ckpts = self.occ_checkpoints.get(sym)
        if ckpts is None:
            return 0
        j = i // self.occ_stride
        base = j * self.occ_stride
        if j >= len(ckpts):
            j = len(ckpts) - 1
            base = j * self.occ_stride
        return ckpts[j] + self.bwt[base:i].count(sym)

    def root_interval(self) -> Interval:
        """Match of the empty prefix: the whole range at depth 0."""
        return Interval(0, self.size, 0)

    def _source_range(self, interval: Interval) -> tuple[int, int]:
        # The empty prefix extends through the sentinel block, anchoring
        # the first generated token to SID starts.
        if interval.depth == 0:
            return 0, self.n_sids
        return interval.lo, interval.hi

    def extend(self, interval: Interval, token: int) -> Interval:
        """Interval of prefix+token; (lo == hi) signals an infeasible extension."""
        if interval.terminal or interval.empty:
            return Interval(interval.lo, interval.lo, interval.depth + 1)
        lo, hi = self._source_range(interval)
        if token == END_SID:
            if interval.depth == 0:
                return Interval(0, 0, 0, terminal=True)
            c = self.occ(END_SID, hi) - self.occ(END_SID, lo)
            return Interval(interval.lo, interval.lo + c, interval.depth, terminal=True)
        if token < 0 or token >= self.vocab_size:
            return Interval(0, 0, interval.depth + 1)
        base = self.c_table[token]
        return Interval(
            base + self.occ(token, lo),
            base + self.occ(token, hi),
            interval.depth + 1,
        )

    def continuations(self, interval: Interval) -> dict[int, Interval]:
        """Feasible next tokens, each with its extended interval.

        END_SID appears iff some SID ends exactly at the matched prefix.
        """
        if interval.empty:
            raise EmptyInterval("cannot enumerate continuations of an empty interval")
        if interval.terminal:
            return {}
        lo, hi = self._source_range(interval)
        segment = self.bwt[lo:hi]
        out: dict[int, Interval] = {}
        for sym in sorted(set(segment)):
            if sym == END_SID:
                if interval.depth == 0:
                    continue
                c = segment.count(END_SID)
                out[END_SID] = Interval(interval.lo, interval.lo + c, interval.depth, terminal=True)
            else:
                base = self.c_table[sym]
                out[sym] = Interval(
                    base + self.occ(sym, lo),
                    base + self.occ(sym, hi),
                    interval.depth + 1,
                )
        return out

    def _resolve_row(self, row: int) -> int:
        """Text position of the suffix in this BWT row, via sample walking."""
        steps = 0
        while row not in self.sa_samples:
            sym = self.bwt[row]
            row = self.c_table[sym] + self.occ(sym, row)
            steps += 1
        return self.sa_samples[row] + steps

    def locate(self, interval: Interval) -> set[int]:
        """sid_ids of all occurrences in the interval."""
        if interval.empty:
            raise EmptyInterval("cannot locate an empty interval")
        if interval.depth == 0:
            return set(self.sid_ids)
        found = set()
        for row in range(interval.lo, interval.hi):
            pos = self._resolve_row(row)
            k = bisect_right(self.seg_starts, pos) - 1
            found.add(self.sid_ids[k])
        return found

    def count(self, pattern: list[int]) -> int:
        """Occurrences of ``pattern`` as a prefix-extension chain from root."""
        interval = self.root_interval()
        for token in pattern:
            interval = self.extend(interval, token)
            if interval.empty:
                return 0
        return interval.size

    def complete_sids(self, tokens: tuple[int, ...]) -> list[int]:
        """sid_ids whose full token sequence equals ``tokens``."""
        return list(self._exact.get(tuple(tokens), ()))

    # --- serialization -----------------------------------------------------

    def to_bytes(self) -> bytes:
        parts = [MAGIC, struct.pack("<H", FORMAT_VERSION)]
        digest = self.vocab_digest.encode("ascii")
        parts.append(struct.pack("<H", len(digest)))
        parts.append(digest)
        parts.append(
            struct.pack(
                "<IIIII",
                self.occ_stride,
                self.sa_stride,
                self.size,
                self.n_sids,
                self.vocab_size,
            )
        )
        parts.append(struct.pack(f"<{self.vocab_size}I", *self.c_table))
        parts.append(struct.pack(f"<{self.size}I", *self.bwt))
        parts.append(struct.pack("<I", len(self.occ_checkpoints)))
        for sym in sorted(self.occ_checkpoints):
            values = self.occ_checkpoints[sym]
            parts.append(struct.pack("<II", sym, len(values)))
            parts.append(struct.pack(f"<{len(values)}I", *values))
        parts.append(struct.pack("<I", len(self.sa_samples)))
        for row in sorted(self.sa_samples):
            parts.append(struct.pack("<II", row, self.sa_samples[row]))
        parts.append(struct.pack("<I", self.n_sids))
        for k in range(self.n_sids):
            toks = self.sid_tokens[k]
            parts.append(struct.pack("<III", self.seg_starts[k], self.sid_ids[k], len(toks)))
            parts.append(struct.pack(f"<{len(toks)}I", *toks))
        payload = b"".join(parts)
        return payload + sha256_hex(payload)[:32].encode("ascii")

    @classmethod
    def from_bytes(cls, data: bytes, vocab_digest: str | None = None) -> "FmIndex":
        if len(data) < 32:
            raise CorruptIndex("index file truncated")
        payload, checksum = data[:-32], data[-32:]
        if sha256_hex(payload)[:32].encode("ascii") != checksum:
            raise CorruptIndex("index checksum mismatch")
        try:
            return cls._parse(payload, vocab_digest)
        except (struct.error, IndexError, UnicodeDecodeError) as exc:
            raise CorruptIndex(f"malformed index payload: {exc}") from None

    @classmethod
    def _parse(cls, data: bytes, vocab_digest: str | None) -> "FmIndex":
        off = 0
        if data[:5] != MAGIC:
            raise CorruptIndex("bad magic; not an FMSID index")
        off = 5
        (version,) = struct.unpack_from("<H", data, off)
        off += 2
        if version != FORMAT_VERSION:
            raise CorruptIndex(f"unsupported index format version {version}")
        (dlen,) = struct.unpack_from("<H", data, off)
        off += 2
        stored_digest = data[off : off + dlen].decode("ascii")
        off += dlen
        if vocab_digest is not None and stored_digest != vocab_digest:
            raise CorruptIndex("index was built under a different vocabulary")
        occ_stride, sa_stride, n, n_sids, vocab_size = struct.unpack_from("<IIIII", data, off)
        off += 20
        c_table = list(struct.unpack_from(f"<{vocab_size}I", data, off))
        off += 4 * vocab_size
        bwt = list(struct.unpack_from(f"<{n}I", data, off))
        off += 4 * n
        (n_syms,) = struct.unpack_from("<I", data, off)
        off += 4
        occ_checkpoints: dict[int, list[int]] = {}
        for _ in range(n_syms):
            sym, length = struct.unpack_from("<II", data, off)
            off += 8
            occ_checkpoints[sym] = list(struct.unpack_from(f"<{length}I", data, off))
            off += 4 * length
        (n_samples,) = struct.unpack_from("<I", data, off)
        off += 4
        sa_samples: dict[int, int] = {}
        for _ in range(n_samples):
            row, pos = struct.unpack_from("<II", data, off)
            off += 8
            sa_samples[row] = pos
        (n_docs,) = struct.unpack_from("<I", data, off)
        off += 4
        if n_docs != n_sids:
            raise CorruptIndex("doc table length disagrees with header")
        seg_starts, sid_ids, sid_tokens = [], [], []
        for _ in range(n_docs):
            start, sid_id, tlen = struct.unpack_from("<III", data, off)
            off += 12
            toks = struct.unpack_from(f"<{tlen}I", data, off)
            off += 4 * tlen
            seg_starts.append(start)
            sid_ids.append(sid_id)
            sid_tokens.append(tuple(toks))
        if off != len(data):
            raise CorruptIndex("trailing bytes after doc table")
        return cls(
            bwt=bwt,
            c_table=c_table,
            occ_checkpoints=occ_checkpoints,
            sa_samples=sa_samples,
            seg_starts=seg_starts,
            sid_ids=sid_ids,
            sid_tokens=sid_tokens,
            vocab_size=vocab_size,
            vocab_digest=stored_digest,
            occ_stride=occ_stride,
            sa_stride=sa_stride,
        )

    def save(self, path: str) -> None:
        from .util import atomic_write_bytes

        atomic_write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path: str, vocab_digest: str | None = None) -> "FmIndex":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), vocab_digest)

"""
Reference embedding store: append-only records searched brute-force by cosine similarity,
per-frame classification, majority voting and line-delimited JSON snapshots.
"""
import threading
from collections import Counter, defaultdict
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from loguru import logger

from foiwatch.errors import (ContractViolation, DuplicateIndexError, EmptyInputError, EmptyStoreError,
                             ParseError)
from foiwatch.models.reference import ClassTaxonomy, Match, ReferenceRecord, SnapshotHeader, VoteSummary
from foiwatch.utils import settings
from foiwatch.utils.io import Source, dumps, iter_jsonl, open_text, parse_model
from foiwatch.vectorspace import ACCUMULATOR_DTYPE, STORAGE_DTYPE, as_embedding

_INITIAL_CAPACITY = 64


class _StoreView(NamedTuple):
    """Immutable-prefix view; rows below `count` are never rewritten"""
    count: int
    indices: np.ndarray
    raw: np.ndarray
    unit: np.ndarray
    norms: np.ndarray
    labels: list
    paths: list


def _empty_view(dim: int, capacity: int) -> _StoreView:
    return _StoreView(
        count=0,
        indices=np.zeros(capacity, dtype=np.int64),
        raw=np.zeros((capacity, dim), dtype=STORAGE_DTYPE),
        unit=np.zeros((capacity, dim), dtype=STORAGE_DTYPE),
        norms=np.zeros(capacity, dtype=ACCUMULATOR_DTYPE),
        labels=[],
        paths=[],
    )


class ReferenceStore:
    """
    In-memory reference dataset.

    Readers (nearest / classify_frame) take a single reference to the current view and never
    lock; writers serialise on a lock and publish a new view after the row is fully written,
    so a read sees either the pre-insert or the post-insert store.
    """

    def __init__(self, dim: int = settings.DEFAULT_DIM, taxonomy: Optional[ClassTaxonomy] = None):
        if dim < 1:
            raise ContractViolation(f"dim must be positive, got {dim}")
        self.dim = dim
        self.taxonomy = taxonomy
        self._lock = threading.Lock()
        self._positions: dict[int, int] = {}
        self._next_index = 0
        self._view = _empty_view(dim, _INITIAL_CAPACITY)
        # float32 dot products of unit vectors are off by at most ~dim * eps32
        self._coarse_slack = 4.0 * dim * float(np.finfo(np.float32).eps)

    def __len__(self) -> int:
        return self._view.count

    def insert(self, record: ReferenceRecord) -> int:
        """
        Appends a record; new labels need no other change.

        Returns:
            The assigned index (the record's own, or the next free one)

        Raises:
            DuplicateIndexError: explicit index already present
            DimensionMismatchError / ZeroNormError / NonFiniteError: invalid embedding
        """
        embedding = as_embedding(record.embedding, self.dim)
        with self._lock:
            index = self._next_index if record.index is None else record.index
            if index in self._positions:
                raise DuplicateIndexError(f"index {index} already present in the store")

            view = self._view
            position = view.count
            if position == view.indices.shape[0]:
                view = self._grow(view)

            vector = embedding.astype(ACCUMULATOR_DTYPE)
            norm = float(np.sqrt(np.dot(vector, vector)))
            view.indices[position] = index
            view.raw[position] = embedding
            view.unit[position] = (vector / norm).astype(STORAGE_DTYPE)
            view.norms[position] = norm
            view.labels.append(record.label)
            view.paths.append(record.source_path)

            self._positions[index] = position
            self._next_index = max(self._next_index, index + 1)
            self._view = view._replace(count=position + 1)

        if self.taxonomy is not None and not self.taxonomy.covers(record.label):
            logger.bind(index=index).warning(
                f"Label '{record.label}' is not mapped by taxonomy '{self.taxonomy.name}'")
        logger.debug(f"Inserted reference {index} ({record.label})")
        return index

    def extend(self, records: Iterable[ReferenceRecord]) -> list[int]:
        return [self.insert(record) for record in records]

    def _grow(self, view: _StoreView) -> _StoreView:
        capacity = max(_INITIAL_CAPACITY, 2 * view.indices.shape[0])
        grown = _empty_view(self.dim, capacity)
        n = view.count
        grown.indices[:n] = view.indices[:n]
        grown.raw[:n] = view.raw[:n]
        grown.unit[:n] = view.unit[:n]
        grown.norms[:n] = view.norms[:n]
        return grown._replace(count=n, labels=view.labels, paths=view.paths)

    def get(self, index: int) -> ReferenceRecord:
        view = self._view
        position = self._positions.get(index)
        if position is None or position >= view.count:
            raise KeyError(index)
        return self._record_at(view, position)

    @staticmethod
    def _record_at(view: _StoreView, position: int) -> ReferenceRecord:
        return ReferenceRecord.model_construct(
            index=int(view.indices[position]),
            label=view.labels[position],
            source_path=view.paths[position],
            embedding=view.raw[position].copy(),
        )

    def records(self) -> list[ReferenceRecord]:
        view = self._view
        return [self._record_at(view, i) for i in range(view.count)]

    def labels(self) -> list[str]:
        view = self._view
        return sorted(set(view.labels[:view.count]))

    def unmapped_labels(self, taxonomy: Optional[ClassTaxonomy] = None) -> list[str]:
        taxonomy = taxonomy or self.taxonomy
        if taxonomy is None:
            return []
        return [label for label in self.labels() if not taxonomy.covers(label)]

    def nearest(self, query, k: int = 1) -> list[Match]:
        """
        Exact top-k by cosine similarity over every record.

        A float32 pass over the unit-normalised rows keeps every candidate within rounding slack
        of the k-th best score; candidates are rescored in float64 from the stored payload and
        ordered by similarity descending, then record index ascending.
        """
        if k < 1:
            raise ContractViolation(f"k must be at least 1, got {k}")
        view = self._view
        n = view.count
        if n == 0:
            raise EmptyStoreError("reference store is empty")

        q = as_embedding(query, self.dim).astype(ACCUMULATOR_DTYPE)
        q_norm = float(np.sqrt(np.dot(q, q)))
        k = min(k, n)

        if k < n:
            coarse = view.unit[:n] @ (q / q_norm).astype(STORAGE_DTYPE)
            kth = np.partition(coarse, n - k)[n - k]
            candidates = np.flatnonzero(coarse >= kth - self._coarse_slack)
        else:
            candidates = np.arange(n)

        exact = (view.raw[candidates].astype(ACCUMULATOR_DTYPE) @ q) / (view.norms[candidates] * q_norm)
        exact = np.clip(exact, -1.0, 1.0)
        order = np.lexsort((view.indices[candidates], -exact))[:k]

        return [
            Match(record_index=int(view.indices[candidates[i]]),
                  label=view.labels[candidates[i]],
                  similarity=float(exact[i]))
            for i in order
        ]

    def classify_frame(self, query) -> Match:
        return self.nearest(query, 1)[0]


def majority_vote(votes: Sequence[Match]) -> VoteSummary:
    """
    Mode of the per-frame labels. Ties go to the higher mean similarity, then to the
    lexicographically smaller label.
    """
    if not votes:
        raise EmptyInputError("majority vote needs at least one per-frame match")
    counts = Counter(vote.label for vote in votes)
    sums: dict[str, float] = defaultdict(float)
    for vote in votes:
        sums[vote.label] += vote.similarity
    means = {label: sums[label] / counts[label] for label in counts}

    winner = min(counts, key=lambda label: (-counts[label], -means[label], label))
    return VoteSummary(
        label=winner,
        votes=counts[winner],
        total=len(votes),
        counts={label: counts[label] for label in sorted(counts)},
        mean_similarity={label: means[label] for label in sorted(means)},
    )


def save_snapshot(store: ReferenceStore, destination: Source) -> int:
    """
    Writes the header line and one record per line, in insertion order.

    Returns:
        Number of records written
    """
    records = store.records()
    header = SnapshotHeader(dim=store.dim, count=len(records))
    with open_text(destination, 'w') as out:
        out.write(dumps(header))
        out.write('\n')
        for record in records:
            out.write(dumps(record))
            out.write('\n')
    logger.info(f"Saved {len(records)} reference records", destination=str(destination))
    return len(records)


def load_snapshot(source: Source, dim: Optional[int] = None,
                  taxonomy: Optional[ClassTaxonomy] = None) -> ReferenceStore:
    """
    Reads a snapshot written by `save_snapshot`.

    Args:
        source: Path, ``-`` or open text stream
        dim: Session dimension the header must agree with (skipped when None)
        taxonomy: Taxonomy attached to the loaded store

    Raises:
        ParseError: malformed line (with its line number), header/session dim mismatch,
            count mismatch, duplicate index
    """
    lines = iter_jsonl(source)
    first = next(lines, None)
    if first is None:
        raise ParseError("snapshot is empty, expected a header line", line=1)
    line_no, data = first
    header = parse_model(SnapshotHeader, data, line=line_no)
    if dim is not None and header.dim != dim:
        raise ParseError(f"snapshot dim {header.dim} does not match session dim {dim}",
                         line=line_no, field='dim')

    store = ReferenceStore(dim=header.dim, taxonomy=taxonomy)
    context = {'dim': header.dim}
    for line_no, data in lines:
        record = parse_model(ReferenceRecord, data, line=line_no, context=context)
        if record.index is None:
            raise ParseError("snapshot records need an explicit index", line=line_no, field='index')
        try:
            store.insert(record)
        except ContractViolation as e:
            raise ParseError(str(e), line=line_no) from e

    if len(store) != header.count:
        raise ParseError(f"header announces {header.count} records but {len(store)} were read",
                         line=1, field='count')
    logger.info(f"Loaded {len(store)} reference records (dim {store.dim})")
    return store

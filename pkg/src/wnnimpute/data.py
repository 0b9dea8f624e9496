"""Categorical data model, dummy encoding and CSV/schema I/O.

Cells hold 1-based category codes; missing cells hold :data:`MISSING`.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import yaml

from .errors import DegenerateColumnError, ParseError, SchemaError

MISSING = -1
CODE_DTYPE = np.int32


@dataclass(frozen=True)
class AttributeSpec:
    index: int
    num_categories: int
    labels: Optional[tuple[str, ...]] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.num_categories < 2:
            raise SchemaError(
                f"attribute {self.index}: num_categories must be >= 2, got {self.num_categories}"
            )
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != self.num_categories or len(set(labels)) != len(labels):
                raise SchemaError(
                    f"attribute {self.index}: labels must be {self.num_categories} distinct strings"
                )

    @property
    def display_name(self) -> str:
        return self.name if self.name is not None else f"V{self.index}"

    def token(self, code: int) -> str:
        if self.labels is None:
            return str(code)
        return self.labels[code - 1]


@dataclass(frozen=True, eq=False)
class CategoricalMatrix:
    """An ``n x p`` matrix of category codes with per-column category counts.

    ``codes[i, s]`` is in ``1..k_s`` when observed and ``MISSING`` otherwise.
    The array is stored read-only.
    """

    codes: np.ndarray
    attributes: tuple[AttributeSpec, ...]

    def __post_init__(self):
        codes = np.array(self.codes, dtype=CODE_DTYPE, copy=True)
        if codes.ndim != 2:
            raise SchemaError(f"codes must be 2-D, got shape {codes.shape}")
        attrs = tuple(self.attributes)
        if codes.shape[1] != len(attrs):
            raise SchemaError(
                f"codes have {codes.shape[1]} columns but {len(attrs)} attributes given"
            )
        k = np.array([a.num_categories for a in attrs], dtype=CODE_DTYPE)
        bad = (codes != MISSING) & ((codes < 1) | (codes > k[None, :]))
        if bad.any():
            i, s = np.argwhere(bad)[0]
            raise SchemaError(
                f"cell ({i}, {s}) has code {codes[i, s]} outside 1..{k[s]}"
            )
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "attributes", attrs)

    @classmethod
    def from_codes(cls, codes, num_categories=None) -> "CategoricalMatrix":
        """Build from an integer array; category counts default to column maxima."""
        codes = np.asarray(codes)
        if num_categories is None:
            obs = np.where(codes == MISSING, 0, codes)
            num_categories = np.maximum(obs.max(axis=0), 2) if codes.size else []
        elif np.isscalar(num_categories):
            num_categories = [int(num_categories)] * codes.shape[1]
        attrs = tuple(
            AttributeSpec(index=s + 1, num_categories=int(k))
            for s, k in enumerate(num_categories)
        )
        return cls(codes, attrs)

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    @property
    def p(self) -> int:
        return self.codes.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    @property
    def num_categories(self) -> np.ndarray:
        return np.array([a.num_categories for a in self.attributes], dtype=np.int64)

    @property
    def observed(self) -> np.ndarray:
        """Boolean observedness mask (``o_is``)."""
        return self.codes != MISSING

    @property
    def n_missing(self) -> int:
        return int((self.codes == MISSING).sum())

    def with_codes(self, codes) -> "CategoricalMatrix":
        return CategoricalMatrix(codes, self.attributes)

    def equals(self, other: "CategoricalMatrix") -> bool:
        return (
            self.shape == other.shape
            and bool(np.array_equal(self.codes, other.codes))
            and [a.num_categories for a in self.attributes]
            == [a.num_categories for a in other.attributes]
        )


def missing_mask(Z: CategoricalMatrix) -> np.ndarray:
    """Return the ``n x p`` 0/1 observedness matrix as uint8."""
    return Z.observed.astype(np.uint8)


@dataclass(frozen=True, eq=False)
class DummyMatrix:
    """One-hot expansion. ``values`` is ``n x sum(k_s)``; ``offsets[s]`` is the
    first column of attribute ``s`` and ``offsets[p]`` the total width."""

    values: np.ndarray
    offsets: np.ndarray
    col_attr: np.ndarray = field(repr=False)

    def block(self, s: int) -> slice:
        return slice(int(self.offsets[s]), int(self.offsets[s + 1]))

    @property
    def width(self) -> int:
        return int(self.offsets[-1])

    def decode(self) -> np.ndarray:
        """Block-argmax decoding back to codes; all-zero blocks decode to MISSING."""
        n = self.values.shape[0]
        p = len(self.offsets) - 1
        out = np.full((n, p), MISSING, dtype=CODE_DTYPE)
        for s in range(p):
            blk = self.values[:, self.block(s)]
            hit = blk.sum(axis=1) > 0
            out[hit, s] = blk[hit].argmax(axis=1) + 1
        return out


def encode_dummies(Z: CategoricalMatrix) -> DummyMatrix:
    k = Z.num_categories
    offsets = np.concatenate([[0], np.cumsum(k)]).astype(np.int64)
    values = np.zeros((Z.n, int(offsets[-1])), dtype=np.float64)
    rows, cols = np.nonzero(Z.observed)
    values[rows, offsets[cols] + Z.codes[rows, cols] - 1] = 1.0
    values.setflags(write=False)
    col_attr = np.repeat(np.arange(Z.p), k)
    return DummyMatrix(values, offsets, col_attr)


# --------------------------------------------------------------------- schema

def read_schema(path) -> list[AttributeSpec]:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or not isinstance(doc.get("columns"), list):
        raise SchemaError(f"{path}: expected a mapping with a 'columns' list")
    out = []
    for idx, col in enumerate(doc["columns"], start=1):
        labels = col.get("labels")
        k = col.get("num_categories", len(labels) if labels else None)
        if k is None:
            raise SchemaError(f"{path}: column {idx} needs num_categories or labels")
        out.append(
            AttributeSpec(
                index=idx,
                num_categories=int(k),
                labels=tuple(labels) if labels else None,
                name=col.get("name"),
            )
        )
    return out


def write_schema(attributes: Sequence[AttributeSpec], path) -> None:
    cols = []
    for a in attributes:
        entry = {"name": a.display_name, "num_categories": a.num_categories}
        if a.labels is not None:
            entry["labels"] = list(a.labels)
        cols.append(entry)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump({"columns": cols}, fh, sort_keys=False)


# ------------------------------------------------------------------------ csv

def _data_lines(fh) -> Iterable[str]:
    for line in fh:
        if not line.startswith("#"):
            yield line


def read_csv(path, schema: Optional[Sequence[AttributeSpec]] = None,
             missing_token: str = "NA") -> CategoricalMatrix:
    """Read a header-first CSV into a :class:`CategoricalMatrix`.

    Without ``schema`` categories are coded by first appearance per column and
    the tokens become the attribute labels. Lines starting with ``#`` are
    skipped so files carrying a provenance header can be read back.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(_data_lines(fh), strict=True))
    except csv.Error as exc:
        raise ParseError(f"{path}: malformed CSV: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError(f"{path}: empty file (no header)")
    header, body = rows[0], rows[1:]
    p = len(header)
    for r, row in enumerate(body, start=2):
        if len(row) != p:
            raise ParseError(
                f"{path}: row {r} has {len(row)} fields, header has {p}"
            )
    if schema is not None and len(schema) != p:
        raise SchemaError(f"{path}: schema lists {len(schema)} columns, file has {p}")

    codes = np.full((len(body), p), MISSING, dtype=CODE_DTYPE)
    attrs = []
    for s in range(p):
        column = [row[s] for row in body]
        if schema is None:
            lookup: dict[str, int] = {}
            for i, tok in enumerate(column):
                if tok == missing_token:
                    continue
                codes[i, s] = lookup.setdefault(tok, len(lookup) + 1)
            if len(lookup) < 2:
                raise DegenerateColumnError(
                    f"{path}: column {s + 1} ({header[s]!r}) has {len(lookup)} distinct "
                    "observed value(s); at least 2 are required"
                )
            attrs.append(AttributeSpec(s + 1, len(lookup), tuple(lookup), header[s]))
        else:
            spec = schema[s]
            if spec.labels is not None:
                lookup = {lab: c for c, lab in enumerate(spec.labels, start=1)}
            else:
                lookup = {str(c): c for c in range(1, spec.num_categories + 1)}
            for i, tok in enumerate(column):
                if tok == missing_token:
                    continue
                try:
                    codes[i, s] = lookup[tok]
                except KeyError:
                    raise SchemaError(
                        f"{path}: row {i + 2}, column {s + 1} ({header[s]!r}): "
                        f"token {tok!r} not in schema"
                    ) from None
            attrs.append(AttributeSpec(s + 1, spec.num_categories, spec.labels,
                                       spec.name if spec.name is not None else header[s]))
    return CategoricalMatrix(codes, tuple(attrs))


def format_csv(Z: CategoricalMatrix, missing_token: str = "NA",
               header_lines: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([a.display_name for a in Z.attributes])
    for row in Z.codes:
        w.writerow([
            missing_token if c == MISSING else a.token(int(c))
            for c, a in zip(row, Z.attributes)
        ])
    return buf.getvalue()


def write_csv(Z: CategoricalMatrix, path, missing_token: str = "NA",
              header_lines: Sequence[str] = ()) -> None:
    text = format_csv(Z, missing_token, header_lines)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc

"""Label-similarity protocols producing scores in [0, 1].

Three protocol kinds are supported:

* ``strict`` scores 1 for exactly equal normalized labels, else 0.
* ``constant_one`` scores 1 for every pair (the label-agnostic "LQ1" view).
* ``table`` looks pairs up in a precomputed symmetric table, e.g. produced
  offline from embedding or lexical backends.  Self-pairs default to 1 when
  absent; missing cross-pairs either fall back to a configured default or
  reject the evaluation outright.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import SimilarityError
from .tree import normalize_label

log = logging.getLogger(__name__)

# Policy marker for default_for_missing: fail on pairs absent from the table.
REJECT = "reject"


@dataclass(frozen=True)
class SimilarityProtocol:
    kind: str
    table: Mapping[tuple[str, str], float] | None = None
    default_for_missing: float | str = REJECT
    name: str = field(default="", compare=False)

    @classmethod
    def strict(cls) -> "SimilarityProtocol":
        return cls(kind="strict", name="strict")

    @classmethod
    def constant_one(cls) -> "SimilarityProtocol":
        return cls(kind="constant_one", name="lq1")

    @classmethod
    def from_table(cls, table: Mapping[tuple[str, str], float],
                   default_for_missing: float | str = REJECT,
                   name: str = "table") -> "SimilarityProtocol":
        clean: dict[tuple[str, str], float] = {}
        for (a, b), sim in table.items():
            if not 0.0 <= sim <= 1.0:
                raise SimilarityError(
                    f"similarity for ({a!r}, {b!r}) is {sim}, outside [0, 1]")
            a, b = normalize_label(a), normalize_label(b)
            clean[(a, b) if a <= b else (b, a)] = float(sim)
        if (isinstance(default_for_missing, str)
                and default_for_missing != REJECT):
            raise SimilarityError(
                f"default_for_missing must be a float or {REJECT!r}")
        if (not isinstance(default_for_missing, str)
                and not 0.0 <= default_for_missing <= 1.0):
            raise SimilarityError(
                f"default_for_missing {default_for_missing} outside [0, 1]")
        return cls(kind="table", table=clean,
                   default_for_missing=default_for_missing, name=name)


def similarity(proto: SimilarityProtocol, a: str, b: str) -> float:
    """Symmetric similarity of two normalized labels under a protocol."""
    if proto.kind == "strict":
        return 1.0 if a == b else 0.0
    if proto.kind == "constant_one":
        return 1.0
    if proto.kind == "table":
        key = (a, b) if a <= b else (b, a)
        assert proto.table is not None
        value = proto.table.get(key)
        if value is not None:
            return value
        if a == b:
            return 1.0
        if proto.default_for_missing == REJECT:
            raise SimilarityError(
                f"label pair ({a!r}, {b!r}) missing from similarity table")
        return float(proto.default_for_missing)
    raise SimilarityError(f"unknown protocol kind {proto.kind!r}")


def load_similarity_table(source: str | Path | Iterable[str],
                          default_for_missing: float | str = REJECT,
                          name: str = "table") -> SimilarityProtocol:
    """Load a JSONL table of ``{"a": str, "b": str, "sim": float}`` rows.

    Labels are normalized on load; of duplicate unordered pairs the later row
    wins, with a warning.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_similarity_table(list(fh), default_for_missing,
                                         name=str(source))
    table: dict[tuple[str, str], float] = {}
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SimilarityError(f"line {lineno}: malformed JSON: {exc.msg}") from exc
        if (not isinstance(row, dict) or not isinstance(row.get("a"), str)
                or not isinstance(row.get("b"), str)
                or not isinstance(row.get("sim"), (int, float))
                or isinstance(row.get("sim"), bool)):
            raise SimilarityError(
                f"line {lineno}: expected {{'a': str, 'b': str, 'sim': float}}")
        sim = float(row["sim"])
        if not 0.0 <= sim <= 1.0:
            raise SimilarityError(f"line {lineno}: sim {sim} outside [0, 1]")
        a, b = normalize_label(row["a"]), normalize_label(row["b"])
        key = (a, b) if a <= b else (b, a)
        if key in table:
            log.warning("duplicate similarity pair %r at line %d, later value wins",
                        key, lineno)
        table[key] = sim
    return SimilarityProtocol.from_table(table, default_for_missing, name=name)


def protocol_from_spec(spec: str,
                       default_for_missing: float | str = REJECT) -> SimilarityProtocol:
    """Resolve a ``--label-sim`` style selector: strict | lq1 | table:<path>."""
    if spec == "strict":
        return SimilarityProtocol.strict()
    if spec == "lq1":
        return SimilarityProtocol.constant_one()
    if spec.startswith("table:"):
        path = spec[len("table:"):]
        if not path:
            raise SimilarityError("table selector needs a path: table:<path>")
        return load_similarity_table(path, default_for_missing)
    raise SimilarityError(
        f"unknown label-sim selector {spec!r}; use strict, lq1, or table:<path>")

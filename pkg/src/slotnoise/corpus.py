"""Slot-filling data model: labeled examples, BIO conversion, dataset IO.

An utterance is a pre-tokenized sequence of whitespace-free tokens; its gold
annotation is a list of non-overlapping token-index spans, each carrying a
slot type. Datasets are immutable after construction and validated eagerly,
so anything that loads is safe to share across workers.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import ConfigError, DataError, ParseError

log = logging.getLogger(__name__)

CLEAN_PROVENANCE = "clean"
_PERTURBED_PREFIX = "perturbed:"

JSONL_SPANS = "jsonl_spans"
CONLL_BIO = "conll_bio"
FORMATS = (JSONL_SPANS, CONLL_BIO)


@dataclass(frozen=True)
class LabelSet:
    """Ordered collection of unique slot-type names."""

    names: tuple[str, ...]
    _index: frozenset[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        seen: set[str] = set()
        for name in self.names:
            if not name:
                raise DataError("label names must be non-empty")
            if "\n" in name:
                raise DataError(f"label name contains a newline: {name!r}")
            if name in seen:
                raise DataError(f"duplicate label name: {name!r}")
            seen.add(name)
        object.__setattr__(self, "_index", frozenset(seen))

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    @classmethod
    def from_observed(cls, examples: Iterable["LabeledExample"]) -> "LabelSet":
        """Union of slot types over examples, in first-observation order."""
        names: list[str] = []
        seen: set[str] = set()
        for ex in examples:
            for span in ex.spans:
                if span.slot_type not in seen:
                    seen.add(span.slot_type)
                    names.append(span.slot_type)
        return cls(tuple(names))

    @classmethod
    def load(cls, path: str | Path) -> "LabelSet":
        """Read one label per line; blank lines are ignored."""
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(line.strip() for line in lines if line.strip()))


@dataclass(frozen=True)
class SlotSpan:
    """Inclusive token-index span [start, end] with a slot type."""

    start: int
    end: int
    slot_type: str

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise DataError(f"invalid span bounds ({self.start}, {self.end})")
        if not self.slot_type:
            raise DataError("span slot_type must be non-empty")

    @property
    def width(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class LabeledExample:
    """One utterance with its gold spans.

    provenance is the ordered tuple of perturbation kinds applied so far;
    an empty tuple means the example is clean.
    """

    id: str
    tokens: tuple[str, ...]
    spans: tuple[SlotSpan, ...] = ()
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(
            self, "spans", tuple(sorted(self.spans, key=lambda s: (s.start, s.end)))
        )
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if not self.id:
            raise DataError("example id must be non-empty")
        if not self.tokens:
            raise DataError(f"example {self.id!r}: token list is empty")
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise DataError(f"example {self.id!r}: bad token {tok!r}")
        prev: SlotSpan | None = None
        for span in self.spans:
            if span.end >= len(self.tokens):
                raise DataError(
                    f"example {self.id!r}: span ({span.start}, {span.end}) out of "
                    f"range for {len(self.tokens)} tokens"
                )
            if prev is not None and span.start <= prev.end:
                raise DataError(
                    f"example {self.id!r}: overlapping spans at token {span.start}"
                )
            prev = span

    @property
    def utterance(self) -> str:
        return " ".join(self.tokens)

    def surface(self, span: SlotSpan) -> str:
        return " ".join(self.tokens[span.start : span.end + 1])

    @property
    def is_clean(self) -> bool:
        return not self.provenance


@dataclass(frozen=True)
class Dataset:
    """A named split: validated examples plus the label vocabulary."""

    examples: tuple[LabeledExample, ...]
    labels: LabelSet
    split_name: str = ""
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        index: dict[str, LabeledExample] = {}
        for ex in self.examples:
            if ex.id in index:
                raise DataError(f"duplicate example id: {ex.id!r}")
            for span in ex.spans:
                if span.slot_type not in self.labels:
                    raise DataError(
                        f"example {ex.id!r}: slot type {span.slot_type!r} not in label set"
                    )
            index[ex.id] = ex
        object.__setattr__(self, "_by_id", index)

    def __iter__(self) -> Iterator[LabeledExample]:
        return iter(self.examples)

    def __len__(self) -> int:
        return len(self.examples)

    def by_id(self, ex_id: str) -> LabeledExample:
        return self._by_id[ex_id]


def provenance_to_str(tags: Sequence[str]) -> str:
    if not tags:
        return CLEAN_PROVENANCE
    return _PERTURBED_PREFIX + "+".join(tags)


def provenance_from_str(text: str) -> tuple[str, ...]:
    if text in ("", CLEAN_PROVENANCE):
        return ()
    if text.startswith(_PERTURBED_PREFIX):
        body = text[len(_PERTURBED_PREFIX) :]
        return tuple(part for part in body.split("+") if part)
    raise DataError(f"unrecognized provenance: {text!r}")


def bio_to_spans(tags: Sequence[str]) -> tuple[list[SlotSpan], int]:
    """Convert a BIO tag sequence to spans, repairing dangling I- tags.

    An I- tag that does not continue a same-type run is treated as B-.
    Returns (spans, repair_count).
    """
    spans: list[SlotSpan] = []
    repairs = 0
    open_type: str | None = None
    open_start = 0
    for i, tag in enumerate(tags):
        if tag == "O":
            if open_type is not None:
                spans.append(SlotSpan(open_start, i - 1, open_type))
                open_type = None
        elif tag.startswith("B-") and len(tag) > 2:
            if open_type is not None:
                spans.append(SlotSpan(open_start, i - 1, open_type))
            open_type, open_start = tag[2:], i
        elif tag.startswith("I-") and len(tag) > 2:
            t = tag[2:]
            if open_type != t:
                if open_type is not None:
                    spans.append(SlotSpan(open_start, i - 1, open_type))
                repairs += 1
                open_type, open_start = t, i
        else:
            raise DataError(f"malformed BIO tag at position {i}: {tag!r}")
    if open_type is not None:
        spans.append(SlotSpan(open_start, len(tags) - 1, open_type))
    return spans, repairs


def spans_to_bio(spans: Sequence[SlotSpan], n: int) -> list[str]:
    """Render spans as a BIO tag sequence of length n."""
    tags = ["O"] * n
    prev_end = -1
    for span in sorted(spans, key=lambda s: (s.start, s.end)):
        if span.end >= n:
            raise DataError(f"span ({span.start}, {span.end}) out of range for n={n}")
        if span.start <= prev_end:
            raise DataError(f"overlapping spans at token {span.start}")
        tags[span.start] = "B-" + span.slot_type
        for i in range(span.start + 1, span.end + 1):
            tags[i] = "I-" + span.slot_type
        prev_end = span.end
    return tags


def _example_to_record(ex: LabeledExample) -> dict:
    return {
        "id": ex.id,
        "tokens": list(ex.tokens),
        "spans": [
            {"start": s.start, "end": s.end, "type": s.slot_type} for s in ex.spans
        ],
        "provenance": provenance_to_str(ex.provenance),
    }


def _example_from_record(record: dict) -> LabeledExample:
    spans = tuple(
        SlotSpan(int(s["start"]), int(s["end"]), str(s["type"]))
        for s in record.get("spans", [])
    )
    return LabeledExample(
        id=str(record["id"]),
        tokens=tuple(str(t) for t in record["tokens"]),
        spans=spans,
        provenance=provenance_from_str(str(record.get("provenance", CLEAN_PROVENANCE))),
    )


def _load_jsonl(path: Path) -> list[LabeledExample]:
    examples: list[LabeledExample] = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            try:
                examples.append(_example_from_record(record))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad record: {exc}") from exc
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return examples


def _load_conll(path: Path, split: str) -> tuple[list[LabeledExample], int]:
    examples: list[LabeledExample] = []
    tokens: list[str] = []
    tags: list[str] = []
    total_repairs = 0
    start_line = 1

    def _flush(end_line: int):
        nonlocal total_repairs
        if not tokens:
            return
        ex_id = f"{split}-{len(examples) + 1:05d}"
        try:
            spans, repairs = bio_to_spans(tags)
            examples.append(LabeledExample(ex_id, tuple(tokens), tuple(spans)))
        except DataError as exc:
            raise DataError(f"{path}:{start_line}-{end_line}: example {ex_id!r}: {exc}") from exc
        total_repairs += repairs
        tokens.clear()
        tags.clear()

    last_line = 0
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            last_line = lineno
            line = line.rstrip("\n")
            if not line.strip():
                _flush(lineno - 1)
                start_line = lineno + 1
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected 'token<TAB>tag', got {line!r}")
            tokens.append(parts[0])
            tags.append(parts[1])
    _flush(last_line)
    return examples, total_repairs


def load_dataset(
    path: str | Path,
    fmt: str = JSONL_SPANS,
    labels_path: str | Path | None = None,
    split_name: str | None = None,
) -> Dataset:
    """Load and validate a dataset.

    The label set is the union of observed slot types unless labels_path
    points at an explicit label file.
    """
    path = Path(path)
    if fmt not in FORMATS:
        raise ConfigError(f"unknown dataset format: {fmt!r} (expected one of {FORMATS})")
    if not path.exists():
        raise ConfigError(f"dataset file not found: {path}")
    split = split_name if split_name is not None else path.stem
    if fmt == JSONL_SPANS:
        examples = _load_jsonl(path)
    else:
        examples, repairs = _load_conll(path, split)
        if repairs:
            log.info("repaired %d dangling I- tags while loading %s", repairs, path)
    labels = LabelSet.load(labels_path) if labels_path else LabelSet.from_observed(examples)
    return Dataset(tuple(examples), labels, split)


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a dataset as one JSON record per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        json.dumps(_example_to_record(ex), ensure_ascii=False, sort_keys=True)
        for ex in ds.examples
    ]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

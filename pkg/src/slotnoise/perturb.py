"""Perturbation operators over labeled examples.

Character-level typos, word-level homophone swaps / deletions / insertions,
and sentence-level irrelevant-sentence appends or paraphrases. Every operator
is a pure function of (example, spec): randomness is drawn from a generator
seeded with hash(spec.seed, example.id), so dataset-level perturbation is
reproducible regardless of iteration order or parallelism.

Gold spans are remapped alongside the token edits. Char-level and homophone
edits never move token indices; deletions shrink or drop spans; insertions
shift spans but are forbidden strictly inside one; appends leave spans alone.
"""

from __future__ import annotations

import hashlib
import json
import random
import string
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping, Sequence

import requests

from .corpus import Dataset, LabeledExample, SlotSpan
from .errors import ClientError, ConfigError

CHAR_TYPOS = "char_typos"
WORD_HOMOPHONE = "word_homophone"
WORD_DELETE = "word_delete"
WORD_INSERT = "word_insert"
APPEND_IRR = "append_irr"
PARAPHRASE = "paraphrase"
COMPOSITE = "composite"

KINDS = (
    CHAR_TYPOS,
    WORD_HOMOPHONE,
    WORD_DELETE,
    WORD_INSERT,
    APPEND_IRR,
    PARAPHRASE,
    COMPOSITE,
)

# Canonical application order inside composites: sentence -> word -> char.
_LEVEL = {
    APPEND_IRR: 0,
    PARAPHRASE: 0,
    WORD_HOMOPHONE: 1,
    WORD_DELETE: 1,
    WORD_INSERT: 1,
    CHAR_TYPOS: 2,
}

DISPLAY_NAMES = {
    CHAR_TYPOS: "Typos",
    WORD_HOMOPHONE: "Speech",
    WORD_DELETE: "WordDelete",
    WORD_INSERT: "WordInsert",
    APPEND_IRR: "AppendIrr",
    PARAPHRASE: "Paraphrase",
}

_ABBREV = {
    CHAR_TYPOS: "Typ",
    WORD_HOMOPHONE: "Spe",
    WORD_DELETE: "Del",
    WORD_INSERT: "Ins",
    APPEND_IRR: "App",
    PARAPHRASE: "Par",
}

# Fixed headers for the standard mixed-perturbation composites.
_COMPOSITE_NAMES = {
    frozenset({WORD_HOMOPHONE, CHAR_TYPOS}): "Spe+Typ",
    frozenset({WORD_HOMOPHONE, APPEND_IRR}): "Spe+App",
    frozenset({CHAR_TYPOS, APPEND_IRR}): "Ent+App",
    frozenset({WORD_HOMOPHONE, APPEND_IRR, CHAR_TYPOS}): "Spe+App+Typ",
}

_ASSETS_DIR = Path(__file__).parent / "assets"
DEFAULT_HOMOPHONES = _ASSETS_DIR / "homophones.txt"
DEFAULT_SENTENCE_POOL = _ASSETS_DIR / "irrelevant_sentences.txt"

_ALPHABET = string.ascii_lowercase


@dataclass(frozen=True)
class PerturbationSpec:
    """One perturbation kind with its probability, seed, and assets.

    assets may hold file paths (str) or in-memory values: a mapping for the
    homophone lexicon, a sequence of words for the insertion vocabulary, a
    sequence of sentences for the append pool, or a provider name/URL for
    paraphrasing. Composite specs hold an ordered member list; members apply
    in canonical sentence -> word -> char order with their own seeds.
    """

    kind: str
    p: float = 0.1
    seed: int = 0
    assets: Mapping[str, object] = field(default_factory=dict)
    members: tuple["PerturbationSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown perturbation kind: {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"probability out of range: {self.p}")
        object.__setattr__(self, "assets", dict(self.assets))
        object.__setattr__(self, "members", tuple(self.members))
        if self.kind == COMPOSITE:
            if not self.members:
                raise ConfigError("composite spec requires at least one member")
            for member in self.members:
                if member.kind == COMPOSITE:
                    raise ConfigError("composite members must not be composites")
        elif self.members:
            raise ConfigError(f"{self.kind} spec must not have members")


@dataclass(frozen=True)
class PerturbationReport:
    """Edit accounting for one operator application (mergeable additively).

    tokens_edited counts edit events (tokens touched, deletions, insertions,
    or appends); eligible_tokens counts the positions that could have been
    edited, so realized_edit_rate estimates the effective probability.
    """

    tokens_edited: int = 0
    chars_edited: int = 0
    spans_dropped: int = 0
    spans_repaired: int = 0
    eligible_tokens: int = 0
    notes: tuple[str, ...] = ()

    @property
    def realized_edit_rate(self) -> float:
        if self.eligible_tokens <= 0:
            return 0.0
        return self.tokens_edited / self.eligible_tokens

    def merged(self, other: "PerturbationReport") -> "PerturbationReport":
        return PerturbationReport(
            tokens_edited=self.tokens_edited + other.tokens_edited,
            chars_edited=self.chars_edited + other.chars_edited,
            spans_dropped=self.spans_dropped + other.spans_dropped,
            spans_repaired=self.spans_repaired + other.spans_repaired,
            eligible_tokens=self.eligible_tokens + other.eligible_tokens,
            notes=self.notes + other.notes,
        )

    def summary(self) -> str:
        return (
            f"edits={self.tokens_edited}/{self.eligible_tokens} "
            f"(rate={self.realized_edit_rate:.4f}) chars={self.chars_edited} "
            f"spans_dropped={self.spans_dropped} spans_repaired={self.spans_repaired} "
            f"notes={len(self.notes)}"
        )


def derive_seed(seed: int, key: str) -> int:
    """Stable 64-bit seed derived from a base seed and a string key."""
    digest = hashlib.sha256(f"{seed}:{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _rng(spec: PerturbationSpec, ex: LabeledExample) -> random.Random:
    return random.Random(derive_seed(spec.seed, ex.id))


@lru_cache(maxsize=64)
def _read_lexicon(path_str: str) -> dict[str, tuple[str, ...]]:
    path = Path(path_str)
    if not path.exists():
        raise ConfigError(f"homophone lexicon not found: {path}")
    lexicon: dict[str, tuple[str, ...]] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, _, alts = line.partition("\t")
        options = tuple(
            alt.strip()
            for alt in alts.split(",")
            if alt.strip() and not any(ch.isspace() for ch in alt.strip())
        )
        if word and options:
            lexicon[word.lower()] = options
    return lexicon


@lru_cache(maxsize=64)
def _read_lines(path_str: str) -> tuple[str, ...]:
    path = Path(path_str)
    if not path.exists():
        raise ConfigError(f"asset file not found: {path}")
    return tuple(
        line.strip()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    )


def _resolve_lexicon(spec: PerturbationSpec) -> dict[str, tuple[str, ...]]:
    value = spec.assets.get("homophone_lexicon")
    if value is None:
        value = str(DEFAULT_HOMOPHONES)
    if isinstance(value, Mapping):
        return {
            str(k).lower(): tuple(str(a) for a in alts) for k, alts in value.items()
        }
    lexicon = _read_lexicon(str(value))
    if not lexicon:
        raise ConfigError(f"homophone lexicon is empty: {value}")
    return lexicon


def _resolve_sentence_pool(spec: PerturbationSpec) -> tuple[str, ...]:
    value = spec.assets.get("sentence_pool")
    if value is None:
        value = str(DEFAULT_SENTENCE_POOL)
    if isinstance(value, (list, tuple)):
        pool = tuple(str(s) for s in value if str(s).strip())
    else:
        pool = _read_lines(str(value))
    if not pool:
        raise ConfigError("irrelevant-sentence pool is empty")
    return pool


def _resolve_vocab(spec: PerturbationSpec) -> tuple[str, ...]:
    value = spec.assets.get("insert_vocab")
    if value is None:
        raise ConfigError("insertion vocabulary is empty: no insert_vocab asset configured")
    if isinstance(value, (list, tuple)):
        vocab = tuple(str(w) for w in value if str(w).strip())
    else:
        vocab = _read_lines(str(value))
    if not vocab:
        raise ConfigError("insertion vocabulary is empty")
    return vocab


def unigram_vocab(ds: Dataset) -> tuple[str, ...]:
    """Sorted unique tokens of a dataset, for use as insertion vocabulary."""
    return tuple(sorted({tok for ex in ds for tok in ex.tokens}))


def with_insert_vocab(spec: PerturbationSpec, clean: Dataset) -> PerturbationSpec:
    """Fill the insert_vocab asset from a clean dataset where it is missing."""
    if spec.kind == COMPOSITE:
        members = tuple(with_insert_vocab(m, clean) for m in spec.members)
        return replace(spec, members=members)
    if spec.kind == WORD_INSERT and spec.assets.get("insert_vocab") is None:
        assets = dict(spec.assets)
        assets["insert_vocab"] = unigram_vocab(clean)
        return replace(spec, assets=assets)
    return spec


def _tag(ex: LabeledExample, kind: str, **changes) -> LabeledExample:
    changes.setdefault("provenance", ex.provenance + (kind,))
    return replace(ex, **changes)


def _one_char_edit(token: str, rng: random.Random) -> str:
    ops = ["insert", "substitute"]
    if len(token) > 1:
        ops.append("delete")
    op = rng.choice(ops)
    if op == "insert":
        i = rng.randrange(len(token) + 1)
        return token[:i] + rng.choice(_ALPHABET) + token[i:]
    if op == "delete":
        i = rng.randrange(len(token))
        return token[:i] + token[i + 1 :]
    i = rng.randrange(len(token))
    choices = [ch for ch in _ALPHABET if ch != token[i]]
    return token[:i] + rng.choice(choices) + token[i + 1 :]


def perturb_char_typos(
    ex: LabeledExample, spec: PerturbationSpec
) -> tuple[LabeledExample, PerturbationReport]:
    """Apply exactly one character edit to each token selected with prob p.

    Edits are insert/delete/substitute chosen uniformly (single-character
    tokens are never deleted to empty); token count and span indices never
    change, so every edited token sits at edit distance 1 from its original.
    """
    if spec.kind != CHAR_TYPOS:
        raise ConfigError(f"expected {CHAR_TYPOS} spec, got {spec.kind}")
    rng = _rng(spec, ex)
    out: list[str] = []
    edited = 0
    for token in ex.tokens:
        if rng.random() < spec.p:
            out.append(_one_char_edit(token, rng))
            edited += 1
        else:
            out.append(token)
    report = PerturbationReport(
        tokens_edited=edited, chars_edited=edited, eligible_tokens=len(ex.tokens)
    )
    return _tag(ex, CHAR_TYPOS, tokens=tuple(out)), report


def perturb_word_homophone(
    ex: LabeledExample, spec: PerturbationSpec
) -> tuple[LabeledExample, PerturbationReport]:
    """Replace lexicon-covered tokens with a uniform homophone with prob p."""
    if spec.kind != WORD_HOMOPHONE:
        raise ConfigError(f"expected {WORD_HOMOPHONE} spec, got {spec.kind}")
    lexicon = _resolve_lexicon(spec)
    rng = _rng(spec, ex)
    out: list[str] = []
    edited = 0
    eligible = 0
    for token in ex.tokens:
        options = lexicon.get(token.lower())
        if options:
            eligible += 1
            if rng.random() < spec.p:
                out.append(rng.choice(options))
                edited += 1
                continue
        out.append(token)
    report = PerturbationReport(
        tokens_edited=edited,
        chars_edited=0,
        eligible_tokens=eligible,
    )
    return _tag(ex, WORD_HOMOPHONE, tokens=tuple(out)), report


def _remap_deleted(
    spans: Sequence[SlotSpan], keep: Sequence[bool]
) -> tuple[list[SlotSpan], int, int]:
    """Reindex spans over surviving tokens; returns (spans, dropped, shrunk)."""
    new_index: dict[int, int] = {}
    pos = 0
    for i, kept in enumerate(keep):
        if kept:
            new_index[i] = pos
            pos += 1
    out: list[SlotSpan] = []
    dropped = 0
    shrunk = 0
    for span in spans:
        survivors = [i for i in range(span.start, span.end + 1) if keep[i]]
        if not survivors:
            dropped += 1
            continue
        if len(survivors) < span.width:
            shrunk += 1
        out.append(
            SlotSpan(new_index[survivors[0]], new_index[survivors[-1]], span.slot_type)
        )
    return out, dropped, shrunk


def perturb_word_delete(
    ex: LabeledExample, spec: PerturbationSpec
) -> tuple[LabeledExample, PerturbationReport]:
    """Delete each token independently with prob p, keeping at least one.

    Spans are remapped over the surviving tokens: a span shrinks when some of
    its tokens are deleted and is dropped when all of them are.
    """
    if spec.kind != WORD_DELETE:
        raise ConfigError(f"expected {WORD_DELETE} spec, got {spec.kind}")
    if len(ex.tokens) < 2:
        report = PerturbationReport(
            eligible_tokens=len(ex.tokens),
            notes=(f"{ex.id}: single-token example left unchanged",),
        )
        return _tag(ex, WORD_DELETE), report
    rng = _rng(spec, ex)
    keep = [rng.random() >= spec.p for _ in ex.tokens]
    if not any(keep):
        keep[rng.randrange(len(keep))] = True
    spans, dropped, shrunk = _remap_deleted(ex.spans, keep)
    tokens = tuple(tok for tok, kept in zip(ex.tokens, keep) if kept)
    deleted = len(ex.tokens) - len(tokens)
    report = PerturbationReport(
        tokens_edited=deleted,
        spans_dropped=dropped,
        spans_repaired=shrunk,
        eligible_tokens=len(ex.tokens),
    )
    return _tag(ex, WORD_DELETE, tokens=tokens, spans=tuple(spans)), report


def perturb_word_insert(
    ex: LabeledExample, spec: PerturbationSpec
) -> tuple[LabeledExample, PerturbationReport]:
    """Insert vocabulary words at eligible gaps with prob p per gap.

    Gaps strictly inside a span are never used, so span contents are
    preserved exactly and spans only shift.
    """
    if spec.kind != WORD_INSERT:
        raise ConfigError(f"expected {WORD_INSERT} spec, got {spec.kind}")
    vocab = _resolve_vocab(spec)
    rng = _rng(spec, ex)
    n = len(ex.tokens)
    forbidden = set()
    for span in ex.spans:
        forbidden.update(range(span.start + 1, span.end + 1))
    insertions: dict[int, str] = {}
    eligible = 0
    for gap in range(n + 1):
        if gap in forbidden:
            continue
        eligible += 1
        if rng.random() < spec.p:
            insertions[gap] = rng.choice(vocab)
    if not insertions:
        report = PerturbationReport(eligible_tokens=eligible)
        return _tag(ex, WORD_INSERT), report
    tokens: list[str] = []
    for gap in range(n + 1):
        if gap in insertions:
            tokens.append(insertions[gap])
        if gap < n:
            tokens.append(ex.tokens[gap])
    spans = []
    for span in ex.spans:
        shift = sum(1 for gap in insertions if gap <= span.start)
        spans.append(SlotSpan(span.start + shift, span.end + shift, span.slot_type))
    report = PerturbationReport(
        tokens_edited=len(insertions), eligible_tokens=eligible
    )
    return _tag(ex, WORD_INSERT, tokens=tuple(tokens), spans=tuple(spans)), report


def perturb_append_irr(
    ex: LabeledExample, spec: PerturbationSpec
) -> tuple[LabeledExample, PerturbationReport]:
    """Append one irrelevant pool sentence with prob p; spans are untouched."""
    if spec.kind != APPEND_IRR:
        raise ConfigError(f"expected {APPEND_IRR} spec, got {spec.kind}")
    pool = _resolve_sentence_pool(spec)
    rng = _rng(spec, ex)
    if rng.random() >= spec.p:
        return _tag(ex, APPEND_IRR), PerturbationReport(eligible_tokens=1)
    sentence = rng.choice(pool)
    extra = tuple(sentence.split())
    report = PerturbationReport(tokens_edited=1, eligible_tokens=1)
    return _tag(ex, APPEND_IRR, tokens=ex.tokens + extra), report


ParaphraseProvider = Callable[[str], str]


def identity_paraphrase(text: str) -> str:
    return text


def http_paraphrase_provider(endpoint: str, timeout: float = 30.0) -> ParaphraseProvider:
    """Provider posting {"text": ...} to an HTTP endpoint returning the same shape."""

    def _call(text: str) -> str:
        try:
            resp = requests.post(endpoint, json={"text": text}, timeout=timeout)
        except requests.RequestException as exc:
            raise ClientError(f"paraphrase provider unreachable: {endpoint}: {exc}") from exc
        if resp.status_code != 200:
            raise ClientError(
                f"paraphrase provider error from {endpoint}", status=resp.status_code
            )
        return str(resp.json()["text"])

    return _call


def resolve_paraphrase_provider(value: object) -> ParaphraseProvider:
    if value is None or value == "identity":
        return identity_paraphrase
    if callable(value):
        return value
    name = str(value)
    if name.startswith("http://") or name.startswith("https://"):
        return http_paraphrase_provider(name)
    raise ConfigError(f"unknown paraphrase provider: {name!r}")


def _leftmost_free_match(
    haystack: Sequence[str], needle: Sequence[str], taken: set[int]
) -> int | None:
    limit = len(haystack) - len(needle)
    for i in range(limit + 1):
        if any((i + j) in taken for j in range(len(needle))):
            continue
        if all(haystack[i + j] == needle[j] for j in range(len(needle))):
            return i
    return None


def perturb_paraphrase(
    ex: LabeledExample,
    spec: PerturbationSpec,
    provider: ParaphraseProvider | None = None,
) -> tuple[LabeledExample, PerturbationReport]:
    """Rewrite the utterance via a provider and re-locate gold entities.

    Entity surfaces are matched leftmost, case-insensitively, left to right
    in the rewritten token stream. If any surface cannot be found verbatim
    the paraphrase is rejected and the example passes through unchanged.
    """
    if spec.kind != PARAPHRASE:
        raise ConfigError(f"expected {PARAPHRASE} spec, got {spec.kind}")
    if provider is None:
        provider = resolve_paraphrase_provider(spec.assets.get("paraphrase_provider"))
    new_text = provider(ex.utterance)
    new_tokens = tuple(new_text.split())
    if new_tokens == ex.tokens:
        return ex, PerturbationReport(eligible_tokens=1)
    if not new_tokens:
        note = f"{ex.id}: paraphrase rejected (empty rewrite)"
        return ex, PerturbationReport(eligible_tokens=1, notes=(note,))
    lowered = [tok.lower() for tok in new_tokens]
    spans: list[SlotSpan] = []
    taken: set[int] = set()
    for span in ex.spans:
        target = [tok.lower() for tok in ex.tokens[span.start : span.end + 1]]
        pos = _leftmost_free_match(lowered, target, taken)
        if pos is None:
            note = f"{ex.id}: paraphrase rejected (lost entity {ex.surface(span)!r})"
            return ex, PerturbationReport(eligible_tokens=1, notes=(note,))
        spans.append(SlotSpan(pos, pos + len(target) - 1, span.slot_type))
        taken.update(range(pos, pos + len(target)))
    report = PerturbationReport(tokens_edited=1, eligible_tokens=1)
    return _tag(ex, PARAPHRASE, tokens=new_tokens, spans=tuple(spans)), report


def compose(specs: Sequence[PerturbationSpec], seed: int = 0) -> PerturbationSpec:
    """Bundle non-composite specs into a composite (one nesting level)."""
    return PerturbationSpec(kind=COMPOSITE, p=1.0, seed=seed, members=tuple(specs))


def canonical_member_order(
    members: Sequence[PerturbationSpec],
) -> tuple[PerturbationSpec, ...]:
    return tuple(sorted(members, key=lambda m: _LEVEL[m.kind]))


def apply_composite(
    ex: LabeledExample, spec: PerturbationSpec
) -> tuple[LabeledExample, PerturbationReport]:
    """Apply members in canonical order, merging their reports additively."""
    if spec.kind != COMPOSITE:
        raise ConfigError(f"expected {COMPOSITE} spec, got {spec.kind}")
    report = PerturbationReport()
    for member in canonical_member_order(spec.members):
        ex, member_report = apply_perturbation(ex, member)
        report = report.merged(member_report)
    return ex, report


_OPERATORS: dict[str, Callable] = {
    CHAR_TYPOS: perturb_char_typos,
    WORD_HOMOPHONE: perturb_word_homophone,
    WORD_DELETE: perturb_word_delete,
    WORD_INSERT: perturb_word_insert,
    APPEND_IRR: perturb_append_irr,
    PARAPHRASE: perturb_paraphrase,
}


def apply_perturbation(
    ex: LabeledExample, spec: PerturbationSpec
) -> tuple[LabeledExample, PerturbationReport]:
    if spec.kind == COMPOSITE:
        return apply_composite(ex, spec)
    return _OPERATORS[spec.kind](ex, spec)


def perturb_dataset(
    ds: Dataset, spec: PerturbationSpec
) -> tuple[Dataset, PerturbationReport]:
    """Perturb every example; output is a pure function of (dataset, spec)."""
    examples: list[LabeledExample] = []
    report = PerturbationReport()
    for ex in ds:
        out, ex_report = apply_perturbation(ex, spec)
        examples.append(out)
        report = report.merged(ex_report)
    return Dataset(tuple(examples), ds.labels, ds.split_name), report


def kind_token(spec: PerturbationSpec) -> str:
    """Short stable token encoding a spec's kind, for id suffixes."""
    if spec.kind == COMPOSITE:
        return "+".join(m.kind for m in canonical_member_order(spec.members))
    return spec.kind


def display_name(spec: PerturbationSpec) -> str:
    """Human-facing column name for a perturbation."""
    if spec.kind != COMPOSITE:
        return DISPLAY_NAMES[spec.kind]
    key = frozenset(m.kind for m in spec.members)
    if key in _COMPOSITE_NAMES:
        return _COMPOSITE_NAMES[key]
    return "+".join(_ABBREV[m.kind] for m in canonical_member_order(spec.members))


def spec_to_dict(spec: PerturbationSpec) -> dict:
    out: dict = {"kind": spec.kind, "p": spec.p, "seed": spec.seed}
    assets = {
        key: (list(value) if isinstance(value, (list, tuple)) else value)
        for key, value in spec.assets.items()
        if not callable(value)
    }
    if assets:
        out["assets"] = assets
    if spec.members:
        out["members"] = [spec_to_dict(m) for m in spec.members]
    return out


def spec_from_dict(data: Mapping) -> PerturbationSpec:
    members = tuple(spec_from_dict(m) for m in data.get("members", []))
    return PerturbationSpec(
        kind=str(data["kind"]),
        p=float(data.get("p", 0.1)),
        seed=int(data.get("seed", 0)),
        assets=dict(data.get("assets", {})),
        members=members,
    )


def spec_to_json(spec: PerturbationSpec) -> str:
    return json.dumps(spec_to_dict(spec), sort_keys=True)

"""Candidate demonstration pools: clean, augmented, and their union."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .corpus import Dataset, load_dataset, save_dataset
from .errors import ConfigError
from .perturb import (
    PerturbationSpec,
    kind_token,
    perturb_dataset,
    spec_from_dict,
    spec_to_dict,
    with_insert_vocab,
)

POOL_LABELS = ("clean", "augment", "mixed")


@dataclass(frozen=True)
class DataPool:
    """Clean and augmented example collections plus their mixed union.

    Augmented example ids carry a ``__<kind>`` suffix naming the generating
    perturbation, so ids stay globally unique across the mixed view.
    """

    clean: Dataset
    augmented: Dataset
    mixed: Dataset = field(init=False, compare=False)

    def __post_init__(self):
        mixed = Dataset(
            self.clean.examples + self.augmented.examples,
            self.clean.labels,
            "mixed",
        )
        object.__setattr__(self, "mixed", mixed)

    def select(self, pool_label: str) -> Dataset:
        if pool_label == "clean":
            return self.clean
        if pool_label == "augment":
            return self.augmented
        if pool_label == "mixed":
            return self.mixed
        raise ConfigError(f"unknown pool label: {pool_label!r} (expected one of {POOL_LABELS})")


def augment_suffix(spec: PerturbationSpec, ordinal: int = 0) -> str:
    token = kind_token(spec)
    return token if ordinal == 0 else f"{token}#{ordinal + 1}"


def build_pool(clean: Dataset, specs: Sequence[PerturbationSpec]) -> DataPool:
    """Produce one perturbed copy of the clean set per spec and merge them."""
    copies = []
    seen_tokens: dict[str, int] = {}
    for spec in specs:
        spec = with_insert_vocab(spec, clean)
        perturbed, _ = perturb_dataset(clean, spec)
        token = kind_token(spec)
        ordinal = seen_tokens.get(token, 0)
        seen_tokens[token] = ordinal + 1
        suffix = augment_suffix(spec, ordinal)
        copies.extend(
            replace(ex, id=f"{ex.id}__{suffix}") for ex in perturbed
        )
    augmented = Dataset(tuple(copies), clean.labels, "augment")
    return DataPool(clean=clean, augmented=augmented)


def save_pool(pool: DataPool, out_dir: str | Path, specs: Sequence[PerturbationSpec]) -> None:
    """Persist a pool as jsonl files plus a manifest of specs and seeds."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(pool.clean, out / "clean.jsonl")
    save_dataset(pool.augmented, out / "augmented.jsonl")
    manifest = {
        "specs": [spec_to_dict(spec) for spec in specs],
        "seeds": [spec.seed for spec in specs],
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_pool(pool_dir: str | Path) -> DataPool:
    pool_dir = Path(pool_dir)
    clean = load_dataset(pool_dir / "clean.jsonl", split_name="clean")
    augmented = load_dataset(pool_dir / "augmented.jsonl", split_name="augment")
    augmented = Dataset(augmented.examples, clean.labels, "augment")
    return DataPool(clean=clean, augmented=augmented)


def load_pool_manifest(pool_dir: str | Path) -> list[PerturbationSpec]:
    manifest = json.loads((Path(pool_dir) / "manifest.json").read_text(encoding="utf-8"))
    return [spec_from_dict(d) for d in manifest.get("specs", [])]

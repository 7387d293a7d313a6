"""Experiment orchestration: config, execution, logging, sweeps, reports.

A run walks every example of every configured test split through the
pipeline (demonstrations -> prompt -> cached completion -> parse -> score),
logs prompts/responses/predictions as line-delimited records in the run
directory, and aggregates an :class:`EvalResult` per perturbation group.
With mock clients the whole pipeline is bit-deterministic under a fixed
config, and a warm cache reproduces the identical result with zero backend
calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from .client import ModelConfig, NOISY_ORACLE, ResponseCache, cached_complete
from .corpus import Dataset, LabeledExample, LabelSet, load_dataset, save_dataset
from .demos import (
    DemonstrationSet,
    ENTITY_MODE,
    INSTANCE_MODE,
    build_entity_demos,
    build_instance_demos,
    http_embedding_provider,
)
from .errors import ConfigError, HarnessError
from .parser import parse_predictions
from .perturb import PerturbationSpec, derive_seed, spec_from_dict, spec_to_dict
from .pools import DataPool, build_pool
from .prompts import bundled_registry, load_registry, render_prompt
from .scorer import EvalResult, MatchCounts, aggregate, score_example

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; serializable to/from JSON."""

    test_splits: tuple[tuple[str, str], ...]
    out_dir: str
    name: str = "run"
    pool_clean: str = ""
    pool_specs: tuple[PerturbationSpec, ...] = ()
    demo_mode: str = INSTANCE_MODE
    demo_strategy: str = "random"
    demo_pool: str = "clean"
    demo_k: int = 0
    template_id: str = "t1_english"
    templates_dir: str = ""
    model: ModelConfig = field(default_factory=ModelConfig)
    scoring_mode: str = "text_match"
    seed: int = 0
    labels_path: str = ""
    embed_endpoint: str = ""
    max_error_fraction: float = 0.1
    cache_dir: str = ""  # empty -> <out_dir>/cache

    def __post_init__(self):
        object.__setattr__(
            self, "test_splits", tuple((str(g), str(p)) for g, p in self.test_splits)
        )
        object.__setattr__(self, "pool_specs", tuple(self.pool_specs))
        if not self.test_splits:
            raise ConfigError("config needs at least one test split")
        if self.demo_k < 0:
            raise ConfigError(f"demo_k must be >= 0, got {self.demo_k}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "test_splits": {group: path for group, path in self.test_splits},
            "out_dir": self.out_dir,
            "pool_clean": self.pool_clean,
            "pool_specs": [spec_to_dict(s) for s in self.pool_specs],
            "demo_mode": self.demo_mode,
            "demo_strategy": self.demo_strategy,
            "demo_pool": self.demo_pool,
            "demo_k": self.demo_k,
            "template_id": self.template_id,
            "templates_dir": self.templates_dir,
            "model": {
                "kind": self.model.kind,
                "model": self.model.model,
                "endpoint": self.model.endpoint,
                "temperature": self.model.temperature,
                "max_in_flight": self.model.max_in_flight,
                "timeout": self.model.timeout,
                "error_rate": self.model.error_rate,
                "seed": self.model.seed,
                "fixed_text": self.model.fixed_text,
            },
            "scoring_mode": self.scoring_mode,
            "seed": self.seed,
            "labels_path": self.labels_path,
            "embed_endpoint": self.embed_endpoint,
            "max_error_fraction": self.max_error_fraction,
            "cache_dir": self.cache_dir,
        }

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Path | None = None) -> "RunConfig":
        def _resolve(value: str) -> str:
            if not value or base_dir is None:
                return value
            path = Path(value)
            return str(path if path.is_absolute() else base_dir / path)

        raw_splits = data["test_splits"]
        if isinstance(raw_splits, Mapping):
            splits = tuple((str(g), _resolve(str(p))) for g, p in raw_splits.items())
        else:
            splits = tuple((str(g), _resolve(str(p))) for g, p in raw_splits)
        model_data = dict(data.get("model", {}))
        model = ModelConfig(
            kind=str(model_data.get("kind", "echo_gold")),
            model=str(model_data.get("model", "")),
            endpoint=str(model_data.get("endpoint", "")),
            temperature=float(model_data.get("temperature", 0.0)),
            max_in_flight=int(model_data.get("max_in_flight", 1)),
            timeout=float(model_data.get("timeout", 30.0)),
            error_rate=float(model_data.get("error_rate", 0.0)),
            seed=int(model_data.get("seed", 0)),
            fixed_text=str(model_data.get("fixed_text", "")),
        )
        return cls(
            test_splits=splits,
            out_dir=_resolve(str(data["out_dir"])),
            name=str(data.get("name", "run")),
            pool_clean=_resolve(str(data.get("pool_clean", ""))),
            pool_specs=tuple(spec_from_dict(s) for s in data.get("pool_specs", [])),
            demo_mode=str(data.get("demo_mode", INSTANCE_MODE)),
            demo_strategy=str(data.get("demo_strategy", "random")),
            demo_pool=str(data.get("demo_pool", "clean")),
            demo_k=int(data.get("demo_k", 0)),
            template_id=str(data.get("template_id", "t1_english")),
            templates_dir=_resolve(str(data.get("templates_dir", ""))),
            model=model,
            scoring_mode=str(data.get("scoring_mode", "text_match")),
            seed=int(data.get("seed", 0)),
            labels_path=_resolve(str(data.get("labels_path", ""))),
            embed_endpoint=str(data.get("embed_endpoint", "")),
            max_error_fraction=float(data.get("max_error_fraction", 0.1)),
            cache_dir=_resolve(str(data.get("cache_dir", ""))),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls.from_dict(data, base_dir=path.parent)


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _dump_jsonl(path: Path, records: Sequence[dict]) -> None:
    lines = [json.dumps(r, ensure_ascii=False, sort_keys=True) for r in records]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _load_splits(cfg: RunConfig) -> list[tuple[str, Dataset]]:
    return [
        (group, load_dataset(path, split_name=group)) for group, path in cfg.test_splits
    ]


def _collect_labels(cfg: RunConfig, splits: Sequence[tuple[str, Dataset]], pool: DataPool | None) -> LabelSet:
    if cfg.labels_path:
        return LabelSet.load(cfg.labels_path)
    examples: list[LabeledExample] = []
    if pool is not None:
        examples.extend(pool.mixed.examples)
    for _, ds in splits:
        examples.extend(ds.examples)
    return LabelSet.from_observed(examples)


def _build_demos(
    cfg: RunConfig,
    ex: LabeledExample,
    pool: DataPool,
    labels: LabelSet,
    provider,
) -> DemonstrationSet | None:
    if cfg.demo_k <= 0:
        return None
    demo_seed = derive_seed(cfg.seed, f"demos:{ex.id}")
    if cfg.demo_mode == ENTITY_MODE:
        return build_entity_demos(
            ex, pool, cfg.demo_pool, labels, cfg.demo_strategy, demo_seed, provider
        )
    if cfg.demo_mode == INSTANCE_MODE:
        return build_instance_demos(
            ex, pool, cfg.demo_pool, cfg.demo_strategy, cfg.demo_k, demo_seed, provider
        )
    raise ConfigError(f"unknown demo mode: {cfg.demo_mode!r}")


def run_experiment(cfg: RunConfig) -> EvalResult:
    """Execute a full run and write its logs and report to cfg.out_dir."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )

    splits = _load_splits(cfg)
    pool: DataPool | None = None
    if cfg.demo_k > 0:
        if not cfg.pool_clean:
            raise ConfigError("demo_k > 0 requires pool_clean in the config")
        clean = load_dataset(cfg.pool_clean, split_name="clean")
        pool = build_pool(clean, cfg.pool_specs)
    labels = _collect_labels(cfg, splits, pool)

    registry = load_registry(cfg.templates_dir) if cfg.templates_dir else bundled_registry()
    if cfg.template_id not in registry:
        raise ConfigError(f"unknown template id: {cfg.template_id!r}")
    template = registry[cfg.template_id]

    model = cfg.model
    if model.kind == NOISY_ORACLE and not model.labels:
        model = replace(model, labels=tuple(labels.names))

    provider = http_embedding_provider(cfg.embed_endpoint) if cfg.embed_endpoint else None
    cache = ResponseCache(Path(cfg.cache_dir) if cfg.cache_dir else out / "cache")

    gold_examples: list[LabeledExample] = []
    jobs: list[tuple[str, str, LabeledExample, str]] = []  # (rid, group, example, prompt)
    errors: list[dict] = []
    for group, ds in splits:
        for ex in ds:
            rid = f"{group}/{ex.id}"
            gold_examples.append(replace(ex, id=rid))
            try:
                demos = _build_demos(cfg, ex, pool, labels, provider) if pool else None
                prompt = render_prompt(template, labels, demos, ex)
            except ConfigError:
                raise
            except Exception as exc:  # logged per example, budgeted below
                errors.append({"id": rid, "stage": "prompt", "error": str(exc)})
                prompt = render_prompt(template, labels, None, ex)
            jobs.append((rid, group, ex, prompt))

    def _complete(job: tuple[str, str, LabeledExample, str]) -> tuple[str, str, str | None]:
        rid, _, ex, prompt = job
        try:
            return rid, cached_complete(prompt, model, cache, side_channel=ex), None
        except Exception as exc:
            return rid, "", str(exc)

    responses: dict[str, str] = {}
    if model.max_in_flight > 1:
        with ThreadPoolExecutor(max_workers=model.max_in_flight) as executor:
            outcomes = list(executor.map(_complete, jobs))
    else:
        outcomes = [_complete(job) for job in jobs]
    for rid, response, error in outcomes:
        responses[rid] = response
        if error is not None:
            errors.append({"id": rid, "stage": "complete", "error": error})

    counts: dict[str, MatchCounts] = {}
    groups: dict[str, str] = {}
    prompt_records: list[dict] = []
    response_records: list[dict] = []
    prediction_records: list[dict] = []
    for rid, group, ex, prompt in jobs:
        response = responses[rid]
        prediction = parse_predictions(response, labels)
        counts[rid] = score_example(ex, prediction, cfg.scoring_mode)
        groups[rid] = group
        prompt_sha = _sha(prompt)
        prompt_records.append({"id": rid, "prompt_sha": prompt_sha, "prompt": prompt})
        response_records.append(
            {"id": rid, "prompt_sha": prompt_sha, "response": response}
        )
        prediction_records.append(
            {
                "id": rid,
                "group": group,
                "pairs": [[s, t] for s, t in prediction.pairs],
                "dropped_unknown_labels": prediction.dropped_unknown_labels,
            }
        )

    _dump_jsonl(out / "prompts.jsonl", prompt_records)
    _dump_jsonl(out / "responses.jsonl", response_records)
    _dump_jsonl(out / "predictions.jsonl", prediction_records)
    (out / "groups.tsv").write_text(
        "".join(f"{rid}\t{group}\n" for rid, group in groups.items()), encoding="utf-8"
    )
    save_dataset(
        Dataset(tuple(gold_examples), labels, "gold"), out / "gold.jsonl"
    )
    if errors:
        _dump_jsonl(out / "errors.jsonl", errors)
    else:
        (out / "errors.jsonl").unlink(missing_ok=True)
    if jobs and len(errors) / len(jobs) > cfg.max_error_fraction:
        raise HarnessError(
            f"{len(errors)}/{len(jobs)} examples failed "
            f"(budget {cfg.max_error_fraction:.0%}); see {out / 'errors.jsonl'}"
        )

    result = aggregate(counts, groups, cfg.scoring_mode)
    payload = {
        "name": cfg.name,
        "config_hash": config_hash(cfg),
        "result": result.to_dict(),
    }
    (out / "result.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    render_report({cfg.name: result}, out_dir=out)
    return result


def sweep_demo_count(cfg: RunConfig, ks: Sequence[int]) -> dict[int, EvalResult]:
    """One run per demonstration count, sharing the response cache."""
    if cfg.demo_mode != INSTANCE_MODE:
        raise ConfigError("demo-count sweeps require instance mode")
    if not ks:
        raise ConfigError("sweep needs at least one k")
    out = Path(cfg.out_dir)
    shared_cache = cfg.cache_dir or str(out / "cache")
    results: dict[int, EvalResult] = {}
    for k in ks:
        sub = replace(
            cfg,
            demo_k=k,
            out_dir=str(out / f"k{k}"),
            name=f"{cfg.name}_k{k}",
            cache_dir=shared_cache,
        )
        results[k] = run_experiment(sub)
    _write_sweep_table(out, results)
    return results


def _write_sweep_table(out: Path, results: Mapping[int, EvalResult]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    first = next(iter(results.values()))
    columns = list(first.per_group)
    header = ["k", *columns, "Overall"]
    lines = ["\t".join(header)]
    for k in sorted(results):
        result = results[k]
        row = [str(k)]
        row.extend(f"{result.per_group[c].f1:.2f}" if c in result.per_group else "-" for c in columns)
        row.append(f"{result.overall.micro_f1:.2f}")
        lines.append("\t".join(row))
    (out / "sweep.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def compare_templates(cfg: RunConfig, template_ids: Sequence[str]) -> dict[str, EvalResult]:
    """One run per template with fixed seed and demo configuration."""
    if not template_ids:
        raise ConfigError("compare_templates needs at least one template id")
    out = Path(cfg.out_dir)
    shared_cache = cfg.cache_dir or str(out / "cache")
    results: dict[str, EvalResult] = {}
    for tid in template_ids:
        sub = replace(
            cfg,
            template_id=tid,
            out_dir=str(out / f"tmpl_{tid}"),
            name=tid,
            cache_dir=shared_cache,
        )
        results[tid] = run_experiment(sub)
    render_report(results, out_dir=out)
    return results


def _column_order(result: EvalResult) -> list[str]:
    names = list(result.per_group)
    clean = [n for n in names if n.lower() == "clean"]
    noisy = [n for n in names if n.lower() != "clean"]
    return clean + noisy


def render_report(
    results: Mapping[str, EvalResult],
    baseline: str | None = None,
    out_dir: str | Path | None = None,
) -> str:
    """Render per-group F1 tables (text and TSV) across one or more runs.

    Columns are Clean, then the perturbation groups in run order, then
    Overall (micro over the non-clean groups; the macro aggregate is listed
    below the table). With a baseline name given, every cell is annotated
    with its delta against the baseline run in ``(+24.3)`` style.
    """
    if not results:
        raise ConfigError("render_report needs at least one result")
    first = next(iter(results.values()))
    columns = _column_order(first)
    if baseline is not None and baseline not in results:
        raise ConfigError(f"unknown baseline run: {baseline!r}")
    base = results[baseline] if baseline is not None else None

    def _cell(value: float | None, base_value: float | None) -> str:
        if value is None:
            return "-"
        text = f"{value:.2f}"
        if base is not None and base_value is not None:
            text += f"({value - base_value:+.1f})"
        return text

    header = ["Method", *columns, "Overall"]
    rows: list[list[str]] = []
    for name, result in results.items():
        row = [name]
        for column in columns:
            value = result.per_group[column].f1 if column in result.per_group else None
            base_value = (
                base.per_group[column].f1 if base is not None and column in base.per_group else None
            )
            row.append(_cell(value, base_value))
        row.append(
            _cell(
                result.overall.micro_f1,
                base.overall.micro_f1 if base is not None else None,
            )
        )
        rows.append(row)

    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    text_lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(header))),
    ]
    for row in rows:
        text_lines.append(
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        )
    text_lines.append("")
    for name, result in results.items():
        text_lines.append(f"{name} Overall(macro): {result.overall.macro_f1:.2f}")
    text = "\n".join(text_lines) + "\n"

    tsv_lines = ["\t".join(header)]
    tsv_lines.extend("\t".join(row) for row in rows)
    tsv = "\n".join(tsv_lines) + "\n"

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text, encoding="utf-8")
        (out / "report.tsv").write_text(tsv, encoding="utf-8")
    return text

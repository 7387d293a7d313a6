"""Command-line surface binding all modules into user workflows.

Exit codes: 0 success, 1 data error, 2 configuration error. No command
mutates its input files, and all randomness flows from --seed (default 0).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, harness, perturb, pools
from .demos import build_entity_demos, build_instance_demos
from .errors import ClientError, ConfigError, DataError, HarnessError, SlotNoiseError
from .parser import Prediction
from .prompts import bundled_registry
from .scorer import MatchCounts, aggregate, score_example

KIND_ALIASES = {
    "typos": perturb.CHAR_TYPOS,
    "char_typos": perturb.CHAR_TYPOS,
    "speech": perturb.WORD_HOMOPHONE,
    "word_homophone": perturb.WORD_HOMOPHONE,
    "homophone": perturb.WORD_HOMOPHONE,
    "delete": perturb.WORD_DELETE,
    "word_delete": perturb.WORD_DELETE,
    "insert": perturb.WORD_INSERT,
    "word_insert": perturb.WORD_INSERT,
    "appendirr": perturb.APPEND_IRR,
    "append_irr": perturb.APPEND_IRR,
    "paraphrase": perturb.PARAPHRASE,
    "composite": perturb.COMPOSITE,
}


def _resolve_kind(name: str) -> str:
    kind = KIND_ALIASES.get(name.strip().lower())
    if kind is None:
        raise ConfigError(f"unknown perturbation kind: {name!r}")
    return kind


def _spec_assets(args: argparse.Namespace) -> dict:
    assets: dict = {}
    if getattr(args, "homophones", None):
        assets["homophone_lexicon"] = args.homophones
    if getattr(args, "sentences", None):
        assets["sentence_pool"] = args.sentences
    if getattr(args, "vocab", None):
        assets["insert_vocab"] = args.vocab
    if getattr(args, "paraphrase_provider", None):
        assets["paraphrase_provider"] = args.paraphrase_provider
    return assets


def _build_spec(args: argparse.Namespace) -> perturb.PerturbationSpec:
    kind = _resolve_kind(args.kind)
    assets = _spec_assets(args)
    if kind != perturb.COMPOSITE:
        return perturb.PerturbationSpec(kind=kind, p=args.p, seed=args.seed, assets=assets)
    if not args.members:
        raise ConfigError("composite kind requires --members")
    members = []
    for name in args.members.split(","):
        member_kind = _resolve_kind(name)
        if member_kind == perturb.COMPOSITE:
            raise ConfigError("composite members must not be composites")
        members.append(
            perturb.PerturbationSpec(
                kind=member_kind,
                p=args.p,
                seed=perturb.derive_seed(args.seed, f"member:{member_kind}"),
                assets=assets,
            )
        )
    return perturb.compose(members, seed=args.seed)


def cmd_augment(args: argparse.Namespace) -> int:
    in_path = Path(args.in_path)
    out_path = Path(args.out)
    if in_path.resolve() == out_path.resolve():
        raise ConfigError("--out must differ from --in (inputs are never mutated)")
    ds = corpus.load_dataset(in_path)
    spec = _build_spec(args)
    spec = perturb.with_insert_vocab(spec, ds)
    perturbed, report = perturb.perturb_dataset(ds, spec)
    name = perturb.display_name(spec)
    perturbed = corpus.Dataset(perturbed.examples, perturbed.labels, name)
    corpus.save_dataset(perturbed, out_path)
    print(f"{name}: {report.summary()}", file=sys.stderr)
    print(f"wrote {len(perturbed)} examples to {out_path}", file=sys.stderr)
    return 0


def cmd_pool(args: argparse.Namespace) -> int:
    clean = corpus.load_dataset(args.in_path, split_name="clean")
    specs = []
    for name in (args.members or "").split(","):
        if not name.strip():
            continue
        kind = _resolve_kind(name)
        specs.append(
            perturb.PerturbationSpec(
                kind=kind,
                p=args.p,
                seed=perturb.derive_seed(args.seed, f"pool:{kind}"),
                assets=_spec_assets(args),
            )
        )
    pool = pools.build_pool(clean, specs)
    pools.save_pool(pool, args.out, specs)
    print(
        f"pool written to {args.out}: clean={len(pool.clean)} "
        f"augmented={len(pool.augmented)} mixed={len(pool.mixed)}",
        file=sys.stderr,
    )
    return 0


def cmd_demo_preview(args: argparse.Namespace) -> int:
    test = corpus.load_dataset(args.in_path)
    clean = corpus.load_dataset(args.clean, split_name="clean")
    specs = []
    for name in (args.members or "").split(","):
        if not name.strip():
            continue
        kind = _resolve_kind(name)
        specs.append(
            perturb.PerturbationSpec(
                kind=kind, p=args.p, seed=perturb.derive_seed(args.seed, f"pool:{kind}")
            )
        )
    pool = pools.build_pool(clean, specs)
    labels = pool.clean.labels
    for ex in list(test)[: args.count]:
        if args.mode == "entity":
            demos = build_entity_demos(
                ex, pool, args.pool_label, labels, args.strategy, args.seed
            )
        else:
            demos = build_instance_demos(
                ex, pool, args.pool_label, args.strategy, args.k, args.seed
            )
        print(f"# {ex.id}: {ex.utterance}")
        print(demos.text())
        print()
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = harness.RunConfig.from_json(args.config)
    if args.resume and not Path(cfg.out_dir).exists():
        print(f"note: --resume with no previous run directory {cfg.out_dir}", file=sys.stderr)
    result = harness.run_experiment(cfg)
    errors_log = Path(cfg.out_dir) / "errors.jsonl"
    if errors_log.exists():
        n_failed = sum(1 for line in errors_log.read_text(encoding="utf-8").splitlines() if line)
        print(f"partial failures: {n_failed} examples errored; see {errors_log}", file=sys.stderr)
    print(harness.render_report({cfg.name: result}), end="")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = harness.RunConfig.from_json(args.config)
    ks = [int(k) for k in args.ks.split(",") if k.strip()]
    results = harness.sweep_demo_count(cfg, ks)
    print((Path(cfg.out_dir) / "sweep.tsv").read_text(encoding="utf-8"), end="")
    return 0


def cmd_templates(args: argparse.Namespace) -> int:
    if args.list:
        for tid, template in bundled_registry().items():
            print(f"{tid}\t{template.language_tag}")
        return 0
    if not args.config or not args.ids:
        raise ConfigError("templates requires --config and --ids (or --list)")
    cfg = harness.RunConfig.from_json(args.config)
    ids = [t for t in args.ids.split(",") if t.strip()]
    results = harness.compare_templates(cfg, ids)
    print(harness.render_report(results, baseline=args.baseline), end="")
    return 0


def _read_groups(path: Path) -> dict[str, str]:
    groups: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 'id<TAB>group'")
        groups[parts[0]] = parts[1]
    return groups


def _read_predictions(path: Path) -> dict[str, Prediction]:
    predictions: dict[str, Prediction] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            pairs = tuple((str(s), str(t)) for s, t in record.get("pairs", []))
            predictions[str(record["id"])] = Prediction(
                pairs=pairs,
                dropped_unknown_labels=int(record.get("dropped_unknown_labels", 0)),
                raw=str(record.get("raw", "")),
            )
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad prediction record: {exc}") from exc
    return predictions


def cmd_score(args: argparse.Namespace) -> int:
    gold = corpus.load_dataset(args.gold)
    predictions = _read_predictions(Path(args.predictions))
    groups = _read_groups(Path(args.groups))
    gold_ids = {ex.id for ex in gold}
    orphans = sorted(gold_ids.symmetric_difference(predictions))
    if orphans:
        raise DataError(f"gold/prediction id mismatch: {', '.join(orphans[:10])}")
    counts: dict[str, MatchCounts] = {}
    for ex in gold:
        counts[ex.id] = score_example(ex, predictions[ex.id], args.mode)
    result = aggregate(counts, groups, args.mode)
    print(harness.render_report({"rescored": result}), end="")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    results = {}
    for path in args.results:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        name = str(payload.get("name", Path(path).stem))
        if name in results:
            name = f"{name}:{Path(path).stem}"
        results[name] = harness.EvalResult.from_dict(payload["result"])
    text = harness.render_report(results, baseline=args.baseline, out_dir=args.out)
    print(text, end="")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(
        prog="slotnoise",
        description="Slot-filling robustness evaluation harness",
    )
    sub = root.add_subparsers(dest="command", required=True)

    def _add_spec_flags(p: argparse.ArgumentParser):
        p.add_argument("--p", type=float, default=0.1, help="perturbation probability")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--members", default="", help="comma-separated member kinds")
        p.add_argument("--homophones", default="", help="homophone lexicon path")
        p.add_argument("--sentences", default="", help="irrelevant-sentence pool path")
        p.add_argument("--vocab", default="", help="insertion vocabulary path")
        p.add_argument("--paraphrase-provider", default="", dest="paraphrase_provider")

    p = sub.add_parser("augment", help="write a perturbed copy of a dataset")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", required=True)
    _add_spec_flags(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("pool", help="build and persist a demonstration pool")
    p.add_argument("--in", dest="in_path", required=True, help="clean dataset path")
    p.add_argument("--out", required=True, help="output directory")
    _add_spec_flags(p)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("demo-preview", help="print demonstrations for the first examples")
    p.add_argument("--in", dest="in_path", required=True, help="test dataset path")
    p.add_argument("--clean", required=True, help="clean pool dataset path")
    p.add_argument("--mode", choices=("entity", "instance"), default="instance")
    p.add_argument("--strategy", choices=("random", "retrieve"), default="random")
    p.add_argument("--pool-label", choices=("clean", "augment", "mixed"), default="clean")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--count", type=int, default=3, help="test examples to preview")
    _add_spec_flags(p)
    p.set_defaults(func=cmd_demo_preview)

    p = sub.add_parser("eval", help="run a configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--resume", action="store_true", help="reuse an existing run directory/cache")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="sweep the demonstration count")
    p.add_argument("--config", required=True)
    p.add_argument("--ks", required=True, help="comma-separated k values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("templates", help="compare prompt templates or list bundled ones")
    p.add_argument("--config")
    p.add_argument("--ids", help="comma-separated template ids")
    p.add_argument("--baseline")
    p.add_argument("--list", action="store_true")
    p.set_defaults(func=cmd_templates)

    p = sub.add_parser("score", help="rescore logged predictions offline")
    p.add_argument("--gold", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--groups", required=True)
    p.add_argument("--mode", choices=("text_match", "strict_span"), default="text_match")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="render report tables from stored results")
    p.add_argument("results", nargs="+", help="result.json paths")
    p.add_argument("--baseline")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return root


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ClientError, HarnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SlotNoiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()

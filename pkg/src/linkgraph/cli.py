"""Command-line entry point: ingest -> taxonomy -> metrics -> dataset ->
model -> eval, plus a one-shot pipeline runner and cross-repo tables.

Exit codes: 0 success, 1 validation failure, 2 stage failure. The env var
LINKGRAPH_SEED overrides the seed of a pipeline config. Outputs contain no
timestamps, so identical inputs and seeds reproduce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from collections import namedtuple
from dataclasses import dataclass
from pathlib import Path

from . import dataset as ds
from . import evaluation as ev
from . import ingest, model, report
from .errors import LinkGraphError, ValidationError
from .graph import build_graph, metrics_report
from .taxonomy import (
    CATEGORY_ORDER,
    LinkCategory,
    LinkTaxonomy,
    category_prevalence,
    load_taxonomy,
    type_prevalence,
)

DEFAULT_THETA_GRID = [round(0.05 * i, 2) for i in range(21)]


def _write_json(path: Path, doc) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return path


def _write_jsonl(path: Path, records) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
    return path


def _load_repo(path: str | Path, cleaned: bool = True) -> ingest.Repository:
    repo = ingest.load_repository(path)
    return ingest.clean(repo) if cleaned else repo


def _load_taxonomy_arg(path: str | None) -> LinkTaxonomy:
    if path is not None and not Path(path).exists():
        raise ValidationError(f"taxonomy file not found: {path}")
    return load_taxonomy(path)


def _pair_record(pair: ds.LabeledPair) -> dict:
    return {
        "a": pair.a,
        "b": pair.b,
        "klass": pair.klass.value,
        "canonical_type": pair.canonical_type,
        "category": pair.category.value if pair.category else None,
    }


def _pair_from_record(record: dict) -> ds.LabeledPair:
    return ds.make_pair(
        record["a"],
        record["b"],
        ds.PairClass(record["klass"]),
        canonical_type=record.get("canonical_type"),
        category=LinkCategory(record["category"]) if record.get("category") else None,
    )


def write_dataset_dir(bundle: ds.DatasetBundle, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        _write_jsonl(
            out_dir / "train.jsonl",
            ({"a": p.a, "b": p.b, "label": label} for p, label in bundle.train),
        ),
        _write_jsonl(out_dir / "test_new.jsonl", map(_pair_record, bundle.test_new)),
        _write_jsonl(
            out_dir / "test_traditional.jsonl", map(_pair_record, bundle.test_traditional)
        ),
        _write_json(out_dir / "provenance.json", bundle.provenance),
    ]
    return written


TrainPair = namedtuple("TrainPair", "a b")  # train.jsonl stores keys + label only


def read_dataset_dir(path: str | Path):
    """(train pairs with labels, test_new, test_traditional, provenance)."""
    path = Path(path)
    for name in ("train.jsonl", "test_new.jsonl", "test_traditional.jsonl", "provenance.json"):
        if not (path / name).exists():
            raise ValidationError(f"dataset directory is missing {name}: {path}")
    train = []
    with (path / "train.jsonl").open(encoding="utf-8") as handle:
        for line in handle:
            record = json.loads(line)
            train.append((TrainPair(record["a"], record["b"]), record["label"]))
    tests = {}
    for name in ("test_new", "test_traditional"):
        with (path / f"{name}.jsonl").open(encoding="utf-8") as handle:
            tests[name] = [_pair_from_record(json.loads(line)) for line in handle]
    provenance = json.loads((path / "provenance.json").read_text(encoding="utf-8"))
    return train, tests["test_new"], tests["test_traditional"], provenance


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    repo = _load_repo(args.path)
    out = Path(args.out)
    _write_json(out, ingest.repository_to_dict(repo))
    report_path = out.with_name(out.stem + ".cleaning_report.json")
    _write_json(report_path, repo.cleaning_report.to_dict())
    summary = ingest.summarize(repo) if repo.issues else {"repository": repo.name}
    print(json.dumps(summary, sort_keys=True))
    return 0


def _prevalence_rows(prevalence, keyfn):
    rows = [(keyfn(k), share) for k, share in prevalence.shares.items()]
    rows.sort(key=lambda kv: (-kv[1], kv[0]))
    return rows


def cmd_taxonomy(args) -> int:
    if args.action != "apply":
        raise ValidationError(f"unknown taxonomy action {args.action!r}")
    repo = _load_repo(args.repo)
    taxonomy = _load_taxonomy_arg(args.taxonomy)
    targets = [part.strip() for part in args.report.split(",")]
    if len(targets) != 2:
        raise ValidationError("--report takes two comma-separated paths: types.csv,categories.csv")
    types_path, categories_path = map(Path, targets)

    tp = type_prevalence(repo, taxonomy)
    cp = category_prevalence(repo, taxonomy)
    for path, prevalence, label, keyfn in (
        (types_path, tp, "canonical_type", lambda k: k),
        (categories_path, cp, "category", lambda k: k.value),
    ):
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow([label, "share", "count"])
            for key, share in _prevalence_rows(prevalence, keyfn):
                writer.writerow([key, f"{share:.6f}", round(share * prevalence.categorized)])
            writer.writerow(["(uncategorized)", "", prevalence.uncategorized])
    return 0


def cmd_metrics(args) -> int:
    repo = _load_repo(args.repo)
    taxonomy = _load_taxonomy_arg(args.taxonomy)
    graph = build_graph(repo, taxonomy, args.slice)
    result = metrics_report(graph)
    doc = {"repository": repo.name, "slice": args.slice, **result.to_dict()}
    out = Path(args.out)
    if out.suffix == ".csv":
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(list(doc))
            writer.writerow(["" if v is None else v for v in doc.values()])
    else:
        _write_json(out, doc)
    return 0


def _resolve_seed(seed: int) -> int:
    env = os.environ.get("LINKGRAPH_SEED")
    return int(env) if env else seed


def cmd_dataset(args) -> int:
    if args.action != "build":
        raise ValidationError(f"unknown dataset action {args.action!r}")
    repo = _load_repo(args.repo)
    taxonomy = _load_taxonomy_arg(args.taxonomy)
    cfg = ds.SplitConfig(
        strategy=args.strategy,
        test_fraction=args.test_fraction,
        seed=_resolve_seed(args.seed),
        exclude_auto_created=not args.keep_auto_created,
    )
    graph = build_graph(repo, taxonomy, "all") if args.strategy == "cluster" else None
    bundle = ds.build_dataset(
        repo, taxonomy, cfg, ds.TrainingConfig(args.config),
        g=graph, n_nonlinks=args.n_nonlinks,
    )
    write_dataset_dir(bundle, Path(args.out))
    print(json.dumps(bundle.provenance, sort_keys=True))
    return 0


def cmd_model(args) -> int:
    if args.action != "train":
        raise ValidationError(f"unknown model action {args.action!r}")
    train, _, _, provenance = read_dataset_dir(args.dataset_dir)
    repo = _load_repo(args.repo)
    cfg = model.TokenizerConfig.from_json(args.tokenizer) if args.tokenizer else model.TokenizerConfig()
    corpus = model.build_corpus(repo)
    index = model.fit_tfidf(corpus, cfg)
    classifier = model.train_threshold(train, index)
    model.save_model(
        Path(args.out), classifier, cfg, index.corpus_hash,
        training_config=provenance.get("training_config", ""),
        seed=provenance.get("seed"),
    )
    print(json.dumps({"theta": classifier.theta, "training_f1": classifier.training_f1,
                      "degenerate": classifier.degenerate}, sort_keys=True))
    return 0


def _evaluate_model(classifier, index, test_new, test_traditional, tc):
    out: dict = {}
    reports = {}
    for mode, pairs in (("traditional", test_traditional), ("new", test_new)):
        predictions = ev.predict_threshold(index, pairs, classifier.theta)
        rep, matrix = ev.evaluate(predictions, pairs, tc, mode=mode)
        reports[mode] = rep
        try:
            ol_rate = ev.ol_confusion_rate(matrix)
        except LinkGraphError:
            ol_rate = None
        out[mode] = {
            **rep.to_dict(),
            "confusion_matrix": matrix.to_dict(),
            "ol_confusion_rate": ol_rate,
        }
    out["deltas"] = ev.robustness_delta(reports["traditional"], reports["new"])
    return out, reports


def cmd_eval(args) -> int:
    classifier, cfg, doc = model.load_model(args.model)
    _, test_new, test_traditional, provenance = read_dataset_dir(args.dataset_dir)
    repo = _load_repo(args.repo)
    corpus = model.build_corpus(repo)
    index = model.fit_tfidf(corpus, cfg)
    if index.corpus_hash != doc.get("corpus_hash"):
        raise ValidationError(
            "corpus hash mismatch: the model was trained against a different repository export"
        )
    tc = ds.TrainingConfig(provenance["training_config"])
    full, _ = _evaluate_model(classifier, index, test_new, test_traditional, tc)
    if args.mode != "both":
        full = {args.mode: full[args.mode]}
    full["seed"] = provenance.get("seed")
    _write_json(Path(args.out), full)
    if args.curves:
        points = ev.sweep(index, test_new, tc, DEFAULT_THETA_GRID, variable="theta")
        report.emit_curves(points, Path(args.curves), figure=not args.no_figures)
    return 0


def cmd_tables(args) -> int:
    taxonomy = _load_taxonomy_arg(args.taxonomy)
    reports = [
        _repo_report(_load_repo(path), taxonomy) for path in args.repos
    ]
    report.emit_tables(reports, Path(args.out_dir), figures=not args.no_figures)
    return 0


def _repo_report(repo: ingest.Repository, taxonomy: LinkTaxonomy) -> report.RepoReport:
    per_category = {
        category: metrics_report(build_graph(repo, taxonomy, f"category:{category.value}"))
        for category in CATEGORY_ORDER
    }
    return report.RepoReport(
        name=repo.name,
        summary=ingest.summarize(repo),
        type_prevalence=type_prevalence(repo, taxonomy),
        category_prevalence=category_prevalence(repo, taxonomy),
        whole_graph=metrics_report(build_graph(repo, taxonomy, "all")),
        per_category=per_category,
    )


# ---------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class PipelineConfig:
    repositories: tuple[tuple[str, Path], ...]  # (name, path)
    taxonomy: Path | None
    tokenizer: Path | None
    split: ds.SplitConfig
    training_configs: tuple[ds.TrainingConfig, ...]
    out_dir: Path
    n_nonlinks: int | None = None
    figures: bool = True


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"pipeline config not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    def resolve(p: str | None) -> Path | None:
        if p is None:
            return None
        candidate = Path(p)
        return candidate if candidate.is_absolute() else base / candidate

    repositories = []
    for i, entry in enumerate(doc.get("repositories", [])):
        repo_path = resolve(entry.get("path"))
        if repo_path is None or not repo_path.exists():
            raise ValidationError(f"repositories[{i}]: path does not exist: {entry.get('path')}")
        repositories.append((entry.get("name") or repo_path.stem, repo_path))
    if not repositories:
        raise ValidationError("pipeline config lists no repositories")

    taxonomy_path = resolve(doc.get("taxonomy"))
    if taxonomy_path is not None and not taxonomy_path.exists():
        raise ValidationError(f"taxonomy file does not exist: {taxonomy_path}")
    tokenizer_path = resolve(doc.get("tokenizer"))
    if tokenizer_path is not None and not tokenizer_path.exists():
        raise ValidationError(f"tokenizer config does not exist: {tokenizer_path}")

    split_doc = doc.get("split", {})
    split_cfg = ds.SplitConfig(
        strategy=split_doc.get("strategy", "random"),
        test_fraction=split_doc.get("test_fraction", 0.2),
        seed=_resolve_seed(int(doc.get("seed", 0))),
        exclude_auto_created=split_doc.get("exclude_auto_created", True),
    )
    tcs = tuple(
        ds.TrainingConfig(name) for name in doc.get("training_configs", ["DvsNL"])
    )
    out_dir = resolve(doc.get("out_dir"))
    if out_dir is None:
        raise ValidationError("pipeline config needs an out_dir")
    return PipelineConfig(
        repositories=tuple(repositories),
        taxonomy=taxonomy_path,
        tokenizer=tokenizer_path,
        split=split_cfg,
        training_configs=tcs,
        out_dir=out_dir,
        n_nonlinks=doc.get("n_nonlinks"),
        figures=doc.get("figures", True),
    )


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage for every repository; returns the artifact manifest.

    On a stage failure the partial manifest is still written before the
    error propagates (echoed with its stage name by the CLI wrapper).
    """
    out_dir = cfg.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    taxonomy = load_taxonomy(cfg.taxonomy)
    tokenizer_cfg = (
        model.TokenizerConfig.from_json(cfg.tokenizer) if cfg.tokenizer else model.TokenizerConfig()
    )
    written: list[Path] = []
    manifest_path = out_dir / "manifest.json"

    def finish(error: str | None = None) -> dict:
        manifest = {
            "seed": cfg.split.seed,
            "out_dir": str(out_dir),
            "error": error,
            "files": [
                {"path": str(p.relative_to(out_dir)), "sha256": _sha256(p)}
                for p in sorted(set(written))
            ],
        }
        _write_json(manifest_path, manifest)
        return manifest

    stage = "setup"
    try:
        repo_reports = []
        for name, repo_path in cfg.repositories:
            repo_dir = out_dir / name
            stage = f"{name}:ingest"
            repo = ingest.clean(ingest.load_repository(repo_path, name))
            written.append(_write_json(repo_dir / "cleaned.json", ingest.repository_to_dict(repo)))
            written.append(_write_json(repo_dir / "cleaning_report.json", repo.cleaning_report.to_dict()))
            written.append(_write_json(repo_dir / "summary.json", ingest.summarize(repo)))

            stage = f"{name}:taxonomy"
            tp = type_prevalence(repo, taxonomy)
            cp = category_prevalence(repo, taxonomy)
            written.append(_write_json(
                repo_dir / "type_prevalence.json",
                {"shares": dict(sorted(tp.shares.items())), "uncategorized": tp.uncategorized},
            ))
            written.append(_write_json(
                repo_dir / "category_prevalence.json",
                {"shares": {k.value: v for k, v in sorted(cp.shares.items(), key=lambda kv: kv[0].value)},
                 "uncategorized": cp.uncategorized},
            ))

            stage = f"{name}:metrics"
            whole = metrics_report(build_graph(repo, taxonomy, "all"))
            written.append(_write_json(repo_dir / "metrics_all.json", whole.to_dict()))
            per_category = {}
            for category in CATEGORY_ORDER:
                result = metrics_report(build_graph(repo, taxonomy, f"category:{category.value}"))
                per_category[category] = result
                written.append(
                    _write_json(repo_dir / f"metrics_{category.value}.json", result.to_dict())
                )
            repo_reports.append(report.RepoReport(
                name=name,
                summary=ingest.summarize(repo),
                type_prevalence=tp,
                category_prevalence=cp,
                whole_graph=whole,
                per_category=per_category,
            ))

            corpus = model.build_corpus(repo)
            index = model.fit_tfidf(corpus, tokenizer_cfg)
            graph_all = build_graph(repo, taxonomy, "all")
            for tc in cfg.training_configs:
                stage = f"{name}:dataset:{tc.value}"
                bundle = ds.build_dataset(
                    repo, taxonomy, cfg.split, tc, g=graph_all, n_nonlinks=cfg.n_nonlinks
                )
                written.extend(write_dataset_dir(bundle, repo_dir / f"dataset_{tc.value}"))

                stage = f"{name}:model:{tc.value}"
                classifier = model.train_threshold(bundle.train, index)
                model_path = repo_dir / f"model_{tc.value}.json"
                model.save_model(model_path, classifier, tokenizer_cfg, index.corpus_hash,
                                 tc.value, seed=cfg.split.seed)
                written.append(model_path)

                stage = f"{name}:eval:{tc.value}"
                full, _ = _evaluate_model(
                    classifier, index, list(bundle.test_new), list(bundle.test_traditional), tc
                )
                full["seed"] = cfg.split.seed
                written.append(_write_json(repo_dir / f"eval_{tc.value}.json", full))
                points = ev.sweep(index, list(bundle.test_new), tc, DEFAULT_THETA_GRID)
                written.extend(
                    report.emit_curves(points, repo_dir / f"curves_{tc.value}.csv", figure=cfg.figures)
                )

        stage = "tables"
        written.extend(report.emit_tables(repo_reports, out_dir / "tables", figures=cfg.figures))
    except Exception as exc:
        finish(error=f"{stage}: {exc}")
        raise LinkGraphError(f"stage {stage} failed: {exc}") from exc
    return finish()


def cmd_pipeline(args) -> int:
    cfg = load_pipeline_config(args.config)
    manifest = run_pipeline(cfg)
    print(json.dumps({"files": len(manifest["files"]), "out_dir": manifest["out_dir"]},
                     sort_keys=True))
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkgraph",
        description="Issue-link graph analysis and duplicate-detection dataset pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="Parse and clean a repository export")
    p.add_argument("path", help="JSON export file")
    p.add_argument("--out", required=True, help="Cleaned repository JSON output")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("taxonomy", help="Apply a link type taxonomy and report prevalences")
    p.add_argument("action", choices=["apply"])
    p.add_argument("repo", help="Repository export JSON")
    p.add_argument("--taxonomy", default=None, help="Taxonomy JSON (default: bundled table)")
    p.add_argument("--report", required=True, help="Two output paths: types.csv,categories.csv")
    p.set_defaults(fn=cmd_taxonomy)

    p = sub.add_parser("metrics", help="Structural metrics for one graph slice")
    p.add_argument("repo")
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--slice", default="all", help="all | type:<name> | category:<name>")
    p.add_argument("--out", required=True, help="report.json or report.csv")
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("dataset", help="Build a labeled pair dataset")
    p.add_argument("action", choices=["build"])
    p.add_argument("repo")
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--strategy", choices=["random", "cluster"], default="random")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", choices=[tc.value for tc in ds.TrainingConfig], default="DvsNL")
    p.add_argument("--n-nonlinks", type=int, default=None,
                   help="Non-links to synthesize (default: size of the largest link class)")
    p.add_argument("--keep-auto-created", action="store_true",
                   help="Keep auto-created link types (e.g. clone links) in training data")
    p.add_argument("--out", required=True, help="Output dataset directory")
    p.set_defaults(fn=cmd_dataset)

    p = sub.add_parser("model", help="Train the similarity threshold baseline")
    p.add_argument("action", choices=["train"])
    p.add_argument("dataset_dir")
    p.add_argument("--repo", required=True)
    p.add_argument("--tokenizer", default=None, help="Tokenizer config JSON")
    p.add_argument("--out", required=True, help="model.json output")
    p.set_defaults(fn=cmd_model)

    p = sub.add_parser("eval", help="Score a model on the test sets")
    p.add_argument("model")
    p.add_argument("dataset_dir")
    p.add_argument("--repo", required=True)
    p.add_argument("--mode", choices=["traditional", "new", "both"], default="both")
    p.add_argument("--out", required=True, help="report.json output")
    p.add_argument("--curves", default=None, help="Optional sweep curve CSV (figure rendered alongside)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("pipeline", help="Run every stage from a JSON config")
    p.add_argument("config")
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("tables", help="Cross-repository report tables and figures")
    p.add_argument("repos", nargs="+", help="Repository export JSON files")
    p.add_argument("--taxonomy", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=cmd_tables)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except LinkGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface.

Exit codes: 0 success (warnings allowed), 1 usage error, 2 data error,
3 service error.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from .corpus import (
    CorpusStats,
    NoiseFlag,
    NoiseClass,
    NoiseReport,
    clean_news,
    compute_stats,
    default_noise_rules,
    load_games,
    NoiseRules,
    save_games,
    detect_noise,
)
from .errors import DataError, PressboxError, ServiceError
from .pipeline import (
    PipelineConfig,
    label_corpus,
    read_alignments,
    read_candidates,
    read_news,
    read_selected,
    rerank_stage,
    rewrite_stage,
    run_pipeline,
    select_stage,
    split_corpus,
    train_selector_stage,
    write_alignments,
    write_candidates,
    write_news,
    write_rewrite_pairs,
    write_selected,
    evaluate as evaluate_articles,
)
from .reranker import BudgetPolicy
from .selector import ImportanceModel
from .text import Tokenization


def _load_config(ctx) -> PipelineConfig:
    cfg: PipelineConfig = ctx.obj["config"]
    overrides = ctx.obj["overrides"]
    if overrides.get("seed") is not None:
        cfg = dataclasses.replace(cfg, seed=overrides["seed"])
        cfg = dataclasses.replace(
            cfg,
            selector=dataclasses.replace(
                cfg.selector, train=dataclasses.replace(cfg.selector.train, seed=overrides["seed"])
            ),
        )
    if overrides.get("workers") is not None:
        cfg = dataclasses.replace(cfg, workers=overrides["workers"])
    return cfg


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.pass_context
def cli(ctx, config, seed, workers):
    """Turn live sports commentary into news articles."""
    ctx.ensure_object(dict)
    base = PipelineConfig.from_file(config) if config else PipelineConfig()
    ctx.obj["config"] = base
    ctx.obj["overrides"] = {"seed": seed, "workers": workers}


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
def stats(corpus_path):
    """Print corpus statistics as name<TAB>value lines."""
    report = compute_stats(load_games(corpus_path))
    for name in CorpusStats.FIELDS:
        click.echo(f"{name}\t{getattr(report, name):.2f}")


@cli.command("detect-noise")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--rules", "rules_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def detect_noise_cmd(corpus_path, rules_path, out_path):
    """Write one noise report per game."""
    rules = (
        NoiseRules.from_json(Path(rules_path).read_text(encoding="utf-8"))
        if rules_path
        else default_noise_rules()
    )
    games = load_games(corpus_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for game in games:
            report = detect_noise(game, rules)
            fh.write(
                json.dumps(
                    {
                        "game_id": report.game_id,
                        "flags": [
                            {
                                "news_index": f.news_index,
                                "class": f.noise_class.value,
                                "rule_id": f.rule_id,
                            }
                            for f in report.flags
                        ],
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
            )
            fh.write("\n")


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--reports", "reports_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--drop-discardable", is_flag=True, default=False)
def clean(corpus_path, reports_path, out_path, drop_discardable):
    """Remove flagged news sentences using detect-noise reports."""
    games = load_games(corpus_path)
    reports = {}
    with open(reports_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            reports[obj["game_id"]] = NoiseReport(
                game_id=obj["game_id"],
                flags=tuple(
                    NoiseFlag(f["news_index"], NoiseClass(f["class"]), f["rule_id"])
                    for f in obj["flags"]
                ),
            )
    cleaned = []
    for game in games:
        report = reports.get(game.game_id)
        result = clean_news(game, report) if report else game
        if drop_discardable and result.discardable:
            continue
        cleaned.append(result)
    save_games(cleaned, out_path)


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--rewrite-pairs", "pairs_path", type=click.Path(), default=None)
@click.pass_context
def label(ctx, corpus_path, out_path, pairs_path):
    """Pseudo-label news/commentary alignments."""
    config = _load_config(ctx)
    games = load_games(corpus_path)
    results = label_corpus(games, config)
    with open(out_path, "w", encoding="utf-8") as fh:
        write_alignments(results, fh)
    if pairs_path:
        with open(pairs_path, "w", encoding="utf-8") as fh:
            write_rewrite_pairs(games, results, fh)


@cli.command("train-selector")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def train_selector_cmd(ctx, corpus_path, labels_path, out_path):
    """Train the importance model from pseudo-labels."""
    config = _load_config(ctx)
    games = load_games(corpus_path)
    with open(labels_path, "r", encoding="utf-8") as fh:
        results = read_alignments(fh)
    model = train_selector_stage(games, results, config)
    model.save(out_path)


@cli.command("select")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def select_cmd(ctx, corpus_path, model_path, out_path):
    """Score commentaries and apply the selection policy."""
    config = _load_config(ctx)
    games = load_games(corpus_path)
    model = ImportanceModel.load(model_path)
    selected = select_stage(games, model, config)
    with open(out_path, "w", encoding="utf-8") as fh:
        write_selected(selected, fh)


@cli.command("rewrite")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--selected", "selected_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--backend", type=click.Choice(["template", "remote"]), default=None)
@click.option("--endpoint", default=None)
@click.pass_context
def rewrite_cmd(ctx, corpus_path, selected_path, out_path, backend, endpoint):
    """Rewrite selected commentaries into news-style candidates."""
    config = _load_config(ctx)
    if backend:
        config = dataclasses.replace(
            config,
            rewriter=dataclasses.replace(
                config.rewriter, backend=backend, endpoint=endpoint or config.rewriter.endpoint
            ),
        )
    games = load_games(corpus_path)
    with open(selected_path, "r", encoding="utf-8") as fh:
        selected = read_selected(fh)
    candidates = rewrite_stage(games, selected, config)
    with open(out_path, "w", encoding="utf-8") as fh:
        write_candidates(candidates, fh)


@cli.command("rerank")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--candidates", "candidates_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--budget", type=int, default=None)
@click.option("--lambda1", type=float, default=None)
@click.option("--lambda2", type=float, default=None)
@click.option("--lambda3", type=float, default=None)
@click.option("--eta", type=float, default=None)
@click.pass_context
def rerank_cmd(ctx, corpus_path, candidates_path, out_path, budget, lambda1, lambda2, lambda3, eta):
    """Assemble final articles with budgeted fluency-aware MMR."""
    config = _load_config(ctx)
    mmr = config.mmr
    updates = {}
    if budget is not None:
        updates["budget"] = budget
        updates["budget_policy"] = BudgetPolicy.FIXED
    for name, value in (("lambda1", lambda1), ("lambda2", lambda2), ("lambda3", lambda3), ("eta", eta)):
        if value is not None:
            updates[name] = value
    if updates:
        config = dataclasses.replace(config, mmr=dataclasses.replace(mmr, **updates))
    games = load_games(corpus_path)
    with open(candidates_path, "r", encoding="utf-8") as fh:
        candidates = read_candidates(fh)
    records = rerank_stage(games, candidates, config)
    with open(out_path, "w", encoding="utf-8") as fh:
        write_news(records, fh)


@cli.command("pipeline")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--outdir", required=True, type=click.Path())
@click.pass_context
def pipeline_cmd(ctx, corpus_path, outdir):
    """Run select -> rewrite -> rerank end to end."""
    config = _load_config(ctx)
    run = run_pipeline(corpus_path, config)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "news.jsonl", "w", encoding="utf-8") as fh:
        write_news(run.records, fh)
    (out / "manifest.json").write_text(
        json.dumps(run.manifest, ensure_ascii=False, indent=2, sort_keys=True),
        encoding="utf-8",
    )
    for warning in run.manifest["warnings"]:
        click.echo(f"warning: {warning['game_id']}: {warning['warning']}", err=True)
    for error in run.manifest["errors"]:
        click.echo(f"error: {error['game_id']}: {error['error']}", err=True)


@cli.command("evaluate")
@click.option("--generated", "generated_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option(
    "--tokenization",
    type=click.Choice([t.value for t in Tokenization]),
    default=Tokenization.CHAR.value,
)
def evaluate_cmd(generated_path, corpus_path, out_path, tokenization):
    """Article-level ROUGE-1/2/L against reference news."""
    with open(generated_path, "r", encoding="utf-8") as fh:
        records = read_news(fh)
    generated = {rec.game_id: rec.news_text for rec in records}
    references = load_games(corpus_path)
    report = evaluate_articles(generated, references, Tokenization(tokenization))
    for key, value in report.settings.items():
        click.echo(f"# {key}: {value}")
    click.echo(f"rouge1\t{report.rouge1:.2f}")
    click.echo(f"rouge2\t{report.rouge2:.2f}")
    click.echo(f"rougeL\t{report.rougeL:.2f}")
    if out_path:
        Path(out_path).write_text(
            json.dumps(report.to_dict(), ensure_ascii=False, indent=2),
            encoding="utf-8",
        )


@cli.command("split")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--counts", default=None, help="train,valid,test counts, e.g. 8,1,1")
@click.option("--ratios", default=None, help="train,valid,test ratios, e.g. 0.8,0.1,0.1")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def split_cmd(ctx, corpus_path, counts, ratios, out_path):
    """Deterministic train/valid/test split manifest."""
    config = _load_config(ctx)
    games = load_games(corpus_path)
    parsed_counts = tuple(int(x) for x in counts.split(",")) if counts else None
    parsed_ratios = tuple(float(x) for x in ratios.split(",")) if ratios else None
    if parsed_counts and len(parsed_counts) != 3:
        raise click.UsageError("--counts needs exactly three values")
    if parsed_ratios and len(parsed_ratios) != 3:
        raise click.UsageError("--ratios needs exactly three values")
    if not parsed_counts and not parsed_ratios:
        raise click.UsageError("give --counts or --ratios")
    manifest = split_corpus(games, counts=parsed_counts, ratios=parsed_ratios, seed=config.seed)
    Path(out_path).write_text(
        json.dumps(manifest.to_dict(), ensure_ascii=False, indent=2),
        encoding="utf-8",
    )


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except ServiceError as exc:
        click.echo(f"service error: {exc}", err=True)
        return 3
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except PressboxError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands cover the full pipeline: synthetic data generation, lexicon
construction from documentation, pair augmentation, episode simulation,
report rendering (figures + delimited tables), and the API server.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import click

from . import grammar as grammar_mod
from . import harness, report as report_mod
from .ingest import DocRecord, ExcerptMode, build_lexicon_from_docs
from .lexicon import KnowledgeBase
from .types import Domain, load_instances, read_jsonl, write_jsonl


def _default_grammar() -> Path:
    return Path(resources.files("lexparse.data") / "ltl_grammar.json")


@click.group()
def main():
    """Dynamic knowledge-augmented parsing toolkit."""


@main.command("gen-data")
@click.option("--grammar", "grammar_path", type=click.Path(exists=True), default=None,
              help="Grammar JSON; defaults to the bundled temporal-logic grammar.")
@click.option("--n", default=1000, show_default=True, help="Number of instances.")
@click.option("--seed", default=0, show_default=True)
@click.option("--distractors", default=0, show_default=True,
              help="Distractor lexicon entries mixed into each k_gold.")
@click.option("--out", required=True, type=click.Path(), help="Output JSONL path.")
def gen_data(grammar_path, n, seed, distractors, out):
    """Generate a synthetic (x, y, k_gold) dataset from a weighted grammar."""
    g = grammar_mod.Grammar.load(grammar_path or _default_grammar())
    instances = grammar_mod.generate_dataset(g, n, seed=seed, distractor_count=distractors)
    count = write_jsonl(out, (inst.to_dict() for inst in instances))
    click.echo(f"wrote {count} instances to {out}")


@main.command("build-lexicon")
@click.option("--docs", required=True, type=click.Path(exists=True),
              help="JSONL of {construct_id, doc_text, domain?} records.")
@click.option("--mode", type=click.Choice(["first_chars", "first_line"]),
              default="first_chars", show_default=True)
@click.option("--n", default=200, show_default=True,
              help="Excerpt length in characters for first_chars mode.")
@click.option("--out", required=True, type=click.Path())
def build_lexicon(docs, mode, n, out):
    """Build a lexicon file from documentation excerpts."""
    records = [DocRecord.from_dict(rec) for _, rec in read_jsonl(docs)]
    excerpt = ExcerptMode.FIRST_LINE if mode == "first_line" else ExcerptMode.FIRST_N_CHARS
    entries, skipped = build_lexicon_from_docs(records, excerpt, n)
    count = write_jsonl(out, (e.to_dict() for e in entries))
    click.echo(f"wrote {count} entries to {out} ({len(skipped)} docs skipped)")
    for s in skipped:
        click.echo(f"  skipped {s.construct_id}: {s.reason}", err=True)


@main.command("augment")
@click.option("--pairs", required=True, type=click.Path(exists=True),
              help="JSONL of {x, y} pairs.")
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--domain", type=click.Choice([d.value for d in Domain]),
              default="OTHER", show_default=True)
@click.option("--out", required=True, type=click.Path())
def augment(pairs, lexicon_path, domain, out):
    """Attach gold lexicon sets to (x, y) pairs by matching values in y."""
    from .ingest import augment_pairs
    from .types import LexiconEntry

    pair_list = [(rec["x"], rec["y"]) for _, rec in read_jsonl(pairs)]
    entries = [
        LexiconEntry.from_dict(rec)
        for _, rec in read_jsonl(lexicon_path)
        if "_meta" not in rec
    ]
    instances = augment_pairs(pair_list, entries, Domain(domain))
    count = write_jsonl(out, (inst.to_dict() for inst in instances))
    matched = sum(1 for inst in instances if inst.k_gold)
    click.echo(f"wrote {count} instances to {out} ({matched} with nonempty k_gold)")


@main.command("simulate")
@click.option("--stream", required=True, type=click.Path(exists=True),
              help="JSONL instance stream.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Episode config JSON; defaults apply when omitted.")
@click.option("--out-dir", required=True, type=click.Path())
def simulate(stream, config_path, out_dir):
    """Run one episode offline and write records, report, and the final KB."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = harness.EpisodeConfig.load(config_path) if config_path else harness.EpisodeConfig()
    instances = load_instances(stream)
    runner = harness.EpisodeRunner(config)
    for inst in instances:
        runner.step(inst)
    harness.save_records(runner.records, out / "records.jsonl")
    rep = runner.report()
    (out / "report.json").write_text(
        json.dumps(rep.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    runner.kb.persist(out / "kb.jsonl")
    click.echo(
        f"{len(runner.records)} steps, kb size {len(runner.kb)}, "
        f"ovc f1 {rep.ovc_f1:.3f}, total cost {rep.total_cost}"
    )


@main.command("report")
@click.option("--records", "records_path", required=True, type=click.Path(exists=True))
@click.option("--baseline", "baseline_path", type=click.Path(exists=True), default=None)
@click.option("--out-dir", required=True, type=click.Path())
def report(records_path, baseline_path, out_dir):
    """Render report.json, summary.tsv, and PNG figures from a records file."""
    records = harness.load_records(records_path)
    baseline = harness.load_records(baseline_path) if baseline_path else None
    report_mod.write_report(records, out_dir, baseline)
    click.echo(f"report written to {out_dir}")


@main.command("serve")
@click.option("--stream", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--state-dir", type=click.Path(), default=None,
              help="Directory for session persistence.")
@click.option("--console-dir", type=click.Path(), default=None,
              help="Static assets for the feedback console.")
def serve(stream, config_path, port, host, state_dir, console_dir):
    """Start the interactive feedback API server."""
    import uvicorn

    from .server import create_app

    config = harness.EpisodeConfig.load(config_path) if config_path else harness.EpisodeConfig()
    app = create_app(load_instances(stream), config, state_dir, console_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

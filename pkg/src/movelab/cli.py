"""Command-line interface.

Subcommands: ingest, split, prompt, annotate, eval, ablate, stability,
serve, export. Successful commands print JSON or TSV to stdout and exit
0; failures print a machine-readable JSON error line to stderr and exit
nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import service
from .corpus import SplitSpec, dump_corpus, load_corpus, segment, split_corpus
from .errors import MoveLabError
from .gateway import BACKEND_KINDS, BackendConfig, KIND_MOCK
from .metrics import load_judgments, resolve
from .prompts import PromptSpec, build_prompt, dump_prompt
from .runner import (
    RunSpec,
    ablate,
    curve_table,
    evaluate,
    load_run_record,
    report_table,
    resolve_bank,
    run,
)
from .simulated import SimulatedAnnotator
from .store import RunStore


def _print(payload: dict) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False))


def _load_part(args: argparse.Namespace) -> list:
    """Resolve the working corpus from --corpus or --store/--part."""
    if getattr(args, "corpus", None):
        return load_corpus(args.corpus)
    store = RunStore(args.store)
    part = getattr(args, "part", None)
    if part:
        path = store.part_path(part)
        if path.exists():
            return load_corpus(path)
        raise MoveLabError(f"part {part!r} not found; run `movelab split` first")
    if store.corpus_path.exists():
        return load_corpus(store.corpus_path)
    raise MoveLabError("no corpus: pass --corpus or ingest one into the store")


def _backend_config(args: argparse.Namespace) -> tuple[BackendConfig, object | None]:
    """Map --backend to a config plus an optional backend factory."""
    kind = args.backend
    if kind == "simulated":
        config = BackendConfig(kind=KIND_MOCK, mode="simulated")
        factory = lambda spec, corpus: SimulatedAnnotator(corpus, spec.k)  # noqa: E731
        return config, factory
    endpoint = getattr(args, "endpoint", None)
    config = BackendConfig(
        kind=kind,
        endpoint=endpoint,
        auth_token_env="MOVELAB_API_TOKEN" if kind == "remote" else None,
        mode=getattr(args, "mode", ""),
        timeout=getattr(args, "timeout", 30.0),
        max_retries=getattr(args, "retries", 3),
    )
    return config, None


def _parse_ks(raw: str) -> list[int]:
    if ".." in raw:
        lo, hi = raw.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in raw.split(",") if part.strip()]


def _parse_parts(raw: str) -> SplitSpec:
    parts = []
    for chunk in raw.split(","):
        name, _, count = chunk.partition(":")
        if not count:
            raise MoveLabError(f"bad part spec {chunk!r}; expected name:count")
        parts.append((name.strip(), int(count)))
    return SplitSpec(parts=tuple(parts))


# -- subcommands -----------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    store = RunStore(args.store)
    store.root.mkdir(parents=True, exist_ok=True)
    dump_corpus(corpus, store.corpus_path)
    journals: dict[str, int] = {}
    for abstract in corpus:
        journals[abstract.journal] = journals.get(abstract.journal, 0) + 1
    _print(
        {
            "abstracts": len(corpus),
            "journals": dict(sorted(journals.items())),
            "sentences": sum(len(segment(a.text)) for a in corpus),
            "with_gold": sum(1 for a in corpus if a.gold is not None),
            "store": str(store.corpus_path),
        }
    )
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    corpus = _load_part(args)
    spec = _parse_parts(args.parts)
    parts = split_corpus(corpus, spec)
    store = RunStore(args.store)
    (store.root / "parts").mkdir(parents=True, exist_ok=True)
    sizes = {}
    for name, abstracts in parts.items():
        dump_corpus(abstracts, store.part_path(name))
        sizes[name] = len(abstracts)
    _print({"parts": sizes, "store": str(store.root / "parts")})
    return 0


def cmd_prompt(args: argparse.Namespace) -> int:
    bank = resolve_bank(args.bank)
    prompt = build_prompt(
        PromptSpec(
            k=args.k,
            bank=bank,
            turn_limit=args.turn_limit,
            include_trial_feedback=args.trial,
        )
    )
    text = dump_prompt(prompt)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _print(
            {
                "k": args.k,
                "blocks": len(prompt.blocks),
                "turns": len(prompt.turns),
                "out": args.out,
            }
        )
    else:
        print(text, end="")
    return 0


def cmd_annotate(args: argparse.Namespace) -> int:
    corpus = _load_part(args)
    store = RunStore(args.store)
    config, factory = _backend_config(args)
    spec = RunSpec(
        run_id=args.run_id,
        part=args.part or "all",
        k=args.k,
        bank_id=args.bank,
        backend=config,
        rounds=args.rounds,
        parallelism=args.parallelism,
        seed=args.seed,
        threshold=args.threshold,
        trial_feedback=args.trial,
    )
    record = run(spec, corpus, store=store, backend_factory=factory)
    _print(
        {
            "run_id": spec.run_id,
            "abstracts": len(corpus),
            "rounds": spec.rounds,
            "annotated": sum(1 for r in record.results if not r.failed),
            "failures": len(record.failures()),
            "store": str(store.run_dir(spec.run_id)),
        }
    )
    return 0


def _final_judgments_from_files(args: argparse.Namespace):
    a = load_judgments(args.evaluator_a)
    b = load_judgments(args.evaluator_b)
    adjudications = load_judgments(args.adjudicator) if args.adjudicator else []
    return resolve(a, b, adjudications)


def cmd_eval(args: argparse.Namespace) -> int:
    store = RunStore(args.store)
    record = load_run_record(store, args.run_id)
    if args.evaluator_a or args.evaluator_b:
        if not (args.evaluator_a and args.evaluator_b):
            raise MoveLabError("judgment mode needs both --evaluator-a and --evaluator-b")
        reference = _final_judgments_from_files(args)
    else:
        args.part = args.part or record.spec.part
        reference = _load_part(args)
    report = evaluate(record, reference)
    _print(report.to_record())
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    corpus = _load_part(args)
    store = RunStore(args.store)
    config, factory = _backend_config(args)
    template = RunSpec(
        run_id=args.run_id,
        part=args.part or "all",
        k=0,
        bank_id=args.bank,
        backend=config,
        rounds=args.rounds,
        seed=args.seed,
        threshold=args.threshold,
    )
    ks = _parse_ks(args.ks)
    records, rows = ablate(ks, corpus, template, store=store, backend_factory=factory)
    table = curve_table(rows)
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
        _print({"runs": [r.spec.run_id for r in records], "out": args.out})
    else:
        print(table, end="")
    return 0


def cmd_stability(args: argparse.Namespace) -> int:
    store = RunStore(args.store)
    record = load_run_record(store, args.run_id)
    args.part = args.part or record.spec.part
    corpus = _load_part(args)
    report = evaluate(record, corpus)
    if report.stability is None:
        raise MoveLabError(
            f"run {args.run_id!r} has a single round; stability needs rounds >= 2"
        )
    result = report.stability
    _print(
        {
            "run_id": args.run_id,
            "accuracy_a": round(result.accuracy_a, 6),
            "accuracy_b": round(result.accuracy_b, 6),
            "delta": round(result.delta, 6),
            "both_above_threshold": result.both_above_threshold,
            "threshold": result.threshold,
            "per_text": {k: round(v, 6) for k, v in result.per_text.items()},
        }
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    service.serve(
        args.store,
        run_id=args.run_id,
        corpus_path=args.corpus,
        host=args.host,
        port=args.port,
        ui_dir=args.ui_dir,
    )
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    store = RunStore(args.store)
    record = load_run_record(store, args.run_id)
    args.part = args.part or record.spec.part
    reference = _load_part(args)
    report = evaluate(record, reference)
    table = report_table(report)
    Path(args.out).write_text(table, encoding="utf-8")
    _print({"run_id": args.run_id, "out": args.out})
    return 0


# -- parser ------------------------------------------------------------------


def _add_store(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", required=True, help="run store directory")


def _add_corpus_selection(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", help="corpus file (overrides store lookup)")
    parser.add_argument("--part", help="named sub-corpus part from `split`")


def _add_backend(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--backend",
        default="mock",
        choices=list(BACKEND_KINDS) + ["simulated"],
        help="annotation backend",
    )
    parser.add_argument("--endpoint", help="remote chat endpoint URL")
    parser.add_argument("--mode", default="", help="backend mode tag (metadata only)")
    parser.add_argument("--timeout", type=float, default=30.0)
    parser.add_argument("--retries", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="movelab",
        description="LLM-assisted rhetorical move annotation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus file into the store")
    p.add_argument("--corpus", required=True)
    _add_store(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="chronological sub-corpus split")
    _add_store(p)
    _add_corpus_selection(p)
    p.add_argument(
        "--parts",
        default="S1:5,S2:5,S3:5,S4:5,S5:25",
        help="comma list of name:per-journal-count",
    )
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("prompt", help="build and dump a k-shot prompt")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--bank", default="default", help="'default' or a bank file path")
    p.add_argument("--turn-limit", type=int, default=4000)
    p.add_argument("--trial", action="store_true", help="append the trial-with-feedback block")
    p.add_argument("--out", help="write the dump to a file instead of stdout")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("annotate", help="run annotation over a corpus part")
    _add_store(p)
    _add_corpus_selection(p)
    _add_backend(p)
    p.add_argument("--run-id", required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--bank", default="default")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.80)
    p.add_argument("--trial", action="store_true")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("eval", help="evaluate a stored run")
    _add_store(p)
    _add_corpus_selection(p)
    p.add_argument("--run-id", required=True)
    p.add_argument("--evaluator-a", help="judgment file for evaluator A")
    p.add_argument("--evaluator-b", help="judgment file for evaluator B")
    p.add_argument("--adjudicator", help="judgment file resolving disputes")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="k-shot ablation and accuracy curve")
    _add_store(p)
    _add_corpus_selection(p)
    _add_backend(p)
    p.add_argument("--run-id", required=True, help="run id prefix")
    p.add_argument("--ks", default="0..8", help="shot counts: 0..8 or 0,2,8")
    p.add_argument("--bank", default="default")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.80)
    p.add_argument("--out", help="write the curve table to a file")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("stability", help="cross-round accuracy stability of a run")
    _add_store(p)
    _add_corpus_selection(p)
    p.add_argument("--run-id", required=True)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("serve", help="adjudication HTTP service")
    _add_store(p)
    p.add_argument("--run-id")
    p.add_argument("--corpus", help="corpus file backing the review items")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--ui-dir", help="directory of built UI assets to serve")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="export the per-label metric table (TSV)")
    _add_store(p)
    _add_corpus_selection(p)
    p.add_argument("--run-id", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MoveLabError as exc:
        json.dump({"error": str(exc), "type": type(exc).__name__}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except FileNotFoundError as exc:
        json.dump({"error": str(exc), "type": "FileNotFoundError"}, sys.stderr)
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``phrasebreak <subcommand> [options]``."""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import RunConfig
from .errors import ConfigError, DataError, NetworkError, PhraseBreakError, PhraseBreakRuntimeError

logger = logging.getLogger("phrasebreak")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME, EXIT_NETWORK = 0, 2, 3, 4, 5

SUBDIRS = ("config", "manifests", "checkpoints", "predictions", "reports", "data")
SYSTEMS = ("majority", "bert", "break-bert", "bilstm", "against-tts", "llm")


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class RunDir:
    """One run's output tree; a lock file keeps concurrent runs out."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, sub: str, name: str) -> Path:
        return self.root / sub / name

    @contextlib.contextmanager
    def locked(self):
        self.root.mkdir(parents=True, exist_ok=True)
        for sub in SUBDIRS:
            (self.root / sub).mkdir(exist_ok=True)
        lock = self.root / ".lock"
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            owner = lock.read_text().strip()
            if owner.isdigit() and _alive(int(owner)):
                raise PhraseBreakRuntimeError(
                    f"{self.root} is in use by process {owner}; use a different --run-dir"
                ) from None
            logger.warning("removing stale lock left by process %s", owner or "?")
            lock.unlink()
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        try:
            yield self
        finally:
            lock.unlink(missing_ok=True)

    def echo_config(self, cfg: RunConfig, command: str) -> None:
        text = cfg.to_json()
        (self.root / "config" / "resolved.json").write_text(text, encoding="utf-8")
        (self.root / "config" / f"{command}.json").write_text(text, encoding="utf-8")

    def manifest(self, command: str, artifact: Path, inputs: Sequence[Path], cfg: RunConfig, seed: int) -> None:
        entry = {
            "command": command,
            "version": __version__,
            "artifact": artifact.relative_to(self.root).as_posix(),
            "artifact_sha256": sha256_file(artifact),
            "config_sha256": cfg.digest(),
            "inputs": {Path(p).name: sha256_file(p) for p in inputs},
            "seed": seed,
        }
        out = self.root / "manifests" / f"{artifact.name}.manifest.json"
        out.write_text(json.dumps(entry, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


def _input(args, run: RunDir, default: str) -> Path:
    path = Path(args.input) if args.input else run.path("data", default)
    if not path.exists():
        raise DataError(f"input not found: {path}")
    return path


def _out(args, run: RunDir, sub: str, default: str) -> Path:
    return Path(args.out) if args.out else run.path(sub, default)


# --- subcommands -----------------------------------------------------------------


def cmd_ingest(args, cfg: RunConfig, run: RunDir) -> int:
    from .corpus import LabeledUtterance, parse_alignment, save_dataset

    files: list[Path] = []
    for item in map(Path, args.alignments):
        files.extend(sorted(p for p in item.iterdir() if p.is_file()) if item.is_dir() else [item])
    labels: dict[str, dict] = {}
    if args.labels:
        with open(args.labels, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if line.strip():
                    try:
                        row = json.loads(line)
                        labels[row["utterance_id"]] = row
                    except (json.JSONDecodeError, KeyError, TypeError) as exc:
                        raise DataError(f"{args.labels}:{lineno}: bad label row ({exc})") from None
    records = []
    for f in files:
        with open(f, "rb") as fh:
            utt = parse_alignment(fh, args.format, utterance_id=f.stem)
        row = labels.get(utt.utterance_id, {})
        records.append(
            LabeledUtterance(utt, row.get("overall_rank"), row.get("interval_ranks"))
        )
    out = _out(args, run, "data", "ingested.jsonl")
    save_dataset(records, out)
    run.manifest("ingest", out, files + ([Path(args.labels)] if args.labels else []), cfg, cfg.seed)
    print(f"ingested {len(records)} utterance(s) -> {out}")
    return EXIT_OK


def cmd_synth(args, cfg: RunConfig, run: RunDir) -> int:
    from .corpus import LabeledUtterance, save_dataset, synthesize_corpus, synthesize_references
    from .corpus import synthesize_two_pattern_set

    profile = args.profile or cfg.data["synth"]["profile"]
    seed = cfg.seed
    outputs = []
    if args.kind == "learners":
        out = _out(args, run, "data", "learners.jsonl")
        save_dataset(synthesize_corpus(seed, args.n, gap_profile=profile), out)
        outputs.append(out)
    elif args.kind == "references":
        out = _out(args, run, "data", "references.jsonl")
        refs = synthesize_references(seed, args.n, gap_profile=profile)
        save_dataset([LabeledUtterance(u) for u in refs], out)
        outputs.append(out)
    else:
        out = _out(args, run, "data", "two-pattern.jsonl")
        learners, refs = synthesize_two_pattern_set(seed, args.n)
        ref_out = out.with_name(out.stem + "-refs.jsonl")
        save_dataset(learners, out)
        save_dataset([LabeledUtterance(u) for u in refs], ref_out)
        outputs += [out, ref_out]
    for o in outputs:
        run.manifest("synth", o, [], cfg, seed)
        print(f"wrote {o}")
    return EXIT_OK


def cmd_corrupt(args, cfg: RunConfig, run: RunDir) -> int:
    from .corpus import load_dataset
    from .corruption import build_pretraining_set, save_records
    from .tokenizer import tokenize

    src = _input(args, run, "references.jsonl")
    originals = [tokenize(r.utterance) for r in load_dataset(src)]
    c = cfg.data["corruption"]
    records = build_pretraining_set(originals, ratio=int(c["ratio"]), p=float(c["p"]), rng=cfg.seed)
    out = _out(args, run, "data", "pretrain.jsonl")
    save_records(records, out)
    run.manifest("corrupt", out, [src], cfg, cfg.seed)
    print(f"{len(records)} pre-training record(s) -> {out}")
    return EXIT_OK


def cmd_pretrain(args, cfg: RunConfig, run: RunDir) -> int:
    from .corruption import load_records
    from .neural import pretrain_discriminator

    src = _input(args, run, "pretrain.jsonl")
    ckpt = pretrain_discriminator(load_records(src), cfg.encoder, cfg.pretrain)
    out = _out(args, run, "checkpoints", "pretrained.ckpt")
    ckpt.save(out)
    run.manifest("pretrain", out, [src], cfg, cfg.pretrain.seed)
    print(f"final loss {ckpt.history[-1]['loss']:.4f} -> {out}")
    return EXIT_OK


def _finetune(args, cfg: RunConfig, run: RunDir, task: str) -> int:
    from .corpus import load_dataset
    from .neural import Checkpoint, finetune_fine_grained, finetune_overall

    src = _input(args, run, "learners.jsonl")
    init = Checkpoint.load(args.init) if args.init else None
    op = finetune_overall if task == "overall" else finetune_fine_grained
    ckpt = op(load_dataset(src), init=init, enc=None if init else cfg.encoder, tc=cfg.finetune)
    name = "finetuned-overall.ckpt" if task == "overall" else "finetuned-fine.ckpt"
    out = _out(args, run, "checkpoints", name)
    ckpt.save(out)
    run.manifest(f"finetune-{task}", out, [src] + ([Path(args.init)] if args.init else []), cfg, cfg.finetune.seed)
    print(f"final loss {ckpt.history[-1]['loss']:.4f} -> {out}")
    return EXIT_OK


def cmd_finetune_overall(args, cfg, run):
    return _finetune(args, cfg, run, "overall")


def cmd_finetune_fine(args, cfg, run):
    return _finetune(args, cfg, run, "fine")


def prediction_rows(ckpt, records) -> list[dict]:
    """JSONL rows for any checkpoint stage and kind."""
    from .baselines import BiLSTMPredictor
    from .neural import Predictor

    predictor = BiLSTMPredictor(ckpt) if ckpt.kind == "bilstm" else Predictor(ckpt)
    ids = [r.utterance_id for r in records]
    if ckpt.stage == "pretrained":
        probs = predictor.corrupted_probability(records)
        return [{"utterance_id": u, "p_corrupted": float(p)} for u, p in zip(ids, probs)]
    if ckpt.stage == "finetuned-overall":
        return [
            {"utterance_id": u, "overall": int(rank), "probs": list(p), "intervals": None, "truncated": False}
            for u, (rank, p) in zip(ids, predictor.overall(records))
        ]
    return [
        {
            "utterance_id": u,
            "overall": None,
            "intervals": [{"i": a.index, "rank": int(a.rank), "probs": list(a.probs)} for a in fg.intervals],
            "truncated": fg.truncated,
        }
        for u, fg in zip(ids, predictor.fine_grained(records))
    ]


def _write_jsonl(rows, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def cmd_predict(args, cfg: RunConfig, run: RunDir) -> int:
    from .corpus import load_dataset
    from .neural import Checkpoint

    src = _input(args, run, "learners.jsonl")
    ckpt = Checkpoint.load(args.checkpoint)
    out = _out(args, run, "predictions", Path(args.checkpoint).stem + ".jsonl")
    _write_jsonl(prediction_rows(ckpt, load_dataset(src)), out)
    run.manifest("predict", out, [src, Path(args.checkpoint)], cfg, cfg.seed)
    print(f"predictions -> {out}")
    return EXIT_OK


def cmd_baseline_bilstm(args, cfg: RunConfig, run: RunDir) -> int:
    from .baselines import bilstm_crf_fine_grained, bilstm_overall
    from .corpus import load_dataset

    src = _input(args, run, "learners.jsonl")
    op = bilstm_overall if args.task == "overall" else bilstm_crf_fine_grained
    ckpt = op(load_dataset(src), cfg.bilstm, cfg.bilstm_train)
    out = _out(args, run, "checkpoints", f"bilstm-{args.task}.ckpt")
    ckpt.save(out)
    run.manifest("baseline-bilstm", out, [src], cfg, cfg.bilstm_train.seed)
    print(f"final loss {ckpt.history[-1]['loss']:.4f} -> {out}")
    return EXIT_OK


def cmd_baseline_tts(args, cfg: RunConfig, run: RunDir) -> int:
    from .baselines import ReferenceBank, against_tts_intervals, against_tts_score
    from .corpus import load_dataset
    from .tokenizer import tokenize

    src = _input(args, run, "learners.jsonl")
    bank = ReferenceBank.from_jsonl(args.references)
    rows = []
    for r in load_dataset(src):
        seq = tokenize(r.utterance)
        ref = bank.reference_for(seq.words)
        similarity, rank = against_tts_score(seq, ref)
        intervals = against_tts_intervals(seq, ref)
        rows.append(
            {
                "utterance_id": r.utterance_id,
                "overall": int(rank),
                "similarity": similarity,
                "intervals": [{"i": i, "rank": int(x)} for i, x in enumerate(intervals)],
                "truncated": False,
            }
        )
    out = _out(args, run, "predictions", "against-tts.jsonl")
    _write_jsonl(rows, out)
    run.manifest("baseline-tts", out, [src, Path(args.references)], cfg, cfg.seed)
    print(f"predictions -> {out}")
    return EXIT_OK


def make_client(args):
    """Offline unless ``--client live`` is given explicitly."""
    from .llm import ClientSettings, HeuristicClient, HttpChatClient, RecordingClient, ReplayClient

    if args.client == "mock":
        return HeuristicClient()
    if args.client == "replay":
        if not args.transcripts:
            raise ConfigError("--client replay needs --transcripts")
        return ReplayClient(args.transcripts)
    client = HttpChatClient(ClientSettings.from_env())
    return RecordingClient(client, args.transcripts) if args.transcripts else client


def cmd_llm_assess(args, cfg: RunConfig, run: RunDir) -> int:
    from .corpus import load_dataset
    from .eval import LlmAssessor

    src = _input(args, run, "learners.jsonl")
    records = load_dataset(src)
    llm = cfg.section("llm")
    shots = llm["shots"] if args.shots is None else args.shots
    assessor = LlmAssessor(
        make_client(args), shots=shots, seed=cfg.seed, retries=llm["retries"], max_in_flight=llm["max_in_flight"]
    )
    inputs = [src]
    if shots:
        pool_path = Path(args.pool) if args.pool else None
        if pool_path is None:
            raise ConfigError("few-shot assessment needs --pool (labeled examples for the shots)")
        assessor.fit(load_dataset(pool_path), "overall")
        inputs.append(pool_path)
    assessor.predict(records, "overall", range(len(records)))
    rows = []
    for r in records:
        v = assessor.verdicts[r.utterance_id]
        rows.append(
            {
                "utterance_id": r.utterance_id,
                "rank": None if v is None else int(v.rank),
                "positions": [] if v is None else v.indices,
            }
        )
    out = _out(args, run, "predictions", f"llm-{shots}shot-verdicts.jsonl")
    _write_jsonl(rows, out)
    run.manifest("llm-assess", out, inputs, cfg, cfg.seed)
    for note in assessor.notes:
        logger.warning(note)
    print(f"{len(rows)} verdict(s), {len(assessor.notes)} unparseable -> {out}")
    return EXIT_OK


def build_system(args, cfg: RunConfig, run: RunDir):
    from .baselines import ReferenceBank
    from .eval import AgainstTTSAssessor, BiLSTMAssessor, BreakBertAssessor, LlmAssessor, MajorityAssessor
    from .neural import Checkpoint

    inputs: list[Path] = []
    if args.system == "majority":
        return MajorityAssessor(), inputs
    if args.system == "bert":
        return BreakBertAssessor(None, cfg.encoder, cfg.finetune), inputs
    if args.system == "break-bert":
        init = Path(args.init) if args.init else run.path("checkpoints", "pretrained.ckpt")
        if not init.exists():
            raise ConfigError(f"break-bert needs a pre-trained checkpoint; {init} not found (run pretrain or pass --init)")
        inputs.append(init)
        return BreakBertAssessor(Checkpoint.load(init), None, cfg.finetune), inputs
    if args.system == "bilstm":
        return BiLSTMAssessor(cfg.bilstm, cfg.bilstm_train), inputs
    if args.system == "against-tts":
        if not args.references:
            raise ConfigError("against-tts needs --references")
        inputs.append(Path(args.references))
        return AgainstTTSAssessor(ReferenceBank.from_jsonl(args.references)), inputs
    llm = cfg.section("llm")
    shots = llm["shots"] if args.shots is None else args.shots
    return (
        LlmAssessor(make_client(args), shots=shots, seed=cfg.seed, retries=llm["retries"], max_in_flight=llm["max_in_flight"]),
        inputs,
    )


def cmd_evaluate(args, cfg: RunConfig, run: RunDir) -> int:
    from .corpus import load_dataset
    from .eval import FoldPlan, gold_labels, run_cv, write_reports

    src = _input(args, run, "learners.jsonl")
    data = load_dataset(src)
    gold_labels(data, args.task)
    ev = cfg.section("eval")
    k = args.folds or int(ev["folds"])
    stratified = ev["stratified"] and not args.no_stratify
    strata = [r.overall_rank for r in data] if stratified and all(r.overall_rank for r in data) else None
    plan = FoldPlan.make(len(data), k, cfg.seed, strata)
    system, inputs = build_system(args, cfg, run)
    result = run_cv(data, system, plan, args.task, out_dir=run.root / "predictions")
    stem = f"{system.name}-{args.task}"
    json_path, text_path = run.path("reports", stem + ".json"), run.path("reports", stem + ".txt")
    write_reports([result.report], json_path, text_path)
    (run.root / "reports" / f"{stem}-folds.json").write_text(json.dumps(plan.to_dict()) + "\n", encoding="utf-8")
    for p in (json_path, text_path):
        run.manifest("evaluate", p, [src] + inputs, cfg, cfg.seed)
    print(text_path.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_report(args, cfg: RunConfig, run: RunDir) -> int:
    from .eval import format_table

    paths = [Path(p) for p in args.reports] or sorted(
        p for p in (run.root / "reports").glob("*.json") if not p.name.endswith("-folds.json") and p.stem != "summary"
    )
    if not paths:
        raise DataError(f"no reports found under {run.root / 'reports'}")
    rows = []
    for p in paths:
        try:
            rows.extend(json.loads(p.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read report {p}: {exc}") from None
    rows.sort(key=lambda d: (d["task"], d["system"]))
    table = format_table(rows)
    out = run.path("reports", "summary.txt")
    out.write_text(table, encoding="utf-8")
    run.manifest("report", out, paths, cfg, cfg.seed)
    print(table, end="")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--run-dir", default="runs/default", help="output directory owned by this run")
    common.add_argument("--config", help="JSON run config")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config value")
    common.add_argument("--seed", type=int, help="shorthand for --set seed=N")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="phrasebreak", description="Phrase-break assessment toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, input_=True, out=True):
        p = sub.add_parser(name, parents=[common], help=help)
        if input_:
            p.add_argument("--input", help="dataset JSONL (default: a file under <run-dir>/data)")
        if out:
            p.add_argument("--out", help="output path (default: under <run-dir>)")
        p.set_defaults(func=func)
        return p

    def add_client(p):
        p.add_argument("--client", choices=("mock", "replay", "live"), default="mock")
        p.add_argument("--transcripts", help="replay source, or where a live client records")
        p.add_argument("--shots", type=int, help="0 for zero-shot, 4 for few-shot")

    p = add("ingest", cmd_ingest, "convert alignment files to a dataset", input_=False)
    p.add_argument("alignments", nargs="+", help="alignment files or directories")
    p.add_argument("--format", default="interval-tier", help="interval-tier, json-words or textgrid")
    p.add_argument("--labels", help="JSONL with utterance_id, overall_rank, interval_ranks")

    p = add("synth", cmd_synth, "generate a synthetic corpus", input_=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=("learners", "references", "two-pattern"), default="learners")
    p.add_argument("--profile", choices=("fluent", "choppy", "mixed"))

    add("corrupt", cmd_corrupt, "build the replaced-break pre-training set")
    add("pretrain", cmd_pretrain, "pre-train the break discriminator")
    for name, func in (("finetune-overall", cmd_finetune_overall), ("finetune-fine", cmd_finetune_fine)):
        p = add(name, func, f"fine-tune for {name.split('-')[1]} assessment")
        p.add_argument("--init", help="pre-trained checkpoint to start from")

    p = add("predict", cmd_predict, "run a checkpoint over a dataset")
    p.add_argument("--checkpoint", required=True)

    p = add("baseline-bilstm", cmd_baseline_bilstm, "train the Bi-LSTM (overall) or Bi-LSTM-CRF (fine) baseline")
    p.add_argument("--task", choices=("overall", "fine"), default="overall")

    p = add("baseline-tts", cmd_baseline_tts, "score against reference readings")
    p.add_argument("--references", required=True)

    p = add("llm-assess", cmd_llm_assess, "prompted LLM assessment (offline unless --client live)")
    add_client(p)
    p.add_argument("--pool", help="labeled dataset to draw few-shot examples from")

    p = add("evaluate", cmd_evaluate, "k-fold cross-validation of one system", out=False)
    p.add_argument("--system", choices=SYSTEMS, required=True)
    p.add_argument("--task", choices=("overall", "fine"), default="overall")
    p.add_argument("--folds", type=int)
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--init", help="pre-trained checkpoint for break-bert")
    p.add_argument("--references", help="reference readings for against-tts")
    add_client(p)

    p = add("report", cmd_report, "combine evaluation reports into one table", input_=False, out=False)
    p.add_argument("reports", nargs="*", help="report JSON files (default: all under <run-dir>/reports)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        overrides = list(args.set) + ([f"seed={args.seed}"] if args.seed is not None else [])
        cfg = RunConfig.load(args.config, overrides)
        run = RunDir(args.run_dir)
        with run.locked():
            run.echo_config(cfg, args.command)
            return args.func(args, cfg, run)
    except ConfigError as exc:
        code, kind, err = EXIT_CONFIG, "config error", exc
    except DataError as exc:
        code, kind, err = EXIT_DATA, "data error", exc
    except NetworkError as exc:
        code, kind, err = EXIT_NETWORK, "network error", exc
    except PhraseBreakError as exc:
        code, kind, err = EXIT_RUNTIME, "runtime error", exc
    except (ValueError, OSError) as exc:
        code, kind, err = EXIT_DATA, "data error", exc
    print(f"phrasebreak: {kind}: {err}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

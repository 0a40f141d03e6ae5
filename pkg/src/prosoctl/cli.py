"""Batch entry point: extract, stats, train, predict, edit, synth, eval, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every flag can also come from a TOML/JSON config file (--config) or from
the environment as PROSOCTL_<FLAG>; precedence is flag > env > config
file > default. All randomness derives from the single --seed through
named sub-seeds, so stages can be re-run independently and reproducibly.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from prosoctl.seeds import derive_seed

log = logging.getLogger("prosoctl")

SUBCOMMANDS = ("extract", "stats", "train-afp", "predict", "edit", "synth",
               "eval-disentangle", "eval-temporal", "eval-repro", "mushra",
               "gradcheck", "serve", "plot")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def build_parser() -> _Parser:
    parser = _Parser(prog="prosoctl", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="|".join(SUBCOMMANDS))

    def add(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", help="TOML or JSON file mirroring the flags")
        p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
        p.add_argument("--jobs", type=int, default=None, help="utterance-level parallelism")
        p.add_argument("-v", "--verbose", action="count", default=0)
        return p

    p = add("extract", help="measure per-phone features from wav + alignment")
    p.add_argument("--align", required=True, help="alignment JSON directory")
    p.add_argument("--wav", required=True, help="wav directory")
    p.add_argument("--out", required=True, help="feature record output directory")

    p = add("stats", help="per-speaker stats; normalizes the records in place")
    p.add_argument("--features", required=True, help="feature record directory")
    p.add_argument("--out", required=True, help="stats JSON path")

    p = add("train-afp", help="train the acoustic feature predictor")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="checkpoint path (.npz)")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--trace-out", help="optional loss trace CSV")

    p = add("predict", help="predict features for alignments")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--align", required=True)
    p.add_argument("--out", required=True, help="output record directory")

    p = add("edit", help="apply an edit script to a feature record")
    p.add_argument("--features", required=True, help="feature record file")
    p.add_argument("--script", required=True, help="edit script JSON")
    p.add_argument("--align", required=True, help="alignment JSON for the utterance")
    p.add_argument("--stats", required=True)
    p.add_argument("--out", required=True)

    p = add("synth", help="render a feature record to WAV")
    p.add_argument("--features", required=True, help="feature record file (raw space)")
    p.add_argument("--align", required=True)
    p.add_argument("--out", required=True, help="output WAV path")
    p.add_argument("--timbre", help="timbre table JSON (default: built-in)")

    for name in ("eval-disentangle", "eval-temporal"):
        p = add(name, help=f"{name.split('-')[1]} experiment")
        p.add_argument("--align", required=True)
        p.add_argument("--ckpt", required=True)
        p.add_argument("--stats", required=True)
        p.add_argument("--feature", choices=("f0", "energy", "duration"), default=None)
        p.add_argument("--grid", default=None, help="comma-separated sigma fractions")
        p.add_argument("--out", required=True, help="report JSON path")
        p.add_argument("--csv-out", help="optional flat CSV")
        if name == "eval-temporal":
            p.add_argument("--fraction", type=float, default=None,
                           help="stressed-vowel subset fraction")

    p = add("eval-repro", help="retrain across seeds and compare response curves")
    p.add_argument("--features", required=True, help="training record directory")
    p.add_argument("--align", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--seeds", default=None, help="comma-separated training seeds")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--feature", choices=("f0", "energy", "duration"), default=None)
    p.add_argument("--grid", default=None)
    p.add_argument("--out", required=True)

    p = add("mushra", help="listening test analysis from a ratings CSV")
    p.add_argument("--ratings", required=True)
    p.add_argument("--out", required=True, help="summary JSON path")
    p.add_argument("--alpha", type=float, default=None)

    p = add("gradcheck", help="finite-difference check of the predictor gradients")
    p.add_argument("--configs", type=int, default=None)

    p = add("serve", help="run the editor session service")
    p.add_argument("--align", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--sessions-dir", default=None)
    p.add_argument("--timbre", help="timbre table JSON")

    p = add("plot", help="render a report JSON to SVG")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)

    return parser


DEFAULTS = {
    "seed": 0, "jobs": 1, "iterations": 5000, "learning_rate": 2e-3,
    "feature": "f0", "grid": "-0.5,-0.25,0,0.25,0.5", "fraction": 0.5,
    "seeds": "1,2,3", "alpha": 0.05, "configs": 20, "port": 8765,
    "host": "127.0.0.1",
}


def _load_config_file(path) -> dict:
    text = Path(path).read_bytes()
    if str(path).endswith(".json"):
        return json.loads(text)
    return tomllib.loads(text.decode("utf-8"))


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from env (PROSOCTL_*), config file, then defaults."""
    file_cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}
    for key, value in vars(args).items():
        if value is not None or key in ("command", "config", "verbose"):
            continue  # explicit flags win
        env_key = "PROSOCTL_" + key.upper().replace("-", "_")
        if env_key in os.environ:
            raw = os.environ[env_key]
            setattr(args, key, type(DEFAULTS[key])(raw) if key in DEFAULTS else raw)
        elif key in file_cfg:
            setattr(args, key, file_cfg[key])
        elif key in DEFAULTS:
            setattr(args, key, DEFAULTS[key])
    return args


def _parse_grid(text) -> list[float]:
    return [float(x) for x in str(text).split(",") if str(x).strip() != ""]


def _load_records(directory):
    from prosoctl.corpus.store import load_feature_record
    paths = sorted(Path(directory).glob("*.feat.json"))
    if not paths:
        raise FileNotFoundError(f"no feature records under {directory}")
    return [load_feature_record(p) for p in paths]


def _synth_cfg(args, sub_seed: int):
    from prosoctl.synth.render import SynthConfig
    from prosoctl.synth.timbre import TimbreTable, builtin_timbre_table
    timbre = TimbreTable.load(args.timbre) if getattr(args, "timbre", None) \
        else builtin_timbre_table()
    return SynthConfig(seed=sub_seed, timbre=timbre)


def cmd_extract(args) -> int:
    from prosoctl.corpus.store import save_feature_record
    from prosoctl.pipeline import extract_corpus, load_corpus
    utts = load_corpus(args.align)
    records = extract_corpus(utts, args.wav, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for rec in records:
        save_feature_record(out / f"{rec.utterance_id}.feat.json", rec)
    log.info("extracted %d records to %s", len(records), out)
    return 0


def cmd_stats(args) -> int:
    from prosoctl.corpus.store import save_feature_record
    from prosoctl.features import save_speaker_stats
    from prosoctl.pipeline import compute_all_stats, normalize_records
    records = _load_records(args.features)
    stats = compute_all_stats(records)
    normalize_records(records, stats)
    save_speaker_stats(args.out, list(stats.values()))
    for rec in records:
        save_feature_record(Path(args.features) / f"{rec.utterance_id}.feat.json", rec)
    log.info("wrote stats for %d speakers to %s and normalized %d records",
             len(stats), args.out, len(records))
    return 0


def cmd_train_afp(args) -> int:
    from prosoctl.afp import TrainConfig, afp_train, save_checkpoint
    from prosoctl.afp.train import evaluate_loss
    records = _load_records(args.features)
    cfg = TrainConfig(max_iterations=args.iterations, seed=derive_seed(args.seed, "train"),
                      learning_rate=args.learning_rate)
    ckpt, trace = afp_train(records, cfg)
    save_checkpoint(args.out, ckpt)
    final = evaluate_loss(ckpt, records)
    log.info("trained %d iterations, final corpus L1 %.4f, checkpoint %s",
             cfg.max_iterations, final, args.out)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            fh.write("iteration,loss\n")
            fh.writelines(f"{i},{l!r}\n" for i, l in trace)
    print(f"final training L1: {final:.6f}")
    return 0


def cmd_predict(args) -> int:
    from prosoctl.afp import afp_forward, load_checkpoint
    from prosoctl.corpus.store import FeatureRecord, save_feature_record
    from prosoctl.features import denormalize, load_speaker_stats
    from prosoctl.pipeline import load_corpus
    ckpt = load_checkpoint(args.ckpt)
    stats = load_speaker_stats(args.stats)
    align = Path(args.align)
    utts = load_corpus(align) if align.is_dir() else None
    if utts is None:
        from prosoctl.corpus.alignment import load_alignment
        utts = [load_alignment(align)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for utt in utts:
        pred = afp_forward(ckpt, utt.phones, utt.speaker_id)
        raw = denormalize(pred, stats[utt.speaker_id], utt=utt)
        rec = FeatureRecord(utterance_id=utt.utterance_id, speaker_id=utt.speaker_id,
                            symbols=[t.symbol for t in utt.phones],
                            kinds=[t.kind for t in utt.phones],
                            raw=raw.values, normalized=pred.values,
                            stats_version=pred.stats_version)
        save_feature_record(out / f"{utt.utterance_id}.feat.json", rec)
    log.info("predicted %d utterances into %s", len(utts), out)
    return 0


def cmd_edit(args) -> int:
    from prosoctl.control import EditScript, apply_edits
    from prosoctl.corpus.alignment import load_alignment
    from prosoctl.corpus.store import load_feature_record, save_feature_record
    from prosoctl.features import NORMALIZED, PhoneFeatures, denormalize, load_speaker_stats
    rec = load_feature_record(args.features)
    utt = load_alignment(args.align)
    stats = load_speaker_stats(args.stats)[rec.speaker_id]
    script = EditScript.load(args.script)
    if rec.normalized is None:
        raise ValueError(f"{args.features}: record has no normalized features")
    feats = PhoneFeatures(rec.normalized.copy(), NORMALIZED, rec.stats_version)
    edited = apply_edits(feats, script, utt, stats)
    rec.normalized = edited.values
    rec.raw = denormalize(edited, stats, utt=utt).values
    save_feature_record(args.out, rec)
    log.info("applied %d ops to %s -> %s", len(script.ops), args.features, args.out)
    return 0


def cmd_synth(args) -> int:
    from prosoctl.corpus.alignment import load_alignment, save_alignment
    from prosoctl.corpus.store import load_feature_record
    from prosoctl.dsp.audio import write_wav
    from prosoctl.features import PhoneFeatures
    from prosoctl.synth.render import synthesize
    rec = load_feature_record(args.features)
    utt = load_alignment(args.align)
    cfg = _synth_cfg(args, derive_seed(args.seed, "synth"))
    rend = synthesize(utt, PhoneFeatures(rec.raw.copy()), cfg)
    write_wav(args.out, rend.audio)
    save_alignment(str(args.out) + ".align.json",
                   rend.realized.with_audio(str(args.out), rend.grid.n_frames))
    for w in rend.warnings:
        log.warning("%s", w)
    log.info("rendered %s (%d frames) to %s", utt.utterance_id, rend.grid.n_frames, args.out)
    return 0


def _eval_common(args):
    from prosoctl.afp import load_checkpoint
    from prosoctl.features import load_speaker_stats
    from prosoctl.pipeline import load_corpus
    return (load_corpus(args.align), load_checkpoint(args.ckpt),
            load_speaker_stats(args.stats))


def cmd_eval_disentangle(args) -> int:
    from prosoctl.eval.experiments import run_disentanglement
    utts, ckpt, stats = _eval_common(args)
    cfg = _synth_cfg(args, derive_seed(args.seed, "eval-synth"))
    report = run_disentanglement(utts, ckpt, stats, cfg, grid=_parse_grid(args.grid),
                                 feature=args.feature)
    report.save(args.out)
    if args.csv_out:
        report.save_csv(args.csv_out)
    log.info("disentanglement report (%s) -> %s", args.feature, args.out)
    return 0


def cmd_eval_temporal(args) -> int:
    from prosoctl.eval.experiments import run_temporal_precision
    utts, ckpt, stats = _eval_common(args)
    cfg = _synth_cfg(args, derive_seed(args.seed, "eval-synth"))
    report = run_temporal_precision(utts, ckpt, stats, cfg, grid=_parse_grid(args.grid),
                                    feature=args.feature, fraction=args.fraction,
                                    seed=derive_seed(args.seed, "subset"))
    report.save(args.out)
    if args.csv_out:
        report.save_csv(args.csv_out)
    log.info("temporal-precision report (%s) -> %s", args.feature, args.out)
    return 0


def cmd_eval_repro(args) -> int:
    from prosoctl.afp import TrainConfig
    from prosoctl.eval.experiments import run_reproducibility
    from prosoctl.features import load_speaker_stats
    from prosoctl.pipeline import load_corpus
    records = _load_records(args.features)
    utts = load_corpus(args.align)
    stats = load_speaker_stats(args.stats)
    cfg = _synth_cfg(args, derive_seed(args.seed, "eval-synth"))
    train_cfg = TrainConfig(max_iterations=args.iterations, seed=0)
    seeds = [int(s) for s in str(args.seeds).split(",")]
    result = run_reproducibility(records, utts, stats, cfg, train_cfg, seeds=seeds,
                                 grid=_parse_grid(args.grid), feature=args.feature)
    result.save(args.out)
    log.info("reproducibility over seeds %s -> %s (divergence %s)",
             seeds, args.out, result.divergence)
    return 0


def cmd_mushra(args) -> int:
    from prosoctl.eval.mushra import load_ratings_csv, mushra_analyze
    records = load_ratings_csv(args.ratings)
    summary = mushra_analyze(records, alpha=args.alpha)
    Path(args.out).write_text(json.dumps(summary.to_doc(), indent=1) + "\n",
                              encoding="utf-8")
    log.info("kept %d listeners, rejected %d; %d pairwise tests -> %s",
             len(summary.kept_listeners), len(summary.rejected_listeners),
             len(summary.pairwise), args.out)
    return 0


def cmd_gradcheck(args) -> int:
    from prosoctl.afp.gradcheck import gradient_check_random_configs
    worst = gradient_check_random_configs(n_configs=args.configs,
                                          seed=derive_seed(args.seed, "gradcheck"))
    print(f"max relative error over {args.configs} configs: {worst:.3e}")
    return 0 if worst < 1e-4 else 3


def cmd_serve(args) -> int:
    import uvicorn
    from prosoctl.service import build_state, create_app
    cfg = _synth_cfg(args, derive_seed(args.seed, "synth"))
    state = build_state(args.align, args.ckpt, args.stats, synth_cfg=cfg,
                        sessions_dir=args.sessions_dir)
    app = create_app(state)
    log.info("serving %d utterances on %s:%d", len(state.utterances), args.host, args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_plot(args) -> int:
    from prosoctl.eval.plots import plot_report_file
    plot_report_file(args.report, args.out)
    log.info("plotted %s -> %s", args.report, args.out)
    return 0


HANDLERS = {
    "extract": cmd_extract,
    "stats": cmd_stats,
    "train-afp": cmd_train_afp,
    "predict": cmd_predict,
    "edit": cmd_edit,
    "synth": cmd_synth,
    "eval-disentangle": cmd_eval_disentangle,
    "eval-temporal": cmd_eval_temporal,
    "eval-repro": cmd_eval_repro,
    "mushra": cmd_mushra,
    "gradcheck": cmd_gradcheck,
    "serve": cmd_serve,
    "plot": cmd_plot,
}

_DATA_ERRORS = (FileNotFoundError, NotADirectoryError, PermissionError, KeyError,
                ValueError, json.JSONDecodeError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage())
        args = resolve(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    shown = {k: v for k, v in vars(args).items()
             if k not in ("command", "verbose") and v is not None}
    log.info("running %s with resolved config %s", args.command, shown)
    try:
        return HANDLERS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError) as exc:
        log.error("numerical failure: %s", exc)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line entry point tying the pipeline together.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numeric failure.
The effective configuration (CLI > file > defaults) is printed to stderr
at startup for reproducibility.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import checkpoints, config as cfgmod, emotion, fusion, metrics, mmeb, pipeline, plots, signal_io, synth, text
from .errors import MmhateError, NumericError, ValidationError
from .features import FeatureKind, FrameSpec, representation_feature_names
from .manifest import load_manifest, split_labels
from .text import PoolingMode, Vocabulary

log = logging.getLogger("mmhate")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are validation errors, not I/O
        raise ValidationError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mmhate", description="Multimodal hate-speech detection toolkit")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--config", default=None, help="key = value config file")
    parser.add_argument("--verbose", action="store_true", default=False)
    # the global flags are also accepted after the command; SUPPRESS keeps an
    # omitted subcommand flag from clobbering a value given before the command
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("denoise", parents=[common], help="spectral-gate a WAV file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", default=None, help="separate noise-only WAV (default: first 500 ms of the input)")
    p.add_argument("--reduction-db", type=float, default=None)
    p.add_argument("--fft-size", type=int, default=None)
    p.add_argument("--encoding", choices=("float32", "pcm16"), default="float32")

    p = sub.add_parser("features", help="acoustic feature extraction")
    fs = p.add_subparsers(dest="subcommand", required=True)
    pe = fs.add_parser("extract", parents=[common], help="fixed-size representations for a manifest")
    pe.add_argument("--manifest", required=True)
    pe.add_argument("--kind", choices=("f1", "f2"), default=None)
    pe.add_argument("--out", required=True, help="output directory")
    pe.add_argument("--denoise", action="store_true", help="spectral-gate each clip first")

    p = sub.add_parser("emotion", help="valence/arousal/dominance model")
    es = p.add_subparsers(dest="subcommand", required=True)
    pt = es.add_parser("train", parents=[common])
    pt.add_argument("--features", required=True, help="features directory or .mmeb file")
    pt.add_argument("--labels", default=None, help="CSV with id,valence,arousal,dominance")
    pt.add_argument("--manifest", default=None, help="manifest supplying splits (and labels if present)")
    pt.add_argument("--out", required=True, help="checkpoint path")
    pv = es.add_parser("eval", parents=[common])
    pv.add_argument("--ckpt", required=True)
    pv.add_argument("--features", required=True)
    pv.add_argument("--labels", default=None)
    pv.add_argument("--manifest", default=None)
    pv.add_argument("--split", default="test", choices=("train", "val", "test", "all"))
    pv.add_argument("--run-id", default=None)
    pv.add_argument("--report", default=None, help="write a report CSV (figure rendered alongside)")
    pb = es.add_parser("embed", parents=[common])
    pb.add_argument("--ckpt", required=True)
    pb.add_argument("--features", required=True)
    pb.add_argument("--out", required=True, help="510-dim embedding file")
    pu = es.add_parser("tune", parents=[common])
    pu.add_argument("--features", required=True)
    pu.add_argument("--labels", default=None)
    pu.add_argument("--manifest", default=None)
    pu.add_argument("--out", required=True, help="grid report CSV")

    p = sub.add_parser("text", help="text embeddings")
    ts = p.add_subparsers(dest="subcommand", required=True)
    tb = ts.add_parser("embed", parents=[common])
    tb.add_argument("--manifest", required=True)
    tb.add_argument("--provider", choices=("stub", "file"), default=None)
    tb.add_argument("--mode", choices=("cls", "mean"), default=None)
    tb.add_argument("--embeddings", default=None, help="source file for the file provider")
    tb.add_argument("--vocab", default=None, help="vocabulary file (default: bundled demo vocab)")
    tb.add_argument("--out", required=True, help="768-dim embedding file")

    p = sub.add_parser("fuse", help="multimodal classifier")
    us = p.add_subparsers(dest="subcommand", required=True)
    ut = us.add_parser("train", parents=[common])
    ut.add_argument("--text-emb", required=True)
    ut.add_argument("--speech-emb", required=True)
    ut.add_argument("--manifest", required=True)
    ut.add_argument("--out", required=True)
    uv = us.add_parser("eval", parents=[common])
    uv.add_argument("--ckpt", required=True)
    uv.add_argument("--text-emb", required=True)
    uv.add_argument("--speech-emb", required=True)
    uv.add_argument("--manifest", required=True)
    uv.add_argument("--split", default="test", choices=("train", "val", "test", "all"))
    uv.add_argument("--run-id", default=None)
    uv.add_argument("--report", default=None)

    p = sub.add_parser("predict", parents=[common], help="full chain on one recording + transcript")
    p.add_argument("--ckpt", required=True, help="fusion checkpoint")
    p.add_argument("--emotion-ckpt", required=True)
    p.add_argument("--audio", required=True)
    p.add_argument("--transcript", required=True, help="text file")
    p.add_argument("--provider", choices=("stub", "file"), default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--id", dest="record_id", default=None, help="lookup key for the file provider")
    p.add_argument("--vocab", default=None)
    p.add_argument("--noise", default=None)

    p = sub.add_parser("synth", help="synthetic corpus")
    ss = p.add_subparsers(dest="subcommand", required=True)
    sg = ss.add_parser("generate", parents=[common])
    sg.add_argument("--out", required=True)
    sg.add_argument("--pos", type=int, required=True, help="hate-speech clips")
    sg.add_argument("--neg", type=int, required=True, help="non-hate clips")
    sg.add_argument("--sample-rate", type=int, default=synth.SAMPLE_RATE)

    p = sub.add_parser("report", parents=[common], help="consolidate metric CSVs into tables and figures")
    p.add_argument("--metrics", nargs="+", required=True)
    p.add_argument("--out", required=True, help="output directory")

    return parser


def _effective_config(args) -> dict:
    config_path = getattr(args, "config", None)
    file_values = cfgmod.load_config_file(config_path) if config_path else None
    overrides = {}
    seed = getattr(args, "seed", None)
    if seed is not None:
        overrides["seed"] = str(seed)
    cfg = cfgmod.resolve(file_values, overrides)
    print(cfgmod.format_config(cfg), file=sys.stderr)
    return cfg


def _find_features_file(path, kind: str) -> str:
    if os.path.isdir(path):
        candidate = os.path.join(path, f"features_{kind}.mmeb")
        if not os.path.exists(candidate):
            raise ValidationError(f"no features_{kind}.mmeb under {path}")
        return candidate
    return path


def _load_representations(path, kind: FeatureKind) -> dict:
    raw = mmeb.read_embedding_file(_find_features_file(path, kind.value), expected_dim=kind.length)
    from .features import FeatureRepresentation

    return {record_id: FeatureRepresentation(kind=kind, values=values.astype(np.float64)) for record_id, values in raw.items()}


def _kind_for_dim(dim: int) -> FeatureKind:
    for kind in FeatureKind:
        if kind.length == dim:
            return kind
    raise ValidationError(f"no feature kind with dimension {dim}")


def _emotion_data(args, cfg):
    """Representations, labels, and split ids for the emotion subcommands."""
    kind = FeatureKind(cfg["features.kind"])
    representations = _load_representations(args.features, kind)
    labels = {}
    records = None
    if args.manifest:
        records = load_manifest(args.manifest)
        labels.update(pipeline.labels_from_manifest(records))
    if args.labels:
        labels.update(pipeline.load_labels_csv(args.labels))
    if not labels:
        raise ValidationError("no attribute labels: pass --labels or a manifest with valence/arousal/dominance")

    ids = [i for i in representations if i in labels]
    if not ids:
        raise ValidationError("no ids shared between features and labels")
    if records is not None and all(r.split is not None for r in records):
        groups = pipeline.split_ids([r for r in records if r.id in set(ids)])
    else:
        names = split_labels(len(ids), seed=cfgmod.seed_of(cfg))
        groups = {"train": [], "val": [], "test": []}
        for record_id, name in zip(ids, names):
            groups[name].append(record_id)
    return representations, labels, groups, kind


def cmd_denoise(args, cfg) -> int:
    signal = signal_io.read_wav(args.input)
    fft_size = args.fft_size or int(cfg["denoise.fft_size"])
    reduction_db = args.reduction_db if args.reduction_db is not None else float(cfg["denoise.reduction_db"])
    sensitivity = float(cfg["denoise.sensitivity"])
    noise_clip = signal_io.read_wav(args.noise) if args.noise else None
    out = signal_io.denoise(signal, noise_clip, fft_size=fft_size, reduction_db=reduction_db, sensitivity=sensitivity)
    signal_io.write_wav(args.out, out, encoding=args.encoding)
    print(f"denoised {args.input} -> {args.out}")
    return 0


def cmd_features_extract(args, cfg) -> int:
    kind = FeatureKind(args.kind or cfg["features.kind"])
    sample_rate = int(cfg["features.sample_rate"])
    spec = FrameSpec(window_ms=float(cfg["features.window_ms"]), step_ms=float(cfg["features.step_ms"]))
    records = load_manifest(args.manifest, require_audio=True)
    os.makedirs(args.out, exist_ok=True)
    representations = pipeline.extract_features(
        args.manifest,
        records,
        kind,
        sample_rate=sample_rate,
        frame_spec=spec,
        mid_window_ms=float(cfg["features.mid_window_ms"]),
        mid_step_ms=float(cfg["features.mid_step_ms"]),
        denoise=args.denoise,
        reduction_db=float(cfg["denoise.reduction_db"]),
        fft_size=int(cfg["denoise.fft_size"]),
    )
    names = representation_feature_names(kind)
    for record_id, rep in representations.items():
        with open(os.path.join(args.out, f"{record_id}.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            writer.writerow([f"{v:.9g}" for v in rep.values])
    mmeb.write_embedding_file(
        os.path.join(args.out, f"features_{kind.value}.mmeb"),
        {record_id: rep.values for record_id, rep in representations.items()},
    )
    print(f"extracted {len(representations)} x {kind.length} {kind.value} features -> {args.out}")
    return 0


def cmd_emotion_train(args, cfg) -> int:
    representations, labels, groups, kind = _emotion_data(args, cfg)
    if not groups["train"] or not groups["val"]:
        raise ValidationError("train and val splits must be non-empty")
    scaler = pipeline.fit_training_scaler(representations, groups["train"])
    train_set = pipeline.emotion_dataset(representations, labels, groups["train"], scaler)
    val_set = pipeline.emotion_dataset(representations, labels, groups["val"], scaler)
    mtl_config = cfgmod.mtl_config(cfg)
    model, trace = emotion.train_mtl(mtl_config, train_set, val_set, scaler)
    checkpoints.save_mtl_checkpoint(args.out, model)

    trace_path = args.out + ".trace.csv"
    with open(trace_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "learning_rate"])
        for s in trace:
            writer.writerow([s.epoch, f"{s.train_loss:.9g}", f"{s.val_loss:.9g}", f"{s.learning_rate:.9g}"])
    plots.save_training_curves(trace, args.out + ".loss.png", title=f"emotion MTL ({kind.value})")
    best = min(trace, key=lambda s: s.val_loss)
    print(f"trained {len(trace)} epochs; best val loss {best.val_loss:.6f} at epoch {best.epoch}; checkpoint -> {args.out}")
    return 0


def cmd_emotion_eval(args, cfg) -> int:
    model = checkpoints.load_mtl_checkpoint(args.ckpt)
    representations, labels, groups, kind = _emotion_data(args, cfg)
    ids = [i for g in ("train", "val", "test") for i in groups[g]] if args.split == "all" else groups[args.split]
    if not ids:
        raise ValidationError(f"split {args.split!r} is empty")
    if model.scaler is None:
        raise ValidationError("checkpoint carries no scaler")
    dataset = pipeline.emotion_dataset(representations, labels, ids, model.scaler)
    rmse = emotion.evaluate_rmse(model, dataset)
    run_id = args.run_id or os.path.splitext(os.path.basename(args.ckpt))[0]
    entry = metrics.ReportEntry(run_id=run_id, model_kind=f"mtl_{kind.value}", split=args.split, rmse=rmse)
    table, csv_text = metrics.render_report([entry])
    print(table)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        plots.save_metric_bars([entry], os.path.splitext(args.report)[0] + ".png")
    return 0


def cmd_emotion_embed(args, cfg) -> int:
    model = checkpoints.load_mtl_checkpoint(args.ckpt)
    kind = _kind_for_dim(model.input_dim)
    representations = _load_representations(args.features, kind)
    if model.scaler is None:
        raise ValidationError("checkpoint carries no scaler")
    ids = list(representations)
    x = model.scaler.transform(np.stack([representations[i].values for i in ids]))
    embeddings = emotion.batch_speech_embeddings(model, x)
    mmeb.write_embedding_file(args.out, {record_id: row for record_id, row in zip(ids, embeddings)})
    print(f"wrote {len(ids)} speech embeddings of size {embeddings.shape[1]} -> {args.out}")
    return 0


def cmd_emotion_tune(args, cfg) -> int:
    representations, labels, groups, _ = _emotion_data(args, cfg)
    scaler = pipeline.fit_training_scaler(representations, groups["train"])
    train_set = pipeline.emotion_dataset(representations, labels, groups["train"], scaler)
    val_set = pipeline.emotion_dataset(representations, labels, groups["val"], scaler)
    best, report = emotion.tune_loss_weights(cfgmod.mtl_config(cfg), train_set, val_set)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "beta", "gamma", "rmse_val", "rmse_aro", "rmse_dom", "mean_rmse"])
        for point in report:
            writer.writerow(
                [point.alpha, point.beta, point.gamma,
                 f"{point.rmse_val:.6f}", f"{point.rmse_aro:.6f}", f"{point.rmse_dom:.6f}", f"{point.mean_rmse:.6f}"]
            )
    print(f"best loss weights alpha={best[0]} beta={best[1]} gamma={best[2]}; grid report -> {args.out}")
    return 0


def cmd_text_embed(args, cfg) -> int:
    records = load_manifest(args.manifest)
    provider = args.provider or cfg["text.provider"]
    mode = PoolingMode(args.mode or cfg["text.mode"])
    if provider == "stub":
        vocab = Vocabulary.from_file(args.vocab) if args.vocab else Vocabulary.demo()
        embeddings = pipeline.stub_text_embeddings(records, mode, vocab)
    else:
        if not args.embeddings:
            raise ValidationError("--embeddings is required with the file provider")
        source = text.load_embeddings(args.embeddings, mode)
        missing = [r.id for r in records if r.id not in source]
        if missing:
            raise ValidationError(f"embedding file lacks ids: {', '.join(missing[:5])}")
        embeddings = {r.id: source[r.id] for r in records}
    mmeb.write_embedding_file(args.out, {record_id: e.values for record_id, e in embeddings.items()})
    print(f"wrote {len(embeddings)} text embeddings ({provider}, {mode.value}) -> {args.out}")
    return 0


def _fusion_data(args):
    records = load_manifest(args.manifest)
    text_map = mmeb.read_embedding_file(args.text_emb, expected_dim=fusion.TEXT_DIM)
    speech_map = mmeb.read_embedding_file(args.speech_emb, expected_dim=fusion.SPEECH_DIM)
    return records, text_map, speech_map


def cmd_fuse_train(args, cfg) -> int:
    records, text_map, speech_map = _fusion_data(args)
    groups = pipeline.split_ids(records)
    if not groups["train"] or not groups["val"]:
        raise ValidationError("train and val splits must be non-empty")
    train_set = pipeline.fusion_dataset(records, text_map, speech_map, groups["train"])
    val_set = pipeline.fusion_dataset(records, text_map, speech_map, groups["val"])
    fusion_config = cfgmod.fusion_config(cfg)
    model, trace = fusion.train_fusion(fusion_config, train_set, val_set)
    checkpoints.save_fusion_checkpoint(args.out, model)
    trace_path = args.out + ".trace.csv"
    with open(trace_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "learning_rate"])
        for s in trace:
            writer.writerow([s.epoch, f"{s.train_loss:.9g}", f"{s.val_loss:.9g}", f"{s.learning_rate:.9g}"])
    plots.save_training_curves(trace, args.out + ".loss.png", title="fusion classifier")
    best = min(trace, key=lambda s: s.val_loss)
    print(f"trained {len(trace)} epochs; best val loss {best.val_loss:.6f} at epoch {best.epoch}; checkpoint -> {args.out}")
    return 0


def cmd_fuse_eval(args, cfg) -> int:
    model = checkpoints.load_fusion_checkpoint(args.ckpt)
    records, text_map, speech_map = _fusion_data(args)
    groups = pipeline.split_ids(records)
    ids = [i for g in ("train", "val", "test") for i in groups[g]] if args.split == "all" else groups[args.split]
    if not ids:
        raise ValidationError(f"split {args.split!r} is empty")
    x, y = pipeline.fusion_dataset(records, text_map, speech_map, ids)
    predicted = fusion.predict_labels(model, x)
    cm = metrics.confusion(predicted, y.astype(int))
    scores = metrics.macro_scores(cm)
    run_id = args.run_id or os.path.splitext(os.path.basename(args.ckpt))[0]
    entry = metrics.ReportEntry(run_id=run_id, model_kind="fusion", split=args.split, macro=scores)
    table, csv_text = metrics.render_report([entry])
    print(table)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        base = os.path.splitext(args.report)[0]
        plots.save_metric_bars([entry], base + ".png")
        plots.save_confusion_heatmap(cm, base + ".confusion.png", title=f"{run_id} ({args.split})")
    return 0


def cmd_predict(args, cfg) -> int:
    fusion_model = checkpoints.load_fusion_checkpoint(args.ckpt)
    mtl_model = checkpoints.load_mtl_checkpoint(args.emotion_ckpt)
    if mtl_model.scaler is None:
        raise ValidationError("emotion checkpoint carries no scaler")
    kind = _kind_for_dim(mtl_model.input_dim)

    signal = signal_io.read_wav(args.audio)
    sample_rate = int(cfg["features.sample_rate"])
    if signal.sample_rate != sample_rate:
        signal = signal_io.resample(signal, sample_rate)
    noise_clip = signal_io.read_wav(args.noise) if args.noise else None
    signal = signal_io.denoise(
        signal,
        noise_clip,
        fft_size=int(cfg["denoise.fft_size"]),
        reduction_db=float(cfg["denoise.reduction_db"]),
        sensitivity=float(cfg["denoise.sensitivity"]),
    )
    from .features import extract_representation

    rep = extract_representation(
        signal,
        kind,
        FrameSpec(window_ms=float(cfg["features.window_ms"]), step_ms=float(cfg["features.step_ms"])),
        mid_window_ms=float(cfg["features.mid_window_ms"]),
        mid_step_ms=float(cfg["features.mid_step_ms"]),
    )
    scaled = mtl_model.scaler.transform(rep.values)
    speech_embedding = emotion.extract_speech_embedding(mtl_model, scaled)

    with open(args.transcript, encoding="utf-8") as fh:
        transcript = fh.read()
    provider = args.provider or cfg["text.provider"]
    mode = PoolingMode(cfg["text.mode"])
    if provider == "stub":
        vocab = Vocabulary.from_file(args.vocab) if args.vocab else Vocabulary.demo()
        text_embedding = text.embed_transcript(transcript, vocab, mode)
    else:
        if not args.embeddings:
            raise ValidationError("--embeddings is required with the file provider")
        source = text.load_embeddings(args.embeddings, mode)
        key = args.record_id or os.path.splitext(os.path.basename(args.audio))[0]
        if key not in source:
            raise ValidationError(f"embedding file lacks id {key!r}")
        text_embedding = source[key]

    fused = fusion.fuse(text_embedding, speech_embedding)
    prediction = fusion.predict(fusion_model, fused)
    attrs = emotion.predict_attributes(mtl_model, scaled)
    label = "HateSpeech" if prediction.label is fusion.Label.HATE_SPEECH else "NotHateSpeech"
    print(
        f"probability={prediction.probability:.6f} label={label} "
        f"(valence={attrs.valence:.3f} arousal={attrs.arousal:.3f} dominance={attrs.dominance:.3f})"
    )
    return 0


def cmd_synth_generate(args, cfg) -> int:
    records = synth.generate_synthetic(args.pos, args.neg, cfgmod.seed_of(cfg), args.out, sample_rate=args.sample_rate)
    positives = sum(r.label for r in records)
    print(f"generated {len(records)} clips ({positives} hate) -> {args.out}")
    return 0


def cmd_report(args, cfg) -> int:
    entries = []
    for path in args.metrics:
        entries.extend(metrics.parse_report_csv(path))
    table, csv_text = metrics.render_report(entries)
    os.makedirs(args.out, exist_ok=True)
    print(table)
    with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    with open(os.path.join(args.out, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write(csv_text)
    plots.save_metric_bars(entries, os.path.join(args.out, "report.png"))
    print(f"report written to {args.out}")
    return 0


_COMMANDS = {
    ("denoise", None): cmd_denoise,
    ("features", "extract"): cmd_features_extract,
    ("emotion", "train"): cmd_emotion_train,
    ("emotion", "eval"): cmd_emotion_eval,
    ("emotion", "embed"): cmd_emotion_embed,
    ("emotion", "tune"): cmd_emotion_tune,
    ("text", "embed"): cmd_text_embed,
    ("fuse", "train"): cmd_fuse_train,
    ("fuse", "eval"): cmd_fuse_eval,
    ("predict", None): cmd_predict,
    ("synth", "generate"): cmd_synth_generate,
    ("report", None): cmd_report,
}


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        stream=sys.stderr,
        format="%(name)s %(levelname)s %(message)s",
    )
    cfg = _effective_config(args)
    handler = _COMMANDS[(args.command, getattr(args, "subcommand", None))]
    return handler(args, cfg)


def main(argv=None) -> int:
    try:
        return run(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except MmhateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

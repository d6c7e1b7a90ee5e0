"""Command-line interface.

Subcommands: extract, select, encode, train-svm, run, report. Exit
codes: 0 success, 1 missing or unreadable input, 2 bad configuration or
schema, 3 internal error. The data root for relative dataset paths can
be set with the GENREFORGE_DATA environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .audio import load_wav, make_framing
from .autoencoder import AutoencoderConfig, encode, load_autoencoder, \
    save_autoencoder, train as train_autoencoder
from .errors import (
    ClipTooShortError,
    ConfigError,
    DegenerateConfigError,
    DegenerateDatasetError,
    EmptyAudioError,
    GenreforgeError,
    IndivisibleSplitError,
    InputOutOfRangeError,
    SchemaMismatchError,
    SignalTooShortError,
    TooFewSamplesError,
    UnreadableFileError,
    UnsupportedEncodingError,
)
from .integration import build_feature_vector
from .pipeline import ExperimentConfig, run_experiment
from .schema import (
    FeatureSchema,
    bottleneck_names,
    read_features_csv,
    write_features_csv,
)
from .selection import (
    ForestConfig,
    apply_selection_matrix,
    train_forest,
    write_selection_csv,
)
from .svm import grid_search_cv, save_svm, train_multiclass

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3

_IO_ERRORS = (UnreadableFileError, EmptyAudioError, FileNotFoundError,
              NotADirectoryError, PermissionError)
_CONFIG_ERRORS = (ConfigError, DegenerateConfigError, SchemaMismatchError,
                  UnsupportedEncodingError, SignalTooShortError,
                  ClipTooShortError, DegenerateDatasetError,
                  IndivisibleSplitError, InputOutOfRangeError,
                  TooFewSamplesError, yaml.YAMLError)


def _data_root() -> Path:
    return Path(os.environ.get("GENREFORGE_DATA", "."))


def _resolve(path: str) -> Path:
    candidate = Path(path)
    if candidate.is_absolute():
        return candidate
    direct = Path.cwd() / candidate
    if direct.exists():
        return direct
    rooted = _data_root() / candidate
    return rooted if rooted.exists() else direct


def _log(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _log_verbose(args, message: str) -> None:
    if args.verbose and not args.quiet:
        print(message)


def cmd_extract(args) -> int:
    """Extract track vectors from a directory tree of WAV files."""
    root = _resolve(args.audio_dir)
    if not root.is_dir():
        print(f"error: {root} is not a directory", file=sys.stderr)
        return EXIT_IO
    wavs = sorted(root.rglob("*.wav"))
    if not wavs:
        print(f"error: no .wav files under {root}", file=sys.stderr)
        return EXIT_IO
    framing = make_framing(args.sample_rate, args.frame_ms, args.frame_overlap,
                           args.window_s, args.window_overlap)
    matrix, labels, track_ids = [], [], []
    schema = None
    for wav in wavs:
        label = wav.parent.name if wav.parent != root else "unlabeled"
        _log_verbose(args, f"extracting {wav}")
        vector = build_feature_vector(load_wav(wav, label=label), framing)
        matrix.append(vector.values)
        labels.append(label)
        track_ids.append(vector.track_id)
        schema = vector.schema
    write_features_csv(args.out, schema, np.array(matrix), track_ids, labels)
    _log(args, f"wrote {len(track_ids)} vectors ({len(schema)} components) "
               f"to {args.out}")
    return EXIT_OK


def cmd_select(args) -> int:
    """Fit the selection forest on a feature CSV and project it."""
    schema, matrix, track_ids, labels = read_features_csv(_resolve(args.features))
    config = ForestConfig(n_trees=args.trees, max_depth=args.max_depth,
                          seed=args.seed, weighted_ig=not args.unweighted_ig)
    _, report = train_forest(matrix, labels, schema, config)
    write_selection_csv(args.report_out, report)
    if args.out:
        projected, proj_schema = apply_selection_matrix(matrix, schema, report)
        write_features_csv(args.out, proj_schema, projected, track_ids, labels)
        _log(args, f"retained {report.n_retained}/{len(schema)} components; "
                   f"projected CSV at {args.out}")
    else:
        _log(args, f"retained {report.n_retained}/{len(schema)} components")
    return EXIT_OK


def cmd_encode(args) -> int:
    """Train the bottleneck autoencoder on a feature CSV in [0, 1]."""
    schema, matrix, track_ids, labels = read_features_csv(_resolve(args.features))
    config = AutoencoderConfig(n_inputs=matrix.shape[1], epochs=args.epochs,
                               batch_size=args.batch_size,
                               bottleneck=args.bottleneck, seed=args.seed)
    model = train_autoencoder(matrix, config)
    save_autoencoder(model, args.model_out)
    _log(args, f"trained autoencoder ({model.n_steps} steps, final loss "
               f"{model.loss_history[-1]:.5f}); saved to {args.model_out}")
    if args.out:
        codes = encode(model, matrix)
        code_schema = FeatureSchema(bottleneck_names(config.bottleneck))
        write_features_csv(args.out, code_schema, codes, track_ids, labels)
        _log(args, f"wrote bottleneck codes to {args.out}")
    return EXIT_OK


def cmd_train_svm(args) -> int:
    """Grid-search and train the classifier on a feature CSV."""
    schema, matrix, _track_ids, labels = read_features_csv(_resolve(args.features))
    gammas = tuple(args.gammas) if args.gammas else (0.015625,)
    best, table = grid_search_cv(matrix, labels, kernels=tuple(args.kernels),
                                 Cs=tuple(args.Cs), gammas=gammas,
                                 n_folds=args.folds, seed=args.seed)
    model = train_multiclass(matrix, labels, best, seed=args.seed)
    save_svm(model, args.model_out)
    kernel = best.kernel.kind
    if best.kernel.gamma is not None:
        kernel += f"(gamma={best.kernel.gamma})"
    _log(args, f"best config: {kernel}, C={best.C} "
               f"({len(table)} grid points); model at {args.model_out}")
    return EXIT_OK


def _load_experiment_config(args) -> ExperimentConfig:
    raw_text = Path(args.config).read_text()
    raw = yaml.safe_load(raw_text)
    config = ExperimentConfig.from_dict(raw if raw is not None else {})
    if args.out:
        config.out_dir = args.out
    if args.seed is not None:
        config.seeds = None
        config.base_seed = args.seed
    if args.stage:
        config.stages = tuple(args.stage)
    if config.features_csv is not None:
        config.features_csv = str(_resolve(config.features_csv))
    if config.audio_dir is not None:
        config.audio_dir = str(_resolve(config.audio_dir))
    return config


def cmd_run(args) -> int:
    """Run the full experiment described by a YAML config."""
    config = _load_experiment_config(args)
    report = run_experiment(config)
    for stage in report.stages:
        _log(args, f"{stage}: {report.stage_mean(stage):.4f} "
                   f"+/- {report.stage_sd(stage):.4f}")
    _log(args, f"outputs under {config.out_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    """Re-render summary and figures from a finished run directory."""
    from . import reporting
    run_dir = _resolve(args.run_dir)
    report_csv = run_dir / "report.csv"
    if not report_csv.is_file():
        print(f"error: {report_csv} not found", file=sys.stderr)
        return EXIT_IO
    import csv as _csv

    with open(report_csv, newline="") as handle:
        rows_raw = list(_csv.reader(handle))
    if not rows_raw or rows_raw[0][:4] != ["repetition", "seed", "stage",
                                           "accuracy"]:
        print(f"error: {report_csv} is not a run report", file=sys.stderr)
        return EXIT_CONFIG
    rows = [(int(r[0]), int(r[1]), r[2], float(r[3]), int(r[4]))
            for r in rows_raw[1:]]
    stages = tuple(dict.fromkeys(r[2] for r in rows))
    confusions = {}
    classes: tuple[str, ...] = ()
    for stage in stages:
        stage_csv = run_dir / f"confusion_{stage}.csv"
        if stage_csv.is_file():
            with open(stage_csv, newline="") as handle:
                conf_rows = list(_csv.reader(handle))
            classes = tuple(conf_rows[0][1:])
            confusions[stage] = np.array(
                [[int(v) for v in row[1:]] for row in conf_rows[1:]])
    from .pipeline import ExperimentReport
    report = ExperimentReport(classes=classes, stages=stages, rows=rows,
                              confusions=confusions, config_echo={})
    reporting.write_summary(run_dir / "summary.txt", report)
    figures = run_dir / "figures"
    figures.mkdir(exist_ok=True)
    reporting.plot_stage_accuracies(figures / "accuracy_by_stage.png", report)
    for stage, matrix in confusions.items():
        reporting.plot_confusion(figures / f"confusion_{stage}.png", classes,
                                 matrix, f"confusion: {stage}")
    _log(args, f"summary and figures refreshed under {run_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genreforge",
        description="Staged feature-engineering pipeline for musical-signal "
                    "classification.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true",
                        help="log per-file progress")
    common.add_argument("-q", "--quiet", action="store_true",
                        help="suppress normal output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common],
                       help="extract feature vectors from WAV files")
    p.add_argument("audio_dir", help="directory tree of .wav files "
                                     "(one subdirectory per class)")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.add_argument("--sample-rate", type=int, default=22050,
                   dest="sample_rate")
    p.add_argument("--frame-ms", type=float, default=50.0, dest="frame_ms")
    p.add_argument("--frame-overlap", type=float, default=0.5,
                   dest="frame_overlap")
    p.add_argument("--window-s", type=float, default=1.0, dest="window_s")
    p.add_argument("--window-overlap", type=float, default=0.5,
                   dest="window_overlap")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("select", parents=[common],
                       help="rank components by information gain")
    p.add_argument("features", help="input feature CSV")
    p.add_argument("--report-out", required=True, dest="report_out",
                   help="selection report CSV")
    p.add_argument("--out", help="projected feature CSV (optional)")
    p.add_argument("--trees", type=int, default=500)
    p.add_argument("--max-depth", type=int, default=None, dest="max_depth")
    p.add_argument("--unweighted-ig", action="store_true", dest="unweighted_ig",
                   help="sum raw gains instead of sample-fraction weighting")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("encode", parents=[common],
                       help="train the bottleneck autoencoder")
    p.add_argument("features", help="input feature CSV with values in [0, 1]")
    p.add_argument("--model-out", required=True, dest="model_out",
                   help="output .npz model file")
    p.add_argument("--out", help="bottleneck code CSV (optional)")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    p.add_argument("--bottleneck", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train-svm", parents=[common],
                       help="grid-search and train the classifier")
    p.add_argument("features", help="input feature CSV")
    p.add_argument("--model-out", required=True, dest="model_out",
                   help="output model JSON")
    p.add_argument("--kernels", nargs="+", default=["rbf"],
                   choices=["linear", "rbf"])
    p.add_argument("--Cs", nargs="+", type=float, default=[4.0])
    p.add_argument("--gammas", nargs="+", type=float, default=[0.015625])
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser("run", parents=[common],
                       help="run the staged experiment from a YAML config")
    p.add_argument("--config", required=True, help="experiment YAML")
    p.add_argument("--out", help="override the config's output directory")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--stage", action="append", choices=list(
        ("content_only", "selected", "selected_plus_bottleneck")),
        help="restrict to a stage (repeatable)")
    p.add_argument("--jobs", type=int, default=1,
                   help="reserved; runs are single-process")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", parents=[common],
                       help="re-render summary and figures for a run")
    p.add_argument("run_dir", help="directory produced by `genreforge run`")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenreforgeError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001  (CLI boundary)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

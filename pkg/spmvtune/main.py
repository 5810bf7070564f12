"""spmvtune command-line interface."""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .autotune import (CLASSIFY, STRATEGIES, OverheadModel, compile_time_optimize,
                       predict_values, run_time_optimize, train_overhead_model, train_pipeline)
from .config import CLASSIFIER_LEARNERS, REGRESSOR_LEARNERS, ConfigManager, TuneConfig
from .dataset import (DIRECTIONS, ConfigPoint, ConfigSpace,
                      export_csv, import_csv, select_winners)
from .errors import EXIT_DATA, EXIT_OK, EXIT_USAGE, SpmvTuneError
from .features import extract_features, time_feature_extraction
from .formats import FORMAT_NAMES, format_summary
from .harness import export_observations, import_observations, measure_overheads, run_sweep
from .logging_config import log_system_info, setup_logging
from .matrix_io import read_matrix_market, write_matrix_market
from .model_store import OVERHEAD_FILE, load_pipeline, save_pipeline
from .report import feature_correlation, improvement_table, overhead_table, render
from .sweep_store import SweepStore
from .synthetic import write_corpus


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _matrix_files(directory: str) -> List[Path]:
    root = Path(directory)
    if not root.is_dir():
        raise SpmvTuneError(f"{directory}: not a directory")
    files = sorted(root.glob("*.mtx"))
    if not files:
        raise SpmvTuneError(f"{directory}: no .mtx files")
    return files


def _write_output(text: str, out: Optional[str]):
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dumps(document) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def _load_recommendations(path: str) -> Dict[str, ConfigPoint]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SpmvTuneError(f"{path}: not valid JSON: {e}") from e
    items = data if isinstance(data, list) else [data]
    try:
        return {item["matrix_id"]: ConfigPoint.from_mapping(item["values"]) for item in items}
    except (KeyError, TypeError) as e:
        raise SpmvTuneError(f"{path}: not a recommendation file: {e}") from e


class SpmvTuneApp:
    """Runs one subcommand with configuration and logging set up."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.logger = logging.getLogger(__name__)
        self.config: Optional[TuneConfig] = None

    def initialize(self):
        """Load configuration, apply flag overrides and set up logging."""
        args = self.args
        config = ConfigManager(args.config).load_config() if args.config else TuneConfig()
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if getattr(args, "min_total_ms", None) is not None:
            overrides["min_total_ms"] = args.min_total_ms
        if getattr(args, "max_reps", None) is not None:
            overrides["max_reps"] = args.max_reps
        if args.log_level:
            overrides["log_level"] = args.log_level
        self.config = dataclasses.replace(config, **overrides)

        setup_logging(self.config.log_level, self.config.log_file, verbose=args.verbose)
        self.logger.debug("spmvtune %s: %s", __version__, args.command)

    def run(self) -> int:
        self.initialize()
        handler = getattr(self, f"cmd_{self.args.command}")
        return handler() or EXIT_OK

    # -- subcommands --------------------------------------------------------

    def cmd_features(self):
        args = self.args
        m = read_matrix_market(args.matrix)
        result = {"matrix_id": Path(args.matrix).stem, **extract_features(m).to_dict()}
        if args.time:
            timing = self.config.timing_params()
            result["extraction_seconds"] = time_feature_extraction(
                m, timing.min_total_seconds, timing.max_reps, timing.warmup)
        _write_output(_dumps(result), args.out)

    def cmd_sweep(self):
        args = self.args
        log_system_info()
        space = ConfigSpace.load(args.space) if args.space else self.config.exec_space()
        store = SweepStore(args.checkpoint) if args.checkpoint else None
        ds = run_sweep(_matrix_files(args.matrices), space, timing=self.config.timing_params(),
                       store=store, format_params=self.config.format_params(), verify=args.verify)
        export_csv(ds, args.out)
        print(f"Wrote {len(ds)} records for {len(ds.matrix_ids())} matrices to {args.out}")

    def cmd_train(self):
        args = self.args
        ds = import_csv(args.dataset)
        pipeline = train_pipeline(ds, objective=args.objective, direction=args.direction,
                                  learner=args.learner or self.config.learner,
                                  regressor_learner=args.regressor_learner,
                                  trials=args.trials or self.config.search_trials,
                                  split=self.config.train_split, seed=self.config.seed,
                                  n_jobs=self.config.n_jobs)
        save_pipeline(pipeline, args.out)
        _write_output(_dumps(pipeline.manifest["reports"]), None)

    def cmd_recommend(self):
        args = self.args
        pipeline = load_pipeline(args.models)
        recommendations = [
            compile_time_optimize(path, pipeline, strategy=args.strategy, verify=args.verify,
                                  default_point=self.config.default_point(),
                                  timing=self.config.timing_params(),
                                  format_params=self.config.format_params())
            for path in args.matrices]
        documents = [r.to_dict() for r in recommendations]
        _write_output(_dumps(documents[0] if len(documents) == 1 else documents), args.out)

    def cmd_decide(self):
        args = self.args
        pipeline = load_pipeline(args.models)
        overhead_path = args.overhead_model or str(Path(args.models) / OVERHEAD_FILE)
        overhead_model = OverheadModel.load(overhead_path)
        decision = run_time_optimize(args.matrix, pipeline, overhead_model, args.iterations,
                                     default_format=args.default_format or self.config.default_format,
                                     format_params=self.config.format_params(),
                                     perform_conversion=not args.no_convert)
        _write_output(decision.to_json(), args.out)

    def cmd_convert(self):
        args = self.args
        m = read_matrix_market(args.matrix)
        params = dataclasses.replace(
            self.config.format_params(),
            **{k: v for k, v in (("block_h", args.block_h), ("block_w", args.block_w),
                                 ("slice_height", args.slice_height)) if v is not None})
        converted = params.convert(m, args.format)
        if args.reconstruct:
            write_matrix_market(converted.to_triplets(), args.reconstruct)
        _write_output(_dumps(format_summary(converted)), args.out)

    def cmd_overheads(self):
        args = self.args
        if args.observations:
            observations = import_observations(args.observations)
        else:
            if not args.matrices:
                raise ValueError("overheads needs --matrices or --observations")
            format_predictor = None
            if args.models:
                classifier = load_pipeline(args.models).classifiers.get("format")
                format_predictor = classifier.predict if classifier else None
            observations = measure_overheads(_matrix_files(args.matrices), args.formats,
                                             timing=self.config.timing_params(),
                                             format_params=self.config.format_params(),
                                             format_predictor=format_predictor)
            if args.out:
                export_observations(observations, args.out)

        if args.train:
            model = train_overhead_model(observations, learner=args.learner or self.config.overhead_learner,
                                         seed=self.config.seed, split=self.config.train_split,
                                         n_jobs=self.config.n_jobs, timing=self.config.timing_params())
            model.save(args.train)
        _write_output(render(overhead_table(observations, args.formats), args.table_format), None)

    def cmd_report(self):
        args = self.args
        ds = import_csv(args.dataset)
        if args.correlation:
            _write_output(render(feature_correlation(ds), args.format, index=True), args.out)
            return
        default_point = self.config.default_point()
        if args.default:
            default_point = ConfigPoint.from_mapping(json.loads(args.default))
        if args.recommendations:
            chosen = _load_recommendations(args.recommendations)
        elif args.models:
            pipeline = load_pipeline(args.models)
            chosen = {m: ConfigPoint.from_mapping(predict_values(pipeline, ds.features_for(m), args.strategy))
                      for m in ds.matrix_ids()}
        else:
            chosen = {m: r.config for m, r in select_winners(ds, args.objective, args.direction).items()}
        table = improvement_table(ds, chosen, default_point, args.objective, args.direction)
        _write_output(render(table, args.format), args.out)

    def cmd_generate(self):
        args = self.args
        paths = write_corpus(args.out, args.count, seed=self.config.seed,
                             min_n=args.min_n, max_n=args.max_n)
        print(f"Wrote {len(paths)} matrices to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="Seed for every random choice")
    common.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")

    parser = _Parser(prog="spmvtune", description="Format-adaptive SpMV autotuning toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("features", parents=[common], help="Print the sparsity features of a matrix")
    p.add_argument("matrix")
    p.add_argument("--time", action="store_true", help="Also time feature extraction")
    p.add_argument("--out")

    p = sub.add_parser("sweep", parents=[common], help="Benchmark matrices over a configuration space")
    p.add_argument("--matrices", required=True, help="Directory of .mtx files")
    p.add_argument("--space", help="JSON configuration space (default: the executable space)")
    p.add_argument("--out", required=True, help="Dataset CSV")
    p.add_argument("--min-total-ms", type=float)
    p.add_argument("--max-reps", type=int)
    p.add_argument("--checkpoint", help="SQLite file that makes the sweep restartable")
    p.add_argument("--verify", action="store_true", help="Check every kernel against the oracle")

    p = sub.add_parser("train", parents=[common], help="Train classifiers and regressors on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--objective", default="latency_seconds")
    p.add_argument("--direction", choices=DIRECTIONS)
    p.add_argument("--learner", choices=CLASSIFIER_LEARNERS)
    p.add_argument("--regressor-learner", choices=REGRESSOR_LEARNERS, default="decision_tree")
    p.add_argument("--trials", type=int)
    p.add_argument("--out", required=True, help="Model directory")

    p = sub.add_parser("recommend", parents=[common], help="Compile-time recommendation (format stays CSR)")
    p.add_argument("matrices", nargs="+")
    p.add_argument("--models", required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default=CLASSIFY)
    p.add_argument("--verify", action="store_true", help="Measure recommended vs default config")
    p.add_argument("--min-total-ms", type=float)
    p.add_argument("--max-reps", type=int)
    p.add_argument("--out")

    p = sub.add_parser("decide", parents=[common], help="Run-time format decision")
    p.add_argument("matrix")
    p.add_argument("--models", required=True)
    p.add_argument("--overhead-model", help=f"default: <models>/{OVERHEAD_FILE}")
    p.add_argument("--iterations", type=int, required=True, help="Expected SpMV iterations")
    p.add_argument("--default-format", choices=FORMAT_NAMES)
    p.add_argument("--no-convert", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("convert", parents=[common], help="Convert a matrix and print its footprint")
    p.add_argument("matrix")
    p.add_argument("--format", required=True, choices=FORMAT_NAMES)
    p.add_argument("--block-h", type=int)
    p.add_argument("--block-w", type=int)
    p.add_argument("--slice-height", type=int)
    p.add_argument("--reconstruct", help="Write the converted matrix back as Matrix Market")
    p.add_argument("--out")

    p = sub.add_parser("overheads", parents=[common], help="Measure or train run-time overheads")
    p.add_argument("--matrices", help="Directory of .mtx files")
    p.add_argument("--observations", help="Previously measured observations CSV")
    p.add_argument("--formats", nargs="+", choices=FORMAT_NAMES, default=list(FORMAT_NAMES))
    p.add_argument("--models", help="Pipeline whose format classifier is timed")
    p.add_argument("--out", help="Observations CSV")
    p.add_argument("--train", help="Write a trained overhead model here")
    p.add_argument("--learner", choices=REGRESSOR_LEARNERS)
    p.add_argument("--min-total-ms", type=float)
    p.add_argument("--max-reps", type=int)
    p.add_argument("--table-format", choices=("text", "csv"), default="text")

    p = sub.add_parser("report", parents=[common], help="Improvement or correlation tables")
    p.add_argument("--dataset", required=True)
    p.add_argument("--recommendations", help="JSON written by recommend")
    p.add_argument("--models", help="Recommend from the dataset's stored features")
    p.add_argument("--strategy", choices=STRATEGIES, default=CLASSIFY)
    p.add_argument("--objective", default="latency_seconds")
    p.add_argument("--direction", choices=DIRECTIONS)
    p.add_argument("--default", help='Default point as JSON, e.g. {"format": "csr", ...}')
    p.add_argument("--correlation", action="store_true")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out")

    p = sub.add_parser("generate", parents=[common], help="Write a synthetic Matrix Market corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=15)
    p.add_argument("--min-n", type=int, default=64)
    p.add_argument("--max-n", type=int, default=4096)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    app = SpmvTuneApp(args)
    logger = logging.getLogger(__name__)
    try:
        return app.run()
    except SpmvTuneError as e:
        logger.error("%s", e)
        print(f"spmvtune: error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error("%s", e)
        print(f"spmvtune: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        logger.error("%s", e)
        print(f"spmvtune: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

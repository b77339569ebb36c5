"""
Command-line interface for multilabel prototype generation experiments.

Usage examples (from project root):
    python cli.py run --config config_examples/desk_grid.yaml
    python cli.py run --config config_examples/mulan_grid.yaml --out results/mulan --jobs 4
    python cli.py run --config config_examples/desk_grid.yaml --dry-run
    python cli.py describe --corpus data/emotions-train.arff --test data/emotions-test.arff --xml data/emotions.xml
    python cli.py reduce --corpus train.csv --method mchen_10 --out reduced.csv
    python cli.py noise --corpus train.csv --theta 0.2 --seed 7 --out noisy.csv

Subcommands:
    run        Execute the corpus x theta x method x classifier x k grid of a YAML config
    describe   Print size, features, labels, cardinality and density of a corpus
    reduce     Apply one reduction method to a corpus and write the reduced set as CSV
    noise      Swap labelsets between random pairs of instances and write the result as CSV

Setting resolution order (run):
    1. Explicit flags (--out / --seed / --jobs)
    2. Values in the config file (output / seed / jobs)
    3. Environment or project .env: MLPG_OUTPUT_DIR / MLPG_SEED / MLPG_JOBS
    4. Defaults: results / 0 / 1

ARFF corpora need the MULAN label description (--xml) or the number of
label attributes at the end of the attribute list (--labels). CSV corpora
are self-describing.
"""

from __future__ import annotations

# Ensure project root is on sys.path when executed as a script
import os as _os, sys as _sys
_ROOT_DIR = _os.path.abspath(_os.path.dirname(__file__))
if _ROOT_DIR not in _sys.path:
    _sys.path.insert(0, _ROOT_DIR)

import argparse
import logging
import signal
import sys
from typing import List, Optional

from src import __version__
from src.arff_io import load_source, save_csv, sources_from_paths
from src.bench import expected_records, grid, load_config, load_corpora, run, write_results
from src.errors import MlpgError
from src.mldata import describe
from src.noise import NoiseSpec, induce_noise
from src.reducers import parse_method, reduce
from src.settings import env_defaults, resolve
from src.splitter import Heterogeneity

logger = logging.getLogger("mlpg")

# Global flag used to indicate a user-requested stop (Ctrl+C)
STOP_REQUESTED = False


def _handle_sigint(signum, frame) -> None:
    """Signal handler for SIGINT (Ctrl+C). Set STOP_REQUESTED so the runner can exit cleanly."""
    global STOP_REQUESTED
    if not STOP_REQUESTED:
        print("\n[INTERRUPT] SIGINT received - finishing current cells and writing partial results...")
    STOP_REQUESTED = True


def _setup_signal_handlers() -> None:
    """Register signal handler(s) for graceful shutdown on Ctrl+C."""
    try:
        signal.signal(signal.SIGINT, _handle_sigint)
    except (ValueError, OSError):
        # Not in the main thread or unsupported platform
        pass


def _stop_requested() -> bool:
    return STOP_REQUESTED


def _configure_logging(verbose: bool, level_name: str) -> None:
    level = logging.DEBUG if verbose else getattr(logging, level_name, logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def _load_cli_corpus(path: str, xml: Optional[str], labels: Optional[int]):
    source, _ = sources_from_paths(path, None, xml, labels)
    return load_source(source)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    env = env_defaults()
    config = load_config(args.config)
    seed = resolve(args.seed, config.seed, env.seed)
    jobs = resolve(args.jobs, config.jobs, env.jobs)
    out_dir = resolve(args.out, config.output, env.output_dir)
    config = config.with_overrides(seed=seed, jobs=jobs, output=out_dir)

    if args.dry_run:
        splits, errors = load_corpora(config)
        cells = grid(config, sorted(splits))
        print(f"[DRY-RUN] config hash {config.config_hash()}")
        for index, entry in enumerate(config.corpora):
            if index in splits:
                train, test = splits[index].train, splits[index].test
                print(f"[DRY-RUN] corpus {entry.name}: train n={train.n} test n={test.n} f={train.f} L={train.label_count}")
        for error in errors:
            print(f"[WARN] corpus {error['corpus']}: {error['error']}")
        print(f"[DRY-RUN] methods: {', '.join(m.label for m in config.methods)}")
        print(f"[DRY-RUN] thetas: {list(config.thetas)}  classifiers: {[c.value for c in config.classifiers]}  ks: {list(config.ks)}")
        print(f"[DRY-RUN] {len(cells)} cells, {expected_records(config, len(splits))} records -> {out_dir} (seed={seed}, jobs={jobs})")
        return 0 if splits else 1

    global STOP_REQUESTED
    STOP_REQUESTED = False
    _setup_signal_handlers()

    outcome = run(config, jobs=jobs, stop=_stop_requested)
    written = write_results(outcome, out_dir, config.alpha)
    for error in outcome.manifest.errors:
        where = error["corpus"] if "method" not in error else f"{error['corpus']} theta={error['theta']} {error['method']}"
        print(f"[WARN] {where}: {error['error']}")
    for path in written:
        print(f"[INFO] wrote {path}")
    if outcome.manifest.interrupted:
        print(f"[WARN] run interrupted; {outcome.manifest.records} records written")
        return 130
    print(f"[DONE] {outcome.manifest.records} records in {out_dir}")
    return 0 if outcome.records else 1


def cmd_describe(args) -> int:
    train_src, test_src = sources_from_paths(args.corpus, args.test, args.xml, args.labels)
    rows = [("train" if test_src else "corpus", load_source(train_src))]
    if test_src:
        rows.append(("test", load_source(test_src)))
    print(f"{'split':<8}{'n':>8}{'f':>6}{'L':>5}{'card':>8}{'dens':>8}{'labelsets':>11}")
    for name, ds in rows:
        d = describe(ds)
        print(f"{name:<8}{d.n:>8}{d.f:>6}{d.L:>5}{d.cardinality:>8.3f}{d.density:>8.3f}{d.distinct_labelsets:>11}")
    return 0


def cmd_reduce(args) -> int:
    ds = _load_cli_corpus(args.corpus, args.xml, args.labels)
    spec = parse_method(args.method, args.m)
    result = reduce(spec, ds, Heterogeneity(args.heterogeneity))
    save_csv(result.reduced, args.out)
    print(f"[INFO] {spec.label}: {ds.n} -> {result.reduced.n} prototypes ({result.size_pct:.2f}%), {result.clusters} clusters")
    print(f"[INFO] wrote {args.out}")
    return 0


def cmd_noise(args) -> int:
    ds = _load_cli_corpus(args.corpus, args.xml, args.labels)
    noisy = induce_noise(ds, NoiseSpec(args.theta, args.seed))
    save_csv(noisy, args.out)
    changed = sum(1 for a, b in zip(ds.labelsets, noisy.labelsets) if a != b)
    print(f"[INFO] theta={args.theta}: {changed} of {ds.n} labelsets changed")
    print(f"[INFO] wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_label_source(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--xml", help="MULAN label XML for ARFF corpora")
    group.add_argument("--labels", type=int, help="Number of trailing label attributes in ARFF corpora")


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description="Multilabel prototype generation benchmark.")
    p.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="Run an experiment grid from a YAML config")
    run_p.add_argument("--config", required=True, help="Path to YAML experiment config")
    run_p.add_argument("--out", help="Output directory")
    run_p.add_argument("--seed", type=int, help="Seed for noise induction")
    run_p.add_argument("--jobs", type=int, help="Worker processes")
    run_p.add_argument("--dry-run", action="store_true", help="Validate config and corpora, print the grid, run nothing")
    run_p.set_defaults(func=cmd_run)

    describe_p = sub.add_parser("describe", help="Print corpus descriptors")
    describe_p.add_argument("--corpus", required=True, help="Train (or only) partition, ARFF or CSV")
    describe_p.add_argument("--test", help="Test partition")
    _add_label_source(describe_p)
    describe_p.set_defaults(func=cmd_describe)

    reduce_p = sub.add_parser("reduce", help="Reduce a corpus with one method")
    reduce_p.add_argument("--corpus", required=True)
    reduce_p.add_argument("--method", required=True, help="all, mrhc, mchen, mrsp1, mrsp2, mrsp3 (optionally _<m>)")
    reduce_p.add_argument("--m", type=float, help="Reduction parameter in percent (mchen, mrsp1, mrsp2)")
    reduce_p.add_argument("--out", required=True, help="Output CSV")
    reduce_p.add_argument(
        "--heterogeneity",
        choices=[h.value for h in Heterogeneity],
        default=Heterogeneity.DISTINCT_LABELSETS.value,
        help="When a cluster counts as mixed for the split preference",
    )
    _add_label_source(reduce_p)
    reduce_p.set_defaults(func=cmd_reduce)

    noise_p = sub.add_parser("noise", help="Induce label-swap noise")
    noise_p.add_argument("--corpus", required=True)
    noise_p.add_argument("--theta", type=float, required=True, help="Noise rate in [0, 1]")
    noise_p.add_argument("--seed", type=int, default=0)
    noise_p.add_argument("--out", required=True, help="Output CSV")
    _add_label_source(noise_p)
    noise_p.set_defaults(func=cmd_noise)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        _configure_logging(args.verbose, env_defaults().log_level)
        return args.func(args)
    except MlpgError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

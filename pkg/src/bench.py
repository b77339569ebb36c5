"""Experiment runner: noise -> reduction -> kNN classification over a corpus x theta x method grid.

Results are written in a canonical order that does not depend on how many
worker processes executed the grid:

    records.csv        one EvalRecord per row, full float precision
    tables.csv         mean size and HL per (theta, method), one column per classifier/k
    tables_noise.csv   mean size and HL per (theta, method), one column per k (classifiers averaged)
    pareto.csv         scenario means with frontier flags
    wilcoxon.csv       frontier methods against the ALL/MRHC baselines
    plots/             one CSV per (theta, classifier, k) scenario
    manifest.json      config hash, seed, version, per-cell timings, errors
"""

from __future__ import annotations

import hashlib
import json
import logging
import signal
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from src import __version__
from src.arff_io import CorpusEntry, entry_from_mapping, load_corpus
from src.classifiers import DEFAULT_SMOOTHING, ClassifierKind, mlknn_fit, neighbour_matrix, predict_all
from src.errors import ConfigError, MlpgError
from src.evaluation import (
    DEFAULT_ALPHA,
    RECORD_COLUMNS,
    EvalRecord,
    compare_to_baselines,
    hamming_loss,
    pareto_table,
    records_frame,
    results_table,
    scenario_table,
)
from src.mldata import CorpusSplit
from src.noise import NoiseSpec, induce_noise
from src.reducers import ReducerSpec, parse_method, reduce
from src.splitter import Heterogeneity

logger = logging.getLogger(__name__)

DEFAULT_THETAS = (0.0, 0.2, 0.4)
DEFAULT_KS = (1, 3, 5, 7)
TABLE_FLOAT_FORMAT = "%.6g"


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _method_from_item(item) -> ReducerSpec:
    if isinstance(item, Mapping):
        if "method" not in item:
            raise ConfigError(f"Method entries need a 'method' key: {item!r}")
        try:
            return ReducerSpec(str(item["method"]).lower(), item.get("m"))
        except ValueError as e:
            raise ConfigError(f"Unknown method '{item['method']}'") from e
    return parse_method(str(item))


def _as_list(data: Mapping, key: str, default=None) -> list:
    value = data.get(key, default)
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


@dataclass(frozen=True)
class ExperimentConfig:
    corpora: Tuple[CorpusEntry, ...]
    methods: Tuple[ReducerSpec, ...]
    thetas: Tuple[float, ...] = DEFAULT_THETAS
    classifiers: Tuple[ClassifierKind, ...] = tuple(ClassifierKind)
    ks: Tuple[int, ...] = DEFAULT_KS
    seed: Optional[int] = None
    output: Optional[str] = None
    jobs: Optional[int] = None
    smoothing: float = DEFAULT_SMOOTHING
    heterogeneity: Heterogeneity = Heterogeneity.DISTINCT_LABELSETS
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not self.corpora:
            raise ConfigError("Config lists no corpora")
        if not self.methods:
            raise ConfigError("empty method list")
        if not self.thetas or any(not 0.0 <= t <= 1.0 for t in self.thetas):
            raise ConfigError(f"thetas must be a non-empty list within [0, 1], got {list(self.thetas)}")
        if not self.classifiers:
            raise ConfigError("Config lists no classifiers")
        if not self.ks or any(k < 1 for k in self.ks):
            raise ConfigError(f"ks must be a non-empty list of positive integers, got {list(self.ks)}")
        names = [c.name for c in self.corpora]
        if len(set(names)) != len(names):
            raise ConfigError(f"Corpus names must be unique: {names}")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")

    @classmethod
    def from_mapping(cls, data: Mapping, base_dir: Union[str, Path] = ".") -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("Experiment config must be a mapping")
        unknown = set(data) - {
            "corpora", "methods", "thetas", "classifiers", "ks", "seed", "output",
            "jobs", "smoothing", "heterogeneity", "alpha",
        }
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        base_dir = Path(base_dir)
        try:
            corpora = tuple(entry_from_mapping(item, base_dir) for item in _as_list(data, "corpora"))
            classifiers = tuple(
                ClassifierKind(str(c).lower()) for c in _as_list(data, "classifiers", [c.value for c in ClassifierKind])
            )
            heterogeneity = Heterogeneity(str(data.get("heterogeneity", Heterogeneity.DISTINCT_LABELSETS.value)))
            return cls(
                corpora=corpora,
                methods=tuple(_method_from_item(m) for m in _as_list(data, "methods")),
                thetas=tuple(float(t) for t in _as_list(data, "thetas", list(DEFAULT_THETAS))),
                classifiers=classifiers,
                ks=tuple(int(k) for k in _as_list(data, "ks", list(DEFAULT_KS))),
                seed=None if data.get("seed") is None else int(data["seed"]),
                output=None if data.get("output") is None else str(data["output"]),
                jobs=None if data.get("jobs") is None else int(data["jobs"]),
                smoothing=float(data.get("smoothing", DEFAULT_SMOOTHING)),
                heterogeneity=heterogeneity,
                alpha=float(data.get("alpha", DEFAULT_ALPHA)),
            )
        except ConfigError:
            raise
        except (MlpgError, ValueError, TypeError) as e:
            raise ConfigError(f"Invalid experiment config: {e}") from e

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def canonical(self) -> dict:
        """JSON-ready view of everything that influences results (not output/jobs)."""
        return {
            "corpora": [asdict(c) for c in self.corpora],
            "methods": [m.label for m in self.methods],
            "thetas": list(self.thetas),
            "classifiers": [c.value for c in self.classifiers],
            "ks": list(self.ks),
            "seed": self.seed,
            "smoothing": self.smoothing,
            "heterogeneity": self.heterogeneity.value,
            "alpha": self.alpha,
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a YAML experiment file; relative corpus paths resolve against its directory."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML parse error in {path}: {e}")
    config = ExperimentConfig.from_mapping(data, path.parent)
    logger.info(
        f"Loaded {path}: {len(config.corpora)} corpora, {len(config.methods)} methods, "
        f"{len(config.thetas)} thetas, {len(config.classifiers)} classifiers, {len(config.ks)} ks"
    )
    return config


# ---------------------------------------------------------------------------
# Grid cells
# ---------------------------------------------------------------------------

def noise_seed(seed: int, corpus_index: int, theta_index: int) -> int:
    """Seed for one (corpus, theta) pair, independent of execution order."""
    state = np.random.SeedSequence([int(seed), corpus_index, theta_index]).generate_state(1)
    return int(state[0])


@dataclass(frozen=True)
class Cell:
    corpus_index: int
    theta_index: int
    method_index: int
    theta: float
    method: ReducerSpec

    @property
    def key(self) -> Tuple[int, int, int]:
        return self.corpus_index, self.theta_index, self.method_index


@dataclass
class CellResult:
    key: Tuple[int, int, int]
    corpus: str
    theta: float
    method: str
    records: List[EvalRecord] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    reference_size: int = 0
    clusters: int = 0
    error: Optional[str] = None

    def manifest_entry(self) -> dict:
        entry = {
            "corpus": self.corpus,
            "theta": self.theta,
            "method": self.method,
            "reference_size": self.reference_size,
            "clusters": self.clusters,
            "timings_s": {k: round(v, 6) for k, v in self.timings.items()},
        }
        if self.error:
            entry["error"] = self.error
        return entry


def effective_k(kind: ClassifierKind, k: int, reference_size: int) -> int:
    """Largest usable k on a reference set; ML-kNN needs one instance more than k."""
    limit = reference_size - 1 if kind is ClassifierKind.MLKNN else reference_size
    return max(0, min(k, limit))


def evaluate_reference(
    split: CorpusSplit,
    reference,
    classifiers: Sequence[ClassifierKind],
    ks: Sequence[int],
    smoothing: float = DEFAULT_SMOOTHING,
) -> Dict[Tuple[ClassifierKind, int], float]:
    """Hamming loss of every classifier/k pair on the test split, using ``reference`` as training data."""
    test = split.test
    neighbours = neighbour_matrix(test.features, reference, min(max(ks), reference.n))
    models = {}
    losses = {}
    for kind in classifiers:
        for k in ks:
            k_used = effective_k(kind, k, reference.n)
            if k_used != k:
                logger.warning(
                    f"{split.name}: k={k} exceeds what {kind.value} can use on |R|={reference.n}; using k={k_used}"
                )
            model = None
            if kind is ClassifierKind.MLKNN:
                if k_used not in models:
                    models[k_used] = mlknn_fit(reference, k_used, smoothing)
                model = models[k_used]
            predictions = predict_all(kind, reference, test.features, k_used, neighbours=neighbours, model=model)
            losses[(kind, k)] = hamming_loss(test.labelsets, predictions, test.label_count)
    return losses


def run_cell(
    split: CorpusSplit,
    cell: Cell,
    classifiers: Sequence[ClassifierKind],
    ks: Sequence[int],
    seed: int,
    smoothing: float = DEFAULT_SMOOTHING,
    heterogeneity: Heterogeneity = Heterogeneity.DISTINCT_LABELSETS,
) -> CellResult:
    """Noise, then reduction, then classification, for one grid cell."""
    result = CellResult(cell.key, split.name, cell.theta, cell.method.label)
    try:
        started = time.perf_counter()
        noisy = induce_noise(split.train, NoiseSpec(cell.theta, noise_seed(seed, cell.corpus_index, cell.theta_index)))
        noised = time.perf_counter()
        reduction = reduce(cell.method, noisy, heterogeneity)
        reduced = time.perf_counter()
        losses = evaluate_reference(split, reduction.reduced, classifiers, ks, smoothing)
        classified = time.perf_counter()
    except MlpgError as e:
        logger.error(f"Cell {split.name} / theta={cell.theta} / {cell.method.label} failed: {e}")
        result.error = str(e)
        return result
    result.reference_size = reduction.reduced.n
    result.clusters = reduction.clusters
    result.timings = {"noise": noised - started, "reduce": reduced - noised, "classify": classified - reduced}
    for kind in classifiers:
        for k in ks:
            result.records.append(
                EvalRecord(
                    method=cell.method.label,
                    corpus=split.name,
                    theta=cell.theta,
                    classifier=kind.value,
                    k=k,
                    hl=losses[(kind, k)],
                    size_pct=reduction.size_pct,
                )
            )
    logger.info(
        f"{split.name} theta={cell.theta} {cell.method.label}: |R|={result.reference_size} "
        f"({reduction.size_pct:.2f}%) in {classified - started:.2f}s"
    )
    return result


def _ignore_sigint() -> None:
    signal.signal(signal.SIGINT, signal.SIG_IGN)


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    config_hash: str
    version: str
    seed: int
    cells: List[dict] = field(default_factory=list)
    errors: List[dict] = field(default_factory=list)
    records: int = 0
    interrupted: bool = False

    def as_dict(self) -> dict:
        return asdict(self)

    def write(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.as_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


@dataclass
class RunOutcome:
    records: List[EvalRecord]
    manifest: RunManifest


def load_corpora(config: ExperimentConfig) -> Tuple[Dict[int, CorpusSplit], List[dict]]:
    """Load every corpus; failures are collected instead of raised."""
    splits: Dict[int, CorpusSplit] = {}
    errors: List[dict] = []
    for index, entry in enumerate(config.corpora):
        try:
            splits[index] = load_corpus(entry)
        except (MlpgError, OSError) as e:
            logger.warning(f"Corpus '{entry.name}' could not be loaded: {e}")
            errors.append({"corpus": entry.name, "error": str(e)})
    return splits, errors


def grid(config: ExperimentConfig, corpus_indices: Sequence[int]) -> List[Cell]:
    """Cells in canonical order: corpus, then theta, then method."""
    return [
        Cell(c, t, m, theta, method)
        for c in corpus_indices
        for t, theta in enumerate(config.thetas)
        for m, method in enumerate(config.methods)
    ]


def expected_records(config: ExperimentConfig, corpora: int) -> int:
    return corpora * len(config.thetas) * len(config.methods) * len(config.classifiers) * len(config.ks)


def run(
    config: ExperimentConfig,
    jobs: int = 1,
    stop: Optional[Callable[[], bool]] = None,
) -> RunOutcome:
    """Execute the whole grid; ``stop`` is polled between cells."""
    stop = stop or (lambda: False)
    seed = config.seed if config.seed is not None else 0
    splits, errors = load_corpora(config)
    cells = grid(config, sorted(splits))
    logger.info(f"Running {len(cells)} cells on {len(splits)} corpora with {jobs} job(s)")
    results: Dict[Tuple[int, int, int], CellResult] = {}
    interrupted = False
    args = (config.classifiers, config.ks, seed, config.smoothing, config.heterogeneity)

    if jobs <= 1:
        for cell in cells:
            if stop():
                interrupted = True
                break
            results[cell.key] = run_cell(splits[cell.corpus_index], cell, *args)
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_ignore_sigint) as pool:
            futures = {pool.submit(run_cell, splits[cell.corpus_index], cell, *args): cell for cell in cells}
            for future in as_completed(futures):
                if stop():
                    interrupted = True
                    for pending in futures:
                        pending.cancel()
                    break
                result = future.result()
                results[result.key] = result

    if interrupted:
        logger.warning(f"Run interrupted after {len(results)} of {len(cells)} cells")
    records: List[EvalRecord] = []
    manifest = RunManifest(config.config_hash(), __version__, seed, errors=errors, interrupted=interrupted)
    for key in sorted(results):
        result = results[key]
        records.extend(result.records)
        manifest.cells.append(result.manifest_entry())
        if result.error:
            manifest.errors.append({"corpus": result.corpus, "theta": result.theta, "method": result.method, "error": result.error})
    manifest.records = len(records)
    return RunOutcome(records, manifest)


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def _write_frame(frame: pd.DataFrame, path: Path, float_format: Optional[str] = None) -> Path:
    frame.to_csv(path, index=False, float_format=float_format, lineterminator="\n")
    return path


def _theta_tag(theta: float) -> str:
    return f"{theta:g}"


def emit_plot_data(records: Sequence[EvalRecord], directory: Union[str, Path]) -> List[Path]:
    """One CSV per (theta, classifier, k) scenario: method,size_pct,hl,frontier_flag."""
    if not records:
        raise MlpgError("No records to plot")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    table = pareto_table(records)
    written = []
    for (theta, classifier, k), group in table.groupby(["theta", "classifier", "k"], sort=False):
        series = group[["method", "size_pct", "hl", "frontier"]].rename(columns={"frontier": "frontier_flag"})
        path = directory / f"theta{_theta_tag(theta)}_{classifier}_k{k}.csv"
        written.append(_write_frame(series, path, TABLE_FLOAT_FORMAT))
    logger.debug(f"Wrote {len(written)} plot series to {directory}")
    return written


def write_results(outcome: RunOutcome, out_dir: Union[str, Path], alpha: float = DEFAULT_ALPHA) -> List[Path]:
    """Write every result file of a run into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frame = records_frame(outcome.records)
    written = [_write_frame(frame[RECORD_COLUMNS], out_dir / "records.csv")]
    if outcome.records:
        written.append(_write_frame(results_table(frame), out_dir / "tables.csv", TABLE_FLOAT_FORMAT))
        written.append(_write_frame(scenario_table(frame), out_dir / "tables_noise.csv", TABLE_FLOAT_FORMAT))
        written.append(_write_frame(pareto_table(frame), out_dir / "pareto.csv", TABLE_FLOAT_FORMAT))
        written.append(
            _write_frame(compare_to_baselines(frame, alpha=alpha), out_dir / "wilcoxon.csv", TABLE_FLOAT_FORMAT)
        )
        written.extend(emit_plot_data(outcome.records, out_dir / "plots"))
    else:
        logger.warning("No records produced; only records.csv and manifest.json are written")
    manifest_path = out_dir / "manifest.json"
    outcome.manifest.write(manifest_path)
    written.append(manifest_path)
    return written

"""Corpus readers and writers: MULAN ARFF + XML, canonical CSV, synthetic blobs."""

from __future__ import annotations

import io
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.errors import DatasetError, ParseError
from src.mldata import CorpusSplit, Labelset, MultilabelDataset

logger = logging.getLogger(__name__)

FORMATS = ("arff", "csv", "synthetic")
NUMERIC_TYPES = {"numeric", "real", "integer"}
REJECTED_TYPES = {"string", "date", "relational"}
LABEL_NAME_SEPARATOR = ";"


@dataclass(frozen=True)
class CorpusSource:
    """Where one partition of a corpus lives on disk."""

    path: Optional[str] = None
    xml_path: Optional[str] = None
    label_count_fallback: Optional[int] = None
    format: str = "arff"

    def __post_init__(self):
        if self.format not in FORMATS:
            raise DatasetError(f"Unknown corpus format '{self.format}' (expected one of {FORMATS})")
        if self.format == "arff":
            if (self.xml_path is None) == (self.label_count_fallback is None):
                raise DatasetError(
                    "ARFF sources need exactly one of xml_path / label_count_fallback"
                )
            if self.label_count_fallback is not None and self.label_count_fallback < 1:
                raise DatasetError("label_count_fallback must be at least 1")


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian-blob corpus, one labelset per blob.

    ``labelset_per_cluster`` may be left empty, in which case each blob draws
    a random non-empty labelset from the generator. ``centers`` may pin the
    blob centers; otherwise they are drawn uniformly in [0, center_scale]^f.
    ``extra_label_rate`` adds each absent label to an instance's labelset with
    that probability, which makes blobs share labels without sharing
    labelsets.
    """

    n: int
    f: int
    L: int
    clusters: int = 1
    labelset_per_cluster: Tuple[Labelset, ...] = ()
    noise_sigma: float = 1.0
    seed: int = 0
    centers: Optional[Tuple[Tuple[float, ...], ...]] = None
    center_scale: float = 100.0
    extra_label_rate: float = 0.0

    def __post_init__(self):
        if self.clusters < 1:
            raise DatasetError("Synthetic corpora need at least one cluster")
        if self.n < self.clusters:
            raise DatasetError(f"n={self.n} is smaller than clusters={self.clusters}")
        if self.f < 1 or self.L < 1:
            raise DatasetError("Synthetic corpora need f >= 1 and L >= 1")
        if self.noise_sigma < 0:
            raise DatasetError("noise_sigma must be non-negative")
        if not 0.0 <= self.extra_label_rate <= 1.0:
            raise DatasetError("extra_label_rate must lie in [0, 1]")
        labelsets = tuple(
            ls if isinstance(ls, Labelset) else Labelset.from_iterable(ls)
            for ls in self.labelset_per_cluster
        )
        if labelsets and len(labelsets) != self.clusters:
            raise DatasetError(
                f"Got {len(labelsets)} labelsets for {self.clusters} clusters"
            )
        for labelset in labelsets:
            if labelset.max_index() >= self.L:
                raise DatasetError(f"Labelset {labelset} out of range for L={self.L}")
        object.__setattr__(self, "labelset_per_cluster", labelsets)
        if self.centers is not None:
            centers = tuple(tuple(float(v) for v in c) for c in self.centers)
            if len(centers) != self.clusters or any(len(c) != self.f for c in centers):
                raise DatasetError(f"centers must be {self.clusters} vectors of length {self.f}")
            object.__setattr__(self, "centers", centers)


@dataclass(frozen=True)
class CorpusEntry:
    """One corpus of an experiment: file-backed train/test sources or a synthetic recipe."""

    name: str
    train: Optional[CorpusSource] = None
    test: Optional[CorpusSource] = None
    synthetic: Optional[SyntheticSpec] = None
    test_n: int = 0
    domain: Optional[str] = None

    def __post_init__(self):
        if self.synthetic is None and (self.train is None or self.test is None):
            raise DatasetError(f"Corpus '{self.name}' needs train and test sources or a synthetic spec")
        if self.synthetic is not None and self.test_n < 1:
            raise DatasetError(f"Synthetic corpus '{self.name}' needs test_n >= 1")


# ---------------------------------------------------------------------------
# MULAN XML
# ---------------------------------------------------------------------------

def load_mulan_xml(path: Union[str, Path]) -> List[str]:
    """Label names listed in a MULAN ``<labels>`` file, in document order."""
    try:
        tree = ET.parse(str(path))
    except ET.ParseError as e:
        raise ParseError(f"Invalid MULAN XML: {e}", path=str(path)) from e
    names = []
    for element in tree.getroot().iter():
        tag = element.tag.rsplit("}", 1)[-1]
        if tag == "label" and "name" in element.attrib:
            names.append(element.attrib["name"])
    if not names:
        raise ParseError("No <label name=...> entries found", path=str(path))
    return names


# ---------------------------------------------------------------------------
# ARFF
# ---------------------------------------------------------------------------

@dataclass
class _Attribute:
    name: str
    kind: str  # numeric | nominal
    values: Tuple[str, ...] = ()


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return token[1:-1]
    return token


def _split_attribute(line: str, path: str, lineno: int) -> _Attribute:
    rest = line.strip()[len("@attribute"):].strip()
    if not rest:
        raise ParseError("Attribute declaration without a name", path, lineno)
    if rest[0] in "'\"":
        quote = rest[0]
        end = rest.find(quote, 1)
        if end < 0:
            raise ParseError("Unterminated quoted attribute name", path, lineno)
        name, type_part = rest[1:end], rest[end + 1:].strip()
    else:
        parts = rest.split(None, 1)
        if len(parts) < 2:
            raise ParseError(f"Attribute '{parts[0]}' has no type", path, lineno)
        name, type_part = parts
    if type_part.startswith("{"):
        if not type_part.endswith("}"):
            raise ParseError(f"Unterminated nominal specification for '{name}'", path, lineno)
        values = tuple(_unquote(v) for v in type_part[1:-1].split(",") if v.strip())
        return _Attribute(name, "nominal", values)
    kind = type_part.split()[0].lower()
    if kind in NUMERIC_TYPES:
        return _Attribute(name, "numeric")
    if kind in REJECTED_TYPES:
        raise ParseError(f"Attribute '{name}' has unsupported type '{kind}'", path, lineno)
    raise ParseError(f"Unknown attribute type '{type_part}' for '{name}'", path, lineno)


def _parse_value(token: str, attribute: _Attribute, path: str, lineno: int) -> float:
    token = _unquote(token)
    if token == "?":
        raise ParseError(f"Missing value for attribute '{attribute.name}'", path, lineno)
    if attribute.kind == "nominal":
        if token not in attribute.values:
            raise ParseError(
                f"Value '{token}' not declared for nominal attribute '{attribute.name}'", path, lineno
            )
        # {0,1}-style nominals keep their numeric value; other nominals map to their position
        try:
            return float(token)
        except ValueError:
            return float(attribute.values.index(token))
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"Non-numeric value '{token}' for attribute '{attribute.name}'", path, lineno)


def _parse_row(line: str, attributes: List[_Attribute], path: str, lineno: int) -> np.ndarray:
    row = np.zeros(len(attributes), dtype=np.float64)
    stripped = line.strip()
    if stripped.startswith("{"):
        if not stripped.endswith("}"):
            raise ParseError("Unterminated sparse row", path, lineno)
        body = stripped[1:-1].strip()
        if not body:
            return row
        for pair in body.split(","):
            parts = pair.strip().split(None, 1)
            if len(parts) != 2:
                raise ParseError(f"Malformed sparse entry '{pair.strip()}'", path, lineno)
            try:
                position = int(parts[0])
            except ValueError:
                raise ParseError(f"Bad sparse index '{parts[0]}'", path, lineno)
            if not 0 <= position < len(attributes):
                raise ParseError(f"Sparse index {position} out of range", path, lineno)
            row[position] = _parse_value(parts[1], attributes[position], path, lineno)
        return row
    tokens = stripped.split(",")
    if len(tokens) != len(attributes):
        raise ParseError(
            f"Expected {len(attributes)} values, found {len(tokens)}", path, lineno
        )
    for position, token in enumerate(tokens):
        row[position] = _parse_value(token, attributes[position], path, lineno)
    return row


def _resolve_label_positions(
    attributes: List[_Attribute], src: CorpusSource, path: str
) -> Tuple[List[int], List[str]]:
    if src.xml_path is not None:
        names = load_mulan_xml(src.xml_path)
        lookup = {attribute.name: position for position, attribute in enumerate(attributes)}
        positions = []
        for name in names:
            if name not in lookup:
                raise DatasetError(f"{path}: XML label '{name}' not found among ARFF attributes")
            positions.append(lookup[name])
        return positions, names
    count = int(src.label_count_fallback or 0)
    if count >= len(attributes):
        raise DatasetError(
            f"{path}: label_count_fallback={count} leaves no feature attributes"
        )
    positions = list(range(len(attributes) - count, len(attributes)))
    return positions, [attributes[p].name for p in positions]


def load_arff(src: CorpusSource) -> MultilabelDataset:
    """Parse a MULAN-style ARFF file (dense or sparse rows) into a dataset."""
    if src.path is None:
        raise DatasetError("ARFF source has no path")
    path = str(src.path)
    attributes: List[_Attribute] = []
    rows: List[np.ndarray] = []
    row_lines: List[int] = []
    in_data = False
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.strip()
                if not line or line.startswith("%"):
                    continue
                lowered = line.lower()
                if not in_data:
                    if lowered.startswith("@relation"):
                        continue
                    if lowered.startswith("@attribute"):
                        attributes.append(_split_attribute(line, path, lineno))
                        continue
                    if lowered.startswith("@data"):
                        if not attributes:
                            raise ParseError("@data section before any @attribute", path, lineno)
                        in_data = True
                        continue
                    raise ParseError(f"Unexpected header line '{line[:40]}'", path, lineno)
                rows.append(_parse_row(line, attributes, path, lineno))
                row_lines.append(lineno)
    except FileNotFoundError:
        raise DatasetError(f"Corpus file not found: {path}")
    if not in_data:
        raise ParseError("Missing @data section", path)

    label_positions, label_names = _resolve_label_positions(attributes, src, path)
    label_set = set(label_positions)
    feature_positions = [p for p in range(len(attributes)) if p not in label_set]
    matrix = np.vstack(rows) if rows else np.zeros((0, len(attributes)))

    label_block = matrix[:, label_positions]
    bad = ~np.isin(label_block, (0.0, 1.0))
    if bad.any():
        row, column = np.argwhere(bad)[0]
        raise ParseError(
            f"Label '{label_names[column]}' has non-binary value {label_block[row, column]!r}",
            path,
            row_lines[row],
        )
    labelsets = tuple(Labelset(tuple(np.flatnonzero(r).tolist())) for r in label_block)
    features = matrix[:, feature_positions]
    logger.info(
        f"Loaded ARFF {path}: n={len(labelsets)}, f={len(feature_positions)}, L={len(label_positions)}"
    )
    return MultilabelDataset(features, labelsets, len(label_positions), tuple(label_names))


# ---------------------------------------------------------------------------
# Canonical CSV
# ---------------------------------------------------------------------------

def save_csv(ds: MultilabelDataset, path: Union[str, Path]) -> None:
    """Write ``f0..f{f-1},labels`` rows with round-trip-exact floats.

    A leading ``# label_count=L`` comment preserves L when trailing labels are
    unused; label names, when present, follow as ``# label_names=a;b;c``.
    """
    if ds.label_names is not None:
        for name in ds.label_names:
            if LABEL_NAME_SEPARATOR in name or "\n" in name or "\r" in name:
                raise DatasetError(f"Label name {name!r} cannot be stored in CSV (contains ';' or a line break)")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(ds.features, columns=[f"f{j}" for j in range(ds.f)])
    frame["labels"] = [LABEL_NAME_SEPARATOR.join(str(l) for l in labelset) for labelset in ds.labelsets]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# label_count={ds.label_count}\n")
        if ds.label_names is not None:
            handle.write("# label_names=" + LABEL_NAME_SEPARATOR.join(ds.label_names) + "\n")
        frame.to_csv(handle, index=False, lineterminator="\n")


def _csv_preamble(lines: List[str]) -> Tuple[Optional[int], Optional[Tuple[str, ...]], int]:
    label_count: Optional[int] = None
    label_names: Optional[Tuple[str, ...]] = None
    count = 0
    for line in lines:
        if not line.startswith("#"):
            break
        count += 1
        key, _, value = line[1:].strip().partition("=")
        if key.strip() == "label_count":
            label_count = int(value)
        elif key.strip() == "label_names":
            label_names = tuple(value.split(LABEL_NAME_SEPARATOR)) if value else ()
    return label_count, label_names, count


def load_csv(path: Union[str, Path]) -> MultilabelDataset:
    """Read the canonical CSV format written by :func:`save_csv`."""
    path = str(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            lines = handle.read().splitlines()
    except FileNotFoundError:
        raise DatasetError(f"Corpus file not found: {path}")
    try:
        label_count, label_names, skip = _csv_preamble(lines)
    except ValueError as e:
        raise ParseError(f"Bad label_count comment: {e}", path)

    # 1-based file line of every non-blank row after the comments
    rows = pd.Series(lines[skip:], index=range(skip + 1, len(lines) + 1), dtype=object)
    rows = rows[rows.str.strip() != ""]
    if rows.empty:
        raise ParseError("Missing header row", path)
    header = rows.iloc[0].split(",")
    if header[-1] != "labels" or any(name != f"f{j}" for j, name in enumerate(header[:-1])):
        raise ParseError("Header must be f0..f{f-1},labels", path, int(rows.index[0]))
    widths = rows.str.count(",") + 1
    ragged = widths[widths != len(header)]
    if not ragged.empty:
        raise ParseError(
            f"Ragged row: expected {len(header)} fields, found {int(ragged.iloc[0])}", path, int(ragged.index[0])
        )

    body = pd.read_csv(io.StringIO("\n".join(rows)), dtype=str, keep_default_na=False)
    body.index = rows.index[1:]
    feature_columns = header[:-1]
    if not body.empty:
        numeric = body[feature_columns].apply(pd.to_numeric, errors="coerce")
        bad = numeric.isna().any(axis=1)
        if bad.any():
            raise ParseError("Bad feature value", path, int(bad.idxmax()))
    matrix = body[feature_columns].to_numpy(dtype=object).astype(np.float64).reshape(len(body), len(feature_columns))
    try:
        labelsets = [
            Labelset.from_iterable(int(v) for v in cell.split(LABEL_NAME_SEPARATOR) if v.strip())
            for cell in body["labels"]
        ]
    except ValueError as e:
        raise ParseError(f"Bad label index: {e}", path)
    if label_count is None:
        label_count = max([ls.max_index() for ls in labelsets] + [0]) + 1
    return MultilabelDataset(matrix, tuple(labelsets), label_count, label_names)


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------

def _cluster_labelsets(spec: SyntheticSpec, rng: np.random.Generator) -> Tuple[Labelset, ...]:
    if spec.labelset_per_cluster:
        return spec.labelset_per_cluster
    labelsets = []
    for _ in range(spec.clusters):
        size = int(rng.integers(1, min(3, spec.L) + 1))
        labelsets.append(Labelset.from_iterable(rng.choice(spec.L, size=size, replace=False)))
    return tuple(labelsets)


def gen_synthetic(spec: SyntheticSpec) -> MultilabelDataset:
    """Deterministic Gaussian blobs; instance i belongs to blob ``i mod clusters``."""
    rng = np.random.default_rng(spec.seed)
    if spec.centers is not None:
        centers = np.array(spec.centers, dtype=np.float64)
    else:
        centers = rng.uniform(0.0, spec.center_scale, size=(spec.clusters, spec.f))
    cluster_labelsets = _cluster_labelsets(spec, rng)
    blob = np.arange(spec.n) % spec.clusters
    features = centers[blob] + rng.normal(0.0, 1.0, size=(spec.n, spec.f)) * spec.noise_sigma
    labelsets = []
    for i in range(spec.n):
        labelset = cluster_labelsets[blob[i]]
        if spec.extra_label_rate > 0:
            extra = np.flatnonzero(rng.random(spec.L) < spec.extra_label_rate)
            labelset = Labelset.from_iterable(list(labelset) + extra.tolist())
        labelsets.append(labelset)
    return MultilabelDataset(features, tuple(labelsets), spec.L)


# ---------------------------------------------------------------------------
# Corpus resolution
# ---------------------------------------------------------------------------

def load_source(src: CorpusSource) -> MultilabelDataset:
    if src.format == "arff":
        return load_arff(src)
    if src.format == "csv":
        if src.path is None:
            raise DatasetError("CSV source has no path")
        return load_csv(src.path)
    raise DatasetError("Synthetic corpora are resolved through load_corpus")


def load_corpus(entry: CorpusEntry) -> CorpusSplit:
    """Resolve a corpus entry into its train and test partitions."""
    if entry.synthetic is not None:
        spec = entry.synthetic
        combined = SyntheticSpec(
            n=spec.n + entry.test_n,
            f=spec.f,
            L=spec.L,
            clusters=spec.clusters,
            labelset_per_cluster=spec.labelset_per_cluster,
            noise_sigma=spec.noise_sigma,
            seed=spec.seed,
            centers=spec.centers,
            center_scale=spec.center_scale,
            extra_label_rate=spec.extra_label_rate,
        )
        full = gen_synthetic(combined)
        train = full.subset(range(spec.n))
        test = full.subset(range(spec.n, spec.n + entry.test_n))
        return CorpusSplit(entry.name, train, test, entry.domain or "synthetic")
    train = load_source(entry.train)
    test = load_source(entry.test)
    return CorpusSplit(entry.name, train, test, entry.domain)


def _resolve_path(base_dir: Path, value) -> str:
    candidate = Path(str(value))
    return str(candidate if candidate.is_absolute() else base_dir / candidate)


def source_from_mapping(data: Mapping, key: str, base_dir: Path) -> CorpusSource:
    """Build a CorpusSource for ``key`` ('train' or 'test') from a config mapping."""
    raw = data.get(key)
    if raw is None:
        raise DatasetError(f"Corpus '{data.get('name')}' is missing '{key}'")
    fmt = str(data.get("format") or ("csv" if str(raw).lower().endswith(".csv") else "arff"))
    xml = data.get("xml")
    labels = data.get("labels")
    return CorpusSource(
        path=_resolve_path(base_dir, raw),
        xml_path=None if xml is None else _resolve_path(base_dir, xml),
        label_count_fallback=None if labels is None else int(labels),
        format=fmt,
    )


def entry_from_mapping(data: Mapping, base_dir: Path) -> CorpusEntry:
    """Turn one ``corpora:`` item of an experiment file into a CorpusEntry."""
    if not isinstance(data, Mapping) or "name" not in data:
        raise DatasetError(f"Corpus entries need a 'name': {data!r}")
    name = str(data["name"])
    if "synthetic" in data:
        raw: Dict = dict(data["synthetic"] or {})
        test_n = int(raw.pop("test_n", data.get("test_n", 0)))
        labelsets = tuple(Labelset.from_iterable(ls) for ls in raw.pop("labelsets", ()) or ())
        centers = raw.pop("centers", None)
        try:
            spec = SyntheticSpec(
                labelset_per_cluster=labelsets,
                centers=None if centers is None else tuple(tuple(c) for c in centers),
                **raw,
            )
        except TypeError as e:
            raise DatasetError(f"Corpus '{name}': bad synthetic parameters ({e})") from e
        return CorpusEntry(name=name, synthetic=spec, test_n=test_n, domain=data.get("domain"))
    return CorpusEntry(
        name=name,
        train=source_from_mapping(data, "train", base_dir),
        test=source_from_mapping(data, "test", base_dir),
        domain=data.get("domain"),
    )


def sources_from_paths(
    train: str,
    test: Optional[str] = None,
    xml: Optional[str] = None,
    labels: Optional[int] = None,
) -> Tuple[CorpusSource, Optional[CorpusSource]]:
    """CorpusSources for command-line use (``describe``, ``reduce``, ``noise``)."""

    def make(path: str) -> CorpusSource:
        if path.lower().endswith(".csv"):
            return CorpusSource(path=path, format="csv")
        if xml is None and labels is None:
            raise DatasetError("ARFF corpora need --xml or --labels")
        return CorpusSource(path=path, xml_path=xml, label_count_fallback=labels, format="arff")

    return make(train), (make(test) if test else None)

"""Fitness dataset container, CSV ingestion, normalization, and the
percentile/mutation-gap difficulty filter."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seqs import Vocabulary, detokenize, min_distance_to_set, tokenize


class DataFormatError(ValueError):
    """Malformed data file (bad header, ragged rows, non-numeric fitness...)."""


@dataclass(frozen=True)
class FitnessRecord:
    sequence: np.ndarray
    raw_fitness: float


@dataclass(frozen=True)
class FitnessNormalizer:
    """Affine map sending y_min -> 0 and y_max -> 1. Values outside the range
    map outside [0, 1]; there is deliberately no clipping."""

    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.y_min < self.y_max):
            raise ValueError(f"need y_min < y_max, got [{self.y_min}, {self.y_max}]")

    def normalize(self, y):
        return (np.asarray(y, dtype=np.float64) - self.y_min) / (self.y_max - self.y_min)

    def denormalize(self, y):
        return np.asarray(y, dtype=np.float64) * (self.y_max - self.y_min) + self.y_min


@dataclass(frozen=True)
class Dataset:
    """Fixed-length sequence/fitness pairs.

    y_min/y_max always describe the FULL reference set the data was drawn
    from, so subsets keep normalizing with the parent's extremes.
    """

    sequences: np.ndarray  # (n, d) int64
    fitness: np.ndarray    # (n,) float64, raw scale
    y_min: float
    y_max: float

    def __post_init__(self):
        seqs = np.asarray(self.sequences, dtype=np.int64)
        fit = np.asarray(self.fitness, dtype=np.float64)
        if seqs.ndim != 2:
            raise ValueError("sequences must form an (n, d) matrix")
        if fit.shape != (seqs.shape[0],):
            raise ValueError("fitness length must match number of sequences")
        if fit.size and not np.isfinite(fit).all():
            raise ValueError("fitness values must be finite")
        if not (self.y_min < self.y_max):
            raise ValueError("need y_min < y_max")
        object.__setattr__(self, "sequences", seqs)
        object.__setattr__(self, "fitness", fit)
        self.sequences.setflags(write=False)
        self.fitness.setflags(write=False)

    @property
    def n(self) -> int:
        return self.sequences.shape[0]

    @property
    def length(self) -> int:
        return self.sequences.shape[1]

    def record(self, i: int) -> FitnessRecord:
        return FitnessRecord(self.sequences[i], float(self.fitness[i]))

    def records(self) -> list[FitnessRecord]:
        return [self.record(i) for i in range(self.n)]

    def normalizer(self) -> FitnessNormalizer:
        return FitnessNormalizer(self.y_min, self.y_max)

    def normalized_fitness(self) -> np.ndarray:
        return self.normalizer().normalize(self.fitness)

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(self.sequences[indices].copy(), self.fitness[indices].copy(),
                       self.y_min, self.y_max)

    @classmethod
    def from_arrays(cls, sequences, fitness) -> "Dataset":
        """Build a full reference set whose extremes define the normalizer."""
        fitness = np.asarray(fitness, dtype=np.float64)
        return cls(np.asarray(sequences), fitness,
                   float(fitness.min()), float(fitness.max()))


def _read_range_file(path: Path) -> tuple[float, float]:
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep or key not in ("y_min", "y_max"):
            raise DataFormatError(f"{path}: line {lineno}: expected 'y_min=<real>' or 'y_max=<real>'")
        try:
            values[key] = float(val)
        except ValueError:
            raise DataFormatError(f"{path}: line {lineno}: non-numeric value {val.strip()!r}") from None
    if set(values) != {"y_min", "y_max"}:
        raise DataFormatError(f"{path}: range file must declare both y_min and y_max")
    return values["y_min"], values["y_max"]


def load_csv(path, vocab: Vocabulary, range_file=None) -> Dataset:
    """Load a `sequence,fitness` CSV. If `range_file` is given, y_min/y_max
    come from that sidecar declaration instead of the file's own extremes."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if [h.strip() for h in header] != ["sequence", "fitness"]:
            raise DataFormatError(f"{path}: header must be 'sequence,fitness', got {header!r}")
        seqs, fits = [], []
        length = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataFormatError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            text, fit_text = row[0].strip(), row[1].strip()
            try:
                tokens = tokenize(text, vocab)
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
            if length is None:
                length = tokens.size
            elif tokens.size != length:
                raise DataFormatError(
                    f"{path}: line {lineno}: sequence length {tokens.size} != {length} seen earlier")
            try:
                fits.append(float(fit_text))
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: non-numeric fitness {fit_text!r}") from None
            seqs.append(tokens)
    if not seqs:
        raise DataFormatError(f"{path}: no records")
    sequences = np.stack(seqs)
    fitness = np.asarray(fits, dtype=np.float64)
    if not np.isfinite(fitness).all():
        raise DataFormatError(f"{path}: non-finite fitness value")
    if range_file is not None:
        y_min, y_max = _read_range_file(Path(range_file))
    else:
        y_min, y_max = float(fitness.min()), float(fitness.max())
    return Dataset(sequences, fitness, y_min, y_max)


def write_csv(dataset: Dataset, path, vocab: Vocabulary) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sequence", "fitness"])
        for i in range(dataset.n):
            writer.writerow([detokenize(dataset.sequences[i], vocab),
                             repr(float(dataset.fitness[i]))])


def write_range_file(dataset: Dataset, path) -> None:
    Path(path).write_text(f"y_min={dataset.y_min!r}\ny_max={dataset.y_max!r}\n")


def difficulty_filter(full: Dataset, percentile_range, gap: int) -> Dataset:
    """Select a training subset of limited difficulty.

    Keeps records whose fitness falls in the given percentile band
    (a (low, high) pair, or a scalar upper bound meaning "< upper") AND whose
    minimum edit distance to every member of the full set's 99th-percentile
    top group is at least `gap` mutations.
    """
    if gap < 0:
        raise ValueError("gap must be >= 0")
    fitness = full.fitness
    if np.isscalar(percentile_range):
        hi_val = np.percentile(fitness, float(percentile_range))
        in_band = fitness < hi_val
        band_desc = f"<{percentile_range}"
    else:
        low, high = percentile_range
        if not (0 <= low < high <= 100):
            raise ValueError(f"bad percentile range ({low}, {high})")
        lo_val, hi_val = np.percentile(fitness, [float(low), float(high)])
        in_band = (fitness >= lo_val) & (fitness <= hi_val)
        band_desc = f"{low}-{high}"
    candidates = np.flatnonzero(in_band)
    if gap > 0 and candidates.size:
        top = full.sequences[fitness >= np.percentile(fitness, 99.0)]
        dists = min_distance_to_set(full.sequences[candidates], top)
        candidates = candidates[dists >= gap]
    if candidates.size == 0:
        raise ValueError(
            f"difficulty filter (percentiles {band_desc}, gap {gap}) selected nothing; "
            "widen the percentile band or lower the gap")
    return full.subset(candidates)

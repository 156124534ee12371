"""One-dimensional Kohonen string trained on-line over binary weekly profiles."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np

from .data import N_SLOTS, Dataset
from .errors import ConfigError

# floor on the neighbourhood radius; with radius 0 only the winner moves
_RADIUS_EPS = 1e-12


@dataclass(frozen=True)
class SomConfig:
    units: int = 10
    epochs: int = 100
    lr_start: float = 0.5
    lr_end: float = 0.01
    radius_start: float = 5.0
    radius_end: float = 0.5
    seed: int = 0
    init: str = "sample"

    def __post_init__(self):
        if self.units < 2:
            raise ConfigError("a string needs at least 2 units")
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if not 0 < self.lr_end <= self.lr_start <= 1:
            raise ConfigError("learning rates must satisfy 0 < lr_end <= lr_start <= 1")
        if not 0 <= self.radius_end <= self.radius_start:
            raise ConfigError("radii must satisfy 0 <= radius_end <= radius_start")
        if self.init not in ("sample", "uniform"):
            raise ConfigError(f"unknown init mode {self.init!r}")

    def echo(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())


@dataclass
class SomModel:
    code_vectors: np.ndarray
    config: SomConfig
    final_quantization_error: float = 0.0

    @property
    def units(self) -> int:
        return len(self.code_vectors)


@dataclass
class Assignment:
    unit_of: Dict[str, int]
    class_sizes: np.ndarray

    def units_in_order(self, person_ids) -> np.ndarray:
        return np.array([self.unit_of[p] for p in person_ids], dtype=int)


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.matrix
    return np.atleast_2d(np.asarray(data, dtype=float))


def init_codebook(dataset, config: SomConfig, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Initial code vectors.

    ``sample`` picks ``units`` persons with pairwise distinct profiles;
    ``uniform`` draws every component from U[0, 1].
    """
    X = _as_matrix(dataset)
    if len(X) == 0:
        raise ConfigError("cannot initialise a codebook from an empty dataset")
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    if config.init == "uniform":
        return rng.random((config.units, X.shape[1]))

    chosen, seen = [], set()
    for i in rng.permutation(len(X)):
        key = X[i].tobytes()
        if key in seen:
            continue
        seen.add(key)
        chosen.append(X[i])
        if len(chosen) == config.units:
            return np.array(chosen)
    raise ConfigError(
        f"sample init needs {config.units} distinct profiles, dataset has {len(seen)}"
    )


def best_matching_unit(code_vectors, profile) -> int:
    """Index of the nearest code vector (squared Euclidean); lowest index wins ties."""
    C = np.asarray(code_vectors, dtype=float)
    d2 = ((C - np.asarray(profile, dtype=float)) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def neighbourhood(distance, radius):
    r = max(radius, _RADIUS_EPS)
    return np.exp(-np.asarray(distance, dtype=float) ** 2 / (2.0 * r * r))


def _schedule(start, end, step, total):
    if total <= 1:
        return start
    return start + (end - start) * step / (total - 1)


def train(dataset, config: SomConfig) -> SomModel:
    """Stochastic on-line training of the string.

    Each epoch visits every profile once in a freshly shuffled order. After
    each visit every unit moves toward the profile by
    ``lr(t) * h(|j - winner|, radius(t))``, with both schedules linear in the
    global step ``t``.
    """
    X = _as_matrix(dataset)
    rng = np.random.default_rng(config.seed)
    C = init_codebook(X, config, rng)
    n = len(X)
    total = config.epochs * n
    grid = np.arange(config.units)

    t = 0
    for _ in range(config.epochs):
        for i in rng.permutation(n):
            x = X[i]
            diff = x - C
            winner = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
            lr = _schedule(config.lr_start, config.lr_end, t, total)
            radius = _schedule(config.radius_start, config.radius_end, t, total)
            step = lr * neighbourhood(grid - winner, radius)
            C += step[:, None] * diff
            t += 1
    # rounding can leave components a few ulp outside the hypercube
    np.clip(C, 0.0, 1.0, out=C)
    model = SomModel(C, config)
    model.final_quantization_error = quantization_error(model, X)
    return model


def _winners(C, X) -> np.ndarray:
    # |x - c|^2 expanded would lose exactness; evaluate differences directly
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def assign_all(model: SomModel, dataset: Dataset) -> Assignment:
    X = dataset.matrix
    winners = _winners(model.code_vectors, X) if len(X) else np.zeros(0, dtype=int)
    sizes = np.bincount(winners, minlength=model.units)
    return Assignment(dict(zip(dataset.person_ids, winners.tolist())), sizes)


def quantization_error(model: SomModel, dataset) -> float:
    """Mean squared distance from each profile to its winning code vector."""
    X = _as_matrix(dataset)
    if len(X) == 0:
        return 0.0
    C = model.code_vectors
    w = _winners(C, X)
    return float(((X - C[w]) ** 2).sum(axis=1).mean())


def write_model(model: SomModel, path, config_path=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit"] + [f"c{i}" for i in range(model.code_vectors.shape[1])])
        for u, row in enumerate(model.code_vectors):
            w.writerow([u] + [repr(float(v)) for v in row])
    if config_path is not None:
        with open(config_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(model.config.echo())
            fh.write(f"final_quantization_error = {model.final_quantization_error!r}\n")


def read_model(path, config_path=None) -> SomModel:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [[float(v) for v in row[1:]] for row in reader if row]
    C = np.array(rows)
    if C.ndim != 2 or C.shape[1] != N_SLOTS:
        raise ValueError(f"{path}: expected {N_SLOTS} components per code vector")
    config, qe = SomConfig(units=max(len(C), 2)), 0.0
    if config_path is not None:
        fields, qe = _read_echo(config_path)
        config = SomConfig(**fields)
    return SomModel(C, config, qe)


def _read_echo(path):
    types = {f: type(v) for f, v in asdict(SomConfig()).items()}
    fields, qe = {}, 0.0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in types:
                fields[key] = types[key](value)
            elif key == "final_quantization_error":
                qe = float(value)
    return fields, qe

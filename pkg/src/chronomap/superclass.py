"""Agglomerate the string's code vectors into superclasses.

Code vectors are weighted by their class sizes. The default Ward linkage
makes each merge cost the increase in within-group inertia, so the costs of
all merges add up to the total inertia of the weighted code vectors.
"""

from __future__ import annotations

import csv
import logging
import string
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)

LINKAGES = ("ward", "single", "complete")


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    cost: float


@dataclass
class Dendrogram:
    """Merge history over the non-empty units.

    Cluster ids follow the usual convention: ``0..n-1`` are the leaves
    (positions in ``leaf_units``) and merge ``s`` creates cluster ``n + s``.
    """

    leaf_units: List[int]
    weights: np.ndarray
    merges: List[Merge]
    linkage: str = "ward"
    dropped_units: List[int] = field(default_factory=list)

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_units)

    def members(self, cluster: int) -> List[int]:
        """Leaf positions below ``cluster``."""
        n = self.n_leaves
        stack, out = [cluster], []
        while stack:
            c = stack.pop()
            if c < n:
                out.append(c)
            else:
                m = self.merges[c - n]
                stack.extend((m.left, m.right))
        return sorted(out)


@dataclass
class SuperclassPartition:
    label_of_unit: Dict[int, str]
    k: int
    explained_variance: float

    def groups(self) -> Dict[str, List[int]]:
        out: Dict[str, List[int]] = {}
        for unit in sorted(self.label_of_unit):
            out.setdefault(self.label_of_unit[unit], []).append(unit)
        return dict(sorted(out.items(), key=lambda kv: label_key(kv[0])))

    @property
    def labels(self) -> List[str]:
        return list(self.groups())


def superclass_label(i: int) -> str:
    """0 -> A, 25 -> Z, 26 -> AA, ..."""
    letters = string.ascii_uppercase
    out = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        out = letters[r] + out
    return out


def label_key(label: str):
    return (len(label), label)


def _pair_costs(X, w, linkage):
    diff = X[:, None, :] - X[None, :, :]
    d2 = (diff ** 2).sum(axis=2)
    if linkage == "ward":
        return np.outer(w, w) / np.add.outer(w, w) * d2
    return np.sqrt(d2)


def ward_cluster_codebook(code_vectors, sizes, linkage: str = "ward") -> Dendrogram:
    """Agglomerate weighted code vectors with Lance-Williams updates.

    Units of size 0 are left out and listed in ``dropped_units``. Among pairs
    with the minimum cost, the one with the smallest ``(left, right)`` cluster
    ids merges first.
    """
    if linkage not in LINKAGES:
        raise ConfigError(f"unknown linkage {linkage!r}")
    C = np.asarray(code_vectors, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    keep = [u for u in range(len(C)) if sizes[u] > 0]
    dropped = [u for u in range(len(C)) if sizes[u] <= 0]
    if not keep:
        raise ConfigError("every unit is empty; nothing to cluster")
    if dropped:
        log.warning("dropping empty units %s before clustering", dropped)

    X, w = C[keep], sizes[keep]
    n = len(keep)
    D = _pair_costs(X, w, linkage)
    # active cluster id -> (row in D, weight)
    row_of = {i: i for i in range(n)}
    weight = {i: w[i] for i in range(n)}
    merges = []
    for step in range(n - 1):
        ids = sorted(row_of)
        best = None
        for a_pos, a in enumerate(ids):
            for b in ids[a_pos + 1:]:
                cand = (D[row_of[a], row_of[b]], a, b)
                if best is None or cand < best:
                    best = cand
        cost, a, b = best
        ra, rb = row_of.pop(a), row_of.pop(b)
        wa, wb = weight.pop(a), weight.pop(b)
        for c, rc in row_of.items():
            wc = weight[c]
            if linkage == "ward":
                new = ((wa + wc) * D[ra, rc] + (wb + wc) * D[rb, rc] - wc * cost) / (wa + wb + wc)
            elif linkage == "single":
                new = min(D[ra, rc], D[rb, rc])
            else:
                new = max(D[ra, rc], D[rb, rc])
            D[ra, rc] = D[rc, ra] = new
        new_id = n + step
        row_of[new_id] = ra
        weight[new_id] = wa + wb
        merges.append(Merge(a, b, float(max(cost, 0.0))))
    return Dendrogram(keep, w, merges, linkage, dropped)


def _weighted_mean(X, w):
    if len(X) == 1:
        return X[0]
    return (w[:, None] * X).sum(axis=0) / w.sum()


def _inertia(X, w, centre) -> float:
    return float((w * ((X - centre) ** 2).sum(axis=1)).sum())


def _variance_ratio(X, w, groups) -> float:
    """Between-group inertia over total inertia for the index ``groups``."""
    centre = _weighted_mean(X, w)
    total = _inertia(X, w, centre)
    means = np.array([_weighted_mean(X[g], w[g]) for g in groups])
    gw = np.array([w[g].sum() for g in groups])
    between = _inertia(means, gw, centre)
    if total == 0.0:
        return 1.0
    return min(max(between / total, 0.0), 1.0)


def explained_variance(partition: SuperclassPartition, code_vectors, sizes) -> float:
    """Share of the weighted code-vector inertia explained by the partition."""
    C = np.asarray(code_vectors, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    units = sorted(partition.label_of_unit)
    pos = {u: i for i, u in enumerate(units)}
    groups = [[pos[u] for u in g] for g in partition.groups().values()]
    return _variance_ratio(C[units], sizes[units], groups)


def individual_explained_variance(partition: SuperclassPartition, profiles, units_of_persons) -> float:
    """Same ratio computed over the individual profiles instead of code vectors."""
    X = np.asarray(profiles, dtype=float)
    labels = [partition.label_of_unit[int(u)] for u in units_of_persons]
    by_label: Dict[str, List[int]] = {}
    for i, lab in enumerate(labels):
        by_label.setdefault(lab, []).append(i)
    groups = [by_label[k] for k in sorted(by_label, key=label_key)]
    return _variance_ratio(X, np.ones(len(X)), groups)


def _partition_from_groups(dendro: Dendrogram, leaf_groups) -> Dict[int, str]:
    unit_groups = sorted([sorted(dendro.leaf_units[i] for i in g) for g in leaf_groups])
    return {u: superclass_label(i) for i, g in enumerate(unit_groups) for u in g}


def cut_to_k(dendrogram: Dendrogram, k: int, code_vectors=None, sizes=None) -> SuperclassPartition:
    """Undo the last ``k - 1`` merges.

    Groups are labelled A, B, C, ... in order of their smallest unit index.
    Explained variance needs the code vectors; without them it is left NaN.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ConfigError(f"k={k} outside 1..{n}")
    roots = set(range(n))
    for s, m in enumerate(dendrogram.merges[: n - k]):
        roots -= {m.left, m.right}
        roots.add(n + s)
    leaf_groups = [dendrogram.members(r) for r in roots]
    partition = SuperclassPartition(_partition_from_groups(dendrogram, leaf_groups), k, float("nan"))
    if code_vectors is not None:
        w = sizes if sizes is not None else _full_sizes(dendrogram, len(code_vectors))
        partition.explained_variance = explained_variance(partition, code_vectors, w)
    return partition


def _full_sizes(dendro, units):
    out = np.zeros(units)
    out[dendro.leaf_units] = dendro.weights
    return out


def cut_by_variance(dendrogram: Dendrogram, threshold: float, code_vectors, sizes) -> SuperclassPartition:
    """Smallest k whose explained variance reaches ``threshold``."""
    for k in range(1, dendrogram.n_leaves + 1):
        part = cut_to_k(dendrogram, k, code_vectors, sizes)
        if part.explained_variance >= threshold:
            return part
    return part


def contiguity_check(partition: SuperclassPartition) -> Tuple[bool, List[str]]:
    """Whether each superclass is an interval of unit indices.

    Units dropped before clustering (empty classes) do not break an interval.
    Returns the flag and the labels of non-contiguous superclasses.
    """
    units = sorted(partition.label_of_unit)
    rank = {u: i for i, u in enumerate(units)}
    bad = []
    for label, members in partition.groups().items():
        r = [rank[u] for u in members]
        if max(r) - min(r) + 1 != len(r):
            bad.append(label)
    return not bad, bad


def write_dendrogram(dendro: Dendrogram, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "left", "right", "cost"])
        for s, m in enumerate(dendro.merges):
            w.writerow([s, m.left, m.right, repr(m.cost)])


def write_partition(partition: SuperclassPartition, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit", "superclass"])
        for unit in sorted(partition.label_of_unit):
            w.writerow([unit, partition.label_of_unit[unit]])


def person_labels(partition: SuperclassPartition, units_of_persons: Sequence[int]) -> List[str]:
    return [partition.label_of_unit[int(u)] for u in units_of_persons]

"""Independent oracles shared by the tests.

Everything here recomputes from first principles (cofactor expansion,
exhaustive enumeration, plain Python loops) so the oracles share no code
path with the library implementations they check.
"""
from __future__ import annotations

import itertools

import numpy as np


def cofactor_det(m) -> float:
    """Determinant by recursive cofactor expansion along the first row."""
    m = [[float(x) for x in row] for row in np.asarray(m)]
    n = len(m)
    if n == 1:
        return m[0][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += (-1.0) ** j * m[0][j] * cofactor_det(minor)
    return total


def plain_score(labels, a_tilde) -> float:
    """|det| of the cluster aggregate computed with plain Python sums."""
    a = np.asarray(a_tilde, dtype=float)
    n, k = a.shape
    agg = [[0.0] * k for _ in range(k)]
    for i in range(n):
        c = int(labels[i])
        for j in range(k):
            agg[c][j] += a[i, j]
    return abs(cofactor_det(agg))


def enumerate_best(a_tilde):
    """Exhaustive maximizer of plain_score; returns (score, labels)."""
    a = np.asarray(a_tilde, dtype=float)
    n, k = a.shape
    best_score, best_labels = -1.0, None
    for labels in itertools.product(range(k), repeat=n):
        s = plain_score(labels, a)
        if s > best_score:
            best_score, best_labels = s, labels
    return best_score, np.array(best_labels)


def enumerate_optimal_set(a_tilde, rel_tol=1e-9):
    """All canonical label partitions within rel_tol of the maximum score."""
    a = np.asarray(a_tilde, dtype=float)
    n, k = a.shape
    scored = []
    best = -1.0
    for labels in itertools.product(range(k), repeat=n):
        s = plain_score(labels, a)
        best = max(best, s)
        scored.append((s, labels))
    keep = set()
    for s, labels in scored:
        if s >= best * (1.0 - rel_tol):
            keep.add(canonical_label_key(labels))
    return keep, best


def canonical_label_key(labels) -> tuple[int, ...]:
    """Relabel clusters by (size desc, first member asc); hashable key."""
    labels = [int(x) for x in labels]
    clusters = sorted(set(labels))
    sizes = {c: labels.count(c) for c in clusters}
    firsts = {c: labels.index(c) for c in clusters}
    order = sorted(clusters, key=lambda c: (-sizes[c], firsts[c]))
    remap = {c: i for i, c in enumerate(order)}
    return tuple(remap[c] for c in labels)


def single_move_gain(labels, a_tilde) -> float:
    """Largest score improvement from moving one row to another cluster."""
    a = np.asarray(a_tilde, dtype=float)
    n, k = a.shape
    base = plain_score(labels, a)
    best_gain = 0.0
    for i in range(n):
        for c in range(k):
            if c == labels[i]:
                continue
            trial = list(labels)
            trial[i] = c
            best_gain = max(best_gain, plain_score(trial, a) - base)
    return best_gain


def random_invertible(rng, k, min_abs_det=0.05):
    """Random square matrix with comfortably nonzero determinant."""
    while True:
        m = rng.normal(size=(k, k))
        if abs(np.linalg.det(m)) >= min_abs_det:
            return m


def random_full_labels(rng, n, k):
    """Random labels hitting every cluster at least once."""
    while True:
        labels = rng.integers(0, k, size=n)
        if len(set(labels.tolist())) == k:
            return labels


def random_row_stochastic(rng, k, min_abs_det=1e-4):
    """Random row-stochastic square matrix, invertible."""
    while True:
        m = rng.dirichlet(np.ones(k), size=k)
        if abs(np.linalg.det(m)) >= min_abs_det:
            return m

"""Determinant-maximization clustering.

The objective: for data rows A, append an all-ones column, keep a maximal
independent set of columns (the working matrix), and score a one-hot
assignment C by |det(C^T . working)|.  The score equals the volume of the
simplex spanned by the cluster means times the product of cluster sizes, and
is relatively invariant under invertible affine maps applied to every row.

Solvers:

* ``solve_exact_1d``  -- closed form: split above/below the mean.
* ``solve_exact_2d``  -- exact wedge enumeration: every optimum partitions the
  plane into angular sectors around the global mean, so sweeping all cut
  triples of the angular order finds the global maximum in O(n^3).
* ``k_cofactors``     -- alternating local search (assign by row argmax of
  A~ D, refit D as the inverse cluster aggregate), Lloyd-style.
* ``brute_force``     -- exhaustive oracle for small instances.
* ``dmi_cluster``     -- front door that dispatches between all of the above.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

from . import linalg
from .errors import (
    AllEqualError,
    DegenerateInputError,
    DegenerateRankError,
    ShapeMismatchError,
    SingularIterationError,
    SingularMatrixError,
    TooLargeError,
)

BRUTE_FORCE_CAP = 2_000_000


# ---------------------------------------------------------------------------
# assignments
# ---------------------------------------------------------------------------

def labels_to_assignment(labels, k: int) -> np.ndarray:
    """One-hot (n, k) matrix from an integer label vector."""
    labels = np.asarray(labels, dtype=np.intp)
    if labels.ndim != 1:
        raise ValueError("labels must be 1-dimensional")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels out of range for k={k}")
    out = np.zeros((labels.size, k))
    out[np.arange(labels.size), labels] = 1.0
    return out


def assignment_labels(c: np.ndarray) -> np.ndarray:
    """Label vector (n,) from a one-hot assignment."""
    return np.argmax(np.asarray(c), axis=1)


def check_assignment(c, k: int | None = None) -> np.ndarray:
    """Validate a 0-1 matrix with exactly one 1 per row."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("assignment must be 2-dimensional")
    if k is not None and c.shape[1] != k:
        raise ShapeMismatchError(f"assignment has {c.shape[1]} columns, expected {k}")
    if not np.all((c == 0.0) | (c == 1.0)):
        raise ValueError("assignment entries must be 0 or 1")
    if not np.all(c.sum(axis=1) == 1.0):
        raise ValueError("every assignment row must have exactly one 1")
    return c


def canonicalize_assignment(c) -> tuple[np.ndarray, tuple[int, ...]]:
    """Reorder cluster columns into canonical order.

    Columns are sorted by (size descending, then smallest member row index),
    which makes "equal up to column permutation" a plain array equality.
    Returns the reordered assignment and the applied column order.
    """
    c = check_assignment(c)
    n, k = c.shape
    sizes = c.sum(axis=0)
    first = np.full(k, n, dtype=np.intp)
    labels = assignment_labels(c)
    for i in range(n - 1, -1, -1):
        first[labels[i]] = i
    order = sorted(range(k), key=lambda j: (-sizes[j], first[j]))
    return c[:, order], tuple(order)


def same_up_to_permutation(c1, c2) -> bool:
    """True when two assignments are identical after canonical relabeling."""
    a, _ = canonicalize_assignment(c1)
    b, _ = canonicalize_assignment(c2)
    return a.shape == b.shape and np.array_equal(a, b)


# ---------------------------------------------------------------------------
# configuration and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    """Every under-specified knob of the solvers, surfaced.

    solver: "auto" dispatches by effective dimension; "exact" insists on a
    provably optimal answer (closed form or brute force) and errors when
    neither fits the budget; "kcofactors" always runs the heuristic;
    "brute" always enumerates.
    """

    solver: str = "auto"
    restarts: int = 16
    seed: int = 0
    max_iters: int = 500
    rank_tol: float | None = None
    singular_tol: float = linalg.SINGULAR_TOL
    brute_cap: int = BRUTE_FORCE_CAP

    def __post_init__(self):
        if self.solver not in ("auto", "exact", "kcofactors", "brute"):
            raise ValueError(f"unknown solver mode {self.solver!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.rank_tol is not None and self.rank_tol <= 0:
            raise ValueError("rank_tol must be positive")


@dataclass(frozen=True)
class ClusteringResult:
    """Output of a clustering run.

    assignment is one-hot (n, k).  partition is the inverse of
    assignment^T @ working and is None when the score is zero.  solver_tag
    records which path produced the result; details carries per-solver
    metadata (iterations, termination reason, restart statistics).
    """

    k: int
    picked_columns: tuple[int, ...]
    assignment: np.ndarray
    partition: np.ndarray | None
    score: float
    solver_tag: str
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def labels(self) -> np.ndarray:
        return assignment_labels(self.assignment)


def _build_result(
    labels: np.ndarray,
    a_tilde: np.ndarray,
    picked: tuple[int, ...],
    tag: str,
    details: dict[str, Any] | None = None,
    canonical: bool = True,
    singular_tol: float = linalg.SINGULAR_TOL,
) -> ClusteringResult:
    k = a_tilde.shape[1]
    c = labels_to_assignment(labels, k)
    if canonical:
        c, _ = canonicalize_assignment(c)
    score = dmi_score(c, a_tilde)
    partition = None
    if score > 0.0:
        try:
            partition = linalg.inverse(c.T @ a_tilde, singular_tol)
        except SingularMatrixError:
            partition = None
    return ClusteringResult(
        k=k,
        picked_columns=picked,
        assignment=c,
        partition=partition,
        score=score,
        solver_tag=tag,
        details=details or {},
    )


# ---------------------------------------------------------------------------
# objective
# ---------------------------------------------------------------------------

PIPELINE_RANK_TOL_FACTOR = 1e-7


def augment_and_pick(
    a, rank_tol: float | None = None
) -> tuple[np.ndarray, tuple[int, ...], int]:
    """Append the all-ones column, then keep a maximal independent column set.

    Returns (working matrix, picked column indices into [A | 1], k = rank).
    The greedy left-to-right pick means the ones column is dropped whenever
    the data columns already span it (as for row-stochastic inputs).

    The default tolerance here is 1e-7 times the largest entry, looser than
    the bare rank routine's: clustering inputs are often published to ~8
    significant digits, and a near-dependency at that scale carries no
    cluster structure, only rounding noise.
    """
    a = linalg.as_matrix(a)
    aug = np.hstack([a, np.ones((a.shape[0], 1))])
    if rank_tol is None:
        rank_tol = PIPELINE_RANK_TOL_FACTOR * float(np.max(np.abs(aug)))
    k = linalg.numerical_rank(aug, rank_tol)
    if k == 0:
        raise DegenerateInputError("augmented matrix has rank 0")
    cols = linalg.pick_independent_columns(aug, k, rank_tol)
    return aug[:, cols], tuple(cols), k


def dmi_score(c, a_tilde) -> float:
    """|det(C^T A~)|; zero whenever some cluster is empty."""
    a_tilde = linalg.as_matrix(a_tilde, "working matrix")
    c = check_assignment(c)
    if c.shape != a_tilde.shape:
        raise ShapeMismatchError(
            f"assignment shape {c.shape} does not match working matrix "
            f"shape {a_tilde.shape}"
        )
    if np.any(c.sum(axis=0) == 0.0):
        return 0.0
    return abs(linalg.determinant(c.T @ a_tilde))


# ---------------------------------------------------------------------------
# exact solvers
# ---------------------------------------------------------------------------

def _mean_split_labels(values: np.ndarray) -> np.ndarray:
    """Cluster 0 above the mean, cluster 1 at or below it."""
    mean = values.mean()
    return np.where(values > mean, 0, 1).astype(np.intp)


def _sign_split_labels(a_tilde: np.ndarray) -> np.ndarray:
    """Exact two-cluster labels for an n x 2 working matrix.

    The single optimal boundary is the line through the origin and the mean
    row, so the split is by the sign of the 2d cross product with the mean.
    For a working matrix of the form [values | 1] this is exactly the
    above/below-the-mean split.
    """
    abar = a_tilde.mean(axis=0)
    t = a_tilde[:, 0] * abar[1] - a_tilde[:, 1] * abar[0]
    return np.where(t > 0.0, 0, 1).astype(np.intp)


def solve_exact_1d(values) -> ClusteringResult:
    """Exact two-cluster split of real numbers: above vs. not above the mean.

    Points exactly at the mean are score-neutral; they land in cluster 1 by
    default, but the alternative placement is evaluated and kept if it ever
    scored higher (it cannot, mathematically, so this is a cheap guard).
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 2:
        raise ValueError("need at least two values")
    if not np.all(np.isfinite(v)):
        raise ValueError("values contain non-finite entries")
    if np.all(v == v[0]):
        raise AllEqualError("all values are identical")
    a_tilde, picked, k = augment_and_pick(v[:, np.newaxis])
    labels = _mean_split_labels(v)
    at_mean = v == v.mean()
    details: dict[str, Any] = {"above_mean": (v > v.mean())}
    if np.any(at_mean):
        flipped = labels.copy()
        flipped[at_mean] = 0
        if len(set(flipped)) == 2:
            base = dmi_score(labels_to_assignment(labels, 2), a_tilde)
            alt = dmi_score(labels_to_assignment(flipped, 2), a_tilde)
            if alt > base:
                labels = flipped
                details["tie_rule_overridden"] = True
    return _build_result(labels, a_tilde, picked, "exact_1d", details,
                         canonical=False)


@lru_cache(maxsize=32)
def _cut_triples(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.array(list(itertools.combinations(range(n), 3)), dtype=np.intp)
    return idx[:, 0], idx[:, 1], idx[:, 2]


def _quotient_plane(a_tilde: np.ndarray) -> np.ndarray:
    """Coordinates of the rows in the quotient by the mean-row direction.

    Every pairwise cluster boundary of an optimal partition is a plane
    through the origin containing the mean row, so cluster membership only
    depends on the image of each row under a linear map that kills the mean
    direction.
    """
    abar = a_tilde.mean(axis=0)
    norm = float(np.linalg.norm(abar))
    if norm == 0.0:
        # no assignment has an invertible aggregate; any projection will do
        return a_tilde[:, :2]
    unit = abar / norm
    j = int(np.argmin(np.abs(unit)))
    u = -unit[j] * unit
    u[j] += 1.0
    u /= np.linalg.norm(u)
    v = np.cross(unit, u)
    return a_tilde @ np.column_stack([u, v])


def _wedge_labels(a_tilde: np.ndarray) -> np.ndarray:
    """Globally optimal 3-cluster labels for an n x 3 working matrix.

    In the quotient plane the optimal clusters are angular sectors around
    the origin, so sorting by angle and sweeping every circular cut triple
    (cluster sums via prefix sums) visits a global maximizer.
    """
    n = a_tilde.shape[0]
    plane = _quotient_plane(a_tilde)
    theta = np.arctan2(plane[:, 1], plane[:, 0])
    order = np.argsort(theta, kind="stable")
    prefix = np.vstack([np.zeros(3), np.cumsum(a_tilde[order], axis=0)])
    i, j, l = _cut_triples(n)
    s1 = prefix[j] - prefix[i]
    s2 = prefix[l] - prefix[j]
    s3 = prefix[n] - prefix[l] + prefix[i]
    dets = np.abs(linalg.det_stack(np.stack([s1, s2, s3], axis=1)))
    best = int(np.argmax(dets))
    labels_sorted = np.empty(n, dtype=np.intp)
    labels_sorted[i[best]:j[best]] = 0
    labels_sorted[j[best]:l[best]] = 1
    labels_sorted[l[best]:] = 2
    labels_sorted[: i[best]] = 2
    labels = np.empty(n, dtype=np.intp)
    labels[order] = labels_sorted
    return labels


def solve_exact_2d(a, allow_fallback: bool = True,
                   rank_tol: float | None = None) -> ClusteringResult:
    """Exact 3-cluster solver for planar points via the angular sweep.

    When the centered points are collinear the problem is effectively
    one-dimensional; the input is projected onto its principal direction and
    handed to solve_exact_1d unless allow_fallback is False.
    """
    a = linalg.as_matrix(a)
    if a.shape[1] != 2:
        raise ShapeMismatchError(f"expected n x 2 input, got {a.shape}")
    a_tilde, picked, k = augment_and_pick(a, rank_tol)
    if k < 3:
        if not allow_fallback:
            raise DegenerateRankError("points are collinear after centering")
        centered = a - a.mean(axis=0)
        j = int(np.argmax(np.linalg.norm(centered, axis=0)))
        return solve_exact_1d(a[:, j])
    labels = _wedge_labels(a_tilde)
    return _build_result(labels, a_tilde, picked, "exact_2d", canonical=False)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def _enumerate_labels(n: int, k: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, n), dtype=np.int8)
    for pos in range(n):
        out[:, pos] = (idx // k ** (n - 1 - pos)) % k
    return out


def brute_force(
    a_tilde,
    cap: int = BRUTE_FORCE_CAP,
    collect_ties: bool = False,
    tie_rel_tol: float = 1e-9,
) -> ClusteringResult:
    """Exhaustive global maximizer of the score; oracle-scale inputs only.

    With collect_ties the result's details carry every canonical assignment
    whose score is within tie_rel_tol (relative) of the maximum.
    """
    a_tilde = linalg.as_matrix(a_tilde, "working matrix")
    n, k = a_tilde.shape
    total = k**n
    if total > cap:
        raise TooLargeError(f"{k}^{n} = {total} assignments exceed the cap {cap}")

    best_score = -1.0
    best_labels: np.ndarray | None = None
    chunk = 131_072
    all_scores = np.empty(total) if collect_ties else None
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        labels = _enumerate_labels(n, k, start, stop)
        onehot = (labels[:, :, np.newaxis] == np.arange(k, dtype=np.int8))
        mats = np.einsum("mnc,nj->mcj", onehot.astype(np.float64), a_tilde)
        scores = np.abs(linalg.det_stack(mats))
        if all_scores is not None:
            all_scores[start:stop] = scores
        local = int(np.argmax(scores))
        if scores[local] > best_score:
            best_score = float(scores[local])
            best_labels = labels[local].astype(np.intp)

    assert best_labels is not None
    details: dict[str, Any] = {"enumerated": total}
    if collect_ties and all_scores is not None:
        thresh = best_score * (1.0 - tie_rel_tol)
        ties = []
        seen = set()
        for idx in np.nonzero(all_scores >= thresh)[0]:
            lab = _enumerate_labels(n, k, int(idx), int(idx) + 1)[0].astype(np.intp)
            canon, _ = canonicalize_assignment(labels_to_assignment(lab, k))
            key = canon.tobytes()
            if key not in seen:
                seen.add(key)
                ties.append(canon)
        details["tied_assignments"] = ties
    return _build_result(best_labels, a_tilde, tuple(range(k)), "brute_force",
                         details, canonical=False)


# ---------------------------------------------------------------------------
# alternating local search
# ---------------------------------------------------------------------------

def k_cofactors(
    a_tilde,
    init,
    max_iters: int = 500,
    singular_tol: float = linalg.SINGULAR_TOL,
) -> ClusteringResult:
    """Alternating assignment/update search for a local score maximum.

    Assignment step: move every row to the cluster whose partition column has
    the largest inner product with it, keeping the current cluster on ties.
    Update step: refit the partition as the inverse cluster aggregate.  A run
    ends when the assignment is a fixed point (which certifies a local
    maximum: no single-row move can improve the score), on a detected
    assignment cycle, on a score decrease (the candidate is rejected), or at
    the iteration cap.  The accepted score trajectory never decreases.

    Raises SingularIterationError when an assignment step empties a cluster
    or produces a singular aggregate; callers typically restart from a fresh
    initialization.
    """
    a_tilde = linalg.as_matrix(a_tilde, "working matrix")
    n, k = a_tilde.shape
    c = check_assignment(init, k)
    if c.shape[0] != n:
        raise ShapeMismatchError("init row count does not match the data")
    if np.any(c.sum(axis=0) == 0.0):
        raise SingularIterationError("initial assignment has an empty cluster")

    def aggregate_or_raise(assign: np.ndarray, what: str) -> np.ndarray:
        mat = assign.T @ a_tilde
        try:
            linalg.inverse(mat, singular_tol)
        except SingularMatrixError as exc:
            raise SingularIterationError(f"{what}: {exc}") from exc
        return mat

    m = aggregate_or_raise(c, "initial assignment")
    score = abs(linalg.determinant(m))
    trajectory = [score]
    seen = {c.tobytes()}
    termination = "cap"
    iterations = 0

    for iterations in range(1, max_iters + 1):
        d = linalg.inverse(m, singular_tol)
        candidate = linalg.idxmax(a_tilde @ d, reference=c)
        if np.array_equal(candidate, c):
            termination = "converged"
            break
        if np.any(candidate.sum(axis=0) == 0.0):
            raise SingularIterationError(
                "assignment step emptied a cluster; restart from a new init"
            )
        new_m = aggregate_or_raise(candidate, "update step")
        new_score = abs(linalg.determinant(new_m))
        if new_score < score * (1.0 - 1e-12):
            termination = "score_decrease"
            break
        key = candidate.tobytes()
        if key in seen:
            c, m, score = candidate, new_m, new_score
            trajectory.append(new_score)
            termination = "cycle"
            break
        seen.add(key)
        c, m, score = candidate, new_m, new_score
        trajectory.append(new_score)

    details = {
        "iterations": iterations,
        "termination": termination,
        "certificate": termination == "converged",
        "score_trajectory": trajectory,
    }
    labels = assignment_labels(c)
    return _build_result(labels, a_tilde, tuple(range(k)), "k_cofactors",
                         details, canonical=False, singular_tol=singular_tol)


def centered_idxmax_init(a_tilde: np.ndarray) -> np.ndarray:
    """Default initialization: row argmax of the column-centered matrix."""
    return linalg.idxmax(a_tilde - a_tilde.mean(axis=0))


def _random_init(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    labels = rng.integers(0, k, size=n)
    # patch empty clusters by stealing distinct random rows
    missing = [c for c in range(k) if not np.any(labels == c)]
    if missing:
        rows = rng.choice(n, size=len(missing), replace=False)
        for c, r in zip(missing, rows):
            labels[r] = c
    return labels_to_assignment(labels, k)


def _restarted_k_cofactors(
    a_tilde: np.ndarray,
    config: SolverConfig,
    extra_inits: Sequence[np.ndarray],
) -> tuple[np.ndarray, dict[str, Any]]:
    n, k = a_tilde.shape
    rng = np.random.default_rng(config.seed)
    inits: list[np.ndarray] = [np.asarray(c, dtype=np.float64) for c in extra_inits]
    inits.append(centered_idxmax_init(a_tilde))
    while len(inits) < len(extra_inits) + config.restarts:
        inits.append(_random_init(rng, n, k))

    best: ClusteringResult | None = None
    best_index = -1
    failures = 0
    for index, init in enumerate(inits):
        try:
            check_assignment(init, k)
            run = k_cofactors(a_tilde, init, config.max_iters,
                              config.singular_tol)
        except (SingularIterationError, ShapeMismatchError, ValueError):
            failures += 1
            continue
        if best is None or run.score > best.score:
            best, best_index = run, index
    if best is None:
        raise SingularIterationError(
            f"all {len(inits)} initializations hit singular iterations"
        )
    details = {
        "restarts": len(inits),
        "failed_restarts": failures,
        "winner_index": best_index,
        "winner_termination": best.details["termination"],
        "certificate": best.details["certificate"],
        "iterations": best.details["iterations"],
    }
    return best.labels, details


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------

def _legal_labels(a_tilde: np.ndarray) -> np.ndarray | None:
    """Exact fast path: when the distinct rows number exactly k, making each
    distinct row its own cluster is provably the global maximum."""
    _, inverse_idx = np.unique(a_tilde, axis=0, return_inverse=True)
    if int(inverse_idx.max()) + 1 == a_tilde.shape[1]:
        return inverse_idx.astype(np.intp)
    return None


def dmi_cluster(
    a,
    config: SolverConfig | None = None,
    extra_inits: Sequence[np.ndarray] = (),
) -> ClusteringResult:
    """Cluster the rows of a data matrix by determinant maximization.

    Dispatch (solver="auto"): k = 1 is a single cluster; exactly k distinct
    rows is the provably legal assignment; k = 2 reduces to the 1d mean
    split; k = 3 runs the exact planar wedge sweep on two independent
    centered coordinates; anything larger runs the alternating heuristic
    with seeded restarts, keeping the best score (ties to the earliest
    restart).  The returned assignment is always in canonical column order
    and scored against the picked working matrix of the original input.
    """
    config = config or SolverConfig()
    a_tilde, picked, k = augment_and_pick(a, config.rank_tol)
    n = a_tilde.shape[0]

    if config.solver == "brute":
        res = brute_force(a_tilde, config.brute_cap)
        return _build_result(res.labels, a_tilde, picked, "brute_force",
                             dict(res.details), singular_tol=config.singular_tol)

    details: dict[str, Any] = {}
    if k == 1:
        labels = np.zeros(n, dtype=np.intp)
        tag = "single_cluster"
    else:
        legal = _legal_labels(a_tilde)
        if legal is not None:
            labels, tag = legal, "exact_legal"
        elif k == 2:
            labels = _sign_split_labels(a_tilde)
            tag = "exact_1d"
        elif k == 3:
            labels = _wedge_labels(a_tilde)
            tag = "exact_2d"
        elif config.solver == "exact":
            if k**n <= config.brute_cap:
                res = brute_force(a_tilde, config.brute_cap)
                labels, tag = res.labels, "brute_force"
                details = dict(res.details)
            else:
                raise TooLargeError(
                    f"no exact solver for k={k} within the budget "
                    f"({k}^{n} assignments)"
                )
        else:
            labels, details = _restarted_k_cofactors(a_tilde, config,
                                                     extra_inits)
            tag = "k_cofactors"

    if config.solver == "kcofactors" and tag in ("exact_1d", "exact_2d",
                                                 "exact_legal"):
        labels, details = _restarted_k_cofactors(a_tilde, config, extra_inits)
        tag = "k_cofactors"

    return _build_result(labels, a_tilde, picked, tag, details,
                         singular_tol=config.singular_tol)

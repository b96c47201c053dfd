"""Multi-task aggregation and payments.

Reports from many agents over a shared task set are summed into a
row-normalized answer matrix; determinant-maximization clustering of that
matrix extracts one answer cluster per task, and each agent is paid the
product of two restricted determinants between her reports and a clustering
learned only from tasks she did not perform (which makes the payment
independent of her own report).  Surprisingly-popular and plurality are
included as comparison aggregators.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import linalg
from .clustering import (
    ClusteringResult,
    SolverConfig,
    canonicalize_assignment,
    check_assignment,
    dmi_cluster,
    labels_to_assignment,
)
from .errors import (
    DeadOptionError,
    DmiError,
    EmptyGoldError,
    InsufficientTasksError,
    LeaveOneOutUnansweredError,
    RankDeficientError,
    UnansweredTaskError,
)

PAYMENT_TASK_FLOOR = 2  # payable agents must perform >= floor * n_options tasks


@dataclass
class ReportSet:
    """Per-agent one-hot reports over a shared task set, stored compactly.

    task_sets[i] holds the sorted task indices agent i performed and
    choices[i] the option she reported for each, in the same order.  The
    dense n x C report matrix of an agent (one-hot rows on performed tasks,
    zero rows elsewhere) is materialized on demand.
    """

    n_tasks: int
    n_options: int
    task_sets: list[np.ndarray]
    choices: list[np.ndarray]

    def __post_init__(self):
        if self.n_tasks < 1 or self.n_options < 2:
            raise ValueError("need at least one task and two options")
        if len(self.task_sets) != len(self.choices):
            raise ValueError("task_sets and choices must align per agent")
        for i, (tasks, opts) in enumerate(zip(self.task_sets, self.choices)):
            tasks = np.asarray(tasks, dtype=np.intp)
            opts = np.asarray(opts, dtype=np.intp)
            if tasks.shape != opts.shape or tasks.ndim != 1:
                raise ValueError(f"agent {i}: tasks/choices shape mismatch")
            if tasks.size != np.unique(tasks).size:
                raise ValueError(f"agent {i}: duplicate task indices")
            if tasks.size and (tasks.min() < 0 or tasks.max() >= self.n_tasks):
                raise ValueError(f"agent {i}: task index out of range")
            if opts.size and (opts.min() < 0 or opts.max() >= self.n_options):
                raise ValueError(f"agent {i}: option index out of range")
            order = np.argsort(tasks)
            self.task_sets[i] = tasks[order]
            self.choices[i] = opts[order]

    @property
    def n_agents(self) -> int:
        return len(self.task_sets)

    def performed(self, i: int) -> np.ndarray:
        return self.task_sets[i]

    def report_matrix(self, i: int) -> np.ndarray:
        out = np.zeros((self.n_tasks, self.n_options))
        out[self.task_sets[i], self.choices[i]] = 1.0
        return out

    def agent_counts(self, i: int) -> np.ndarray:
        return self.report_matrix(i)

    def counts(self) -> np.ndarray:
        """Total answer counts, one row per task."""
        out = np.zeros((self.n_tasks, self.n_options))
        for tasks, opts in zip(self.task_sets, self.choices):
            np.add.at(out, (tasks, opts), 1.0)
        return out

    @classmethod
    def from_matrices(cls, matrices: Sequence[np.ndarray]) -> "ReportSet":
        mats = [np.asarray(m, dtype=np.float64) for m in matrices]
        if not mats:
            raise ValueError("need at least one agent")
        n, c = mats[0].shape
        task_sets, choices = [], []
        for i, m in enumerate(mats):
            if m.shape != (n, c):
                raise ValueError(f"agent {i}: inconsistent report shape")
            if not np.all((m == 0.0) | (m == 1.0)):
                raise ValueError(f"agent {i}: entries must be 0 or 1")
            sums = m.sum(axis=1)
            if not np.all((sums == 0.0) | (sums == 1.0)):
                raise ValueError(f"agent {i}: rows must be one-hot or zero")
            tasks = np.nonzero(sums == 1.0)[0]
            task_sets.append(tasks)
            choices.append(np.argmax(m[tasks], axis=1))
        return cls(n, c, task_sets, choices)

    @classmethod
    def from_answer_maps(
        cls,
        n_tasks: int,
        n_options: int,
        answers: Sequence[Mapping[int, int]],
    ) -> "ReportSet":
        task_sets = [np.array(sorted(a), dtype=np.intp) for a in answers]
        choices = [
            np.array([a[t] for t in sorted(a)], dtype=np.intp) for a in answers
        ]
        return cls(n_tasks, n_options, task_sets, choices)


@dataclass
class MechanismOutcome:
    """Extraction plus per-agent payments and audit information."""

    extracted: ClusteringResult
    payments: np.ndarray
    per_agent_clusterings: list[np.ndarray | None]
    per_agent_alignment: list[tuple[int, ...] | None]
    quality: float
    warnings: list[str] = field(default_factory=list)


def aggregate_answer_matrix(reports: ReportSet) -> np.ndarray:
    """Row-normalized sum of all report matrices; every row is on the simplex."""
    counts = reports.counts()
    sums = counts.sum(axis=1)
    empty = np.nonzero(sums == 0.0)[0]
    if empty.size:
        raise UnansweredTaskError(int(empty[0]))
    return counts / sums[:, np.newaxis]


def extract_knowledge(
    reports: ReportSet,
    config: SolverConfig | None = None,
    sp_init: bool = False,
) -> ClusteringResult:
    """Cluster the row-normalized answer matrix.

    With sp_init the surprisingly-popular assignment seeds one extra restart
    of the heuristic (it is ignored whenever the solver's cluster count does
    not match the option count).
    """
    a = aggregate_answer_matrix(reports)
    extra = [surprisingly_popular_multitask(a)] if sp_init else []
    return dmi_cluster(a, config, extra_inits=extra)


def surprisingly_popular_multitask(a, prior=None) -> np.ndarray:
    """Assign each task the option whose share most exceeds its prior share.

    The prior defaults to the column means of the answer matrix, which makes
    this the row argmax of the column-normalized matrix.
    """
    a = linalg.as_matrix(a, "answer matrix")
    if prior is None:
        prior = a.mean(axis=0)
    else:
        prior = np.asarray(prior, dtype=np.float64).ravel()
        if prior.shape != (a.shape[1],):
            raise ValueError("prior length must match the option count")
    dead = np.nonzero(prior <= 0.0)[0]
    if dead.size:
        raise DeadOptionError(int(dead[0]))
    return linalg.idxmax(a / prior[np.newaxis, :])


def plurality(a) -> np.ndarray:
    """Per-task argmax of the answer matrix (the baseline aggregator)."""
    return linalg.idxmax(linalg.as_matrix(a, "answer matrix"))


def rotated_sp_check(a, config: SolverConfig | None = None) -> np.ndarray:
    """Recover the rotation that turns surprisingly-popular into the
    determinant-maximizing assignment.

    Returns D such that the row argmax of ncol(A) @ D reproduces the
    clustering of the column-normalized answer matrix ncol(A); with D the
    identity the rule is surprisingly-popular itself.
    """
    a = linalg.as_matrix(a, "answer matrix")
    colsums = a.sum(axis=0)
    if np.any(colsums <= 0.0):
        raise RankDeficientError("a column of the answer matrix sums to zero")
    ncol = a / colsums[np.newaxis, :]
    c_opts = a.shape[1]
    if linalg.numerical_rank(ncol) < c_opts:
        raise RankDeficientError(
            "column-normalized answer matrix is rank deficient"
        )
    res = dmi_cluster(ncol, config)
    if res.k != c_opts or res.partition is None or max(res.picked_columns) >= c_opts:
        raise RankDeficientError(
            "clustering did not use the full set of option columns"
        )
    d = res.partition
    reproduced = linalg.idxmax(ncol @ d, reference=res.assignment)
    if not np.array_equal(reproduced, res.assignment):
        raise DmiError("recovered rotation failed to reproduce the assignment")
    return d


def align_labels(c, gold: Mapping[int, int]) -> tuple[int, ...]:
    """Option permutation with the highest agreement on gold-labeled tasks.

    Returns perm with perm[cluster_index] = option_index; ties break toward
    the lexicographically smallest permutation.
    """
    c = check_assignment(c)
    n, k = c.shape
    if not gold:
        raise EmptyGoldError("need at least one gold label")
    if k > 8:
        raise ValueError(f"k={k} too large to enumerate permutations")
    for t, opt in gold.items():
        if not (0 <= t < n):
            raise ValueError(f"gold task index {t} out of range")
        if not (0 <= opt < k):
            raise ValueError(f"gold option index {opt} out of range")
    labels = np.argmax(c, axis=1)
    best_perm: tuple[int, ...] | None = None
    best_hits = -1
    for perm in itertools.permutations(range(k)):
        hits = sum(1 for t, opt in gold.items() if perm[labels[t]] == opt)
        if hits > best_hits:
            best_hits, best_perm = hits, perm
    assert best_perm is not None
    return best_perm


def _halved(tasks: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(tasks)
    half = (perm.size + 1) // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


def kdmi_payment_for_agent(
    reports: ReportSet,
    agent: int,
    config: SolverConfig | None = None,
    seed: int = 0,
    strict: bool = False,
    single_part: bool = False,
    counts: np.ndarray | None = None,
) -> tuple[float, np.ndarray | None, list[str]]:
    """Payment for one agent: leave-one-out clustering times her reports.

    Steps: remove the agent's reports and row-normalize the rest; cluster the
    tasks she did not perform to learn the partition; classify the tasks she
    did perform with that partition; split them into two seeded halves and
    pay the product of the two restricted determinants (signed, as scored).

    Returns (payment, her classified assignment or None, warnings).  The
    payment degrades to 0.0 with a warning when a performed task has no other
    answers (strict=False raises instead via LeaveOneOutUnansweredError) or
    when the leave-one-out clustering cannot produce a full-rank partition.
    Pass precomputed total counts to amortize across agents.
    """
    config = config or SolverConfig()
    c_opts = reports.n_options
    tasks = reports.performed(agent)
    floor = PAYMENT_TASK_FLOOR * c_opts
    if single_part:
        floor = c_opts
    if tasks.size < floor:
        raise InsufficientTasksError(agent, int(tasks.size), floor)

    if counts is None:
        counts = reports.counts()
    loo = counts - reports.agent_counts(agent)
    sums = loo.sum(axis=1)
    warnings: list[str] = []

    dead = tasks[sums[tasks] == 0.0]
    if dead.size:
        if strict:
            raise LeaveOneOutUnansweredError(int(dead[0]), agent)
        warnings.append(
            f"agent {agent}: task {int(dead[0])} has no other answers; "
            "payment set to 0"
        )
        return 0.0, None, warnings

    mask = np.ones(reports.n_tasks, dtype=bool)
    mask[tasks] = False
    others = np.nonzero(mask)[0]
    if others.size == 0:
        warnings.append(
            f"agent {agent}: performed every task, no held-out rows; "
            "payment set to 0"
        )
        return 0.0, None, warnings

    norm = loo / np.where(sums == 0.0, 1.0, sums)[:, np.newaxis]
    held_out = dmi_cluster(norm[others], config)
    if (
        held_out.k != c_opts
        or held_out.partition is None
        or max(held_out.picked_columns) >= c_opts
    ):
        warnings.append(
            f"agent {agent}: held-out clustering is rank deficient "
            f"(k={held_out.k}); payment set to 0"
        )
        return 0.0, None, warnings

    picked = list(held_out.picked_columns)
    scores = norm[tasks][:, picked] @ held_out.partition
    classified = linalg.idxmax(scores)

    rng = np.random.default_rng([seed, agent])
    pos = {int(t): idx for idx, t in enumerate(tasks)}
    report_onehot = labels_to_assignment(reports.choices[agent], c_opts)
    if single_part:
        payment = linalg.determinant(classified.T @ report_onehot)
    else:
        t1, t2 = _halved(tasks, rng)
        payment = 1.0
        for part in (t1, t2):
            rows = np.array([pos[int(t)] for t in part], dtype=np.intp)
            payment *= linalg.determinant(
                classified[rows].T @ report_onehot[rows]
            )
    return float(payment), classified, warnings


def kdmi_payments(
    reports: ReportSet,
    config: SolverConfig | None = None,
    seed: int = 0,
    strict: bool = False,
    single_part: bool = False,
) -> MechanismOutcome:
    """Run the full mechanism: extraction plus a payment for every agent.

    Payments use only leave-one-out information, so an agent's own report
    never influences the clustering she is scored against.  Cluster labels of
    the per-agent clusterings are arbitrary relative to the extraction; the
    best-agreement permutation is reported per agent for audit.
    """
    config = config or SolverConfig()
    extracted = extract_knowledge(reports, config)
    counts = reports.counts()
    payments = np.zeros(reports.n_agents)
    per_agent: list[np.ndarray | None] = []
    alignments: list[tuple[int, ...] | None] = []
    warnings: list[str] = []
    extracted_labels = extracted.labels

    for i in range(reports.n_agents):
        pay, classified, warn = kdmi_payment_for_agent(
            reports, i, config, seed, strict, single_part, counts
        )
        payments[i] = pay
        per_agent.append(classified)
        warnings.extend(warn)
        if classified is not None and classified.shape[1] == extracted.k:
            gold = {
                idx: int(extracted_labels[t])
                for idx, t in enumerate(reports.performed(i))
            }
            alignments.append(align_labels(classified, gold))
        else:
            alignments.append(None)

    return MechanismOutcome(
        extracted=extracted,
        payments=payments,
        per_agent_clusterings=per_agent,
        per_agent_alignment=alignments,
        quality=extracted.score,
        warnings=warnings,
    )

"""Seeded synthetic worlds for both elicitation settings.

Multi-task: tasks draw i.i.d. states (finite list or Dirichlet-sampled),
agents draw random task sets, receive signals from the task state, and push
them through a per-agent row-stochastic strategy before reporting.  Each
agent consumes an independent spawned random stream, so agent-level
parallelism cannot change results and identical (world, strategies, seed)
reproduce bit-identical reports.

Single-task: a world is drawn, respondents draw signals from its answer
distribution and predict their peers with the exact Bayesian
posterior-predictive (or a caller-supplied distorted rule).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleAssignmentError
from .mechanisms import PAYMENT_TASK_FLOOR, ReportSet
from .single_task import SingleTaskDataset

EXAMPLE_STRATEGY_3 = np.array([
    [0.56, 0.40, 0.04],
    [0.56, 0.34, 0.10],
    [0.46, 0.44, 0.10],
])

SIMPLEX_TOL = 1e-12


def check_strategy(s) -> np.ndarray:
    """Validate a row-stochastic square matrix."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"strategy must be square, got shape {s.shape}")
    if np.any(s < 0.0):
        raise ValueError("strategy entries must be nonnegative")
    if np.max(np.abs(s.sum(axis=1) - 1.0)) > SIMPLEX_TOL:
        raise ValueError("strategy rows must sum to 1 within 1e-12")
    return s


def identity_strategies(m: int, n_options: int) -> list[np.ndarray]:
    eye = np.eye(n_options)
    return [eye] * m


def shared_strategies(m: int, s) -> list[np.ndarray]:
    s = check_strategy(s)
    return [s] * m


@dataclass(frozen=True)
class WorldModel:
    """Task-state source and assignment model for a multi-task population.

    Exactly one of states (finite source, with optional weights) or
    dirichlet_alpha must be given, and exactly one of tasks_per_agent
    (uniform fixed-size subsets) or assign_prob (independent Bernoulli with
    rejection until the payment floor of 2 * n_options tasks is met).
    """

    n_options: int
    n_tasks: int
    m_agents: int
    states: np.ndarray | None = None
    weights: np.ndarray | None = None
    dirichlet_alpha: np.ndarray | None = None
    tasks_per_agent: int | None = None
    assign_prob: float | None = None

    def __post_init__(self):
        if self.n_options < 2 or self.n_tasks < 1 or self.m_agents < 1:
            raise ValueError("need >= 2 options, >= 1 task, >= 1 agent")
        if (self.states is None) == (self.dirichlet_alpha is None):
            raise ValueError("give exactly one of states or dirichlet_alpha")
        if self.states is not None:
            states = np.asarray(self.states, dtype=np.float64)
            if states.ndim != 2 or states.shape[1] != self.n_options:
                raise ValueError("states must be (n_states, n_options)")
            if np.any(states < 0.0) or np.max(
                np.abs(states.sum(axis=1) - 1.0)
            ) > SIMPLEX_TOL:
                raise ValueError("each state must lie on the simplex")
            object.__setattr__(self, "states", states)
            if self.weights is not None:
                w = np.asarray(self.weights, dtype=np.float64)
                if w.shape != (states.shape[0],) or np.any(w < 0.0):
                    raise ValueError("weights must be nonnegative, one per state")
                if abs(w.sum() - 1.0) > SIMPLEX_TOL:
                    raise ValueError("weights must sum to 1")
                object.__setattr__(self, "weights", w)
        else:
            alpha = np.asarray(self.dirichlet_alpha, dtype=np.float64)
            if alpha.shape != (self.n_options,) or np.any(alpha <= 0.0):
                raise ValueError("dirichlet_alpha must be positive, one per option")
            object.__setattr__(self, "dirichlet_alpha", alpha)
        if (self.tasks_per_agent is None) == (self.assign_prob is None):
            raise ValueError("give exactly one of tasks_per_agent or assign_prob")
        floor = PAYMENT_TASK_FLOOR * self.n_options
        if self.tasks_per_agent is not None:
            if not (floor <= self.tasks_per_agent <= self.n_tasks):
                raise InfeasibleAssignmentError(
                    f"tasks_per_agent must be in [{floor}, {self.n_tasks}]"
                )
        else:
            if not (0.0 < self.assign_prob <= 1.0):
                raise ValueError("assign_prob must be in (0, 1]")
            if self.n_tasks < floor:
                raise InfeasibleAssignmentError(
                    f"n_tasks={self.n_tasks} below the task floor {floor}"
                )


@dataclass(frozen=True)
class SimulationDraw:
    reports: ReportSet
    truth: np.ndarray
    soft_truth: bool
    states_per_task: np.ndarray


def _inverse_cdf_sample(prob_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(prob_rows, axis=1)
    idx = (u[:, np.newaxis] > cdf).sum(axis=1)
    return np.minimum(idx, prob_rows.shape[1] - 1)


def _draw_task_set(
    rng: np.random.Generator, world: WorldModel
) -> np.ndarray:
    if world.tasks_per_agent is not None:
        return np.sort(rng.choice(world.n_tasks, world.tasks_per_agent,
                                  replace=False))
    floor = PAYMENT_TASK_FLOOR * world.n_options
    for _ in range(1000):
        mask = rng.random(world.n_tasks) < world.assign_prob
        if int(mask.sum()) >= floor:
            return np.nonzero(mask)[0]
    raise InfeasibleAssignmentError(
        f"could not draw >= {floor} tasks at p={world.assign_prob} "
        f"over {world.n_tasks} tasks after 1000 attempts"
    )


def generate_reports(
    world: WorldModel,
    strategies: Sequence[np.ndarray],
    seed: int,
) -> SimulationDraw:
    """Draw states, task sets, signals, and strategy-filtered reports.

    Ground truth per task is the generating state's index in finite-source
    mode; in sampler mode it is the argmax coordinate of the sampled state
    and the draw is flagged as soft truth.
    """
    if len(strategies) != world.m_agents:
        raise ValueError("need one strategy per agent")
    strategies = [check_strategy(s) for s in strategies]
    if any(s.shape[0] != world.n_options for s in strategies):
        raise ValueError("strategy size must match the option count")

    root = np.random.SeedSequence(seed)
    state_seq, agent_root = root.spawn(2)
    rng_states = np.random.default_rng(state_seq)

    if world.states is not None:
        n_states = world.states.shape[0]
        weights = world.weights
        truth = rng_states.choice(n_states, size=world.n_tasks, p=weights)
        states_per_task = world.states[truth]
        soft = False
    else:
        states_per_task = rng_states.dirichlet(world.dirichlet_alpha,
                                               size=world.n_tasks)
        truth = np.argmax(states_per_task, axis=1)
        soft = True

    task_sets: list[np.ndarray] = []
    choices: list[np.ndarray] = []
    for agent_seq in agent_root.spawn(world.m_agents):
        rng = np.random.default_rng(agent_seq)
        i = len(task_sets)
        tasks = _draw_task_set(rng, world)
        signals = _inverse_cdf_sample(states_per_task[tasks],
                                      rng.random(tasks.size))
        reports = _inverse_cdf_sample(strategies[i][signals],
                                      rng.random(tasks.size))
        task_sets.append(tasks)
        choices.append(reports)

    reports_set = ReportSet(world.n_tasks, world.n_options, task_sets, choices)
    return SimulationDraw(reports=reports_set, truth=truth, soft_truth=soft,
                          states_per_task=states_per_task)


def apply_strategy_to_reports(
    choices: np.ndarray, strategy, rng: np.random.Generator
) -> np.ndarray:
    """Resample reported options through a strategy row per report.

    Post-composing honest reports this way is distributionally identical to
    having reported through the strategy in the first place.
    """
    strategy = check_strategy(strategy)
    choices = np.asarray(choices, dtype=np.intp)
    return _inverse_cdf_sample(strategy[choices], rng.random(choices.size))


def expected_answer_matrix(
    world: WorldModel, mean_strategy, truth: np.ndarray | None = None
) -> np.ndarray:
    """Noise-free answer rows: each state pushed through the mean strategy.

    One row per state by default; pass realized truth indices to expand to
    one row per task.  Requires a finite-source world.
    """
    if world.states is None:
        raise ValueError("expected matrix requires a finite-source world")
    mean_strategy = check_strategy(mean_strategy)
    base = world.states if truth is None else world.states[np.asarray(truth)]
    return base @ mean_strategy


# ---------------------------------------------------------------------------
# single-task worlds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WorldSpec:
    """Finitely many candidate worlds with per-world answer distributions."""

    mu: np.ndarray            # (n_worlds, n_options)
    prior: np.ndarray         # (n_worlds,)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        prior = np.asarray(self.prior, dtype=np.float64)
        if mu.ndim != 2 or mu.shape[0] < 1:
            raise ValueError("mu must be (n_worlds, n_options)")
        if np.any(mu < 0.0) or np.max(np.abs(mu.sum(axis=1) - 1.0)) > SIMPLEX_TOL:
            raise ValueError("each world distribution must lie on the simplex")
        if prior.shape != (mu.shape[0],) or np.any(prior < 0.0):
            raise ValueError("prior must be nonnegative, one entry per world")
        if abs(prior.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("prior must sum to 1")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "prior", prior)

    @property
    def n_options(self) -> int:
        return self.mu.shape[1]

    def posterior_predictive(self, signal: int) -> np.ndarray:
        """Peer-answer distribution of a Bayesian who saw one signal."""
        post = self.prior * self.mu[:, signal]
        post /= post.sum()
        return post @ self.mu


def two_world_spec(mu_plus, mu_minus, prior_plus: float = 0.5) -> WorldSpec:
    return WorldSpec(mu=np.array([mu_plus, mu_minus]),
                     prior=np.array([prior_plus, 1.0 - prior_plus]))


def generate_single_task(
    spec: WorldSpec,
    m: int,
    seed: int,
    prediction_fn: Callable[[int], np.ndarray] | None = None,
) -> tuple[SingleTaskDataset, int]:
    """Draw a world and m (signal, prediction) reports from it.

    Respondents predict with the posterior-predictive given their own signal
    unless prediction_fn overrides the rule.  Returns the dataset and the
    index of the realized world.
    """
    if m < 1:
        raise ValueError("need at least one respondent")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    world = int(rng.choice(spec.prior.size, p=spec.prior))
    signals = _inverse_cdf_sample(
        np.broadcast_to(spec.mu[world], (m, spec.n_options)), rng.random(m)
    )
    if prediction_fn is None:
        table = np.array([spec.posterior_predictive(c)
                          for c in range(spec.n_options)])
        predictions = table[signals]
    else:
        predictions = np.array([prediction_fn(int(c)) for c in signals])
    data = SingleTaskDataset(n_options=spec.n_options, signals=signals,
                             predictions=predictions)
    return data, world


# ---------------------------------------------------------------------------
# scenario presets
# ---------------------------------------------------------------------------

def preset_world(name: str, n_tasks: int = 60, m_agents: int = 200,
                 tasks_per_agent: int | None = None) -> WorldModel:
    """Multi-task preset worlds addressable by name."""
    if name in ("example12", "legal_pure"):
        c_opts = 3
        if tasks_per_agent is None:
            tasks_per_agent = min(4 * c_opts, n_tasks)
        return WorldModel(
            n_options=c_opts,
            n_tasks=n_tasks,
            m_agents=m_agents,
            states=np.eye(c_opts),
            weights=np.full(c_opts, 1.0 / c_opts),
            tasks_per_agent=tasks_per_agent,
        )
    raise ValueError(f"unknown multi-task preset {name!r}")


def preset_two_world() -> WorldSpec:
    """Well-separated binary two-world setting for the spectral rule."""
    return two_world_spec([0.9, 0.1], [0.1, 0.9])

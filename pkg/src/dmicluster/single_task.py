"""Single-question aggregation from (signal, prediction) reports.

Each respondent reports her own answer and a probability vector predicting
everyone else's answers.  Group-averaging the predictions gives conditional
distributions; a harmonic identity reconstructs the prior from them.  Two
aggregators are built on these moments: surprisingly-popular (answer whose
share most exceeds its reconstructed prior) and a spectral rule that projects
the share-minus-prior vector onto the dominant eigenvector of the
reconstructed covariance and reads off the sign.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (
    DegenerateSpectrumError,
    MissingOptionError,
    NonConvergenceError,
    ZeroConditionalError,
)


@dataclass(frozen=True)
class SingleTaskDataset:
    """Signals (option indices) and per-respondent prediction vectors."""

    n_options: int
    signals: np.ndarray
    predictions: np.ndarray

    def __post_init__(self):
        signals = np.asarray(self.signals, dtype=np.intp)
        preds = np.asarray(self.predictions, dtype=np.float64)
        if self.n_options < 2:
            raise ValueError("need at least two options")
        if signals.ndim != 1 or preds.ndim != 2:
            raise ValueError("signals must be 1d and predictions 2d")
        if preds.shape != (signals.size, self.n_options):
            raise ValueError("predictions must be (n_respondents, n_options)")
        if signals.size and (signals.min() < 0 or signals.max() >= self.n_options):
            raise ValueError("signal out of range")
        if np.any(preds < 0.0):
            raise ValueError("predictions must be nonnegative")
        if np.max(np.abs(preds.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("each prediction must sum to 1 within 1e-9")
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "predictions", preds)

    @property
    def n_respondents(self) -> int:
        return self.signals.size


@dataclass(frozen=True)
class MomentEstimates:
    """First and second moments reconstructed from a dataset.

    conditional[c, c'] is the mean predicted share of option c' among
    respondents who answered c.  prior is the reconstructed marginal
    (normalized; the pre-normalization defect is in diagnostics).  joint is
    diag(prior) @ conditional, so its rows marginalize back to the prior, and
    covariance = joint - outer(prior, prior) exactly.
    """

    answer_shares: np.ndarray
    conditional: np.ndarray
    prior: np.ndarray
    joint: np.ndarray
    covariance: np.ndarray
    diagnostics: dict[str, float] = field(default_factory=dict)


def estimate_moments(data: SingleTaskDataset, smoothing: float = 0.0) -> MomentEstimates:
    """Reconstruct conditional, prior, joint, and covariance.

    The prior uses the harmonic identity prior[c] = 1 / sum_c' of
    conditional[c, c'] / conditional[c', c]; it is exact when the
    conditionals come from a consistent joint.  Any zero conditional makes
    the identity undefined and raises, unless additive smoothing > 0 is
    requested.
    """
    c_opts = data.n_options
    counts = np.bincount(data.signals, minlength=c_opts).astype(np.float64)
    missing = np.nonzero(counts == 0.0)[0]
    if missing.size:
        raise MissingOptionError(int(missing[0]))

    conditional = np.empty((c_opts, c_opts))
    for c in range(c_opts):
        conditional[c] = data.predictions[data.signals == c].mean(axis=0)
    if smoothing > 0.0:
        conditional = (conditional + smoothing) / (1.0 + c_opts * smoothing)

    zero = np.argwhere(conditional == 0.0)
    if zero.size:
        given, other = int(zero[0][1]), int(zero[0][0])
        raise ZeroConditionalError(given, other)

    # harmonic prior: sum over rows of conditional / conditional^T, per row
    ratio_sums = (conditional / conditional.T).sum(axis=1)
    raw_prior = 1.0 / ratio_sums
    raw_total = float(raw_prior.sum())
    prior = raw_prior / raw_total
    joint = prior[:, np.newaxis] * conditional
    covariance = joint - np.outer(prior, prior)
    shares = counts / counts.sum()

    diagnostics = {
        "prior_normalization_gap": abs(raw_total - 1.0),
        "joint_asymmetry": float(np.max(np.abs(joint - joint.T))),
        "marginal_defect": float(np.max(np.abs(joint.sum(axis=0) - prior))),
    }
    return MomentEstimates(
        answer_shares=shares,
        conditional=conditional,
        prior=prior,
        joint=joint,
        covariance=covariance,
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class SpSingleResult:
    option: int
    tied: bool
    ratios: np.ndarray
    moments: MomentEstimates


def surprisingly_popular_single(
    data: SingleTaskDataset, smoothing: float = 0.0
) -> SpSingleResult:
    """Answer whose observed share most exceeds its reconstructed prior.

    Exact ties flag the result and resolve toward the lowest option index.
    """
    moments = estimate_moments(data, smoothing)
    ratios = moments.answer_shares / moments.prior
    option = int(np.argmax(ratios))
    tied = int(np.sum(ratios == ratios[option])) > 1
    return SpSingleResult(option=option, tied=tied, ratios=ratios,
                          moments=moments)


def _power_iteration(
    m: np.ndarray, seed: int, tol: float, max_iters: int
) -> tuple[float, np.ndarray, float, int]:
    """Dominant (largest magnitude) eigenpair of a symmetric matrix.

    Stops when the residual falls below tol relative to max(|eigenvalue|,
    largest entry); for a symmetric matrix the largest entry never exceeds
    the dominant eigenvalue magnitude, so the returned residual satisfies
    res <= tol * |lambda| for the dominant pair.
    """
    n = m.shape[0]
    scale = float(np.max(np.abs(m)))
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, max_iters + 1):
        y = m @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0, x, 0.0, it
        x_new = y / norm
        lam = float(x_new @ (m @ x_new))
        res = float(np.linalg.norm(m @ x_new - lam * x_new))
        x = x_new
        if res <= tol * max(abs(lam), scale):
            return lam, x, res, it
    raise NonConvergenceError(
        f"power iteration residual {res:.3e} after {max_iters} iterations"
    )


@dataclass(frozen=True)
class StsResult:
    """Spectral label with full diagnostics.

    label is "plus" or "minus" (None on an exactly zero projection, with
    tied set).  The eigenvector is canonically oriented: its
    largest-magnitude entry is positive, so the label is deterministic and
    independent of the power-iteration seed; which world "plus" denotes must
    be bound with outside information.
    """

    label: str | None
    tied: bool
    eigenvalue: float
    eigenvector: np.ndarray
    eigen_gap: float
    projection: float
    residual: float
    iterations: int
    moments: MomentEstimates
    warnings: tuple[str, ...] = ()


def spectral_truth_serum(
    data: SingleTaskDataset,
    seed: int = 0,
    tol_gap: float = 1e-8,
    power_tol: float = 1e-10,
    max_iters: int = 10_000,
    smoothing: float = 0.0,
) -> StsResult:
    """Sign of the share-minus-prior projection on the top covariance direction.

    The covariance is symmetrized before the eigensolve (asymmetry beyond
    1e-6 is surfaced as a warning).  A dominant eigenvalue that is zero at
    working precision, or separated from the runner-up by less than tol_gap
    (relative), raises DegenerateSpectrumError: the label would be noise.
    """
    moments = estimate_moments(data, smoothing)
    cov = moments.covariance
    warnings: list[str] = []
    asymmetry = float(np.max(np.abs(cov - cov.T)))
    if asymmetry > 1e-6:
        warnings.append(f"covariance asymmetry {asymmetry:.3e} exceeds 1e-6")
    sym = 0.5 * (cov + cov.T)

    scale = float(np.max(np.abs(sym)))
    if scale < 1e-14:
        raise DegenerateSpectrumError("covariance is zero at working precision")

    lam1, vec1, residual, iterations = _power_iteration(sym, seed, power_tol,
                                                        max_iters)
    if abs(lam1) < 1e-12 * scale:
        raise DegenerateSpectrumError(
            f"dominant eigenvalue {lam1:.3e} is zero at working precision"
        )
    # the runner-up magnitude is exactly the spectral norm of the deflation
    deflated = sym - lam1 * np.outer(vec1, vec1)
    lam2 = float(np.linalg.norm(deflated, ord=2))
    gap = (abs(lam1) - abs(lam2)) / abs(lam1)
    if gap < tol_gap:
        raise DegenerateSpectrumError(
            f"eigenvalue gap {gap:.3e} below tolerance {tol_gap:.1e}"
        )

    # canonical orientation: lowest-index entry of (near-)maximal magnitude is
    # made positive; the tie tolerance keeps the orientation stable when two
    # entries have equal magnitude up to rounding (e.g. symmetric binary data)
    mags = np.abs(vec1)
    j = int(np.argmax(mags >= mags.max() * (1.0 - 1e-9)))
    if vec1[j] < 0.0:
        vec1 = -vec1
    projection = float(vec1 @ (moments.answer_shares - moments.prior))
    if projection > 0.0:
        label = "plus"
    elif projection < 0.0:
        label = "minus"
    else:
        label = None
        warnings.append("projection is exactly zero; label undetermined")

    return StsResult(
        label=label,
        tied=projection == 0.0,
        eigenvalue=lam1,
        eigenvector=vec1,
        eigen_gap=gap,
        projection=projection,
        residual=residual,
        iterations=iterations,
        moments=moments,
        warnings=tuple(warnings),
    )

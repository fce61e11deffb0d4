"""Parameter estimation: per-epoch likelihood optimization, mixing least
squares, alternating single-epoch fits, and the blocked multi-epoch scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .errors import (
    CollinearityError,
    ConditioningError,
    InitializationError,
    OptimizationError,
)
from .kalman import FilterInit, innovations_nll, kalman_filter
from .model import BandSpec, EpochParams, EpochSeries, MixingMatrix

__all__ = [
    "BenchmarkFit",
    "FitConfig",
    "MultiEpochFit",
    "SingleEpochFit",
    "default_start",
    "estimate_mixing",
    "fit_benchmark_ssm",
    "fit_multi_epoch",
    "fit_single_epoch",
    "ls_project_mixing",
    "optimize_epoch_params",
]

_FRAC_EPS = 1e-9  # keeps the box bijection away from its open endpoints


@dataclass(frozen=True)
class FitConfig:
    """Knobs for the alternating fit and the blocked resampling scheme.

    outer_tol is a relative l-infinity tolerance on the stacked
    (rho, sigma2, tau2) vector between outer iterations; optimizer_tol is a
    relative objective tolerance inside one simplex search.
    """

    max_outer_iters: int = 50
    outer_tol: float = 1e-4
    optimizer_max_evals: int = 400
    optimizer_tol: float = 1e-7
    rng_seed: int = 0
    block_length: int = 10
    n_blocks: int = 30

    def __post_init__(self):
        if self.max_outer_iters < 1 or self.optimizer_max_evals < 1:
            raise ValueError("iteration budgets must be >= 1")
        if self.outer_tol <= 0 or self.optimizer_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.block_length < 1 or self.n_blocks < 1:
            raise ValueError("block_length and n_blocks must be >= 1")


@dataclass(frozen=True)
class SingleEpochFit:
    """Result of the alternating fit on one epoch."""

    params: EpochParams
    mixing: MixingMatrix
    trace: np.ndarray  # objective after each outer iteration
    converged: bool


@dataclass(frozen=True)
class MultiEpochFit:
    """Blocked-resampling fit across all epochs."""

    global_mixing: MixingMatrix
    block_mixings: np.ndarray  # (n_blocks, p, q)
    params_by_epoch: list[EpochParams]
    block_starts: np.ndarray  # 1-based first epoch of each block
    block_converged: np.ndarray  # final-epoch convergence flag per block


@dataclass(frozen=True)
class BenchmarkFit:
    """Classical baseline: independent per-epoch fits, averaged."""

    params: EpochParams
    mixing: MixingMatrix
    per_epoch_params: list[EpochParams]
    converged: np.ndarray


def default_start(bands: tuple[BandSpec, ...]) -> EpochParams:
    """Box-midpoint rho with unit noise variances."""
    rho = np.array([(b.rho_min + b.rho_max) / 2.0 for b in bands])
    return EpochParams(rho, 1.0, 1.0)


def _pack(start: EpochParams, bands: tuple[BandSpec, ...]) -> tuple[np.ndarray, list[int]]:
    free = [l for l, b in enumerate(bands) if b.rho_max > b.rho_min]
    u = []
    for l in free:
        b = bands[l]
        frac = (start.rho[l] - b.rho_min) / (b.rho_max - b.rho_min)
        u.append(logit(np.clip(frac, _FRAC_EPS, 1.0 - _FRAC_EPS)))
    vec = np.array(u + [np.log(start.sigma2), np.log(start.tau2)])
    return vec, free


def _unpack(
    vec: np.ndarray,
    free: list[int],
    start: EpochParams,
    bands: tuple[BandSpec, ...],
) -> EpochParams | None:
    rho = start.rho.copy()
    for i, l in enumerate(free):
        b = bands[l]
        rho[l] = b.rho_min + (b.rho_max - b.rho_min) * expit(vec[i])
    with np.errstate(over="ignore"):
        sigma2 = np.exp(vec[-2])
        tau2 = np.exp(vec[-1])
    if not (np.isfinite(sigma2) and np.isfinite(tau2)):
        return None
    try:
        return EpochParams(rho, float(sigma2), float(tau2))
    except ValueError:
        return None


def optimize_epoch_params(
    epoch: EpochSeries,
    mixing: MixingMatrix,
    bands: tuple[BandSpec, ...],
    start: EpochParams,
    config: FitConfig,
) -> EpochParams:
    """Minimize the innovations negative log-likelihood over (rho, sigma2, tau2).

    Derivative-free simplex search; rho moves through a smooth bijection onto
    its band box and the variances through log space, so every trial point is
    feasible. Filter conditioning failures at trial points count as +inf.

    Raises InitializationError when the objective is non-finite at `start`,
    and ValueError when `start` violates a box.
    """
    if len(bands) != start.q:
        raise ValueError(f"{len(bands)} bands for {start.q} rho entries")
    if not start.in_box(bands):
        raise ValueError(f"start rho {start.rho} outside band boxes")
    if start.sigma2 <= 0 or start.tau2 <= 0:
        raise ValueError("start variances must be positive")

    vec0, free = _pack(start, bands)

    def objective(vec: np.ndarray) -> float:
        params = _unpack(vec, free, start, bands)
        if params is None:
            return np.inf
        try:
            return innovations_nll(epoch, mixing, params, bands)
        except ConditioningError:
            return np.inf

    f0 = objective(vec0)
    if not np.isfinite(f0):
        raise InitializationError(
            "objective not finite at the starting parameters"
        )
    # explicit simplex: default perturbations collapse at u=0 (box midpoint)
    simplex = np.vstack([vec0] + [vec0 + 0.5 * e for e in np.eye(vec0.size)])
    result = minimize(
        objective,
        vec0,
        method="Nelder-Mead",
        options={
            "maxfev": config.optimizer_max_evals,
            "fatol": config.optimizer_tol * max(1.0, abs(f0)),
            "xatol": 1e-3,
            "initial_simplex": simplex,
            "disp": False,
        },
    )
    if not np.isfinite(result.fun):
        raise OptimizationError("no simplex trial produced a finite objective")
    params = _unpack(result.x, free, start, bands)
    if params is None:  # pragma: no cover - finite objective implies valid params
        raise OptimizationError("optimizer returned invalid parameters")
    return params


def ls_project_mixing(sources: np.ndarray, data: np.ndarray) -> MixingMatrix:
    """Channel-wise least squares of data (p, T) on source rows (q, T),
    projected onto the nonnegative orthant.

    Raises CollinearityError for rank-deficient sources or when projection
    zeroes out an entire column.
    """
    q, t = sources.shape
    if data.shape[1] != t:
        raise ValueError("sources and data disagree on T")
    gram = sources @ sources.T
    if np.linalg.matrix_rank(gram) < q:
        raise CollinearityError("filtered source rows are collinear")
    try:
        coefs = np.linalg.solve(gram, sources @ data.T)  # (q, p)
    except np.linalg.LinAlgError as exc:
        raise CollinearityError(str(exc)) from exc
    m = np.clip(coefs.T, 0.0, None)
    if np.any(~m.any(axis=0)):
        dead = np.flatnonzero(~m.any(axis=0))
        raise CollinearityError(
            f"projection produced all-zero mixing column(s) {dead.tolist()}"
        )
    return MixingMatrix(m)


def estimate_mixing(
    epoch: EpochSeries,
    mixing: MixingMatrix,
    params: EpochParams,
    bands: tuple[BandSpec, ...],
    init: FilterInit | None = None,
) -> MixingMatrix:
    """Least-squares mixing update from filtered sources.

    Filters the epoch under the current `mixing`, rescales each
    current-source row to unit sample standard deviation, regresses every
    channel on the q scaled rows, and clips negative loadings to zero.
    """
    out = kalman_filter(epoch, mixing, params, bands, init)
    sources = out.filtered_means[:, : params.q].T  # (q, T) current block
    sd = np.std(sources, axis=1, ddof=1)
    if np.any(sd == 0.0):
        raise CollinearityError("a filtered source row has zero variance")
    return ls_project_mixing(sources / sd[:, None], epoch.data)


def _rel_linf_change(new: EpochParams, old: EpochParams) -> float:
    a = np.concatenate([new.rho, [new.sigma2, new.tau2]])
    b = np.concatenate([old.rho, [old.sigma2, old.tau2]])
    return float(np.max(np.abs(a - b) / np.abs(b)))


def fit_single_epoch(
    epoch: EpochSeries,
    bands: tuple[BandSpec, ...],
    m0: MixingMatrix,
    config: FitConfig,
    start_params: EpochParams | None = None,
) -> SingleEpochFit:
    """Alternate optimize_epoch_params and estimate_mixing from m0.

    Starts at `start_params` (box-midpoint with unit variances when omitted)
    and stops when the relative l-infinity change of (rho, sigma2, tau2)
    drops below outer_tol or max_outer_iters is reached.
    """
    params = default_start(bands) if start_params is None else start_params
    mixing = m0
    trace = []
    converged = False
    for _ in range(config.max_outer_iters):
        prev = params
        params = optimize_epoch_params(epoch, mixing, bands, prev, config)
        mixing = estimate_mixing(epoch, mixing, params, bands)
        trace.append(innovations_nll(epoch, mixing, params, bands))
        if _rel_linf_change(params, prev) < config.outer_tol:
            converged = True
            break
    return SingleEpochFit(
        params=params, mixing=mixing, trace=np.array(trace), converged=converged
    )


def _fit_block(
    epochs: list[EpochSeries],
    bands: tuple[BandSpec, ...],
    start: int,
    m0: MixingMatrix,
    config: FitConfig,
) -> SingleEpochFit:
    # sequential refinement: each epoch seeds the next one's mixing AND
    # parameter start, so descent accumulates along the chain
    fit = None
    mixing = m0
    params = None
    for r in range(start, start + config.block_length):
        fit = fit_single_epoch(epochs[r - 1], bands, mixing, config, params)
        mixing, params = fit.mixing, fit.params
    return fit


def fit_multi_epoch(
    epochs: list[EpochSeries],
    bands: tuple[BandSpec, ...],
    config: FitConfig,
) -> MultiEpochFit:
    """Blocked resampling fit.

    Draws n_blocks random block starts, runs the sequential within-block
    alternation for each, averages the blocks' final mixing estimates into
    the global mixing, then re-optimizes (rho, sigma2, tau2) on every epoch
    with that mixing held fixed. The per-epoch passes all start from the
    average of the block solutions; they inherit the scale the blocks
    settled on instead of beginning at unit variances. A failed block is
    retried once with a fresh draw before the failure propagates.
    """
    n_epochs = len(epochs)
    if n_epochs < 1:
        raise ValueError("need at least one epoch")
    if config.block_length > n_epochs:
        raise ValueError(
            f"block_length {config.block_length} exceeds {n_epochs} epochs"
        )
    p0, fs0 = epochs[0].p, epochs[0].fs
    for ep in epochs:
        if ep.p != p0 or ep.fs != fs0:
            raise ValueError("epochs disagree on channel count or sampling rate")

    rng = np.random.default_rng(config.rng_seed)
    hi = n_epochs - config.block_length + 2  # exclusive upper bound, 1-based
    block_starts = rng.integers(1, hi, size=config.n_blocks)
    m0_draws = [
        rng.uniform(0.1, 1.0, size=(p0, len(bands)))
        for _ in range(config.n_blocks)
    ]

    block_mixings = np.empty((config.n_blocks, p0, len(bands)))
    block_converged = np.empty(config.n_blocks, dtype=bool)
    block_params = []
    final_starts = np.array(block_starts, dtype=np.int64)
    for b in range(config.n_blocks):
        start = int(block_starts[b])
        m0 = MixingMatrix(m0_draws[b])
        try:
            fit = _fit_block(epochs, bands, start, m0, config)
        except (ConditioningError, CollinearityError, OptimizationError,
                InitializationError):
            start = int(rng.integers(1, hi))
            m0 = MixingMatrix(rng.uniform(0.1, 1.0, size=(p0, len(bands))))
            try:
                fit = _fit_block(epochs, bands, start, m0, config)
            except (ConditioningError, CollinearityError, OptimizationError,
                    InitializationError) as exc:
                raise OptimizationError(
                    f"block {b + 1} failed twice (last start {start}): {exc}"
                ) from exc
            final_starts[b] = start
        block_mixings[b] = fit.mixing.values
        block_converged[b] = fit.converged
        block_params.append(fit.params)

    global_mixing = MixingMatrix(block_mixings.mean(axis=0))
    # per-band means of in-box values stay in box
    start_params = EpochParams(
        np.mean([bp.rho for bp in block_params], axis=0),
        float(np.mean([bp.sigma2 for bp in block_params])),
        float(np.mean([bp.tau2 for bp in block_params])),
    )
    params_by_epoch = [
        optimize_epoch_params(ep, global_mixing, bands, start_params, config)
        for ep in epochs
    ]
    return MultiEpochFit(
        global_mixing=global_mixing,
        block_mixings=block_mixings,
        params_by_epoch=params_by_epoch,
        block_starts=final_starts,
        block_converged=block_converged,
    )


def fit_benchmark_ssm(
    epochs: list[EpochSeries],
    bands: tuple[BandSpec, ...],
    config: FitConfig,
) -> BenchmarkFit:
    """Classical baseline: fit each epoch independently from a fresh random
    mixing draw, then average all parameter and mixing estimates."""
    if not epochs:
        raise ValueError("need at least one epoch")
    rng = np.random.default_rng(config.rng_seed)
    per_params = []
    mixes = []
    converged = []
    for ep in epochs:
        m0 = MixingMatrix(rng.uniform(0.1, 1.0, size=(ep.p, len(bands))))
        fit = fit_single_epoch(ep, bands, m0, config)
        per_params.append(fit.params)
        mixes.append(fit.mixing.values)
        converged.append(fit.converged)
    avg = EpochParams(
        np.mean([pr.rho for pr in per_params], axis=0),
        float(np.mean([pr.sigma2 for pr in per_params])),
        float(np.mean([pr.tau2 for pr in per_params])),
    )
    return BenchmarkFit(
        params=avg,
        mixing=MixingMatrix(np.mean(mixes, axis=0)),
        per_epoch_params=per_params,
        converged=np.array(converged),
    )

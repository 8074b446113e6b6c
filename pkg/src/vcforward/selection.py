"""Greedy forward selection with an EBIC/BIC stopping rule.

Each step scores every remaining candidate by the drop in the variance
estimate when its spline block is added to the current model, accepts the
best one, and tracks the information criterion. Selection keeps going until
the criterion has increased for ``patience`` consecutive accepted steps
(small fluctuations are tolerated), then rolls back to the prefix with the
smallest criterion value seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import (
    ConfigError,
    DataError,
    DegenerateCandidateError,
    NoCandidateError,
    NumericalError,
    SingularDesignError,
)
from .regression import (
    RANK_REL_TOL,
    ProjectionCache,
    build_projection_cache,
    extend_cache,
    rss_reduction,
)
from .splines import DesignBlock, SplineBasis, basis_matrix

# Relative slack under which candidate scores count as tied; ties resolve to
# the smallest covariate index.
TIE_REL_TOL = 1e-12

CRITERIA = ("argmin_sigma", "argmax_corr")


def auto_eta(n: int, p: int) -> float:
    """Data-driven EBIC weight 1 - log(n) / (3 log(p)); may be negative."""
    if p <= 1:
        raise ConfigError("automatic eta needs more than one candidate covariate")
    return 1.0 - math.log(n) / (3.0 * math.log(p))


def ebic(sigma_sq: float, set_size: int, n: int, p: int, dim: int, eta: float) -> float:
    """Information criterion n log(sigma_sq) + set_size * dim * (log n + 2 eta log p).

    ``set_size`` counts every covariate in the model, intercept included;
    ``dim`` is the spline dimension, so each covariate costs ``dim``
    coefficients. With eta = 0 this is the BIC.
    """
    if sigma_sq <= 0.0:
        raise NumericalError("variance estimate is zero; the fit is exact")
    if set_size < 0:
        raise ValueError("set_size must be nonnegative")
    penalty = set_size * dim * (math.log(n) + 2.0 * eta * math.log(p))
    return n * math.log(sigma_sq) + penalty


@dataclass(frozen=True)
class EbicConfig:
    """Stopping-rule settings for the forward pass.

    ``eta_rule`` is "explicit" (use ``eta`` as given; 0 = BIC) or "auto"
    (eta = 1 - log n / (3 log p), clamped to [0, 1]). ``patience`` is the
    number of consecutive criterion increases tolerated before stopping.
    ``max_steps`` caps accepted covariates; None uses n // (2 dim) minus the
    initial set size, keeping two observations per coefficient.
    """

    eta: float = 0.0
    eta_rule: str = "explicit"
    patience: int = 5
    max_steps: int | None = None

    def __post_init__(self) -> None:
        if self.eta_rule not in ("explicit", "auto"):
            raise ConfigError(f"eta_rule must be 'explicit' or 'auto', got {self.eta_rule!r}")
        if self.eta_rule == "explicit" and self.eta < 0.0:
            raise ConfigError("eta must be nonnegative")
        if self.patience < 1:
            raise ConfigError("patience must be at least 1")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("max_steps must be nonnegative")

    def resolve_eta(self, n: int, p: int) -> float:
        if self.eta_rule == "explicit":
            return self.eta
        return min(1.0, max(0.0, auto_eta(n, p)))


@dataclass(frozen=True)
class SelectionStep:
    """One accepted candidate: index, model state after acceptance."""

    index: int
    sigma_sq: float
    ebic: float
    delta_rss: float


@dataclass(frozen=True)
class SelectionTrace:
    """Ordered record of a forward pass.

    ``final_set`` is the initial set plus the prefix of accepted indices up
    to the smallest criterion value (rollback). ``stop_reason`` is one of
    "patience_exhausted", "max_steps", "candidates_exhausted", "exact_fit".
    """

    initial_set: tuple[int, ...]
    steps: tuple[SelectionStep, ...]
    final_set: tuple[int, ...]
    stop_reason: str
    sigma_sq_initial: float
    ebic_initial: float
    eta: float

    @property
    def sigma_sq_path(self) -> list[float]:
        return [self.sigma_sq_initial] + [s.sigma_sq for s in self.steps]

    @property
    def ebic_path(self) -> list[float]:
        return [self.ebic_initial] + [s.ebic for s in self.steps]


def _residualize_stack(cache: ProjectionCache, w_stack: np.ndarray) -> np.ndarray:
    """Project the stacked (n, k, dim) candidate blocks off the model span."""
    n, k, dim = w_stack.shape
    wflat = w_stack.reshape(n, k * dim)
    wt_flat = wflat - cache.q @ (cache.q.T @ wflat)
    return wt_flat.reshape(n, k, dim)


def _cross_products(cache: ProjectionCache, wt: np.ndarray, orig_col_max: np.ndarray):
    """Residual cross products and the mask of already-explained candidates."""
    n, k, dim = wt.shape
    u = (wt.reshape(n, k * dim).T @ cache.residual_y).reshape(k, dim)
    res_col = np.einsum("nkl,nkl->kl", wt, wt)
    explained = res_col.max(axis=1) <= RANK_REL_TOL * orig_col_max
    return u, explained


def _sweep(
    cache: ProjectionCache,
    wt: np.ndarray,
    w_raw: np.ndarray,
    orig_col_max: np.ndarray,
    indices: np.ndarray,
):
    """Batched variance-reduction scores from a residualized candidate stack.

    Returns (deltas, gammas); degenerate candidates get delta = -inf.
    Candidates whose residualized Gram fails the pivot check are rescored
    through the scalar path so both routes agree on usability.
    """
    k, dim = wt.shape[1], wt.shape[2]
    u, explained = _cross_products(cache, wt, orig_col_max)
    deltas = np.full(k, -np.inf)
    gammas = np.zeros((k, dim))
    valid = np.nonzero(~explained)[0]
    if valid.size == 0:
        return deltas, gammas

    a = np.matmul(wt.transpose(1, 2, 0), wt.transpose(1, 0, 2))
    ok = np.zeros(valid.size, dtype=bool)
    try:
        chol = np.linalg.cholesky(a[valid])
        piv = np.diagonal(chol, axis1=1, axis2=2)
        ok = piv.min(axis=1) ** 2 > RANK_REL_TOL * piv.max(axis=1) ** 2
    except np.linalg.LinAlgError:
        for i, pos in enumerate(valid):
            try:
                d = np.diag(np.linalg.cholesky(a[pos]))
                ok[i] = d.min() ** 2 > RANK_REL_TOL * d.max() ** 2
            except np.linalg.LinAlgError:
                ok[i] = False

    good = valid[ok]
    if good.size:
        g = np.linalg.solve(a[good], u[good][:, :, None])[:, :, 0]
        deltas[good] = np.maximum(np.einsum("kl,kl->k", g, u[good]), 0.0) / cache.n
        gammas[good] = g
    for pos in valid[~ok]:
        block = DesignBlock(int(indices[pos]), w_raw[:, pos, :])
        try:
            deltas[pos], gammas[pos] = rss_reduction(cache, block)
        except DegenerateCandidateError:
            pass
    return deltas, gammas


def _col_sq_max(w_stack: np.ndarray) -> np.ndarray:
    return np.einsum("nkl,nkl->kl", w_stack, w_stack).max(axis=1)


def _argbest(scores: np.ndarray) -> int:
    """Position of the largest score; near-ties go to the earliest position."""
    smax = scores.max()
    if not np.isfinite(smax):
        raise NoCandidateError("no usable candidate remains")
    tol = TIE_REL_TOL * abs(smax)
    return int(np.nonzero(scores >= smax - tol)[0][0])


def _select_from_resid(
    cache: ProjectionCache,
    wt: np.ndarray,
    w_raw: np.ndarray,
    orig_col_max: np.ndarray,
    indices: np.ndarray,
    criterion: str,
    alive: np.ndarray | None = None,
):
    """Pick the best candidate position in a residualized pool."""
    if criterion == "argmin_sigma":
        deltas, gammas = _sweep(cache, wt, w_raw, orig_col_max, indices)
        if alive is not None:
            deltas[~alive] = -np.inf
        pos = _argbest(deltas)
        return pos, float(deltas[pos]), gammas[pos]
    if criterion == "argmax_corr":
        u, explained = _cross_products(cache, wt, orig_col_max)
        scores = np.linalg.norm(u, axis=1)
        scores[explained] = -np.inf
        if alive is not None:
            scores[~alive] = -np.inf
        while True:
            pos = _argbest(scores)
            block = DesignBlock(int(indices[pos]), w_raw[:, pos, :])
            try:
                delta, gamma = rss_reduction(cache, block)
                return pos, delta, gamma
            except DegenerateCandidateError:
                scores[pos] = -np.inf
    raise ConfigError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")


def select_candidate(
    cache: ProjectionCache,
    candidate_pool,
    criterion: str = "argmin_sigma",
):
    """Choose the best candidate block from the pool.

    Under "argmin_sigma" the winner maximizes the variance reduction
    (equivalently minimizes the extended model's variance estimate); under
    "argmax_corr" it maximizes the norm of the residualized cross product.
    Ties resolve to the smallest covariate index, degenerate candidates are
    skipped, and NoCandidateError is raised when nothing usable remains.

    Returns (covariate_index, delta, gamma) for the winner.
    """
    blocks = list(candidate_pool)
    if not blocks:
        raise NoCandidateError("candidate pool is empty")
    order = sorted(range(len(blocks)), key=lambda i: blocks[i].covariate_index)
    blocks = [blocks[i] for i in order]
    indices = np.array([b.covariate_index for b in blocks])
    w_stack = np.stack([b.matrix for b in blocks], axis=1)
    wt = _residualize_stack(cache, w_stack)
    pos, delta, gamma = _select_from_resid(
        cache, wt, w_stack, _col_sq_max(w_stack), indices, criterion
    )
    return int(indices[pos]), delta, gamma


def _covariate_block(dataset: Dataset, bmat: np.ndarray, j: int) -> DesignBlock:
    return DesignBlock(j, bmat * dataset.x[:, j : j + 1])


def run_forward(
    dataset: Dataset,
    basis: SplineBasis,
    config: EbicConfig,
    initial_set=(0,),
    candidate_pool=None,
    criterion: str = "argmin_sigma",
) -> SelectionTrace:
    """Run the forward pass on a dataset and return its trace.

    Parameters
    ----------
    dataset : Dataset
        Response, index variable and covariates (intercept in column 0).
    basis : SplineBasis
        Basis used for every coefficient function.
    config : EbicConfig
        Stopping-rule settings.
    initial_set : iterable of int
        Covariate indices fixed in the model from the start; defaults to
        the intercept. May be empty.
    candidate_pool : iterable of int, optional
        Restrict candidates to these covariate indices (screening). By
        default every covariate outside the initial set is eligible,
        except constant columns flagged on the dataset.
    criterion : str
        "argmin_sigma" (default) or "argmax_corr".
    """
    if criterion not in CRITERIA:
        raise ConfigError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")
    n, dim = dataset.n, basis.dim
    eta = config.resolve_eta(n, dataset.p)

    initial = tuple(dict.fromkeys(int(j) for j in initial_set))
    for j in initial:
        if not 0 <= j <= dataset.p:
            raise DataError(f"initial covariate index {j} is out of range")
    if candidate_pool is None:
        pool = [
            j
            for j in range(dataset.p + 1)
            if j not in initial and j not in dataset.constant_columns
        ]
    else:
        seen = set(initial)
        pool = []
        for j in candidate_pool:
            j = int(j)
            if not 0 <= j <= dataset.p:
                raise DataError(f"candidate index {j} is out of range")
            if j not in seen:
                pool.append(j)
                seen.add(j)
        pool.sort()

    bmat = basis_matrix(basis, dataset.t)
    cache = build_projection_cache(
        [_covariate_block(dataset, bmat, j) for j in initial], dataset.y
    )

    cap = n // dim - len(initial)
    max_steps = config.max_steps
    if max_steps is None:
        max_steps = n // (2 * dim) - len(initial)
    max_steps = max(0, min(max_steps, cap))

    sigma0 = cache.sigma_sq
    if sigma0 <= 0.0:
        return SelectionTrace(
            initial, (), initial, "exact_fit", sigma0, -math.inf, eta
        )
    ebic0 = ebic(sigma0, len(initial), n, dataset.p, dim, eta)

    pool_idx = np.array(sorted(pool), dtype=int)
    alive = np.ones(pool_idx.size, dtype=bool)
    if pool_idx.size:
        w_pool = bmat[:, None, :] * dataset.x[:, pool_idx, None]
        orig_col_max = _col_sq_max(w_pool)
        # The residualized pool is kept current: after each acceptance only
        # the newly added orthonormal directions are projected out.
        wt_pool = _residualize_stack(cache, w_pool)

    steps: list[SelectionStep] = []
    sigma_prev, ebic_prev = sigma0, ebic0
    best_val, best_len = ebic0, 0
    streak = 0
    stop = None
    while True:
        if len(steps) >= max_steps:
            stop = "max_steps"
            break
        if not alive.any():
            stop = "candidates_exhausted"
            break
        try:
            pos, _, _ = _select_from_resid(
                cache, wt_pool, w_pool, orig_col_max, pool_idx, criterion, alive
            )
        except NoCandidateError:
            stop = "candidates_exhausted"
            break
        j = int(pool_idx[pos])
        block = DesignBlock(j, w_pool[:, pos, :])
        try:
            new_cache = extend_cache(cache, block)
        except SingularDesignError:
            # Borderline candidate slipped through the sweep's rank check;
            # drop it and keep going.
            alive[pos] = False
            continue
        q_new = new_cache.q[:, cache.q.shape[1] :]
        cache = new_cache
        alive[pos] = False
        flat = wt_pool.reshape(dataset.n, -1)
        flat -= q_new @ (q_new.T @ flat)

        sigma = cache.sigma_sq
        delta = sigma_prev - sigma
        if sigma <= 0.0:
            steps.append(SelectionStep(j, sigma, -math.inf, delta))
            best_val, best_len = -math.inf, len(steps)
            stop = "exact_fit"
            break
        e = ebic(sigma, len(initial) + len(steps) + 1, n, dataset.p, dim, eta)
        steps.append(SelectionStep(j, sigma, e, delta))
        if e < best_val:
            best_val, best_len = e, len(steps)
        streak = streak + 1 if e > ebic_prev else 0
        if streak >= config.patience:
            stop = "patience_exhausted"
            break
        sigma_prev, ebic_prev = sigma, e

    final = initial + tuple(s.index for s in steps[:best_len])
    return SelectionTrace(initial, tuple(steps), final, stop, sigma0, ebic0, eta)


def marginal_rank_screen(dataset: Dataset, basis: SplineBasis, keep_k: int) -> list[int]:
    """Rank covariates by the BIC of their single-covariate model.

    Fits {intercept, j} for every covariate j, ranks ascending by BIC
    (ties by index) and returns the best ``keep_k`` indices. The result
    feeds ``run_forward``'s candidate pool.
    """
    if not 1 <= keep_k <= dataset.p:
        raise ConfigError(f"keep_k must be in [1, {dataset.p}], got {keep_k}")
    n, dim = dataset.n, basis.dim
    bmat = basis_matrix(basis, dataset.t)
    cache = build_projection_cache([_covariate_block(dataset, bmat, 0)], dataset.y)
    candidates = np.arange(1, dataset.p + 1)
    w_stack = bmat[:, None, :] * dataset.x[:, candidates, None]
    wt = _residualize_stack(cache, w_stack)
    deltas, _ = _sweep(cache, wt, w_stack, _col_sq_max(w_stack), candidates)

    bic = np.full(candidates.size, np.inf)
    for i, d in enumerate(deltas):
        if not np.isfinite(d):
            continue
        sigma_j = cache.sigma_sq - d
        if sigma_j <= 0.0:
            bic[i] = -np.inf
        else:
            bic[i] = ebic(sigma_j, 2, n, dataset.p, dim, 0.0)
    order = np.argsort(bic, kind="stable")
    return [int(candidates[i]) for i in order[:keep_k]]

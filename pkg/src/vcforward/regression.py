"""Least-squares machinery over blockwise spline designs.

Fits are plain least squares on the stacked design of all selected blocks.
The projection cache keeps an orthonormal basis of the current model's
column space so that scoring a candidate costs one small (dim x dim) solve
instead of a full refit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateCandidateError,
    OverparameterizedError,
    SingularDesignError,
)
from .splines import DesignBlock, SplineBasis, basis_matrix, eval_basis

# Relative tolerance on squared factorization pivots below which a design is
# treated as rank deficient.
RANK_REL_TOL = 1e-10
# Ridge retry scale (times the mean Gram diagonal) used before giving up.
RIDGE_SCALE = 1e-10


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of the covariates in ``index_set``.

    ``gamma`` stacks one spline coefficient vector per covariate, in
    ``index_set`` order. ``sigma_sq`` is the residual sum of squares over n.
    ``rank_ok`` is False when the design needed a ridge fallback.
    """

    index_set: tuple[int, ...]
    gamma: np.ndarray
    sigma_sq: float
    rank_ok: bool


@dataclass(frozen=True)
class ProjectionCache:
    """Orthonormal column basis ``q`` of the current model's design span.

    ``residual_y`` is y minus its projection onto that span and ``sigma_sq``
    its squared norm over n. Immutable: extension returns a new cache.
    """

    index_set: tuple[int, ...]
    q: np.ndarray  # n x m, orthonormal columns
    residual_y: np.ndarray
    sigma_sq: float

    @property
    def n(self) -> int:
        return self.residual_y.shape[0]


def _check_blocks(blocks: list[DesignBlock], y: np.ndarray) -> None:
    n = y.shape[0]
    for b in blocks:
        if b.matrix.shape[0] != n:
            raise ValueError(
                f"block for covariate {b.covariate_index} has {b.matrix.shape[0]} "
                f"rows, expected {n}"
            )


def fit_full(blocks: list[DesignBlock], y: np.ndarray) -> FitResult:
    """Least-squares fit of y on the stacked blocks.

    Returns coefficients and the variance estimate sigma_sq = RSS / n.
    Raises OverparameterizedError when the stacked design has more columns
    than rows, SingularDesignError when it is rank deficient even after a
    tiny ridge retry (in which case a plain deficient solve is not returned).
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if not blocks:
        return FitResult((), np.empty(0), float(y @ y) / n, True)
    _check_blocks(blocks, y)
    w = np.hstack([b.matrix for b in blocks])
    if w.shape[1] > n:
        raise OverparameterizedError(
            f"{w.shape[1]} coefficients for {n} observations"
        )
    q, r, piv = scipy.linalg.qr(w, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    rank_ok = bool(d[-1] ** 2 > RANK_REL_TOL * d[0] ** 2) if d[0] > 0 else False
    if rank_ok:
        gamma_piv = scipy.linalg.solve_triangular(r, q.T @ y)
        gamma = np.empty_like(gamma_piv)
        gamma[piv] = gamma_piv
    else:
        gram = w.T @ w
        ridge = RIDGE_SCALE * float(np.mean(np.diag(gram)))
        if ridge <= 0.0:
            raise SingularDesignError("design is identically zero")
        try:
            gamma = scipy.linalg.solve(
                gram + ridge * np.eye(gram.shape[0]), w.T @ y, assume_a="pos"
            )
        except scipy.linalg.LinAlgError as exc:
            raise SingularDesignError("rank-deficient design") from exc
    resid = y - w @ gamma
    sigma_sq = float(resid @ resid) / n
    return FitResult(tuple(b.covariate_index for b in blocks), gamma, sigma_sq, rank_ok)


def _append_orthonormal(q: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Orthonormalize ``block`` against ``q`` and append the new columns.

    Projects twice (classical Gram-Schmidt with reorthogonalization) before
    the QR step to keep the accumulated basis orthonormal to round-off.
    """
    v = block - q @ (q.T @ block)
    v -= q @ (q.T @ v)
    qn, r = np.linalg.qr(v)
    d = np.abs(np.diag(r))
    col_scale = np.linalg.norm(block, axis=0).max()
    if col_scale <= 0.0 or d.min() ** 2 <= RANK_REL_TOL * col_scale**2:
        raise SingularDesignError(
            "block is numerically collinear with the current design"
        )
    return np.hstack([q, qn])


def build_projection_cache(blocks: list[DesignBlock], y: np.ndarray) -> ProjectionCache:
    """Factor the span of the given blocks and residualize y against it."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    _check_blocks(blocks, y)
    m_total = sum(b.matrix.shape[1] for b in blocks)
    if m_total > n:
        raise OverparameterizedError(f"{m_total} coefficients for {n} observations")
    q = np.zeros((n, 0))
    for b in blocks:
        q = _append_orthonormal(q, b.matrix)
    resid = y - q @ (q.T @ y)
    resid -= q @ (q.T @ resid)
    return ProjectionCache(
        tuple(b.covariate_index for b in blocks), q, resid, float(resid @ resid) / n
    )


def extend_cache(cache: ProjectionCache, block: DesignBlock) -> ProjectionCache:
    """Return a new cache with ``block`` absorbed into the model span."""
    q = _append_orthonormal(cache.q, block.matrix)
    qn = q[:, cache.q.shape[1] :]
    resid = cache.residual_y - qn @ (qn.T @ cache.residual_y)
    return ProjectionCache(
        cache.index_set + (block.covariate_index,),
        q,
        resid,
        float(resid @ resid) / cache.n,
    )


def rss_reduction(cache: ProjectionCache, block: DesignBlock) -> tuple[float, np.ndarray]:
    """Variance drop from adding ``block`` to the cached model.

    Returns (delta, gamma) with delta = sigma_sq(S) - sigma_sq(S + block)
    >= 0 and gamma the fitted spline coefficients of the candidate in the
    extended model. Raises DegenerateCandidateError when the residualized
    block is numerically rank deficient.
    """
    w = block.matrix
    wt = w - cache.q @ (cache.q.T @ w)
    res_sq = np.einsum("ij,ij->j", wt, wt)
    orig_sq = np.einsum("ij,ij->j", w, w)
    if res_sq.max(initial=0.0) <= RANK_REL_TOL * orig_sq.max(initial=0.0):
        raise DegenerateCandidateError(
            f"candidate {block.covariate_index} lies in the current design span"
        )
    q2, r2, piv = scipy.linalg.qr(wt, mode="economic", pivoting=True)
    d = np.abs(np.diag(r2))
    if d[-1] ** 2 > RANK_REL_TOL * d[0] ** 2:
        z = q2.T @ cache.residual_y
        delta = float(z @ z) / cache.n
        gamma_piv = scipy.linalg.solve_triangular(r2, z)
        gamma = np.empty_like(gamma_piv)
        gamma[piv] = gamma_piv
        return delta, gamma
    # Ridge retry on the residualized Gram before declaring the candidate
    # degenerate.
    gram = wt.T @ wt
    ridge = RIDGE_SCALE * float(np.mean(np.diag(gram)))
    try:
        c, low = scipy.linalg.cho_factor(gram + ridge * np.eye(gram.shape[0]))
    except scipy.linalg.LinAlgError as exc:
        raise DegenerateCandidateError(
            f"candidate {block.covariate_index} is collinear with the model"
        ) from exc
    b = wt.T @ cache.residual_y
    gamma = scipy.linalg.cho_solve((c, low), b)
    return float(gamma @ b) / cache.n, gamma


def score_candidate_alt(cache: ProjectionCache, block: DesignBlock) -> float:
    """Norm of the residualized block against the residualized response.

    Alternative forward criterion (inner-product based, sequential-Lasso
    style); exposed for comparison runs.
    """
    wt = block.matrix - cache.q @ (cache.q.T @ block.matrix)
    return float(np.linalg.norm(wt.T @ cache.residual_y))


def predict(fit: FitResult, basis: SplineBasis, t: float, x_values: np.ndarray) -> float:
    """Predicted response at a single (t, x) point.

    ``x_values`` holds the covariate values aligned with ``fit.index_set``
    (including a 1.0 for the intercept column when present).
    """
    b = eval_basis(basis, t)
    x = np.asarray(x_values, dtype=float)
    if x.shape != (len(fit.index_set),):
        raise ValueError(
            f"expected {len(fit.index_set)} covariate values, got {x.shape}"
        )
    gamma = fit.gamma.reshape(len(fit.index_set), basis.dim)
    return float((gamma @ b) @ x)


def predict_response(
    fit: FitResult, basis: SplineBasis, t_values: np.ndarray, x: np.ndarray
) -> np.ndarray:
    """Vectorized prediction; ``x`` is the full n x (p+1) covariate matrix."""
    bmat = basis_matrix(basis, t_values)
    gamma = fit.gamma.reshape(len(fit.index_set), basis.dim)
    yhat = np.zeros(bmat.shape[0])
    for k, j in enumerate(fit.index_set):
        yhat += (bmat @ gamma[k]) * x[:, j]
    return yhat


def coefficient_curve(
    fit: FitResult, basis: SplineBasis, j: int, grid: np.ndarray
) -> np.ndarray:
    """Fitted coefficient function of covariate ``j`` on the grid."""
    if j not in fit.index_set:
        raise KeyError(f"covariate {j} is not in the fitted set {fit.index_set}")
    k = fit.index_set.index(j)
    gamma_j = fit.gamma[k * basis.dim : (k + 1) * basis.dim]
    return basis_matrix(basis, grid) @ gamma_j

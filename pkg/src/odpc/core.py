"""Alternating least-squares fit of a single one-sided dynamic component.

The component at period t is a linear combination of the panel rows
z_t .. z_{t-k1}; each series is reconstructed from an intercept plus k2 lags
of the component. Both subproblems have closed-form least-squares solutions:
the loadings given the component series, and the combination weights given
the loadings. ``fit_component`` alternates them, renormalizing the weights to
unit norm after every update (the loadings absorb the scale, so the recorded
MSE sequence is nonincreasing), until the relative MSE improvement drops
below the tolerance or the iteration cap is hit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .panel import (
    LaggedDesign,
    TimeSeriesPanel,
    build_f_matrix,
    build_lagged_design,
)

__all__ = [
    "DegenerateDataError",
    "FitOptions",
    "ODPCComponent",
    "reconstruction_mse",
    "update_D",
    "update_a",
    "coordinate_descent_a",
    "initialize_component",
    "fit_component",
    "FULL_LS_MAX_WEIGHTS",
]

# Weight-vector size above which the default a-update switches from the full
# least-squares solve to one coordinate-descent sweep per iteration.
FULL_LS_MAX_WEIGHTS = 200

A_UPDATE_MODES = ("auto", "full_least_squares", "coordinate_descent")


class DegenerateDataError(RuntimeError):
    """The data admits no well-posed fit (constant panel, zero loadings, ...)."""


@dataclass(frozen=True)
class FitOptions:
    """Knobs for the alternating least-squares loop.

    tolerance
        Stop once the relative MSE decrease between consecutive iterations is
        at most this value. Must lie in (0, 1).
    max_iterations
        Hard cap on alternating iterations.
    a_update
        "full_least_squares" solves the weight subproblem exactly each
        iteration, "coordinate_descent" performs one exact sweep over the
        coordinates instead, "auto" (default) picks full least squares while
        m(k1+1) <= 200 and coordinate descent above.
    f_initial
        Optional user-supplied starting component series (length T - k1).
        Default starts from the first ordinary principal component scores.
    """

    tolerance: float = 1e-4
    max_iterations: int = 500
    a_update: str = "auto"
    f_initial: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError(f"tolerance must be in (0, 1), got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.a_update not in A_UPDATE_MODES:
            raise ValueError(f"a_update must be one of {A_UPDATE_MODES}, got {self.a_update!r}")


@dataclass(frozen=True)
class ODPCComponent:
    """One fitted component.

    ``a`` has unit norm and its largest-magnitude entry is positive (first
    such entry on ties), so repeated fits are comparable. ``alpha`` is the
    per-series intercept, ``B`` the (k2+1) x m loading matrix and ``f`` the
    component series over t = k1+1..T. ``mse`` is the in-sample
    reconstruction MSE at (a, alpha, B); ``mse_path`` records it per
    iteration. ``rank_deficient`` flags that some least-squares subproblem
    fell back to the minimum-norm pseudo-inverse solution.
    """

    a: np.ndarray
    alpha: np.ndarray
    B: np.ndarray
    f: np.ndarray
    k1: int
    k2: int
    mse: float
    iterations: int
    converged: bool
    mse_path: tuple[float, ...] = ()
    rank_deficient: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("a", "alpha", "B", "f"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def D(self) -> np.ndarray:
        """Stacked loading matrix: intercept row on top of B."""
        return np.vstack([self.alpha, self.B])

    def to_dict(self) -> dict:
        return {
            "k1": self.k1,
            "k2": self.k2,
            "a": self.a.tolist(),
            "alpha": self.alpha.tolist(),
            "B": self.B.tolist(),
            "mse": self.mse,
            "iterations": self.iterations,
            "converged": self.converged,
            "f": self.f.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ODPCComponent":
        return cls(
            a=np.array(d["a"], dtype=float),
            alpha=np.array(d["alpha"], dtype=float),
            B=np.array(d["B"], dtype=float),
            f=np.array(d["f"], dtype=float),
            k1=int(d["k1"]),
            k2=int(d["k2"]),
            mse=float(d["mse"]),
            iterations=int(d["iterations"]),
            converged=bool(d["converged"]),
        )


def _lstsq(A: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-norm least squares with the max(M, N) * eps singular-value cutoff."""
    sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    return sol, int(rank)


def reconstruction_mse(design: LaggedDesign, a, alpha, B) -> float:
    """In-sample MSE of the reconstruction implied by (a, alpha, B).

    Returns ``sum_j sum_t (z_{t,j} - alpha_j - sum_h B[h,j] f_{t-h})^2``
    divided by the number of reconstructed periods, t running over the last
    ``T - (k1 + k2)`` rows.
    """
    a = np.asarray(a, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    B = np.asarray(B, dtype=float)
    n, m, p = design.n_periods, design.m, design.n_weights
    if a.shape != (p,):
        raise ValueError(f"a has shape {a.shape}, expected ({p},)")
    if alpha.shape != (m,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({m},)")
    if B.shape != (design.k2 + 1, m):
        raise ValueError(f"B has shape {B.shape}, expected ({design.k2 + 1}, {m})")
    g = design.blocks() @ a                      # (k2+1, n) lagged component columns
    resid = design.Z_target - alpha - g.T @ B
    return float(resid.ravel() @ resid.ravel()) / n


def update_D(F: np.ndarray, Z_target: np.ndarray) -> np.ndarray:
    """Least-squares loadings for a fixed component: minimize ||Z - F D||_F.

    Row 0 of the result is the intercept vector, the remaining rows the
    loading matrix B. Rank-deficient F falls back to the minimum-norm
    solution.
    """
    D, _ = _lstsq(np.asarray(F, dtype=float), np.asarray(Z_target, dtype=float))
    return D


def _require_loadings(B: np.ndarray) -> None:
    if not B.any():
        raise DegenerateDataError(
            "degenerate loadings: B is zero, the objective does not depend on the weights")


def _split_D(D) -> tuple[np.ndarray, np.ndarray]:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] < 2:
        raise ValueError(f"D must be (k2+2) x m with k2 >= 0, got shape {D.shape}")
    return D[0], D[1:]


def _normalize_sign(a_raw: np.ndarray) -> tuple[np.ndarray, float]:
    """Rescale to unit norm, largest-|entry| positive. Returns (a, signed scale)."""
    nrm = float(np.linalg.norm(a_raw))
    if nrm == 0.0 or not np.isfinite(nrm):
        raise DegenerateDataError("weight update produced a zero or non-finite vector")
    a = a_raw / nrm
    if a[int(np.argmax(np.abs(a)))] < 0:
        a = -a
        nrm = -nrm
    return a, nrm


def _a_full_least_squares(B, blocks, Z_target, alpha) -> np.ndarray:
    """Exact weight update for fixed loadings, before normalization.

    The per-series design is the loading-weighted sum of the lag blocks, so
    the stacked system is assembled directly instead of forming the sparse
    Kronecker factor.
    """
    _require_loadings(B)
    M = np.tensordot(B, blocks, axes=(0, 0))      # (m, n, p): series j gets sum_h B[h,j] block_h
    y = (Z_target - alpha).T                      # (m, n)
    p = blocks.shape[2]
    sol, _ = _lstsq(M.reshape(-1, p), y.reshape(-1))
    return sol


def _lag_block_grams(blocks: np.ndarray) -> np.ndarray:
    """Pairwise Gram matrices block_h' block_g; fixed across iterations."""
    k, _, p = blocks.shape
    G = np.empty((k, k, p, p))
    for h in range(k):
        for g in range(h, k):
            prod = blocks[h].T @ blocks[g]
            G[h, g] = prod
            if g != h:
                G[g, h] = prod.T
    return G


def _normal_equations(B, blocks, Z_target, alpha, grams) -> tuple[np.ndarray, np.ndarray]:
    """Gram matrix and right-hand side of the weight subproblem."""
    W = B @ B.T
    A = np.einsum("hg,hgij->ij", W, grams)
    ZBt = Z_target @ B.T                          # column h = Z @ B[h]
    ab = alpha @ B.T
    b = np.zeros(blocks.shape[2])
    for h in range(blocks.shape[0]):
        b += blocks[h].T @ ZBt[:, h] - ab[h] * blocks[h].sum(axis=0)
    return A, b


def _coordinate_sweep(A: np.ndarray, b: np.ndarray, a: np.ndarray) -> np.ndarray:
    """One exact coordinate-descent sweep on a'Aa - 2b'a; never increases it."""
    a = a.astype(float, copy=True)
    g = A @ a
    for c in range(a.size):
        diag = A[c, c]
        if diag <= 0.0:
            continue
        delta = (b[c] - g[c]) / diag
        if delta != 0.0:
            a[c] += delta
            g += delta * A[:, c]
    return a


def update_a(D, C, Z_target) -> np.ndarray:
    """Least-squares weight update for fixed loadings, rescaled to unit norm.

    Solves the stacked regression of the centered target series on the
    loading-weighted lag blocks (minimum-norm on rank deficiency) and applies
    the largest-|entry|-positive sign convention.
    """
    alpha, B = _split_D(D)
    C = np.asarray(C, dtype=float)
    Z_target = np.asarray(Z_target, dtype=float)
    blocks = C.reshape(B.shape[0], -1, C.shape[1])
    a_raw = _a_full_least_squares(B, blocks, Z_target, alpha)
    return _normalize_sign(a_raw)[0]


def coordinate_descent_a(D, C, Z_target, a_current) -> np.ndarray:
    """One full coordinate-descent sweep from ``a_current``, then renormalize.

    Each coordinate is set to its exact univariate optimum given the others,
    so the sweep never increases the pre-normalization objective.
    """
    alpha, B = _split_D(D)
    _require_loadings(B)
    C = np.asarray(C, dtype=float)
    Z_target = np.asarray(Z_target, dtype=float)
    a_current = np.asarray(a_current, dtype=float)
    if a_current.shape != (C.shape[1],):
        raise ValueError(f"a_current has shape {a_current.shape}, expected ({C.shape[1]},)")
    blocks = C.reshape(B.shape[0], -1, C.shape[1])
    A, b = _normal_equations(B, blocks, Z_target, alpha, _lag_block_grams(blocks))
    a_raw = _coordinate_sweep(A, b, a_current)
    return _normalize_sign(a_raw)[0]


def initialize_component(panel: TimeSeriesPanel, k1: int) -> np.ndarray:
    """Starting component: last T - k1 first-principal-component scores.

    Scores are taken on the column-centered panel; the sign is fixed so the
    score series covaries positively with series 1 (zero covariance falls
    back to a positive first entry). A panel with no variation around its
    column means is rejected.
    """
    values = panel.values
    centered = values - values.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(1.0, float(np.abs(values).max()))
    if s[0] <= max(values.shape) * np.finfo(float).eps * scale:
        raise DegenerateDataError("degenerate panel: no variation around the column means")
    scores = centered @ vt[0]
    cov = float(scores @ centered[:, 0])
    if cov < 0 or (cov == 0 and scores[0] < 0):
        scores = -scores
    return scores[k1:]


def fit_component(panel: TimeSeriesPanel, k1: int, k2: int,
                  options: FitOptions | None = None) -> ODPCComponent:
    """Fit one component by alternating least squares.

    Each iteration refits the loadings for the current component series,
    updates the weights (exactly, or by one coordinate-descent sweep),
    renormalizes the weights while rescaling the loadings to compensate, and
    recomputes the component series and MSE. Stops when the relative MSE
    decrease is at most ``options.tolerance`` (``converged=True``) or after
    ``options.max_iterations`` iterations (``converged=False``).

    Raises
    ------
    ValueError
        If the panel is too short for the requested lags.
    DegenerateDataError
        If the panel is constant or a weight update is ill-posed.
    """
    opts = options if options is not None else FitOptions()
    design = build_lagged_design(panel, k1, k2)
    n, p = design.n_periods, design.n_weights
    blocks = design.blocks()

    mode = opts.a_update
    if mode == "auto":
        mode = "full_least_squares" if p <= FULL_LS_MAX_WEIGHTS else "coordinate_descent"

    if opts.f_initial is not None:
        f = np.asarray(opts.f_initial, dtype=float)
        if f.shape != (panel.T - k1,):
            raise ValueError(
                f"initial component must have length T - k1 = {panel.T - k1}, got {f.size}")
    else:
        f = initialize_component(panel, k1)

    grams = _lag_block_grams(blocks) if mode == "coordinate_descent" else None

    a = np.zeros(p)
    alpha = None
    B = None
    rank_deficient = False
    mse_path: list[float] = []
    converged = False

    for _ in range(opts.max_iterations):
        F = build_f_matrix(f, k1, k2)
        D, rank = _lstsq(F, design.Z_target)
        rank_deficient = rank_deficient or rank < k2 + 2
        alpha, B = D[0], D[1:]
        _require_loadings(B)
        if mode == "full_least_squares":
            a_raw = _a_full_least_squares(B, blocks, design.Z_target, alpha)
        else:
            A, b = _normal_equations(B, blocks, design.Z_target, alpha, grams)
            a_raw = _coordinate_sweep(A, b, a)
        a, scale = _normalize_sign(a_raw)
        B = scale * B                              # keeps the reconstruction unchanged
        f = design.lagged @ a
        g = blocks @ a
        resid = design.Z_target - alpha - g.T @ B
        mse_path.append(float(resid.ravel() @ resid.ravel()) / n)
        if len(mse_path) >= 2:
            prev, cur = mse_path[-2], mse_path[-1]
            if prev <= 0.0 or (prev - cur) / prev <= opts.tolerance:
                converged = True
                break

    return ODPCComponent(
        a=a, alpha=alpha, B=B, f=f, k1=design.k1, k2=design.k2,
        mse=mse_path[-1], iterations=len(mse_path), converged=converged,
        mse_path=tuple(mse_path), rank_deficient=rank_deficient)

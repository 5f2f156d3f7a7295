"""Moments, means, kernel integrals, and exact Wasserstein distances for
equal-weight empirical measures.

Every reduction that can feed the particle dynamics sums in ascending
sample index order (ordered_sum) so results do not depend on how the
work was split across threads.
"""

import logging
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from dsmve.errors import DomainError, UsageError
from dsmve.models.measure import EmpiricalMeasure

log = logging.getLogger("dsmve.measure")

# largest N wasserstein_assignment will build an N x N cost matrix for
ASSIGNMENT_MAX_N = 2048


def ordered_sum(values: np.ndarray, axis: int = 0) -> np.ndarray:
    "left-to-right sum along axis (np.cumsum is strictly sequential)"
    values = np.asarray(values, dtype=np.float64)
    if values.shape[axis] == 0:
        return np.sum(values, axis=axis)
    return np.take(np.cumsum(values, axis=axis), -1, axis=axis)


def ordered_mean(values: np.ndarray, axis: int = 0) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return ordered_sum(values, axis=axis) / values.shape[axis]


def norms(points: np.ndarray) -> np.ndarray:
    "Euclidean norms of the rows of an N x d array"
    points = np.asarray(points, dtype=np.float64)
    if points.shape[-1] == 1:
        return np.abs(points[..., 0])
    return np.linalg.norm(points, axis=-1)


def _check_order(p: float, name: str = "p") -> None:
    if not p >= 1:
        raise DomainError(f"{name} must be >= 1 got {p!r}")


def _check_same_size(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> None:
    if mu.size != nu.size:
        raise UsageError(f"need equal sample counts got {mu.size} and {nu.size}")
    if mu.dim != nu.dim:
        raise UsageError(f"need equal dimensions got {mu.dim} and {nu.dim}")


def moment(mu: EmpiricalMeasure, q: float) -> float:
    "((1/N) sum_j |x_j|^q)^(1/q)"
    _check_order(q, "q")
    return float(ordered_mean(norms(mu.samples) ** q) ** (1.0 / q))


def wasserstein_1d(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: float) -> float:
    """exact W_p between equal-size measures on the line: the sorted
    (monotone) coupling is optimal
    """
    _check_order(p)
    _check_same_size(mu, nu)
    if mu.dim != 1:
        raise UsageError(f"wasserstein_1d needs one dimensional measures got dim={mu.dim}")
    diffs = np.sort(mu.samples[:, 0]) - np.sort(nu.samples[:, 0])
    return float(ordered_mean(np.abs(diffs) ** p) ** (1.0 / p))


def cost_matrix(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: float) -> np.ndarray:
    "C[i][j] = |x_i - y_j|^p"
    return norms(mu.samples[:, None, :] - nu.samples[None, :, :]) ** p


def lowest_column_ties(costs: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Rewrites an optimal assignment so ties go to the lowest column index.

    Exchanges the columns of rows i < k whenever row k holds the lower
    column and the exchange does not raise the total cost, until no such
    pair is left. Every exchange makes cols lexicographically smaller.
    """
    cols = np.array(cols, copy=True)
    n = len(cols)
    changed = True
    while changed:
        changed = False
        for i in range(n - 1):
            while True:
                later = np.arange(i + 1, n)
                current = costs[i, cols[i]] + costs[later, cols[later]]
                swapped = costs[i, cols[later]] + costs[later, cols[i]]
                candidates = later[(cols[later] < cols[i]) & (swapped <= current)]
                if not candidates.size:
                    break
                k = candidates[np.argmin(cols[candidates])]
                cols[i], cols[k] = cols[k], cols[i]
                changed = True
    return cols


def optimal_assignment(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: float) -> Tuple[np.ndarray, float]:
    """Returns the optimal permutation (mu sample i is coupled to nu sample
    perm[i]) and the mean transport cost. Ties go to the lowest column
    index (see lowest_column_ties).
    """
    _check_order(p)
    _check_same_size(mu, nu)
    if mu.size > ASSIGNMENT_MAX_N:
        raise UsageError(
            f"assignment needs an N x N cost matrix and N={mu.size} exceeds {ASSIGNMENT_MAX_N}; "
            "use wasserstein_1d for one dimensional measures or subsample"
        )
    costs = cost_matrix(mu, nu, p)
    rows, cols = linear_sum_assignment(costs)
    cols = lowest_column_ties(costs, cols)
    # rows come back sorted so the total sums in ascending index order
    return cols, float(ordered_mean(costs[rows, cols]))


def wasserstein_assignment(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: float) -> float:
    "exact W_p via the linear assignment problem (optimal couplings are permutations)"
    _, mean_cost = optimal_assignment(mu, nu, p)
    return mean_cost ** (1.0 / p)


def wasserstein(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: float) -> float:
    "picks the sorting fast path in one dimension"
    if mu.dim == 1 and nu.dim == 1:
        return wasserstein_1d(mu, nu, p)
    return wasserstein_assignment(mu, nu, p)


def mean(mu: EmpiricalMeasure) -> np.ndarray:
    "coordinatewise average in ascending sample order"
    return ordered_mean(mu.samples, axis=0)


def integrate(f: Callable[[np.ndarray], np.ndarray], mu: EmpiricalMeasure) -> np.ndarray:
    "(1/N) sum_j f(x_j)"
    values = np.stack([np.atleast_1d(np.asarray(f(x), dtype=np.float64)) for x in mu.samples])
    return ordered_mean(values, axis=0)


def pairwise_integral(
    pair_fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray, mu: EmpiricalMeasure
) -> np.ndarray:
    """For each row x_i of points (K x d) returns (1/N) sum_j pair_fn(x_i - y_j)
    where pair_fn maps a K x N x d array of differences to K x N x d values.
    Rows are independent so any split of points gives identical results.
    """
    points = np.asarray(points, dtype=np.float64)
    diffs = points[:, None, :] - mu.samples[None, :, :]
    return ordered_mean(pair_fn(diffs), axis=1)

"""Independent reference implementations used to freeze expected test values.

Everything here deliberately avoids the code paths under test: the QP oracle
is an accelerated projected-gradient method, the KS oracle enumerates
permutations, the inversion counter is a double loop, and the BTL oracle is a
grid search on the simplex.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def project_box_hyperplane(v: np.ndarray, y: np.ndarray, box: float) -> np.ndarray:
    """Euclidean projection onto {0 <= a <= box, y . a = 0} by bisection."""
    lo = -(np.max(np.abs(v)) + box + 1.0)
    hi = -lo

    def constraint(lam: float) -> float:
        return float(y @ np.clip(v - lam * y, 0.0, box))

    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if constraint(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * y, 0.0, box)


def projected_gradient_qp(kernel: np.ndarray, labels: np.ndarray, box: float,
                          block: int = 2000, max_blocks: int = 50) -> np.ndarray:
    """Accelerated projected gradient on the SVM dual (maximization form).

    Runs in blocks until the objective stabilizes below 1e-12 per block.
    """
    y = np.asarray(labels, dtype=float)
    Q = np.asarray(kernel, dtype=float) * np.outer(y, y)
    step = 1.0 / (float(np.linalg.eigvalsh(Q).max()) + 1e-9)

    def objective(a: np.ndarray) -> float:
        return float(a.sum() - 0.5 * a @ Q @ a)

    x = np.zeros(y.size)
    z = x.copy()
    t = 1.0
    best = objective(x)
    for _ in range(max_blocks):
        block_start = best
        for _ in range(block):
            grad = Q @ z - 1.0
            x_new = project_box_hyperplane(z - step * grad, y, box)
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            x, t = x_new, t_new
            best = max(best, objective(x))
        if best - block_start < 1e-12:
            break
    return x


def ks_exact_permutation_p(a, b) -> float:
    """Exact permutation p-value P(D >= observed) for the two-sample KS test."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pooled = np.concatenate([a, b])
    n = a.size

    def statistic(x: np.ndarray, y: np.ndarray) -> float:
        xs, ys = np.sort(x), np.sort(y)
        points = np.concatenate([xs, ys])
        cdf_x = np.searchsorted(xs, points, side="right") / xs.size
        cdf_y = np.searchsorted(ys, points, side="right") / ys.size
        return float(np.max(np.abs(cdf_x - cdf_y)))

    observed = statistic(a, b)
    total = 0
    at_least = 0
    for chosen in combinations(range(pooled.size), n):
        mask = np.zeros(pooled.size, dtype=bool)
        mask[list(chosen)] = True
        total += 1
        if statistic(pooled[mask], pooled[~mask]) >= observed - 1e-12:
            at_least += 1
    return at_least / total


def brute_force_ranking_loss(pi, pi_star) -> float:
    """Discordant-pair count by double loop, normalized by n(n-1)/2."""
    pi = list(pi)
    pi_star = list(pi_star)
    n = len(pi)
    discordant = 0
    for i in range(n):
        for j in range(n):
            if pi[i] < pi[j] and pi_star[i] > pi_star[j]:
                discordant += 1
    return discordant / (n * (n - 1) / 2)


def btl_grid_argmax(pref: np.ndarray, resolution: float = 1e-3) -> np.ndarray:
    """Grid-search maximizer of the BTL likelihood on the 3-simplex."""
    assert pref.shape == (3, 3)
    ticks = np.arange(resolution, 1.0, resolution)
    t1, t2 = np.meshgrid(ticks, ticks, indexing="ij")
    t1 = t1.ravel()
    t2 = t2.ravel()
    t3 = 1.0 - t1 - t2
    keep = t3 >= resolution - 1e-12
    t1, t2, t3 = t1[keep], t2[keep], t3[keep]
    theta = np.stack([t1, t2, t3], axis=1)

    loglik = np.zeros(theta.shape[0])
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            loglik += pref[i, j] * (np.log(theta[:, i]) - np.log(theta[:, i] + theta[:, j]))
    return theta[int(np.argmax(loglik))]

"""Causal UDAG learning under additive noise.

Each candidate graph is scored by regressing every node on its parents and
neighbours and testing the residuals for joint independence with a d-variable
HSIC test.  The learner returns the simplest graph with the highest p-value.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Protocol, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.stats import gamma

from .graph import Udag, UdagError, members

log = logging.getLogger(__name__)

MAX_ANM_NODES = 5
P_VALUE_RTOL = 1e-9


class TooFewSamples(UdagError):
    pass


class DegenerateColumn(UdagError):
    pass


class TooLarge(UdagError):
    pass


@dataclass
class Dataset:
    names: list[str]
    data: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != len(self.names):
            raise ValueError("data must be (m, d) with one column per name")
        if not np.isfinite(self.data).all():
            raise ValueError("dataset contains missing or non-finite values")

    @property
    def m(self) -> int:
        return self.data.shape[0]

    def column(self, i: int) -> np.ndarray:
        return self.data[:, i]

    def standardize(self) -> "Dataset":
        if self.standardized:
            return self
        sd = self.data.std(axis=0)
        if (sd == 0).any():
            bad = [self.names[i] for i in np.flatnonzero(sd == 0)]
            raise DegenerateColumn(f"zero-variance columns: {bad}")
        return Dataset(self.names, (self.data - self.data.mean(axis=0)) / sd, standardized=True)


# -- kernels ------------------------------------------------------------------------

def _sq_dists(X: np.ndarray) -> np.ndarray:
    X = X.reshape(len(X), -1)
    return squareform(pdist(X, "sqeuclidean"))


def median_bandwidth(d2: np.ndarray) -> float:
    """``sqrt(median(squared distance) / 2)`` over distinct pairs with positive distance."""
    upper = d2[np.triu_indices(len(d2), 1)]
    upper = upper[upper > 0]
    if upper.size == 0:
        return 1.0
    return float(np.sqrt(0.5 * np.median(upper)))


def gaussian_gram(X: np.ndarray) -> np.ndarray:
    d2 = _sq_dists(X)
    sigma = median_bandwidth(d2)
    return np.exp(-d2 / (2.0 * sigma * sigma))


# -- regression ----------------------------------------------------------------------

class Regressor(Protocol):
    def fit_predict(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True)
class KernelRidge:
    """Gaussian-kernel ridge regression with median-heuristic bandwidth.

    The ridge term defaults to ``1e-3 * m``.  An intercept and a linear term
    in the predictors are fitted without penalty alongside the kernel part,
    so affine relations are reproduced exactly.
    """

    ridge_per_sample: float = 1e-3
    affine: bool = True

    def fit_predict(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        X = X.reshape(len(y), -1)
        m = len(y)
        K = gaussian_gram(X)
        lam = self.ridge_per_sample * m
        if not self.affine:
            alpha = np.linalg.solve(K + lam * np.eye(m), y)
            return K @ alpha
        P = np.column_stack([np.ones(m), X])
        k = P.shape[1]
        # [K + lam I, P; P', 0] [alpha; beta] = [y; 0]
        A = np.zeros((m + k, m + k))
        A[:m, :m] = K + lam * np.eye(m)
        A[:m, m:] = P
        A[m:, :m] = P.T
        sol = np.linalg.lstsq(A, np.concatenate([y, np.zeros(k)]), rcond=None)[0] \
            if np.linalg.matrix_rank(P) < k else np.linalg.solve(A, np.concatenate([y, np.zeros(k)]))
        return K @ sol[:m] + P @ sol[m:]


REGRESSORS = {"kridge": KernelRidge}


def regress_residuals(target: np.ndarray, predictors: np.ndarray | None,
                      regressor: Regressor | None = None) -> np.ndarray:
    """Residuals of a nonlinear regression of ``target`` on ``predictors`` (columns).

    Constant predictors are dropped; with no predictors the residual is the
    centred target.
    """
    target = np.asarray(target, dtype=float)
    if target.std() == 0:
        raise DegenerateColumn("target has zero variance")
    if predictors is not None:
        predictors = np.asarray(predictors, dtype=float).reshape(len(target), -1)
        keep = predictors.std(axis=0) > 0
        if not keep.all():
            log.warning("dropping %d constant predictor column(s)", int((~keep).sum()))
        predictors = predictors[:, keep]
    if predictors is None or predictors.shape[1] == 0:
        return target - target.mean()
    regressor = regressor or KernelRidge()
    return target - regressor.fit_predict(predictors, target)


# -- joint independence test -----------------------------------------------------------

def dhsic_statistic(grams: Sequence[np.ndarray]) -> float:
    """``m`` times the V-statistic estimate of d-variable HSIC."""
    m = grams[0].shape[0]
    term1 = np.mean(np.prod(grams, axis=0))
    term2 = np.prod([K.mean() for K in grams])
    term3 = 2.0 * np.mean(np.prod([K.mean(axis=1) for K in grams], axis=0))
    return float(m * (term1 + term2 - term3))


def _sum_over_subsets(inside: np.ndarray, outside: np.ndarray) -> float:
    """``sum over S, |S| >= 2, of prod_{j in S} inside_j * prod_{j not in S} outside_j``."""
    total = float(np.prod(inside + outside))
    total -= float(np.prod(outside))
    for j in range(len(inside)):
        total -= float(inside[j] * np.prod(np.delete(outside, j)))
    return total


def dhsic_gamma_pvalue(grams: Sequence[np.ndarray]) -> float:
    """Gamma approximation to the null of ``m * dHSIC``.

    With ``a_j`` the off-diagonal mean of kernel ``j`` and ``e_j`` the
    off-diagonal mean square of its doubly centred version, the null mean and
    variance are sums over variable subsets ``S`` with ``|S| >= 2``:
    ``E = sum prod_S (1 - a_j) prod_rest a_j`` and
    ``V = 2 sum prod_S e_j prod_rest a_j**2``.
    """
    m = grams[0].shape[0]
    off = ~np.eye(m, dtype=bool)
    a = np.array([K[off].mean() for K in grams])
    e = []
    for K in grams:
        Kc = K - K.mean(axis=0, keepdims=True) - K.mean(axis=1, keepdims=True) + K.mean()
        e.append((Kc[off] ** 2).mean())
    e = np.array(e)
    mean = _sum_over_subsets(1.0 - a, a)
    var = 2.0 * _sum_over_subsets(e, a * a)
    stat = dhsic_statistic(grams)
    if mean <= 0 or var <= 0:
        return 1.0
    return float(gamma.sf(stat, mean * mean / var, scale=var / mean))


def dhsic_permutation_pvalue(grams: Sequence[np.ndarray], permutations: int = 500, seed: int = 0) -> float:
    """Permute every variable except the first independently; ``(1 + #ge) / (1 + B)``."""
    rng = np.random.default_rng(seed)
    stat = dhsic_statistic(grams)
    m = grams[0].shape[0]
    hits = 0
    for _ in range(permutations):
        shuffled = [grams[0]]
        for K in grams[1:]:
            idx = rng.permutation(m)
            shuffled.append(K[np.ix_(idx, idx)])
        if dhsic_statistic(shuffled) >= stat:
            hits += 1
    return (1 + hits) / (1 + permutations)


def hsic_joint_pvalue(residuals: np.ndarray, test: str = "gamma", permutations: int = 500,
                      seed: int = 0) -> float:
    """p-value for joint independence of the columns of ``residuals``."""
    residuals = np.asarray(residuals, dtype=float)
    if residuals.ndim != 2 or residuals.shape[1] < 2:
        raise ValueError("need at least two residual columns")
    if residuals.shape[0] < 20:
        raise TooFewSamples(f"need at least 20 observations, got {residuals.shape[0]}")
    grams = [gaussian_gram(residuals[:, j]) for j in range(residuals.shape[1])]
    if test == "gamma":
        return dhsic_gamma_pvalue(grams)
    if test == "perm":
        if permutations < 500:
            raise ValueError("permutation test needs at least 500 permutations")
        return dhsic_permutation_pvalue(grams, permutations, seed)
    raise ValueError(f"unknown test {test!r}")


# -- scoring and search ------------------------------------------------------------------

@dataclass(frozen=True)
class AnmConfig:
    test: str = "gamma"
    permutations: int = 500
    regressor: str = "kridge"
    standardize: bool = True

    def make_regressor(self) -> Regressor:
        try:
            return REGRESSORS[self.regressor]()
        except KeyError:
            raise ValueError(f"unknown regressor {self.regressor!r}") from None


@dataclass
class ScoredGraph:
    graph: Udag
    p_value: float
    residuals: np.ndarray = field(repr=False)


class _ResidualCache:
    """Residual of each node given a predictor set, shared across candidate graphs."""

    def __init__(self, D: Dataset, regressor: Regressor):
        self.D = D
        self.regressor = regressor
        self.store: dict[tuple[int, int], np.ndarray] = {}

    def get(self, node: int, preds: int) -> np.ndarray:
        key = (node, preds)
        if key not in self.store:
            cols = members(preds)
            X = self.D.data[:, cols] if cols else None
            self.store[key] = regress_residuals(self.D.column(node), X, self.regressor)
        return self.store[key]


def _prepare(D: Dataset, config: AnmConfig) -> Dataset:
    return D.standardize() if config.standardize else D


def score_udag(G: Udag, D: Dataset, config: AnmConfig = AnmConfig(), _cache=None) -> ScoredGraph:
    """Regress each node on ``pa | ne`` and test the residuals for joint independence."""
    if G.n != len(D.names):
        raise ValueError(f"graph has {G.n} nodes, dataset has {len(D.names)} columns")
    cache = _cache or _ResidualCache(_prepare(D, config), config.make_regressor())
    res = np.column_stack([cache.get(v, G.pa_mask[v] | G.ne_mask[v]) for v in range(G.n)])
    p = hsic_joint_pvalue(res, test=config.test, permutations=config.permutations)
    return ScoredGraph(G, p, res)


def _uniform_dag(n: int, rng) -> list[tuple[int, int]]:
    pairs = list(combinations(range(n), 2))
    while True:
        choice = rng.integers(0, 3, size=len(pairs))
        arrows = [(a, b) if c == 1 else (b, a) for (a, b), c in zip(pairs, choice) if c]
        try:
            Udag(n, arrows)
        except UdagError:
            continue
        return arrows


def sample_udag(n: int, rng, names=None) -> Udag:
    """Uniform draw from all labeled UDAGs on ``n`` nodes: a uniform DAG (by
    rejection) combined with a uniform undirected graph."""
    arrows = _uniform_dag(n, rng)
    lines = [p for p in combinations(range(n), 2) if rng.random() < 0.5]
    return Udag(n, arrows, lines, names=names)


def simplicity_key(G: Udag):
    return (G.num_edges, sorted(G.undirected), sorted(G.directed))


def pick_simplest(scored: Sequence[ScoredGraph]) -> ScoredGraph:
    best = max(s.p_value for s in scored)
    top = [s for s in scored if s.p_value >= best * (1 - P_VALUE_RTOL)]
    return min(top, key=lambda s: simplicity_key(s.graph))


def learn_causal(D: Dataset, L: int, seed: int, config: AnmConfig = AnmConfig(),
                 return_scores: bool = False):
    """Score ``L`` uniformly sampled UDAGs and return the simplest best one.

    Graph ``k`` is drawn from its own generator spawned from ``seed``, so the
    sample does not depend on evaluation order.
    """
    n = len(D.names)
    if n > MAX_ANM_NODES:
        raise TooLarge(f"random UDAG search capped at {MAX_ANM_NODES} nodes (got {n})")
    if L < 1:
        raise ValueError("L must be at least 1")
    streams = np.random.SeedSequence(seed).spawn(L)
    candidates = [sample_udag(n, np.random.default_rng(s), names=D.names) for s in streams]
    cache = _ResidualCache(_prepare(D, config), config.make_regressor())
    memo: dict[Udag, ScoredGraph] = {}
    scored = []
    for G in candidates:
        if G not in memo:
            memo[G] = score_udag(G, D, config, _cache=cache)
        scored.append(memo[G])
    best = pick_simplest(list(memo.values()))
    if return_scores:
        return best.graph, sorted(memo.values(), key=lambda s: (-s.p_value, simplicity_key(s.graph)))
    return best.graph

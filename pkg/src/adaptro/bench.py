"""Seeded benchmark families.

All generators draw from ``numpy.random.default_rng(seed)`` (PCG64) in the
order documented on each function, so an instance is a pure function of its
arguments.  Demand uncertainty is written in u-space: any affine demand map
is folded into ``C`` and ``c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import FirstStageSet, TwoStageInstance, UncertaintyPolytope


@dataclass(frozen=True)
class LocTranParams:
    fixed_cost: tuple[float, float] = (1.0, 10.0)
    var_cost: tuple[float, float] = (0.1, 1.0)
    transport_cost: tuple[float, float] = (0.0, 10.0)
    capacity: tuple[float, float] = (200.0, 700.0)
    dmin: tuple[float, float] = (10.0, 500.0)
    delta_frac: tuple[float, float] = (0.1, 0.5)
    gamma: float = 0.5
    max_draws: int = 1000


def gen_location_transportation(N: int, L: int, seed: int, params: LocTranParams | None = None) -> TwoStageInstance:
    """Facility location with uncertain demand ``d = dmin + delta * u``.

    x = (production x_1..x_N, open z_1..z_N) with ``x_i <= sigma_i z_i``;
    y_ij (index ``i * L + j``) ships from facility i to customer j.
    Rows: L demand rows ``sum_i y_ij - delta_j u_j >= dmin_j``, then N
    capacity rows ``x_i - sum_j y_ij >= 0``.
    ``U = {0 <= u <= 1, sum u <= gamma L}``.

    Draw order per attempt: a_f (N), a_v (N), b (N*L row-major), sigma (N),
    dmin (L), delta fraction (L).  Attempts repeat until total capacity
    covers the largest possible total demand.
    """
    if N < 1 or L < 1:
        raise ValueError("N and L must be positive")
    p = params or LocTranParams()
    rng = np.random.default_rng(seed)
    for _ in range(p.max_draws):
        af = rng.uniform(*p.fixed_cost, N)
        av = rng.uniform(*p.var_cost, N)
        b = rng.uniform(*p.transport_cost, (N, L))
        sigma = rng.uniform(*p.capacity, N)
        dmin = rng.uniform(*p.dmin, L)
        delta = rng.uniform(*p.delta_frac, L) * dmin
        if sigma.sum() >= (dmin + delta).sum():
            break
    else:
        raise RuntimeError(f"no instance with enough capacity after {p.max_draws} draws")

    m, r = N * L, L + N
    A = np.zeros((r, 2 * N))
    B = np.zeros((r, m))
    C = np.zeros((r, L))
    c = np.zeros(r)
    for j in range(L):
        B[j, j::L] = 1.0
        C[j, j] = -delta[j]
        c[j] = dmin[j]
    for i in range(N):
        A[L + i, i] = 1.0
        B[L + i, i * L:(i + 1) * L] = -1.0
    G = np.hstack([np.eye(N), -np.diag(sigma)])
    X = FirstStageSet(
        lb=np.zeros(2 * N),
        ub=np.concatenate([sigma, np.ones(N)]),
        integer=np.concatenate([np.zeros(N, bool), np.ones(N, bool)]),
        G=G, h=np.zeros(N),
    )
    U = UncertaintyPolytope(D=np.vstack([np.eye(L), np.ones((1, L))]),
                            d_rhs=np.concatenate([np.ones(L), [p.gamma * L]]))
    return TwoStageInstance(a=np.concatenate([av, af]), b=b.reshape(-1), A=A, B=B, C=C, c=c, X=X, U=U,
                            meta={"name": f"loctran-N{N}-L{L}-s{seed}", "family": "loctran", "seed": seed})


def _arcs(N: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(N) for j in range(N) if i != j]


def gen_lotsizing(N: int, seed: int, K: float = 20.0) -> TwoStageInstance:
    """Capacitated network lot-sizing with demand ``d = u``.

    x_i in [0, K] is stock bought in advance; y_ij (arcs i != j in
    row-major order) moves stock from i to j.  Rows: N balance rows
    ``x_i - sum_j y_ij + sum_j y_ji - u_i >= 0``, then one row
    ``-y_ij >= -cap_ij`` per arc.  ``U = {0 <= u <= K, sum u <= sqrt(N) K}``.

    Draw order: locations (N x 2 standard normal), then arc capacity
    fractions (one uniform per arc).
    """
    if N < 2:
        raise ValueError("lot-sizing needs N >= 2")
    if K <= 0:
        raise ValueError("K must be positive")
    rng = np.random.default_rng(seed)
    loc = rng.standard_normal((N, 2))
    arcs = _arcs(N)
    m = len(arcs)
    cap = K / (N - 1) * rng.uniform(0.0, 1.0, m)
    b = np.array([np.linalg.norm(loc[i] - loc[j]) for i, j in arcs])
    r = N + m
    A = np.zeros((r, N))
    A[:N] = np.eye(N)
    B = np.zeros((r, m))
    for k, (i, j) in enumerate(arcs):
        B[i, k] -= 1.0
        B[j, k] += 1.0
        B[N + k, k] = -1.0
    C = np.zeros((r, N))
    C[:N] = -np.eye(N)
    c = np.concatenate([np.zeros(N), -cap])
    X = FirstStageSet(lb=np.zeros(N), ub=np.full(N, K), integer=np.zeros(N, bool))
    U = UncertaintyPolytope(D=np.vstack([np.eye(N), np.ones((1, N))]),
                            d_rhs=np.concatenate([np.full(N, K), [math.sqrt(N) * K]]))
    return TwoStageInstance(a=np.ones(N), b=b, A=A, B=B, C=C, c=c, X=X, U=U,
                            meta={"name": f"lotsizing-N{N}-s{seed}", "family": "lotsizing", "seed": seed})


def gen_capacity_linked(N: int, seed: int) -> TwoStageInstance:
    """Open/close decisions whose capacity must cover uncertain demands; no complete recourse.

    x_i in {0, 1} opens site i with capacity kappa_i; y_ij (row-major over
    all pairs, including i = j) ships from site i to customer j.  Rows: N
    capacity rows ``kappa_i x_i - sum_j y_ij >= 0``, then N demand rows
    ``sum_i y_ij - u_j >= 0``.  ``U = {0 <= u <= 1, sum u <= beta N}``.
    Closing too many sites leaves demand unmet for some u, while u = 0
    needs nothing, which is the pattern of the two-row fixture scaled up.

    Draw order per attempt: a (N), b (N*N row-major), kappa (N), beta.
    Attempts repeat until opening every site covers every demand.
    """
    if N < 1:
        raise ValueError("N must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        a = rng.uniform(0.5, 2.0, N)
        b = rng.uniform(0.0, 1.0, (N, N))
        kappa = rng.uniform(0.3, 1.5, N)
        beta = rng.uniform(0.3, 0.8)
        if kappa.sum() >= min(beta * N, N):
            break
    else:  # pragma: no cover - the acceptance ratio is high
        raise RuntimeError("no instance with enough capacity")
    m, r = N * N, 2 * N
    A = np.zeros((r, N))
    B = np.zeros((r, m))
    C = np.zeros((r, N))
    for i in range(N):
        A[i, i] = kappa[i]
        B[i, i * N:(i + 1) * N] = -1.0
    for j in range(N):
        B[N + j, j::N] = 1.0
        C[N + j, j] = -1.0
    X = FirstStageSet(lb=np.zeros(N), ub=np.ones(N), integer=np.ones(N, bool))
    U = UncertaintyPolytope(D=np.vstack([np.eye(N), np.ones((1, N))]),
                            d_rhs=np.concatenate([np.ones(N), [beta * N]]))
    return TwoStageInstance(a=a, b=b.reshape(-1), A=A, B=B, C=C, c=np.zeros(r), X=X, U=U,
                            meta={"name": f"caplinked-N{N}-s{seed}", "family": "caplinked", "seed": seed})


FAMILIES = {
    "loctran": lambda size, seed: gen_location_transportation(size[0], size[-1], seed),
    "lotsizing": lambda size, seed: gen_lotsizing(size[0], seed),
    "caplinked": lambda size, seed: gen_capacity_linked(size[0], seed),
}


def generate(family: str, size, seed: int) -> TwoStageInstance:
    try:
        gen = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    size = (size,) if isinstance(size, int) else tuple(size)
    return gen(size, seed)

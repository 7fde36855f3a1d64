"""Marginal vectors, random-order values, sharing values and the hierarchical value."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CapacityError, DomainError
from .games import Game, harsanyi_transform
from .lattice import (
    DownSet,
    LinearExtension,
    boolean_algebra,
    extension_table,
    get_lattice,
    max_extension_rank,
    sample_extensions,
)


@dataclass(frozen=True)
class Allocation:
    """Per-player payoffs, indexed by player id (atom bitmask)."""

    rank: int
    vector: np.ndarray
    method: str = ""
    stderr: np.ndarray | None = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vec = np.array(self.vector, dtype=np.float64)
        if vec.shape != (1 << self.rank,):
            raise DomainError(f"allocation needs {1 << self.rank} entries, got {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise DomainError("allocation entries must be finite")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)
        if self.stderr is not None:
            se = np.array(self.stderr, dtype=np.float64)
            se.setflags(write=False)
            object.__setattr__(self, "stderr", se)

    def __getitem__(self, i):
        if isinstance(i, str):
            i = boolean_algebra(self.rank).parse(i)
        return float(self.vector[i])

    def __len__(self):
        return len(self.vector)

    def total(self):
        return float(math.fsum(self.vector))

    def to_mapping(self):
        alg = boolean_algebra(self.rank)
        return {alg.key(i): float(x) for i, x in enumerate(self.vector)}

    def to_json(self, value_name, game=None):
        out = {"value": value_name, "method": self.method, "allocation": self.to_mapping()}
        if game is not None:
            out["efficiency_residual"] = self.total() - float(game.worth[-1])
        if self.stderr is not None:
            alg = boolean_algebra(self.rank)
            out["stderr"] = {alg.key(i): float(x) for i, x in enumerate(self.stderr)}
        return out


ALLOCATION_SCHEMA = {
    "type": "object",
    "required": ["value", "method", "allocation"],
    "properties": {
        "value": {"type": "string"},
        "method": {"type": "string"},
        "allocation": {"type": "object", "additionalProperties": {"type": "number"}},
        "efficiency_residual": {"type": "number"},
        "stderr": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}


def predecessor_set(f, i):
    """``S_f(i)``: every player ranked no later than ``i``."""
    pos = f.rank_of
    mask = 0
    for j in np.flatnonzero(pos <= pos[i]):
        mask |= 1 << int(j)
    return DownSet(f.rank, mask)


def marginal_contribution(v, f, i):
    """``v(S_f(i)) − v(S_f(i) ∖ i)``."""
    s = predecessor_set(f, i)
    return v(s) - v(s.without(i))


def _orders_to_paths(lat, orders):
    orders = np.asarray(orders, dtype=np.int64)
    bits = np.left_shift(np.int64(1), orders)
    prefix = np.concatenate([np.zeros((orders.shape[0], 1), np.int64), np.cumsum(bits, axis=1)], axis=1)
    masks = lat.masks
    sorter = np.argsort(masks)
    return sorter[np.searchsorted(masks[sorter], prefix)]


def marginal_vector(v, f):
    """``Δ^f(v)`` for one linear extension."""
    lat = v.lattice
    orders = np.asarray([f.order], dtype=np.int64)
    paths = _orders_to_paths(lat, orders)
    row = _kernels.marginal_matrix(paths, orders, v.worth, lat.n_players)[0]
    return Allocation(v.rank, row, method="marginal-vector")


def marginal_vectors(v, orders=None):
    """Matrix of marginal vectors, one row per extension (all of ℒ(P) by default)."""
    lat = v.lattice
    if orders is None:
        paths, orders = extension_table(lat.algebra)
    else:
        orders = np.asarray(orders, dtype=np.int64)
        paths = _orders_to_paths(lat, orders)
    return _kernels.marginal_matrix(paths, orders, v.worth, lat.n_players)


class ExtensionDistribution:
    """Probability weights over the enumerated linear extensions (see ``extension_table``)."""

    def __init__(self, rank, weights, max_rank=None):
        _, orders = extension_table(boolean_algebra(rank), max_rank=max_rank)
        w = np.array(weights, dtype=np.float64)
        if w.shape != (orders.shape[0],):
            raise DomainError(f"expected {orders.shape[0]} weights, got {w.shape}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("extension weights must be nonnegative and sum to 1")
        w.setflags(write=False)
        self.rank = rank
        self.weights = w
        self.orders = orders

    @classmethod
    def uniform(cls, rank, max_rank=None):
        _, orders = extension_table(boolean_algebra(rank), max_rank=max_rank)
        m = orders.shape[0]
        return cls(rank, np.full(m, 1.0 / m), max_rank=max_rank)

    @classmethod
    def point_mass(cls, f, max_rank=None):
        _, orders = extension_table(boolean_algebra(f.rank), max_rank=max_rank)
        hit = np.flatnonzero(np.all(orders == np.asarray(f.order), axis=1))
        w = np.zeros(orders.shape[0])
        w[hit[0]] = 1.0
        return cls(f.rank, w, max_rank=max_rank)

    def extension(self, r):
        return LinearExtension(self.rank, tuple(int(x) for x in self.orders[r]))


def random_order_value(v, r):
    """``Σ_f r(f) Δ^f(v)``."""
    if r.rank != v.rank:
        raise DomainError("distribution and game live on different algebras")
    return Allocation(v.rank, r.weights @ marginal_vectors(v), method="random-order")


# ---------------------------------------------------------------- hierarchical


def strength_counts(lattice):
    """Exact integer matrix ``e[k, i]``: extensions in which ``i`` outranks all of ``S_k``.

    An extension adds ``i`` while passing from ``D ∖ i`` to ``D``; the condition
    holds exactly when ``S_k ⊆ D``. Summing ``(chains to D ∖ i) · (chains from D)``
    over those ``D`` gives the count without enumeration.
    """
    lat = get_lattice(lattice) if not hasattr(lattice, "downsets") else lattice
    wfb = lat.ways_from_bottom_exact
    ways = lat.ways_exact
    masks = [int(m) for m in lat.masks]
    # through[D, i]: chains that add i exactly at the step into D
    through = {}
    for d, s in enumerate(lat.downsets):
        for i in s.maximal:
            through[d, i] = wfb[int(lat.remove_index[d, i])] * ways[d]
    out = [[0] * lat.n_players for _ in range(len(lat))]
    for k, mk in enumerate(masks):
        for (d, i), c in through.items():
            if mk >> i & 1 and mk & ~masks[d] == 0:
                out[k][i] += c
    return out


_STRENGTH_CACHE = {}


def strength_matrix(lattice):
    """``h[k, i] = e_{S_k}(i) / |ℒ(P)|`` as floats; rows sum to one for nonempty ``S_k``."""
    lat = get_lattice(lattice) if not hasattr(lattice, "downsets") else lattice
    if lat.rank not in _STRENGTH_CACHE:
        counts = strength_counts(lat)
        total = lat.n_extensions
        h = np.array([[c / total for c in row] for row in counts], dtype=np.float64)
        h.setflags(write=False)
        _STRENGTH_CACHE[lat.rank] = h
    return _STRENGTH_CACHE[lat.rank]


def hierarchical_strength(algebra, s, i):
    """``h_S(i)``, the share of linear extensions in which ``i`` outranks every player of ``S``."""
    if isinstance(algebra, int):
        algebra = boolean_algebra(algebra)
    lat = get_lattice(algebra)
    k = lat.index(s)
    i = algebra.check(i)
    if not lat.member_matrix[k, i]:
        raise DomainError(f"player {algebra.key(i)} is not in {lat.key(k)}")
    return float(strength_matrix(lat)[k, i])


def _exact_cap(rank, max_rank):
    cap = max_extension_rank() if max_rank is None else max_rank
    if rank > cap:
        raise CapacityError(
            f"exact hierarchical value at rank {rank} exceeds the cap (rank {cap}); "
            "use method='sampled' with a sample count and seed"
        )


def probabilistic_weights(lattice):
    """``w[k, i] = Pr(S_f(i) = S_k)`` under the uniform extension, zero unless ``i ∈ S_k*``."""
    lat = lattice
    wfb = lat.ways_from_bottom_exact
    ways = lat.ways_exact
    total = lat.n_extensions
    out = np.zeros((len(lat), lat.n_players))
    for k, s in enumerate(lat.downsets):
        for i in s.maximal:
            out[k, i] = wfb[int(lat.remove_index[k, i])] * ways[k] / total
    return out


HIERARCHICAL_METHODS = ("exact-dividend", "exact-random-order", "probabilistic-form", "sampled")


def hierarchical_value(v, method="exact-dividend", samples=None, seed=None, sampler="exact",
                       max_rank=None):
    """The hierarchical value ``ψ(v)``.

    ``exact-dividend`` shares each dividend by hierarchical strength,
    ``exact-random-order`` averages every marginal vector, ``probabilistic-form``
    weights each marginal contribution by the chance that it is realized, and
    ``sampled`` averages ``samples`` marginal vectors drawn with ``seed``,
    reporting per-player standard errors.
    """
    lat = v.lattice
    if method == "sampled":
        if samples is None or seed is None:
            raise DomainError("sampled hierarchical value needs both a sample count and a seed")
        return _sampled_hierarchical(v, int(samples), seed, sampler)
    if method not in HIERARCHICAL_METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {', '.join(HIERARCHICAL_METHODS)}")
    _exact_cap(lat.rank, max_rank)
    if method == "exact-dividend":
        div = harsanyi_transform(v).dividend
        vec = div @ strength_matrix(lat)
    elif method == "exact-random-order":
        succ, succ_elem, nsucc = lat.successor_table
        sums, count = _kernels.stream_marginal_sums(
            succ, succ_elem, nsucc, 0, lat.top_index, lat.n_players, v.worth, lat.n_players
        )
        vec = sums / count
    else:
        w = probabilistic_weights(lat)
        rows, cols = np.nonzero(w)
        contrib = w[rows, cols] * (v.worth[rows] - v.worth[lat.remove_index[rows, cols]])
        vec = np.zeros(lat.n_players)
        np.add.at(vec, cols, contrib)
    return Allocation(v.rank, vec, method=method)


def _sampled_hierarchical(v, n, seed, sampler):
    if n < 1:
        raise DomainError("sample count must be at least 1")
    lat = v.lattice
    batch = sample_extensions(lat.algebra, n, seed, method=sampler)
    mv = _kernels.marginal_matrix(batch.paths, batch.orders, v.worth, lat.n_players)
    if sampler == "greedy":
        mv = mv * batch.weights[:, None]
    # reduce along the contiguous axis so numpy uses pairwise summation
    cols = np.ascontiguousarray(mv.T)
    mean = cols.mean(axis=1)
    if n > 1:
        se = cols.std(axis=1, ddof=1) / math.sqrt(n)
    else:
        se = np.full(lat.n_players, np.inf)
    return Allocation(
        v.rank, mean, method="sampled", stderr=se,
        info={"samples": n, "seed": seed, "sampler": sampler},
    )


__all__ = [
    "ALLOCATION_SCHEMA",
    "Allocation",
    "ExtensionDistribution",
    "Game",
    "HIERARCHICAL_METHODS",
    "hierarchical_strength",
    "hierarchical_value",
    "marginal_contribution",
    "marginal_vector",
    "marginal_vectors",
    "predecessor_set",
    "probabilistic_weights",
    "random_order_value",
    "strength_counts",
    "strength_matrix",
]

"""Selectors, sharing systems and the correspondences between them.

A selector picks one maximal player from every nonempty down-set; it is stored
as an integer vector ``choice`` aligned with the canonical down-set order, with
``choice[0] = -1`` for the empty coalition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DomainError, ValidationError
from .games import Game, harsanyi_transform
from .lattice import LinearExtension, get_lattice, parse_downset_key
from .values import Allocation, strength_matrix

SELECTOR_SPACE_CAP = 3


def _lattice(rank_or_lattice):
    if hasattr(rank_or_lattice, "downsets"):
        return rank_or_lattice
    return get_lattice(rank_or_lattice)


@dataclass(frozen=True)
class Selector:
    rank: int
    choice: tuple

    def __post_init__(self):
        lat = get_lattice(self.rank)
        if len(self.choice) != len(lat):
            raise DomainError(f"selector needs {len(lat)} entries, got {len(self.choice)}")
        if self.choice[0] != -1:
            raise DomainError("the empty coalition has no selected player (use -1)")
        mm = lat.maximal_matrix
        for k in range(1, len(lat)):
            i = self.choice[k]
            if not (0 <= i < lat.n_players) or not mm[k, i]:
                raise DomainError(f"selected player {i} is not maximal in {lat.key(k)}")

    @property
    def lattice(self):
        return get_lattice(self.rank)

    def __call__(self, s):
        return self.choice[self.lattice.index(s)]

    def as_array(self):
        return np.asarray(self.choice, dtype=np.int64)

    @classmethod
    def from_mapping(cls, rank, mapping, default=None):
        """Build from ``{down-set key: player key}``; unlisted coalitions come from ``default``."""
        lat = get_lattice(rank)
        alg = lat.algebra
        choice = [-1] * len(lat)
        if default is not None:
            choice = list(default.choice)
        for key, player in mapping.items():
            k = lat.index(parse_downset_key(alg, key))
            choice[k] = alg.parse(player) if isinstance(player, str) else alg.check(player)
        for k in range(1, len(lat)):
            maximal = lat[k].maximal
            if choice[k] == -1 and len(maximal) == 1:
                choice[k] = maximal[0]
        if -1 in choice[1:]:
            k = choice.index(-1, 1)
            raise ValidationError(f"no player selected for {lat.key(k)}")
        return cls(rank, tuple(choice))

    def to_mapping(self):
        lat = self.lattice
        return {lat.key(k): lat.algebra.key(self.choice[k]) for k in range(1, len(lat))}


def _check_selector_cap(rank, max_rank):
    cap = SELECTOR_SPACE_CAP if max_rank is None else max_rank
    if rank > cap:
        raise CapacityError(
            f"the selector space at rank {rank} is too large to enumerate (cap: rank {cap})"
        )


def count_selectors(rank):
    """``|𝒮(𝒟)| = Π |S*|`` over nonempty down-sets (exact integer)."""
    lat = _lattice(rank)
    out = 1
    for s in lat.downsets[1:]:
        out *= len(s.maximal)
    return out


@lru_cache(maxsize=None)
def _selector_matrix(rank):
    lat = get_lattice(rank)
    options = [s.maximal for s in lat.downsets[1:]]
    rows = [(-1,) + combo for combo in itertools.product(*options)]
    mat = np.asarray(rows, dtype=np.int64)
    mat.setflags(write=False)
    return mat


def selector_matrix(rank, max_rank=None):
    """Every selector as a row of choices, in lexicographic product order."""
    _check_selector_cap(rank, max_rank)
    return _selector_matrix(rank)


def enumerate_selectors(rank, max_rank=None):
    return tuple(Selector(rank, tuple(int(x) for x in row)) for row in selector_matrix(rank, max_rank))


# --------------------------------------------------------------- consistency


@lru_cache(maxsize=None)
def _nested_pairs(rank):
    lat = get_lattice(rank)
    masks = lat.masks
    sub = (masks[:, None] & ~masks[None, :]) == 0  # sub[s, t]: S ⊆ T
    sub[0, :] = False
    np.fill_diagonal(sub, False)
    s_idx, t_idx = np.nonzero(sub)
    return s_idx, t_idx


def _inconsistent_pairs(lat, choices):
    """Boolean matrix (selectors × nested pairs) flagging violated pairs."""
    s_idx, t_idx = _nested_pairs(lat.rank)
    chosen_t = choices[:, t_idx]
    chosen_s = choices[:, s_idx]
    retained = lat.maximal_matrix[s_idx[None, :], chosen_t]
    return retained & (chosen_s != chosen_t)


@dataclass(frozen=True)
class ConsistencyCheck:
    holds: bool
    witness: tuple | None = None  # (S key, T key)

    def __bool__(self):
        return self.holds


def is_consistent(alpha):
    """``α(S) = α(T)`` whenever ``S ⊆ T`` and ``α(T) ∈ S*``."""
    return is_consistent_on(alpha, None)


def is_consistent_on(alpha, t):
    """Consistency restricted to pairs with ``α(T) = t`` (all pairs when ``t`` is None)."""
    lat = alpha.lattice
    bad = _inconsistent_pairs(lat, alpha.as_array()[None, :])[0]
    s_idx, t_idx = _nested_pairs(lat.rank)
    if t is not None:
        t = lat.algebra.check(t)
        bad &= alpha.as_array()[t_idx] == t
    hits = np.flatnonzero(bad)
    if hits.size:
        h = hits[0]
        return ConsistencyCheck(False, (lat.key(int(s_idx[h])), lat.key(int(t_idx[h]))))
    return ConsistencyCheck(True)


def consistent_mask(choices, rank):
    """Vector flag per selector row: True for consistent selectors."""
    lat = get_lattice(rank)
    return ~_inconsistent_pairs(lat, np.asarray(choices))[:, :].any(axis=1)


# --------------------------------------------------------- extension bijection


def selector_from_extension(f):
    """``α_f(S)``: the maximal player of ``S`` ranked last by ``f``."""
    lat = get_lattice(f.rank)
    pos = f.rank_of
    choice = [-1]
    for s in lat.downsets[1:]:
        choice.append(max(s.maximal, key=lambda i: pos[i]))
    return Selector(f.rank, tuple(int(c) for c in choice))


def extension_from_selector(alpha):
    """Peel ``α`` of the remaining coalition off the top until nothing is left."""
    check = is_consistent(alpha)
    if not check:
        raise DomainError(
            f"selector is inconsistent: S={check.witness[0]} inside T={check.witness[1]}"
        )
    lat = alpha.lattice
    k = lat.top_index
    peeled = []
    while k != 0:
        i = alpha.choice[k]
        peeled.append(i)
        k = int(lat.remove_index[k, i])
    return LinearExtension(alpha.rank, tuple(reversed(peeled)))


def selector_value(v, alpha):
    """``δ^α_i(v)``: total dividend of coalitions whose selected player is ``i``."""
    lat = v.lattice
    div = harsanyi_transform(v).dividend
    out = np.zeros(lat.n_players)
    np.add.at(out, alpha.as_array()[1:], div[1:])
    return Allocation(v.rank, out, method="selector")


# --------------------------------------------------------------- sharing systems


class SharingSystem:
    """Row-stochastic weights ``q[S, i]`` supported on the maximal players of each ``S``."""

    def __init__(self, rank, q, name="sharing", tol=1e-12):
        lat = get_lattice(rank)
        q = np.array(q, dtype=np.float64)
        if q.shape != (len(lat), lat.n_players):
            raise DomainError(f"sharing matrix must have shape {(len(lat), lat.n_players)}")
        if np.any(q[0] != 0):
            raise DomainError("the empty coalition must carry no shares")
        if np.any(q < -tol):
            raise DomainError("sharing weights must be nonnegative")
        off = q[1:][~lat.maximal_matrix[1:]]
        if np.any(np.abs(off) > tol):
            raise DomainError("sharing weights must vanish on non-maximal players")
        sums = q[1:].sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            raise DomainError(f"shares of {lat.key(int(bad[0]) + 1)} sum to {sums[bad[0]]!r}, not 1")
        q.setflags(write=False)
        self.rank = rank
        self.q = q
        self.name = name

    @property
    def lattice(self):
        return get_lattice(self.rank)

    def __call__(self, s, i):
        return float(self.q[self.lattice.index(s), i])

    def to_json(self):
        lat = self.lattice
        alg = lat.algebra
        return {
            lat.key(k): {alg.key(int(i)): float(self.q[k, i]) for i in lat[k].maximal}
            for k in range(1, len(lat))
        }

    @classmethod
    def from_json(cls, rank, data, name="sharing-file"):
        lat = get_lattice(rank)
        alg = lat.algebra
        q = np.zeros((len(lat), lat.n_players))
        seen = set()
        for key, row in data.items():
            k = lat.index(parse_downset_key(alg, key))
            seen.add(k)
            if not isinstance(row, dict):
                raise ValidationError(f"shares of {key!r} must be an object keyed by player")
            for player, w in row.items():
                q[k, alg.parse(player)] = float(w)
        missing = [lat.key(k) for k in range(1, len(lat)) if k not in seen and len(lat[k].maximal) > 1]
        if missing:
            raise ValidationError(f"sharing system is missing coalition {missing[0]!r}")
        for k in range(1, len(lat)):
            if k not in seen:
                q[k, lat[k].maximal[0]] = 1.0
        try:
            return cls(rank, q, name=name)
        except DomainError as exc:
            raise ValidationError(str(exc)) from None


def sharing_value(v, q):
    """``π^q_i(v) = Σ_S q(S, i) v̂(S)``."""
    if q.rank != v.rank:
        raise DomainError("sharing system and game live on different algebras")
    div = harsanyi_transform(v).dividend
    return Allocation(v.rank, div @ q.q, method=q.name)


def priority_sharing_system(rank):
    """Uniform split among the maximal players."""
    lat = _lattice(rank)
    mm = lat.maximal_matrix.astype(np.float64)
    q = np.zeros_like(mm)
    q[1:] = mm[1:] / mm[1:].sum(axis=1, keepdims=True)
    return SharingSystem(lat.rank, q, name="priority")


def proportional_sharing_system(rank):
    """Split proportional to player rank; ``q(⟨⊥⟩, ⊥) = 1`` keeps that row normalized."""
    lat = _lattice(rank)
    rho = np.array([lat.algebra.rho(i) for i in range(lat.n_players)], dtype=np.float64)
    weights = lat.maximal_matrix * rho[None, :]
    q = np.zeros_like(weights)
    totals = weights.sum(axis=1)
    rows = np.flatnonzero(totals > 0)
    q[rows] = weights[rows] / totals[rows, None]
    q[1, lat.algebra.bottom] = 1.0
    return SharingSystem(lat.rank, q, name="proportional")


def hierarchical_sharing_system(rank):
    """Split by hierarchical strength."""
    lat = _lattice(rank)
    return SharingSystem(lat.rank, strength_matrix(lat), name="hierarchical", tol=1e-9)


BUILTIN_SHARING = {
    "priority": priority_sharing_system,
    "proportional": proportional_sharing_system,
    "hierarchical": hierarchical_sharing_system,
}


# ---------------------------------------------------------- selector distributions


class SelectorDistribution:
    """Sparse probability weights over selectors: ``choices[r]`` has mass ``probs[r]``."""

    def __init__(self, rank, choices, probs, tol=1e-12):
        choices = np.array(choices, dtype=np.int64).reshape(len(probs), -1)
        probs = np.array(probs, dtype=np.float64)
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > tol:
            raise DomainError("selector probabilities must be nonnegative and sum to 1")
        for row in choices:
            Selector(rank, tuple(int(x) for x in row))  # validates
        keep = probs > 0
        self.rank = rank
        self.choices = choices[keep]
        self.probs = probs[keep]
        self.choices.setflags(write=False)
        self.probs.setflags(write=False)

    def __len__(self):
        return len(self.probs)

    @classmethod
    def from_selectors(cls, weighted):
        """From an iterable of ``(Selector, probability)`` pairs."""
        weighted = list(weighted)
        rank = weighted[0][0].rank
        return cls(rank, [a.choice for a, _ in weighted], [p for _, p in weighted])

    def selectors(self):
        return [(Selector(self.rank, tuple(int(x) for x in row)), float(p))
                for row, p in zip(self.choices, self.probs)]

    def average_value(self, v):
        """``Σ_α p(α) δ^α(v)``."""
        div = harsanyi_transform(v).dividend
        out = np.zeros(v.lattice.n_players)
        for row, p in zip(self.choices, self.probs):
            np.add.at(out, row[1:], p * div[1:])
        return Allocation(v.rank, out, method="selector-average")

    def consistent_mass(self):
        return float(self.probs[consistent_mask(self.choices, self.rank)].sum())


def sharing_from_selector_distribution(p):
    """``q_p(S, i)``: total probability of the selectors choosing ``i`` at ``S``."""
    lat = get_lattice(p.rank)
    q = np.zeros((len(lat), lat.n_players))
    cols = np.arange(1, len(lat))
    for row, w in zip(p.choices, p.probs):
        q[cols, row[1:]] += w
    return SharingSystem(p.rank, q, name="selector-sharing", tol=1e-9)


def selector_distribution_from_sharing(q, max_rank=None):
    """``p_q(α) = Π_S q(S, α(S))`` over the enumerated selector space."""
    choices = selector_matrix(q.rank, max_rank)
    lat = q.lattice
    cols = np.arange(1, len(lat))
    probs = np.prod(q.q[cols[None, :], choices[:, 1:]], axis=1)
    keep = probs > 0
    return SelectorDistribution(q.rank, choices[keep], probs[keep] / probs[keep].sum(), tol=1e-9)


def distribution_from_extensions(weighted):
    """Selector distribution supported on ``α_f`` for weighted extensions ``(f, r(f))``."""
    return SelectorDistribution.from_selectors(
        (selector_from_extension(f), w) for f, w in weighted
    )


# --------------------------------------------------------- negative-value witness


@dataclass(frozen=True)
class NegativityWitness:
    """A monotone game on which selector ``alpha`` pays player ``t`` a negative amount.

    ``top`` is the union of the coalitions that select ``t``; ``blocks`` are the
    maximal proper subcoalitions of ``top`` in which ``t`` is maximal but not
    selected.
    """

    game: Game
    t: int
    top: object
    blocks: tuple


def _union_selecting(lat, choice, t):
    mask = 0
    for k in np.flatnonzero(choice == t):
        mask |= int(lat.masks[k])
    return lat.index(mask) if mask else None


def prop4_witness(alpha, t=None):
    """Monotone 0/1 game exposing the inconsistency of ``alpha`` at player ``t``.

    ``top = ⋃{D : α(D) = t}`` must itself select ``t``. With ``blocks`` the
    maximal coalitions ``S ⊂ top`` having ``t ∈ S*`` and ``α(S) ≠ t``, the game
    pays 1 exactly to coalitions strictly containing some ``S_i ∖ t``. Its
    ``t``-marginals vanish everywhere except at the blocks, so ``δ^α_t`` is the
    negated sum of the block dividends.
    """
    lat = alpha.lattice
    choice = alpha.as_array()
    if is_consistent(alpha):
        raise DomainError("selector is consistent; no negativity witness exists")
    candidates = [lat.algebra.check(t)] if t is not None else range(lat.n_players)
    for cand in candidates:
        top = _union_selecting(lat, choice, cand)
        if top is None or choice[top] != cand:
            continue
        tm = int(lat.masks[top])
        family = [
            k for k in range(1, len(lat))
            if k != top and int(lat.masks[k]) & ~tm == 0
            and lat.maximal_matrix[k, cand] and choice[k] != cand
        ]
        if not family:
            continue
        fm = {k: int(lat.masks[k]) for k in family}
        blocks = [k for k in family if not any(j != k and fm[k] & ~fm[j] == 0 for j in family)]
        rests = [int(lat.masks[lat.remove_index[k, cand]]) for k in blocks]
        masks = lat.masks.astype(object)
        worth = np.array(
            [1.0 if any(r & ~int(m) == 0 and int(m) != r for r in rests) else 0.0 for m in masks]
        )
        game = Game(lat, worth)
        return NegativityWitness(game, cand, lat[top], tuple(lat[k] for k in blocks))
    raise DomainError(
        "no player t has a coalition selecting t above an inconsistency"
        + ("" if t is None else f" at the requested t={lat.algebra.key(candidates[0])}")
    )


__all__ = [
    "BUILTIN_SHARING",
    "ConsistencyCheck",
    "NegativityWitness",
    "Selector",
    "SelectorDistribution",
    "SharingSystem",
    "consistent_mask",
    "count_selectors",
    "distribution_from_extensions",
    "enumerate_selectors",
    "extension_from_selector",
    "hierarchical_sharing_system",
    "is_consistent",
    "is_consistent_on",
    "priority_sharing_system",
    "prop4_witness",
    "proportional_sharing_system",
    "selector_distribution_from_sharing",
    "selector_from_extension",
    "selector_matrix",
    "selector_value",
    "sharing_from_selector_distribution",
    "sharing_value",
]

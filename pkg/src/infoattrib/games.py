"""Coalitional games on the down-set lattice and their Harsanyi dividends."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CapacityError, DomainError, ValidationError
from .lattice import (
    Automorphism,
    DownSet,
    DownSetLattice,
    apply_automorphism,
    get_lattice,
    parse_downset_key,
)


def _as_lattice(obj):
    if isinstance(obj, DownSetLattice):
        return obj
    return get_lattice(obj)


class Game:
    """A real function on the canonical down-set enumeration with ``v(∅) = 0``.

    ``worth[k]`` is the worth of ``lattice[k]``; the array is read-only.
    """

    def __init__(self, lattice, worth):
        lattice = _as_lattice(lattice)
        worth = np.array(worth, dtype=np.float64)
        if worth.shape != (len(lattice),):
            raise DomainError(
                f"worth vector has shape {worth.shape}, expected ({len(lattice)},)"
            )
        if worth[0] != 0.0:
            raise DomainError("a game must assign worth 0 to the empty coalition")
        if not np.all(np.isfinite(worth)):
            raise DomainError("worths must be finite")
        worth.setflags(write=False)
        self.lattice = lattice
        self.worth = worth

    @property
    def rank(self):
        return self.lattice.rank

    @property
    def algebra(self):
        return self.lattice.algebra

    def __call__(self, s):
        return float(self.worth[self.lattice.index(s)])

    def __repr__(self):
        return f"Game(rank={self.rank}, v(P)={self.worth[-1]:.6g})"

    def _check_same(self, other):
        if not isinstance(other, Game) or other.rank != self.rank:
            raise DomainError("games live on different lattices")

    def __add__(self, other):
        self._check_same(other)
        return Game(self.lattice, self.worth + other.worth)

    def __sub__(self, other):
        self._check_same(other)
        return Game(self.lattice, self.worth - other.worth)

    def __mul__(self, scalar):
        return Game(self.lattice, float(scalar) * self.worth)

    __rmul__ = __mul__

    def __neg__(self):
        return Game(self.lattice, -self.worth)

    @classmethod
    def zero(cls, lattice):
        lattice = _as_lattice(lattice)
        return cls(lattice, np.zeros(len(lattice)))

    @classmethod
    def from_function(cls, lattice, fn):
        lattice = _as_lattice(lattice)
        worth = [0.0] + [float(fn(s)) for s in lattice.downsets[1:]]
        return cls(lattice, worth)

    @classmethod
    def from_mapping(cls, lattice, mapping):
        """Build from ``{antichain key: worth}`` covering every nonempty down-set.

        Keys may list the antichain in any order. Missing coalitions are an
        error rather than an implicit zero.
        """
        lattice = _as_lattice(lattice)
        worth = np.full(len(lattice), np.nan)
        worth[0] = 0.0
        seen = {}
        for key, value in mapping.items():
            s = parse_downset_key(lattice.algebra, key)
            k = lattice.index(s)
            if k in seen:
                raise ValidationError(f"keys {seen[k]!r} and {key!r} name the same coalition")
            seen[k] = key
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ValidationError(f"worth of {key!r} is not a number: {value!r}") from None
            if not math.isfinite(value):
                raise ValidationError(f"worth of {key!r} is not finite")
            if k == 0 and value != 0.0:
                raise ValidationError("the empty coalition must have worth 0")
            worth[k] = value
        missing = [lattice.key(k) for k in range(1, len(lattice)) if np.isnan(worth[k])]
        if missing:
            raise ValidationError(
                f"worth map is missing {len(missing)} coalition(s), first {missing[0]!r}",
            )
        return cls(lattice, worth)

    def to_mapping(self):
        return {self.lattice.key(k): float(self.worth[k]) for k in range(1, len(self.lattice))}

    def to_json(self):
        return {"rank": self.rank, "worth": self.to_mapping()}

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict) or "rank" not in data or "worth" not in data:
            raise ValidationError('game JSON needs "rank" and "worth" fields')
        rank = data["rank"]
        if not isinstance(rank, int) or isinstance(rank, bool) or rank < 1:
            raise ValidationError(f"bad rank {rank!r}")
        if not isinstance(data["worth"], dict):
            raise ValidationError('"worth" must be an object keyed by antichain')
        return cls.from_mapping(get_lattice(rank), data["worth"])

    def permuted(self, sigma):
        """``σv`` with ``σv(S) = v(σ⁻¹(S))``."""
        inv = sigma.inverse()
        lat = self.lattice
        worth = [self.worth[lat.index(apply_automorphism(inv, s))] for s in lat.downsets]
        return Game(lat, worth)


class DividendTable:
    """Harsanyi dividends indexed like the source game."""

    def __init__(self, lattice, dividend):
        lattice = _as_lattice(lattice)
        dividend = np.array(dividend, dtype=np.float64)
        if dividend.shape != (len(lattice),):
            raise DomainError("dividend vector does not match the lattice")
        if dividend[0] != 0.0:
            raise DomainError("the empty coalition carries no dividend")
        dividend.setflags(write=False)
        self.lattice = lattice
        self.dividend = dividend

    @property
    def rank(self):
        return self.lattice.rank

    def __call__(self, s):
        return float(self.dividend[self.lattice.index(s)])

    def __repr__(self):
        return f"DividendTable(rank={self.rank})"


def unanimity_game(t, lattice=None):
    """``u_T(S) = 1`` iff ``T ⊆ S``."""
    if lattice is None:
        if not isinstance(t, DownSet):
            raise DomainError("pass a lattice when naming T by key")
        lattice = get_lattice(t.rank)
    lattice = _as_lattice(lattice)
    k = lattice.index(t)
    if k == 0:
        raise DomainError("the unanimity game of the empty coalition is not a basis game")
    tm = int(lattice.masks[k])
    worth = ((lattice.masks & tm) == tm).astype(np.float64)
    worth[0] = 0.0
    return Game(lattice, worth)


def harsanyi_transform(v):
    """Dividends by the recursion ``v̂(S) = v(S) − Σ_{T ⊂ S} v̂(T)``."""
    div = _kernels.mobius(v.lattice.masks, v.worth)
    div[0] = 0.0
    return DividendTable(v.lattice, div)


def zeta_transform(d):
    """``v(S) = Σ_{T ⊆ S} v̂(T)``; the inverse of :func:`harsanyi_transform`."""
    worth = _kernels.zeta(d.lattice.masks, d.dividend)
    worth[0] = 0.0
    return Game(d.lattice, worth)


def mobius_closed_form(v):
    """Alternating-sum dividends over the boolean intervals below each coalition.

    ``v̂(S) = Σ (-1)^{|S|-|T|} v(T)`` over ``T ⊆ S`` such that the interval
    ``[T, S]`` of 𝒟 is a boolean lattice, recognized by comparing its size with
    ``2**(number of atoms)``. Quadratic in the interval sizes; kept as an
    independent check of :func:`harsanyi_transform` for rank ≤ 3.
    """
    lat = v.lattice
    if lat.rank > 3:
        raise CapacityError("the closed-form transform is a rank ≤ 3 cross-check")
    masks = [int(m) for m in lat.masks]
    card = lat.cardinality
    out = np.zeros(len(lat))
    for s, ms in enumerate(masks):
        if s == 0:
            continue
        acc = 0.0
        for t, mt in enumerate(masks):
            if mt & ~ms:
                continue
            interval = [r for r, mr in enumerate(masks) if mt & ~mr == 0 and mr & ~ms == 0]
            atoms = sum(1 for r in interval if card[r] == card[t] + 1)
            if len(interval) == 1 << atoms:
                acc += (-1) ** int(card[s] - card[t]) * v.worth[t]
        out[s] = acc
    return DividendTable(lat, out)


@dataclass(frozen=True)
class Check:
    """Outcome of an exhaustive predicate; ``witness`` names a violation."""

    holds: bool
    witness: tuple | None = None

    def __bool__(self):
        return self.holds


def is_monotone(v, tol=0.0):
    """``S ⊆ T ⇒ v(S) ≤ v(T)``, checked on covering pairs (equivalent by transitivity)."""
    lat = v.lattice
    succ, _, nsucc = lat.successor_table
    w = v.worth
    for k in range(len(lat)):
        for j in range(nsucc[k]):
            t = succ[k, j]
            if w[k] > w[t] + tol:
                return Check(False, (lat.key(k), lat.key(t)))
    return Check(True)


def is_nonnegative(v, tol=0.0):
    bad = np.flatnonzero(v.worth < -tol)
    if bad.size:
        return Check(False, (v.lattice.key(int(bad[0])),))
    return Check(True)


def _pair_tables(lat):
    masks = lat.masks
    order = np.argsort(masks)
    sorted_masks = masks[order]

    def lookup(ms):
        return order[np.searchsorted(sorted_masks, ms)]

    return masks, lookup


def _modularity_check(v, sign, tol):
    lat = v.lattice
    masks, lookup = _pair_tables(lat)
    w = v.worth
    for s in range(len(lat)):
        union = lookup(masks[s] | masks)
        inter = lookup(masks[s] & masks)
        gap = sign * ((w[union] + w[inter]) - (w[s] + w))
        bad = np.flatnonzero(gap < -tol)
        if bad.size:
            return Check(False, (lat.key(s), lat.key(int(bad[0]))))
    return Check(True)


def is_supermodular(v, tol=0.0):
    """``v(S) + v(T) ≤ v(S ∪ T) + v(S ∩ T)`` for all pairs."""
    return _modularity_check(v, 1.0, tol)


def is_submodular(v, tol=0.0):
    """``v(S) + v(T) ≥ v(S ∪ T) + v(S ∩ T)`` for all pairs."""
    return _modularity_check(v, -1.0, tol)


def _null_witness(v, i, tol):
    lat = v.lattice
    rows = np.flatnonzero(lat.maximal_matrix[:, i])
    lower = lat.remove_index[rows, i]
    gaps = np.abs(v.worth[rows] - v.worth[lower])
    bad = np.flatnonzero(gaps > tol)
    return None if bad.size == 0 else int(rows[bad[0]])


def null_players(v, tol=0.0):
    """Players ``i`` with ``v(S ∪ i) = v(S)`` whenever ``S ∪ i`` is feasible.

    The feasible pairs are exactly ``(T ∖ i, T)`` for ``i`` maximal in ``T``.
    """
    return tuple(i for i in range(v.lattice.n_players) if _null_witness(v, i, tol) is None)


def is_carrier(v, u, tol=0.0):
    """``v(S) = v(S ∩ U)`` for every down-set ``S``."""
    lat = v.lattice
    masks, lookup = _pair_tables(lat)
    um = lat.masks[lat.index(u)]
    inter = lookup(masks & um)
    bad = np.flatnonzero(np.abs(v.worth - v.worth[inter]) > tol)
    if bad.size:
        return Check(False, (lat.key(int(bad[0])),))
    return Check(True)


def null_dividend_check(v, i, tol=1e-12):
    """For a null player ``i``, every coalition with ``i`` maximal has zero dividend."""
    lat = v.lattice
    i = lat.algebra.check(i)
    witness = _null_witness(v, i, tol)
    if witness is not None:
        raise DomainError(
            f"player {lat.algebra.key(i)} is not null: it changes the worth of {lat.key(witness)}"
        )
    div = harsanyi_transform(v).dividend
    rows = np.flatnonzero(lat.maximal_matrix[:, i])
    bad = rows[np.abs(div[rows]) > tol]
    if bad.size:
        return Check(False, (lat.key(int(bad[0])), float(div[bad[0]])))
    return Check(True)


def force_null_player(v, i):
    """Copy of ``v`` with ``v(T) := v(T ∖ i)`` wherever ``i`` is maximal, making ``i`` null."""
    lat = v.lattice
    worth = v.worth.copy()
    rows = np.flatnonzero(lat.maximal_matrix[:, i])
    worth[rows] = worth[lat.remove_index[rows, i]]
    return Game(lat, worth)


@dataclass(frozen=True)
class MarginalTerm:
    coalition: DownSet
    beta: float
    marginal: float


def dividend_marginal_decomposition(v, s, i):
    """Write ``v̂(S)`` as ``Σ β_i(T) (v(T) − v(T ∖ i))`` over ``T ⊆ S`` with ``i ∈ T*``.

    Peeling ``v̂(S) = (v(S) − v(S∖i)) − Σ_{T ⊂ S, i ∈ T*} v̂(T)`` recursively
    makes ``β_i`` the Möbius function of that family ordered by inclusion:
    ``β_i(S) = 1`` and ``β_i(T) = −Σ β_i(U)`` over the family members ``U``
    strictly between ``T`` and ``S``.
    """
    lat = v.lattice
    s_idx = lat.index(s)
    i = lat.algebra.check(i)
    if not lat.maximal_matrix[s_idx, i]:
        raise DomainError(f"{lat.algebra.key(i)} is not maximal in {lat.key(s_idx)}")
    sm = int(lat.masks[s_idx])
    family = [
        k for k in range(len(lat))
        if lat.maximal_matrix[k, i] and int(lat.masks[k]) & ~sm == 0
    ]
    # descending cardinality so each β sees every strict superset first
    family.sort(key=lambda k: -int(lat.cardinality[k]))
    beta = {}
    for k in family:
        if k == s_idx:
            beta[k] = 1.0
            continue
        mk = int(lat.masks[k])
        beta[k] = -sum(b for u, b in beta.items() if mk & ~int(lat.masks[u]) == 0)
    terms = []
    for k in sorted(family):
        marginal = float(v.worth[k] - v.worth[lat.remove_index[k, i]])
        terms.append(MarginalTerm(lat[k], beta[k], marginal))
    return terms


def random_game(lattice, rng, bottom_zero=False, scale=1.0):
    """Worths i.i.d. normal on every nonempty coalition."""
    lattice = _as_lattice(lattice)
    worth = rng.normal(0.0, scale, len(lattice))
    worth[0] = 0.0
    if bottom_zero:
        worth[1] = 0.0
    return Game(lattice, worth)


def random_monotone_game(lattice, rng, density=0.5, bottom_zero=False):
    """A random monotone nonnegative game.

    Nonnegative dividends on a random subset of coalitions give a monotone but
    supermodular-leaning base; independent noise is added on top and any
    resulting monotonicity violation is repaired by raising the larger
    coalition to the worth of its largest subcoalition.
    """
    lattice = _as_lattice(lattice)
    n = len(lattice)
    div = rng.exponential(1.0, n) * (rng.random(n) < density)
    div[0] = 0.0
    if bottom_zero:
        div[1] = 0.0
    worth = _kernels.zeta(lattice.masks, div)
    worth = worth + rng.exponential(0.5, n) * (rng.random(n) < density)
    worth[0] = 0.0
    if bottom_zero:
        worth[1] = 0.0
    succ, _, nsucc = lattice.successor_table
    for k in range(n):
        for j in range(nsucc[k]):
            t = succ[k, j]
            if worth[t] < worth[k]:
                worth[t] = worth[k]
    return Game(lattice, worth)


def dividend_rows(v):
    """Rows ``(coalition key, worth, dividend)`` in canonical order, empty coalition omitted."""
    div = harsanyi_transform(v).dividend
    lat = v.lattice
    return [(lat.key(k), float(v.worth[k]), float(div[k])) for k in range(1, len(lat))]


def dividends_csv(v):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["coalition", "worth", "dividend"])
    for key, w, d in dividend_rows(v):
        writer.writerow([key, repr(w), repr(d)])
    return buf.getvalue()


def load_game(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return Game.from_json(data)


__all__ = [
    "Automorphism",
    "Check",
    "DividendTable",
    "Game",
    "MarginalTerm",
    "dividend_marginal_decomposition",
    "dividend_rows",
    "dividends_csv",
    "force_null_player",
    "harsanyi_transform",
    "is_carrier",
    "is_monotone",
    "is_nonnegative",
    "is_submodular",
    "is_supermodular",
    "load_game",
    "mobius_closed_form",
    "null_dividend_check",
    "null_players",
    "random_game",
    "random_monotone_game",
    "unanimity_game",
    "zeta_transform",
]

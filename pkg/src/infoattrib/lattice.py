"""Boolean algebras of players, their down-set lattices and linear extensions.

A player of the rank-``n`` boolean algebra is encoded by the integer bitmask of
its atoms, so ``i ⪯ j`` is the subset test ``i & ~j == 0`` and the bottom and
top players are ``0`` and ``2**n - 1``. A down-set (feasible coalition) is in
turn a bitmask over the ``2**n`` player ids.

Textual keys follow one convention everywhere: a player is the sorted string
of its atom letters (``"ab"`` for ``a ∨ b``) with ``"0"`` for the bottom, and
a down-set is the sorted list of its maximal players in angle brackets, e.g.
``"<ab,c>"``; the empty coalition is ``"<>"``.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import _kernels
from .errors import CapacityError, DomainError, InvalidElementError, ValidationError

DEFAULT_MAX_DOWNSET_RANK = 5
DEFAULT_MAX_EXTENSION_RANK = 3
DEFAULT_MAX_STREAM_RANK = 4
SUBPOSET_CAP = 16

# rank n -> number of down-sets (Dedekind numbers), for error messages only
_DEDEKIND = {0: 2, 1: 3, 2: 6, 3: 20, 4: 168, 5: 7581, 6: 7828354, 7: 2414682040998}


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


def max_downset_rank():
    return _env_int("INFOATTRIB_MAX_DOWNSET_RANK", DEFAULT_MAX_DOWNSET_RANK)


def max_extension_rank():
    return _env_int("INFOATTRIB_MAX_EXTENSION_RANK", DEFAULT_MAX_EXTENSION_RANK)


class BooleanAlgebra:
    """The boolean algebra of rank ``n`` with players ``0 .. 2**n - 1``."""

    def __init__(self, rank):
        if not isinstance(rank, (int, np.integer)) or rank < 1:
            raise DomainError(f"rank must be a positive integer, got {rank!r}")
        if rank > 26:
            raise CapacityError("atom letters run out above rank 26")
        self.rank = int(rank)
        self.size = 1 << self.rank

    def __repr__(self):
        return f"BooleanAlgebra(rank={self.rank})"

    def __eq__(self, other):
        return isinstance(other, BooleanAlgebra) and other.rank == self.rank

    def __hash__(self):
        return hash(("BooleanAlgebra", self.rank))

    @property
    def elements(self):
        return range(self.size)

    @property
    def bottom(self):
        return 0

    @property
    def top(self):
        return self.size - 1

    @property
    def atoms(self):
        return tuple(1 << k for k in range(self.rank))

    def check(self, i):
        if isinstance(i, str):
            return self.parse(i)
        if not isinstance(i, (int, np.integer)) or not 0 <= i < self.size:
            raise InvalidElementError(f"{i!r} is not a player of {self!r}")
        return int(i)

    def leq(self, i, j):
        return i & ~j == 0

    def rho(self, i):
        return bin(i).count("1")

    def join(self, i, j):
        return i | j

    def meet(self, i, j):
        return i & j

    def key(self, i):
        if i == 0:
            return "0"
        return "".join(chr(97 + k) for k in range(self.rank) if i >> k & 1)

    def parse(self, key):
        key = key.strip()
        if key in ("0", "⊥"):
            return 0
        if key == "⊤":
            return self.top
        i = 0
        for ch in key:
            k = ord(ch) - 97
            if not 0 <= k < self.rank or i >> k & 1:
                raise InvalidElementError(f"bad player key {key!r} for rank {self.rank}")
            i |= 1 << k
        if not key:
            raise InvalidElementError("empty player key")
        return i

    @cached_property
    def principal_masks(self):
        """``principal_masks[i]`` is the member bitmask of ``⟨i⟩``."""
        return tuple(
            sum(1 << j for j in range(self.size) if j & ~i == 0) for i in range(self.size)
        )

    @cached_property
    def upper_masks(self):
        """``upper_masks[i]`` is the member bitmask of ``{j : i ⪯ j}``."""
        return tuple(
            sum(1 << j for j in range(self.size) if i & ~j == 0) for i in range(self.size)
        )

    def down_closure(self, generators):
        return down_closure(self, generators)


@lru_cache(maxsize=None)
def boolean_algebra(rank):
    return BooleanAlgebra(rank)


@dataclass(frozen=True)
class DownSet:
    """A down-set of the rank-``rank`` algebra, stored as a member bitmask."""

    rank: int
    mask: int

    @property
    def algebra(self):
        return boolean_algebra(self.rank)

    @cached_property
    def members(self):
        return tuple(j for j in range(1 << self.rank) if self.mask >> j & 1)

    @cached_property
    def maximal(self):
        up = self.algebra.upper_masks
        return tuple(i for i in self.members if self.mask & up[i] == 1 << i)

    @cached_property
    def key(self):
        alg = self.algebra
        return "<" + ",".join(sorted(alg.key(i) for i in self.maximal)) + ">"

    @property
    def sort_key(self):
        alg = self.algebra
        return (len(self), tuple(sorted(alg.key(i) for i in self.maximal)))

    def __len__(self):
        return bin(self.mask).count("1")

    def __contains__(self, i):
        return 0 <= i < (1 << self.rank) and bool(self.mask >> i & 1)

    def __iter__(self):
        return iter(self.members)

    def __le__(self, other):
        return self.mask & ~other.mask == 0

    def __lt__(self, other):
        return self.mask != other.mask and self <= other

    def __or__(self, other):
        return DownSet(self.rank, self.mask | other.mask)

    def __and__(self, other):
        return DownSet(self.rank, self.mask & other.mask)

    def __repr__(self):
        return f"DownSet({self.key})"

    def is_maximal(self, i):
        return i in self and self.mask & self.algebra.upper_masks[i] == 1 << i

    def without(self, i):
        """``S ∖ {i}`` for a maximal ``i``; the result is again a down-set."""
        if not self.is_maximal(i):
            raise DomainError(f"{self.algebra.key(i)} is not maximal in {self.key}")
        return DownSet(self.rank, self.mask & ~(1 << i))


def is_down_set(algebra, mask):
    pm = algebra.principal_masks
    return all(pm[j] & ~mask == 0 for j in range(algebra.size) if mask >> j & 1)


def down_closure(algebra, generators):
    """``⟨generators⟩``: every player below some generator."""
    mask = 0
    pm = algebra.principal_masks
    for g in generators:
        mask |= pm[algebra.check(g)]
    return DownSet(algebra.rank, mask)


def maximal_elements(algebra, s):
    """The ⪯-maximal players of an arbitrary subset ``s`` (sorted by id)."""
    items = sorted({algebra.check(i) for i in s})
    return tuple(i for i in items if not any(j != i and i & ~j == 0 for j in items))


def is_antichain(algebra, s):
    items = [algebra.check(i) for i in s]
    return all(not (i & ~j == 0 or j & ~i == 0) for i, j in itertools.combinations(items, 2)) and (
        len(set(items)) == len(items)
    )


def parse_downset_key(algebra, key):
    """Parse ``"<ab,c>"`` (or ``"⟨ab,c⟩"``) into a :class:`DownSet`.

    The listed players must form an antichain; their order is free.
    """
    text = key.strip()
    if len(text) >= 2 and text[0] in "<⟨" and text[-1] in ">⟩":
        text = text[1:-1]
    else:
        raise ValidationError(f"down-set key {key!r} must be wrapped in <...>")
    parts = [p.strip() for p in text.split(",")] if text.strip() else []
    try:
        items = [algebra.parse(p) for p in parts]
    except InvalidElementError as exc:
        raise ValidationError(f"bad down-set key {key!r}: {exc}") from None
    if not is_antichain(algebra, items):
        raise ValidationError(f"down-set key {key!r} does not list an antichain")
    return down_closure(algebra, items)


def _enumerate_down_set_masks(algebra):
    # grow closures one addable player at a time, level by level
    pm = algebra.principal_masks
    level = {0}
    found = [0]
    for _ in range(algebra.size):
        nxt = set()
        for mask in level:
            for x in range(algebra.size):
                bit = 1 << x
                if not mask & bit and pm[x] & ~mask == bit:
                    nxt.add(mask | bit)
        found.extend(nxt)
        level = nxt
    return found


class DownSetLattice:
    """The lattice 𝒟(P,⪯) of a boolean algebra in canonical order.

    Down-sets are sorted by (cardinality, sorted maximal-player keys); index 0
    is the empty coalition and the last index is the whole algebra.
    """

    def __init__(self, algebra, max_rank=None):
        if isinstance(algebra, int):
            algebra = boolean_algebra(algebra)
        cap = max_downset_rank() if max_rank is None else max_rank
        if algebra.rank > cap:
            count = _DEDEKIND.get(algebra.rank, "astronomically many")
            raise CapacityError(
                f"rank {algebra.rank} has {count} down-sets (Dedekind growth); "
                f"the enumeration cap is rank {cap}"
            )
        self.algebra = algebra
        self.rank = algebra.rank
        masks = _enumerate_down_set_masks(algebra)
        downsets = sorted((DownSet(algebra.rank, m) for m in masks), key=lambda s: s.sort_key)
        self.downsets = tuple(downsets)
        self._index = {s.mask: k for k, s in enumerate(self.downsets)}
        self._key_index = {s.key: k for k, s in enumerate(self.downsets)}

    def __len__(self):
        return len(self.downsets)

    def __getitem__(self, k):
        return self.downsets[k]

    def __iter__(self):
        return iter(self.downsets)

    def __repr__(self):
        return f"DownSetLattice(rank={self.rank}, size={len(self)})"

    @property
    def empty_index(self):
        return 0

    @property
    def top_index(self):
        return len(self.downsets) - 1

    @property
    def n_players(self):
        return self.algebra.size

    def index(self, s):
        """Index of a down-set given as :class:`DownSet`, key string or bitmask."""
        if isinstance(s, DownSet):
            mask = s.mask
        elif isinstance(s, str):
            k = self._key_index.get(s)
            if k is not None:
                return k
            mask = parse_downset_key(self.algebra, s).mask
        else:
            mask = int(s)
        try:
            return self._index[mask]
        except KeyError:
            raise DomainError(f"mask {mask:#x} is not a down-set of rank {self.rank}") from None

    def key(self, k):
        return self.downsets[k].key

    @cached_property
    def keys(self):
        return tuple(s.key for s in self.downsets)

    @cached_property
    def masks(self):
        return np.array([s.mask for s in self.downsets], dtype=np.int64)

    @cached_property
    def cardinality(self):
        return np.array([len(s) for s in self.downsets], dtype=np.int64)

    @cached_property
    def member_matrix(self):
        m = np.zeros((len(self), self.n_players), dtype=bool)
        for k, s in enumerate(self.downsets):
            m[k, list(s.members)] = True
        return m

    @cached_property
    def maximal_matrix(self):
        """``maximal_matrix[k, i]`` is true iff player ``i`` is maximal in down-set ``k``."""
        m = np.zeros((len(self), self.n_players), dtype=bool)
        for k, s in enumerate(self.downsets):
            m[k, list(s.maximal)] = True
        return m

    @cached_property
    def remove_index(self):
        """``remove_index[k, i]`` = index of ``S_k ∖ i`` when ``i`` is maximal, else -1."""
        out = np.full((len(self), self.n_players), -1, dtype=np.int64)
        for k, s in enumerate(self.downsets):
            for i in s.maximal:
                out[k, i] = self._index[s.mask & ~(1 << i)]
        return out

    @cached_property
    def successor_table(self):
        """Padded cover table ``(succ, succ_elem, nsucc)`` used by the chain kernels."""
        pm = self.algebra.principal_masks
        rows = []
        for s in self.downsets:
            row = []
            for x in range(self.n_players):
                bit = 1 << x
                if not s.mask & bit and pm[x] & ~s.mask == bit:
                    row.append((self._index[s.mask | bit], x))
            rows.append(row)
        width = max(len(r) for r in rows) or 1
        succ = np.full((len(self), width), -1, dtype=np.int64)
        succ_elem = np.full((len(self), width), -1, dtype=np.int64)
        nsucc = np.zeros(len(self), dtype=np.int64)
        for k, row in enumerate(rows):
            nsucc[k] = len(row)
            for j, (t, x) in enumerate(row):
                succ[k, j] = t
                succ_elem[k, j] = x
        return succ, succ_elem, nsucc

    @cached_property
    def ways_exact(self):
        """Exact count of maximal chains from each down-set up to the top."""
        succ, _, nsucc = self.successor_table
        ways = [0] * len(self)
        ways[self.top_index] = 1
        for k in range(len(self) - 2, -1, -1):
            ways[k] = sum(ways[succ[k, j]] for j in range(nsucc[k]))
        return tuple(ways)

    @cached_property
    def ways_from_bottom_exact(self):
        """Exact count of maximal chains from the empty coalition up to each down-set."""
        succ, _, nsucc = self.successor_table
        ways = [0] * len(self)
        ways[0] = 1
        for k in range(len(self)):
            for j in range(nsucc[k]):
                ways[succ[k, j]] += ways[k]
        return tuple(ways)

    @cached_property
    def ways(self):
        return np.array([float(w) for w in self.ways_exact], dtype=np.float64)

    @property
    def n_extensions(self):
        """``|ℒ(P)|`` as an exact integer."""
        return self.ways_exact[0]

    def union(self, i, j):
        return self._index[int(self.masks[i] | self.masks[j])]

    def intersection(self, i, j):
        return self._index[int(self.masks[i] & self.masks[j])]


@lru_cache(maxsize=None)
def _lattice_cached(rank):
    return DownSetLattice(boolean_algebra(rank), max_rank=rank)


def get_lattice(algebra_or_rank, max_rank=None):
    """Cached :class:`DownSetLattice` for an algebra or rank, honouring the cap."""
    rank = algebra_or_rank.rank if isinstance(algebra_or_rank, BooleanAlgebra) else int(algebra_or_rank)
    cap = max_downset_rank() if max_rank is None else max_rank
    if rank > cap:
        DownSetLattice(boolean_algebra(rank), max_rank=cap)  # raises CapacityError
    return _lattice_cached(rank)


def enumerate_down_sets(algebra, max_rank=None):
    """All down-sets in canonical order (empty first, whole algebra last)."""
    return get_lattice(algebra, max_rank=max_rank).downsets


@dataclass(frozen=True)
class LinearExtension:
    """An order-preserving bijection ``f: P → {1, …, 2**n}``.

    ``order[k]`` is the player ranked ``k + 1``.
    """

    rank: int
    order: tuple

    def __post_init__(self):
        size = 1 << self.rank
        if sorted(self.order) != list(range(size)):
            raise DomainError("a linear extension must rank every player exactly once")
        pos = self.rank_of
        for i in range(size):
            for k in range(self.rank):
                up = i | (1 << k)
                if up != i and pos[up] < pos[i]:
                    raise DomainError("linear extension is not order-preserving")

    @cached_property
    def rank_of(self):
        pos = np.empty(len(self.order), dtype=np.int64)
        pos[list(self.order)] = np.arange(1, len(self.order) + 1)
        return pos

    def __call__(self, i):
        return int(self.rank_of[i])

    def keys(self):
        alg = boolean_algebra(self.rank)
        return [alg.key(i) for i in self.order]

    def __repr__(self):
        return "LinearExtension(" + " < ".join(self.keys()) + ")"


def extensions_equal(f1, f2):
    """Equality through rank comparisons: ``f1(i) > f1(j)`` always forces ``f2(i) > f2(j)``."""
    r1 = np.asarray(f1.rank_of)
    r2 = np.asarray(f2.rank_of)
    above1 = r1[:, None] > r1[None, :]
    above2 = r2[:, None] > r2[None, :]
    return bool(np.all(~above1 | above2))


def _stream_cap_check(algebra, cap, what):
    if algebra.rank > cap:
        raise CapacityError(
            f"{what} at rank {algebra.rank} exceeds the cap (rank {cap}); "
            f"pass a larger cap explicitly to opt in"
        )


def extension_table(algebra, max_rank=None):
    """All linear extensions as arrays ``(paths, orders)``.

    ``orders[r, k]`` is the player ranked ``k + 1`` in extension ``r``;
    ``paths[r, k]`` is the index of the down-set formed by the first ``k``
    players. Rows follow the deterministic backtracking order.
    """
    if isinstance(algebra, int):
        algebra = boolean_algebra(algebra)
    cap = max_extension_rank() if max_rank is None else max_rank
    _stream_cap_check(algebra, cap, "materialized linear-extension enumeration")
    return _extension_table_cached(algebra.rank)


@lru_cache(maxsize=None)
def _extension_table_cached(rank):
    lat = _lattice_cached(rank)
    succ, succ_elem, nsucc = lat.successor_table
    total = lat.n_extensions
    paths, orders = _kernels.enumerate_paths(
        succ, succ_elem, nsucc, 0, lat.top_index, lat.n_players, total
    )
    paths.setflags(write=False)
    orders.setflags(write=False)
    return paths, orders


def enumerate_linear_extensions(algebra, max_rank=None):
    """Materialize ℒ(P) in deterministic backtracking order (rank ≤ 3 by default)."""
    if isinstance(algebra, int):
        algebra = boolean_algebra(algebra)
    _, orders = extension_table(algebra, max_rank=max_rank)
    out = tuple(LinearExtension(algebra.rank, tuple(int(x) for x in row)) for row in orders)
    if len({f.order for f in out}) != len(out):
        raise RuntimeError("duplicate linear extension in enumeration")
    return out


def count_linear_extensions(algebra, method="dp", max_rank=None):
    """``|ℒ(P)|``.

    ``method="dp"`` counts maximal chains of 𝒟 by dynamic programming (exact,
    instant through rank 5). ``method="stream"`` walks every extension with the
    backtracking kernel without storing it; allowed up to rank 4 by default.
    """
    if isinstance(algebra, int):
        algebra = boolean_algebra(algebra)
    if method == "dp":
        return get_lattice(algebra).n_extensions
    if method == "stream":
        cap = DEFAULT_MAX_STREAM_RANK if max_rank is None else max_rank
        _stream_cap_check(algebra, cap, "streaming linear-extension count")
        lat = get_lattice(algebra)
        succ, _, nsucc = lat.successor_table
        return _kernels.count_paths(succ, nsucc, 0, lat.top_index, lat.n_players)
    raise DomainError(f"unknown counting method {method!r}")


def count_extensions_of_subposet(algebra, s, cap=SUBPOSET_CAP):
    """``e_S``: number of linear orders of ``s`` extending ⪯ restricted to ``s``.

    Counts by dynamic programming over the order ideals of the induced
    subposet; ``e_∅ = 1``.
    """
    items = sorted({algebra.check(i) for i in s})
    if len(items) > cap:
        raise CapacityError(f"subposet of {len(items)} players exceeds the cap of {cap}")
    lower = []
    for i in items:
        m = 0
        for k, j in enumerate(items):
            if j != i and j & ~i == 0:
                m |= 1 << k
        lower.append(m)
    counts = {0: 1}
    for _ in range(len(items)):
        nxt = {}
        for ideal, c in counts.items():
            for k, low in enumerate(lower):
                bit = 1 << k
                if not ideal & bit and low & ~ideal == 0:
                    nxt[ideal | bit] = nxt.get(ideal | bit, 0) + c
        counts = nxt
    return counts.get((1 << len(items)) - 1, 0) if items else 1


@dataclass(frozen=True)
class ExtensionSample:
    """A batch of sampled linear extensions.

    ``weights`` are importance weights relative to the uniform distribution on
    ℒ(P): identically one for the count-guided sampler, proportional to
    ``1 / q(f)`` (the product of branching widths) for the greedy sampler.
    """

    paths: np.ndarray
    orders: np.ndarray
    weights: np.ndarray
    method: str


def sample_extensions(algebra, n, seed, method="exact"):
    """Draw ``n`` linear extensions with a reproducible seed.

    ``method="exact"`` walks the chain graph choosing each next player with
    probability proportional to the number of completions, which is exactly
    uniform on ℒ(P). ``method="greedy"`` picks uniformly among the currently
    minimal players; it is biased toward extensions with few branchings and the
    returned weights must be used to correct that bias.
    """
    if isinstance(algebra, int):
        algebra = boolean_algebra(algebra)
    if n < 1:
        raise DomainError("sample size must be at least 1")
    lat = get_lattice(algebra)
    succ, succ_elem, nsucc = lat.successor_table
    rng = np.random.default_rng(seed)
    uniforms = rng.random((n, lat.n_players))
    if method == "exact":
        paths, orders = _kernels.sample_paths_counted(
            succ, succ_elem, nsucc, lat.ways, 0, lat.top_index, lat.n_players, uniforms
        )
        weights = np.ones(n)
    elif method == "greedy":
        paths, orders, log_w = _kernels.sample_paths_greedy(
            succ, succ_elem, nsucc, 0, lat.top_index, lat.n_players, uniforms
        )
        weights = np.exp(log_w - math.log(lat.n_extensions))
    else:
        raise DomainError(f"unknown sampling method {method!r}")
    return ExtensionSample(paths, orders, weights, method)


def sample_linear_extension(algebra, seed, method="exact"):
    """One sampled extension and its importance weight (see :func:`sample_extensions`)."""
    if isinstance(algebra, int):
        algebra = boolean_algebra(algebra)
    batch = sample_extensions(algebra, 1, seed, method=method)
    f = LinearExtension(algebra.rank, tuple(int(x) for x in batch.orders[0]))
    return f, float(batch.weights[0])


@dataclass(frozen=True)
class Automorphism:
    """A boolean automorphism induced by a permutation of the atoms."""

    rank: int
    atom_map: tuple

    def __post_init__(self):
        if sorted(self.atom_map) != list(range(self.rank)):
            raise DomainError(f"{self.atom_map!r} is not a permutation of {self.rank} atoms")

    @classmethod
    def identity(cls, rank):
        return cls(rank, tuple(range(rank)))

    @cached_property
    def table(self):
        out = np.empty(1 << self.rank, dtype=np.int64)
        for i in range(1 << self.rank):
            out[i] = sum(1 << self.atom_map[k] for k in range(self.rank) if i >> k & 1)
        return out

    def __call__(self, i):
        return int(self.table[i])

    def inverse(self):
        inv = [0] * self.rank
        for k, t in enumerate(self.atom_map):
            inv[t] = k
        return Automorphism(self.rank, tuple(inv))

    def apply(self, s):
        return apply_automorphism(self, s)


def apply_automorphism(sigma, s):
    """Elementwise image ``σ(S)`` of a down-set."""
    if sigma.rank != s.rank:
        raise DomainError("automorphism and down-set live on different algebras")
    mask = 0
    for i in s.members:
        mask |= 1 << sigma(i)
    return DownSet(s.rank, mask)


def all_automorphisms(rank):
    return tuple(Automorphism(rank, p) for p in itertools.permutations(range(rank)))

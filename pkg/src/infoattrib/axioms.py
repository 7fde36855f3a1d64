"""Randomized and exhaustive checks of value axioms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError
from .games import (
    Game,
    force_null_player,
    is_monotone,
    random_game,
    random_monotone_game,
    unanimity_game,
)
from .lattice import all_automorphisms, get_lattice
from .selectors import BUILTIN_SHARING, sharing_value
from .values import ExtensionDistribution, hierarchical_value, random_order_value, strength_matrix

AXIOMS = (
    "efficiency",
    "positivity",
    "null-player",
    "carrier",
    "symmetry",
    "linearity",
    "hierarchical-strength",
)


@dataclass(frozen=True)
class ValueSpec:
    """A named value: ``fn(game) -> Allocation``."""

    name: str
    fn: object

    def __call__(self, v):
        return self.fn(v)


def named_value(name, method="exact-dividend"):
    """Resolve a built-in value by name."""
    if name == "hierarchical":
        return ValueSpec("hierarchical", lambda v: hierarchical_value(v, method=method))
    if name == "random-order":
        return ValueSpec(
            "random-order", lambda v: random_order_value(v, ExtensionDistribution.uniform(v.rank))
        )
    if name in BUILTIN_SHARING:
        build = BUILTIN_SHARING[name]
        cache = {}

        def fn(v):
            if v.rank not in cache:
                cache[v.rank] = build(v.rank)
            return sharing_value(v, cache[v.rank])

        return ValueSpec(name, fn)
    raise DomainError(f"unknown value {name!r}")


@dataclass
class AxiomResult:
    axiom: str
    passed: bool
    trials: int
    witness: dict | None = None

    def to_json(self):
        out = {"axiom": self.axiom, "passed": self.passed, "trials": self.trials}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class AxiomReport:
    value: str
    rank: int
    results: list = field(default_factory=list)

    def __getitem__(self, axiom):
        for r in self.results:
            if r.axiom == axiom:
                return r
        raise KeyError(axiom)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def to_json(self):
        return {"value": self.value, "rank": self.rank, "results": [r.to_json() for r in self.results]}


def value_matrix(value, lattice):
    """Matrix ``M`` with ``φ(v) = v.worth @ M`` for a linear value (rows: coalitions)."""
    n = len(lattice)
    m = np.zeros((n, lattice.n_players))
    for k in range(1, n):
        e = np.zeros(n)
        e[k] = 1.0
        m[k] = value(Game(lattice, e)).vector
    return m


@dataclass(frozen=True)
class PositivityWitness:
    game: Game
    player: int
    payoff: float
    source: str


def positivity_lp(value, rank, tol=1e-9):
    """Exact search for a monotone game with a negative payoff (linear values only).

    For each player minimizes ``φ_i(v)`` over monotone games with worths in
    ``[0, 1]``; a negative optimum is a witness, and a nonnegative one proves
    Positivity for that player by scaling.
    """
    lat = get_lattice(rank)
    m = value_matrix(value, lat)
    n = len(lat)
    succ, _, nsucc = lat.successor_table
    rows = []
    for k in range(n):
        for j in range(nsucc[k]):
            r = np.zeros(n)
            r[k], r[succ[k, j]] = 1.0, -1.0
            rows.append(r)
    a_ub = np.array(rows)
    b_ub = np.zeros(len(rows))
    bounds = [(0.0, 0.0)] + [(0.0, 1.0)] * (n - 1)
    best = None
    for i in range(lat.n_players):
        res = linprog(m[:, i], A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"positivity LP failed for player {i}: {res.message}")
        if res.fun < -tol and (best is None or res.fun < best[1]):
            best = (i, res.fun, res.x)
    if best is None:
        return None
    i, _, x = best
    x = np.where(np.abs(x) < 1e-12, 0.0, x)
    x[0] = 0.0
    game = Game(lat, x)
    return PositivityWitness(game, i, float(value(game)[i]), "lp")


def random_upset_game(lattice, rng, density=None):
    """A 0/1 monotone game: worth 1 exactly on supersets of randomly drawn coalitions."""
    n = len(lattice)
    if density is None:
        density = rng.uniform(0.02, 0.3)
    gens = np.flatnonzero(rng.random(n) < density)
    gens = gens[gens > 0]
    masks = lattice.masks
    worth = np.zeros(n)
    for g in gens:
        worth[(masks & masks[g]) == masks[g]] = 1.0
    worth[0] = 0.0
    return Game(lattice, worth)


def positivity_search(value, rank, trials, seed, tol=1e-12):
    """Randomized search for a monotone game with a negative payoff.

    Alternates 0/1 up-set games and the noisy monotone generator. Returns the
    first witness and the number of trials used, or ``(None, trials)``.
    """
    lat = get_lattice(rank)
    rng = np.random.default_rng(seed)
    for t in range(1, trials + 1):
        if t % 2:
            v = random_upset_game(lat, rng)
        else:
            v = random_monotone_game(lat, rng, density=rng.uniform(0.1, 0.9))
        phi = value(v).vector
        i = int(np.argmin(phi))
        if phi[i] < -tol:
            return PositivityWitness(v, i, float(phi[i]), "random"), t
    return None, trials


def _carrier_game(lat, rng, u):
    um = lat.masks[u]
    masks = lat.masks
    sorter = np.argsort(masks)
    inter = sorter[np.searchsorted(masks[sorter], masks & um)]
    base = rng.normal(size=len(lat))
    base[0] = 0.0
    return Game(lat, base[inter])


def check_axioms(value, rank=3, trials=200, seed=0, axioms=AXIOMS, tol=1e-9,
                 positivity_trials=None, use_lp=True):
    """Test ``value`` against each axiom on random and exhaustive small cases."""
    if isinstance(value, str):
        value = named_value(value)
    lat = get_lattice(rank)
    rng = np.random.default_rng(seed)
    report = AxiomReport(value.name, rank)
    keys = lat.algebra.key

    for axiom in axioms:
        witness = None
        count = trials
        if axiom == "efficiency":
            for _ in range(trials):
                v = random_game(lat, rng)
                gap = value(v).total() - v.worth[-1]
                if abs(gap) > tol:
                    witness = {"game": v.to_json(), "gap": float(gap)}
                    break
        elif axiom == "positivity":
            found = None
            if use_lp:
                found = positivity_lp(value, rank)
            if found is None:
                found, count = positivity_search(value, rank, positivity_trials or trials, seed)
            if found is not None:
                witness = {"game": found.game.to_json(), "player": keys(found.player),
                           "payoff": found.payoff, "source": found.source,
                           "monotone": bool(is_monotone(found.game))}
        elif axiom == "null-player":
            for _ in range(trials):
                i = int(rng.integers(lat.n_players))
                v = force_null_player(random_game(lat, rng), i)
                pay = value(v)[i]
                if abs(pay) > tol:
                    witness = {"game": v.to_json(), "player": keys(i), "payoff": pay}
                    break
        elif axiom == "carrier":
            for _ in range(trials):
                u = int(rng.integers(1, len(lat)))
                v = _carrier_game(lat, rng, u)
                members = list(lat[u].members)
                gap = float(value(v).vector[members].sum() - v.worth[u])
                if abs(gap) > tol:
                    witness = {"game": v.to_json(), "carrier": lat.key(u), "gap": gap}
                    break
        elif axiom == "symmetry":
            sigmas = all_automorphisms(rank)
            for _ in range(trials):
                v = random_game(lat, rng)
                phi = value(v).vector
                sigma = sigmas[int(rng.integers(len(sigmas)))]
                phi_s = value(v.permuted(sigma)).vector
                gaps = np.abs(phi_s[sigma.table] - phi)
                if gaps.max() > tol:
                    i = int(np.argmax(gaps))
                    witness = {"game": v.to_json(), "atom_map": list(sigma.atom_map),
                               "player": keys(i), "gap": float(gaps[i])}
                    break
        elif axiom == "linearity":
            for _ in range(trials):
                v, w = random_game(lat, rng), random_game(lat, rng)
                a, b = rng.normal(size=2)
                lhs = value(a * v + b * w).vector
                rhs = a * value(v).vector + b * value(w).vector
                if np.abs(lhs - rhs).max() > tol:
                    witness = {"alpha": float(a), "beta": float(b),
                               "gap": float(np.abs(lhs - rhs).max())}
                    break
        elif axiom == "hierarchical-strength":
            h = strength_matrix(lat)
            count = len(lat) - 1
            for k in range(1, len(lat)):
                phi = value(unanimity_game(lat[k], lat)).vector
                members = np.array(lat[k].members)
                hs, ps = h[k, members], phi[members]
                cross = np.abs(hs[:, None] * ps[None, :] - hs[None, :] * ps[:, None])
                if cross.max() > tol:
                    a, b = np.unravel_index(int(np.argmax(cross)), cross.shape)
                    witness = {"coalition": lat.key(k), "players": [keys(int(members[a])),
                               keys(int(members[b]))], "gap": float(cross[a, b])}
                    break
        else:
            raise DomainError(f"unknown axiom {axiom!r}")
        report.results.append(AxiomResult(axiom, witness is None, count, witness))
    return report


__all__ = [
    "AXIOMS",
    "AxiomReport",
    "AxiomResult",
    "PositivityWitness",
    "ValueSpec",
    "check_axioms",
    "named_value",
    "positivity_lp",
    "positivity_search",
    "random_upset_game",
    "value_matrix",
]

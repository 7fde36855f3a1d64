"""Discrete information measures, split distributions and Information Attribution.

Predictors are subsets of the input indices. In the predictor algebra the atom
``k`` stands for input ``k`` (0-based internally); keys shown to users are the
1-based index sets, e.g. ``{1,2}``, and coalitions are written ``<{1,2},{3}>``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import ConvergenceError, DomainError, ValidationError
from .games import Game, is_monotone
from .lattice import DownSet, get_lattice
from .selectors import BUILTIN_SHARING, sharing_value
from .values import hierarchical_value

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 100_000
MAX_INPUTS = 4


@dataclass(frozen=True)
class JointDistribution:
    """Probability tensor over ``X_1 × … × X_n × Y`` (target on the last axis)."""

    mass: np.ndarray
    input_names: tuple = ()
    input_states: tuple = ()
    target_name: str = "Y"
    target_states: tuple = ()
    pruned: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = np.array(self.mass, dtype=np.float64)
        if m.ndim < 2:
            raise DomainError("need at least one input axis and the target axis")
        if np.any(~np.isfinite(m)) or np.any(m < 0):
            raise DomainError("probabilities must be finite and nonnegative")
        if abs(m.sum() - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {m.sum()!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)
        n = m.ndim - 1
        if not self.input_names:
            object.__setattr__(self, "input_names", tuple(f"X{k + 1}" for k in range(n)))
        if not self.input_states:
            object.__setattr__(self, "input_states",
                               tuple(tuple(str(s) for s in range(d)) for d in m.shape[:-1]))
        if not self.target_states:
            object.__setattr__(self, "target_states", tuple(str(s) for s in range(m.shape[-1])))

    @property
    def n_inputs(self):
        return self.mass.ndim - 1

    @property
    def shape(self):
        return self.mass.shape

    @classmethod
    def from_array(cls, mass, prune=True, normalize_tol=1e-9, **names):
        """Normalize (if within ``normalize_tol`` of 1) and optionally drop zero-mass states."""
        m = np.array(mass, dtype=np.float64)
        if np.any(~np.isfinite(m)) or np.any(m < 0):
            raise ValidationError("probabilities must be finite and nonnegative")
        total = m.sum()
        if abs(total - 1.0) > normalize_tol:
            raise ValidationError(f"probabilities sum to {total!r}; expected 1 within {normalize_tol}")
        m = m / total
        dist = cls(m, **names)
        return dist.pruned_copy() if prune else dist

    def pruned_copy(self):
        """Drop input/target states whose marginal probability is zero."""
        m = self.mass
        keep = []
        dropped = {}
        states = list(self.input_states) + [self.target_states]
        names = list(self.input_names) + [self.target_name]
        for axis in range(m.ndim):
            other = tuple(a for a in range(m.ndim) if a != axis)
            marg = m.sum(axis=other)
            idx = np.flatnonzero(marg > 0)
            keep.append(idx)
            if len(idx) < m.shape[axis]:
                dropped[names[axis]] = [states[axis][j] for j in range(m.shape[axis]) if j not in set(idx)]
        if not dropped:
            return self
        sub = m[np.ix_(*keep)]
        return JointDistribution(
            sub / sub.sum(),
            input_names=self.input_names,
            input_states=tuple(tuple(states[a][j] for j in keep[a]) for a in range(m.ndim - 1)),
            target_name=self.target_name,
            target_states=tuple(states[-1][j] for j in keep[-1]),
            pruned={**self.pruned, **dropped},
        )

    @classmethod
    def from_json(cls, data):
        try:
            inputs = data["inputs"]
            target = data["target"]
            cells = data["mass"]
        except (KeyError, TypeError):
            raise ValidationError('distribution JSON needs "inputs", "target" and "mass"') from None
        if not inputs:
            raise ValidationError("at least one input variable is required")
        names = [str(v["name"]) for v in inputs]
        states = [[str(s) for s in v["states"]] for v in inputs]
        t_states = [str(s) for s in target["states"]]
        for nm, st in zip(names + [target["name"]], states + [t_states]):
            if len(set(st)) != len(st) or not st:
                raise ValidationError(f"variable {nm!r} needs distinct, nonempty states")
        lookup = [{s: j for j, s in enumerate(st)} for st in states]
        t_lookup = {s: j for j, s in enumerate(t_states)}
        m = np.zeros([len(s) for s in states] + [len(t_states)])
        for key, value in cells.items():
            try:
                xs, y = key.split("|")
            except ValueError:
                raise ValidationError(f"cell key {key!r} is not of the form 'x1,...,xn|y'") from None
            parts = xs.split(",")
            if len(parts) != len(states):
                raise ValidationError(f"cell key {key!r} names {len(parts)} inputs, expected {len(states)}")
            try:
                idx = tuple(lookup[k][s] for k, s in enumerate(parts)) + (t_lookup[y],)
            except KeyError as exc:
                raise ValidationError(f"cell key {key!r} uses unknown state {exc.args[0]!r}") from None
            m[idx] += float(value)
        return cls.from_array(
            m, input_names=tuple(names), input_states=tuple(tuple(s) for s in states),
            target_name=str(target["name"]), target_states=tuple(t_states),
        )

    def to_json(self):
        cells = {}
        for idx in zip(*np.nonzero(self.mass)):
            xs = ",".join(self.input_states[k][j] for k, j in enumerate(idx[:-1]))
            cells[f"{xs}|{self.target_states[idx[-1]]}"] = float(self.mass[idx])
        return {
            "inputs": [{"name": n, "states": list(s)} for n, s in zip(self.input_names, self.input_states)],
            "target": {"name": self.target_name, "states": list(self.target_states)},
            "mass": cells,
        }


def _array(q):
    return q.mass if isinstance(q, JointDistribution) else np.asarray(q, dtype=np.float64)


def entropy(q):
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    m = _array(q).ravel()
    nz = m[m > 0]
    return float(-np.sum(nz * np.log2(nz)))


def kl_divergence(q1, q2):
    """``D(q1 ∥ q2)`` in bits; ``inf`` when ``q1`` puts mass outside the support of ``q2``."""
    a, b = _array(q1), _array(q2)
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch {a.shape} vs {b.shape}")
    a, b = a.ravel(), b.ravel()
    on = a > 0
    if np.any(b[on] <= 0):
        return math.inf
    return float(np.sum(a[on] * (np.log2(a[on]) - np.log2(b[on]))))


def marginalize(p, predictor, include_target=True):
    """Marginal over the inputs in ``predictor`` (a bitmask or an iterable of 0-based indices).

    Summed-out axes are kept with length 1 so the result broadcasts against the
    full tensor.
    """
    m = _array(p)
    n = m.ndim - 1
    keep = set(_predictor_indices(predictor, n))
    axes = tuple(k for k in range(n) if k not in keep)
    if not include_target:
        axes = axes + (n,)
    return m.sum(axis=axes, keepdims=True)


def _predictor_indices(predictor, n):
    if isinstance(predictor, (int, np.integer)):
        if predictor < 0 or predictor >= 1 << n:
            raise DomainError(f"predictor mask {predictor} outside {n} inputs")
        return [k for k in range(n) if predictor >> k & 1]
    out = sorted(set(int(k) for k in predictor))
    if out and (out[0] < 0 or out[-1] >= n):
        raise DomainError(f"predictor {out} outside {n} inputs")
    return out


def independent_baseline(p):
    """``p_X · p_Y``."""
    m = _array(p)
    return marginalize(m, (1 << (m.ndim - 1)) - 1, include_target=False) * marginalize(m, 0)


def mutual_information(p):
    """``I(X; Y)`` in bits."""
    m = _array(p)
    return kl_divergence(m, independent_baseline(m))


def predictor_key(mask, n=None):
    return "{" + ",".join(str(k + 1) for k in range(mask.bit_length()) if mask >> k & 1) + "}"


def coalition_key(s):
    return "<" + ",".join(predictor_key(a) for a in s.maximal) + ">"


# ----------------------------------------------------------------- split distribution


@dataclass(frozen=True)
class SplitResult:
    q: np.ndarray
    method: str
    iterations: int
    residual: float
    history: tuple = ()


def _as_antichain(coalition, n):
    if isinstance(coalition, DownSet):
        if coalition.rank != n:
            raise DomainError(f"coalition lives on rank {coalition.rank}, distribution has {n} inputs")
        return tuple(coalition.maximal), coalition
    masks = sorted({int(a) for a in coalition})
    s = DownSet(n, _closure_mask(masks, n))
    return tuple(s.maximal), s


def _closure_mask(predictors, n):
    mask = 0
    for a in predictors:
        if a < 0 or a >= 1 << n:
            raise DomainError(f"predictor {a} outside {n} inputs")
        sub = a
        while True:
            mask |= 1 << sub
            if sub == 0:
                break
            sub = (sub - 1) & a
    return mask


def split_distribution(p, coalition, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, force_ipf=False):
    """Maximum-entropy distribution matching ``p_X`` and ``p_{X_A Y}`` for every ``A`` in the coalition.

    Only the maximal predictors constrain the solution. The full predictor set
    returns ``p`` and ``{∅}`` returns ``p_X p_Y`` directly; every other
    coalition is solved by iterative proportional fitting from the uniform
    distribution on the feasible support until the largest L1 marginal
    mismatch falls below ``tol``. ``force_ipf`` skips the two shortcuts.
    """
    m = _array(p)
    n = m.ndim - 1
    antichain, s = _as_antichain(coalition, n)
    if not antichain:
        raise DomainError("the split distribution needs a nonempty coalition")
    full = (1 << n) - 1
    if full in antichain and not force_ipf:
        return SplitResult(m.copy(), "closed-form:full", 0, 0.0)
    if antichain == (0,) and not force_ipf:
        return SplitResult(independent_baseline(m), "closed-form:independent", 0, 0.0)
    targets = [marginalize(m, full, include_target=False)]
    targets += [marginalize(m, a) for a in antichain]
    start = feasible_support(m, targets).astype(np.float64)
    return _ipf(start / start.sum(), targets, tol, max_iters, coalition_key(s))


def _sum_to(q, target):
    axes = tuple(k for k, d in enumerate(target.shape) if d == 1 and q.shape[k] != 1)
    return q.sum(axis=axes, keepdims=True)


def feasible_support(p, targets):
    """Cells that some distribution with the given marginals can charge.

    The entropy maximizer lives exactly on this set. Starting IPF on it keeps
    convergence geometric when ``p`` has structural zeros; starting on the full
    grid would only approach the boundary at rate ``O(1/t)``. Cells outside
    ``supp(p)`` that survive the zero-marginal filter are resolved with one LP
    over the homogenized constraint cone, maximizing how many of them can be
    positive at once.
    """
    m = _array(p)
    support = m > 0
    allowed = np.ones(m.shape, dtype=bool)
    for t in targets:
        allowed &= np.broadcast_to(t > 0, m.shape)
    unknown = np.flatnonzero((allowed & ~support).ravel())
    if unknown.size == 0:
        return support | allowed
    cells = np.flatnonzero(allowed.ravel())
    pos = {int(c): j for j, c in enumerate(cells)}
    grid = np.arange(m.size).reshape(m.shape)
    rows, cols, rhs = [], [], []
    r = 0
    for t in targets:
        axes = tuple(k for k, d in enumerate(t.shape) if d == 1 and m.shape[k] != 1)
        moved = np.moveaxis(grid, axes, tuple(range(m.ndim - len(axes), m.ndim)))
        flat = moved.reshape(-1, int(np.prod([m.shape[a] for a in axes], dtype=np.int64)))
        for group, value in zip(flat, t.ravel()):
            members = [pos[int(c)] for c in group if int(c) in pos]
            if not members:
                continue
            rows += [r] * len(members)
            cols += members
            rhs.append(value)
            r += 1
    nq, nu = len(cells), len(unknown)
    # variables: q (nq), scale (1), s (nu); A q − scale·b = 0, s_c ≤ q_c, 0 ≤ s ≤ 1
    a_eq = sparse.hstack([
        sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(r, nq)),
        sparse.csr_matrix(-np.asarray(rhs)[:, None]),
        sparse.csr_matrix((r, nu)),
    ])
    link = sparse.hstack([
        sparse.csr_matrix((-np.ones(nu), (np.arange(nu), [pos[int(c)] for c in unknown])), shape=(nu, nq)),
        sparse.csr_matrix((nu, 1)),
        sparse.identity(nu),
    ])
    cost = np.concatenate([np.zeros(nq + 1), -np.ones(nu)])
    bounds = [(0, None)] * (nq + 1) + [(0, 1)] * nu
    res = linprog(cost, A_ub=link, b_ub=np.zeros(nu), A_eq=a_eq, b_eq=np.zeros(r),
                  bounds=bounds, method="highs")
    out = support.copy().ravel()
    if res.status == 0:
        out[unknown] = res.x[nq + 1:] > 0.5
    else:  # fall back to the conservative support
        out[unknown] = True
    return out.reshape(m.shape)


def _ipf(q, targets, tol, max_iters, label):
    q = np.array(q, dtype=np.float64)
    history = []
    residual = math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        for sweep in range(1, max_iters + 1):
            for t in targets:
                cur = _sum_to(q, t)
                ratio = np.where(cur > 0, t / cur, 0.0)
                q = q * ratio
            residual = max(float(np.abs(_sum_to(q, t) - t).sum()) for t in targets)
            history.append(residual)
            if residual < tol:
                return SplitResult(q / q.sum(), "ipf", sweep, residual, tuple(history))
    raise ConvergenceError(
        f"IPF for coalition {label} stopped after {max_iters} sweeps with residual {residual:.3e}",
        residuals=tuple(history[-50:]),
        label=label,
    )


def marginal_residual(p, q, coalition):
    """Largest L1 gap between the constrained marginals of ``q`` and ``p``."""
    m = _array(p)
    n = m.ndim - 1
    antichain, _ = _as_antichain(coalition, n)
    full = (1 << n) - 1
    gaps = [np.abs(marginalize(q, full, False) - marginalize(m, full, False)).sum()]
    gaps += [np.abs(marginalize(q, a) - marginalize(m, a)).sum() for a in antichain]
    return float(max(gaps))


def closed_form_split(p, kind):
    """Textbook product formulas: ``full`` (p), ``independent`` (p_X p_Y), ``singletons``.

    ``singletons`` is ``p_{X_1} ⋯ p_{X_n} p_Y``. It matches the split
    distribution of ``⟨{1},…,{n}⟩`` only when the inputs are mutually
    independent and each is independent of ``Y``; otherwise it is not even
    feasible (its ``X``-marginal differs from ``p_X``). Kept for comparison.
    """
    m = _array(p)
    n = m.ndim - 1
    if kind == "full":
        return m.copy()
    if kind == "independent":
        return independent_baseline(m)
    if kind == "singletons":
        out = marginalize(m, 0)
        for k in range(n):
            out = out * marginalize(m, 1 << k, include_target=False)
        return out
    raise DomainError(f"unknown closed form {kind!r}")


# ----------------------------------------------------------------- information game


@dataclass(frozen=True)
class InformationGame:
    game: Game
    distribution: JointDistribution
    diagnostics: tuple  # per coalition: dict(coalition, method, iterations, residual)
    checks: dict

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["coalition", "worth_bits", "method", "iterations", "residual"])
        for d, worth in zip(self.diagnostics, self.game.worth[1:]):
            w.writerow([d["coalition"], repr(float(worth)), d["method"], d["iterations"], repr(d["residual"])])
        return buf.getvalue()


def _check_inputs(n, cap):
    if n > cap:
        raise DomainError(f"{n} inputs exceed the cap of {cap}")


def information_game(p, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, max_inputs=MAX_INPUTS):
    """``v_p(S) = D(p^S ∥ p_X p_Y)`` on every down-set of predictors."""
    dist = p if isinstance(p, JointDistribution) else JointDistribution.from_array(p)
    m = dist.mass
    n = dist.n_inputs
    _check_inputs(n, max_inputs)
    lat = get_lattice(n)
    base = independent_baseline(m)
    worth = np.zeros(len(lat))
    diags = []
    for k in range(1, len(lat)):
        s = lat[k]
        res = split_distribution(m, s, tol=tol, max_iters=max_iters)
        worth[k] = 0.0 if res.method == "closed-form:independent" else kl_divergence(res.q, base)
        diags.append({"coalition": coalition_key(s), "method": res.method,
                      "iterations": res.iterations, "residual": res.residual})
    game = Game(lat, worth)
    mi = mutual_information(m)
    mono = is_monotone(game, tol=1e-8)
    checks = {
        "empty_predictor_worth": float(worth[1]),
        "full_minus_mutual_information": float(worth[-1] - mi),
        "monotone_within_1e-8": bool(mono),
        "max_residual": float(max((d["residual"] for d in diags), default=0.0)),
    }
    if not mono:
        checks["monotonicity_witness"] = list(mono.witness)
    return InformationGame(game, dist, tuple(diags), checks)


# ----------------------------------------------------------------- attribution


@dataclass(frozen=True)
class Decomposition:
    contributions: dict  # predictor key -> bits
    total: float
    value: str
    method: str
    residual: float
    negative: tuple
    stderr: dict | None = None
    info: dict = field(default_factory=dict)

    def to_json(self):
        out = {
            "value": self.value,
            "method": self.method,
            "mutual_information_bits": self.total,
            "contributions_bits": self.contributions,
            "efficiency_residual": self.residual,
            "negative_contributions": list(self.negative),
        }
        if self.stderr is not None:
            out["stderr_bits"] = self.stderr
        out.update(self.info)
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["predictor", "contribution_bits"] + (["stderr_bits"] if self.stderr else [])
        w.writerow(header)
        for key, val in self.contributions.items():
            row = [key, repr(val)]
            if self.stderr:
                row.append(repr(self.stderr[key]))
            w.writerow(row)
        return buf.getvalue()


def attribute(p, value="hierarchical", method="exact", samples=None, seed=None, sharing=None,
              tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, max_rank=None):
    """Split ``I(X; Y)`` among predictors by applying a value to ``v_p``.

    ``value`` is ``hierarchical`` (``method`` exact or sampled), ``priority``,
    ``proportional``, or ``sharing-file`` with an explicit ``sharing`` system.
    Negative contributions are allowed for the latter ones and listed in
    ``negative``.
    """
    ig = information_game(p, tol=tol, max_iters=max_iters)
    v = ig.game
    n = ig.distribution.n_inputs
    if value == "hierarchical":
        if method == "exact":
            alloc = hierarchical_value(v, "exact-dividend", max_rank=max_rank)
        elif method == "sampled":
            alloc = hierarchical_value(v, "sampled", samples=samples, seed=seed)
        else:
            raise DomainError(f"unknown method {method!r}")
    elif value in BUILTIN_SHARING:
        alloc = sharing_value(v, BUILTIN_SHARING[value](n))
    elif value == "sharing-file":
        if sharing is None:
            raise DomainError("value 'sharing-file' needs a sharing system")
        alloc = sharing_value(v, sharing)
    else:
        raise DomainError(f"unknown value {value!r}")
    keys = [predictor_key(a) for a in range(1 << n)]
    contributions = {k: float(x) for k, x in zip(keys, alloc.vector)}
    total = float(v.worth[-1])
    negative = tuple(k for k, x in contributions.items() if x < -1e-9)
    stderr = None
    if alloc.stderr is not None:
        stderr = {k: float(x) for k, x in zip(keys, alloc.stderr)}
    return Decomposition(
        contributions=contributions,
        total=total,
        value=value,
        method=method if value == "hierarchical" else "sharing",
        residual=alloc.total() - total,
        negative=negative,
        stderr=stderr,
        info={"game_checks": ig.checks, "pruned_states": ig.distribution.pruned},
    )


def load_distribution(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return JointDistribution.from_json(data)


def xor_distribution():
    """Two fair independent bits and their parity."""
    m = np.zeros((2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            m[x1, x2, x1 ^ x2] = 0.25
    return JointDistribution(m)


def random_distribution(rng, cardinalities, concentration=1.0):
    """Dirichlet-distributed joint tensor; the last cardinality is the target's."""
    size = int(np.prod(cardinalities))
    m = rng.dirichlet(np.full(size, concentration)).reshape(cardinalities)
    return JointDistribution.from_array(m)


__all__ = [
    "Decomposition",
    "InformationGame",
    "JointDistribution",
    "SplitResult",
    "attribute",
    "closed_form_split",
    "coalition_key",
    "entropy",
    "feasible_support",
    "independent_baseline",
    "information_game",
    "kl_divergence",
    "load_distribution",
    "marginal_residual",
    "marginalize",
    "mutual_information",
    "predictor_key",
    "random_distribution",
    "split_distribution",
    "xor_distribution",
]

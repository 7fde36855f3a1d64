"""Hot loops over the down-set lattice.

A linear extension of the player algebra is the same thing as a maximal chain
``∅ = D_0 ⊂ D_1 ⊂ ... ⊂ D_m = P`` in the lattice of down-sets, each step
adding one currently-minimal player. The kernels below walk that chain graph
through a padded successor table::

    succ[d, k]      index of the k-th down-set covering d (-1 padded)
    succ_elem[d, k] the player added by that step
    nsucc[d]        number of valid successors of d

Each kernel has a numba-compiled twin (``*_nb``) and a python/numpy twin
(``*_py``); the public wrappers pick one through :mod:`infoattrib._accel`.
"""

import numpy as np

from . import _accel


def _count_paths_py(succ, nsucc, start, top, depth):
    stack_node = np.empty(depth + 1, dtype=np.int64)
    stack_pos = np.zeros(depth + 1, dtype=np.int64)
    sp = 0
    stack_node[0] = start
    count = 0
    while sp >= 0:
        node = stack_node[sp]
        if node == top:
            count += 1
            sp -= 1
            continue
        pos = stack_pos[sp]
        if pos < nsucc[node]:
            stack_pos[sp] = pos + 1
            sp += 1
            stack_node[sp] = succ[node, pos]
            stack_pos[sp] = 0
        else:
            sp -= 1
    return count


def _enumerate_paths_py(succ, succ_elem, nsucc, start, top, depth, total):
    paths = np.empty((total, depth + 1), dtype=np.int64)
    elems = np.empty((total, depth), dtype=np.int64)
    stack_node = np.empty(depth + 1, dtype=np.int64)
    stack_elem = np.empty(depth + 1, dtype=np.int64)
    stack_pos = np.zeros(depth + 1, dtype=np.int64)
    sp = 0
    stack_node[0] = start
    row = 0
    while sp >= 0:
        node = stack_node[sp]
        if node == top:
            if row < total:
                for k in range(depth + 1):
                    paths[row, k] = stack_node[k]
                for k in range(depth):
                    elems[row, k] = stack_elem[k + 1]
            row += 1
            sp -= 1
            continue
        pos = stack_pos[sp]
        if pos < nsucc[node]:
            stack_pos[sp] = pos + 1
            sp += 1
            stack_node[sp] = succ[node, pos]
            stack_elem[sp] = succ_elem[node, pos]
            stack_pos[sp] = 0
        else:
            sp -= 1
    return paths, elems, row


def _stream_marginal_sums_py(succ, succ_elem, nsucc, start, top, depth, worth, n_players):
    # sum of marginal vectors over every maximal chain, without materializing them
    sums = np.zeros(n_players, dtype=np.float64)
    stack_node = np.empty(depth + 1, dtype=np.int64)
    stack_elem = np.empty(depth + 1, dtype=np.int64)
    stack_pos = np.zeros(depth + 1, dtype=np.int64)
    sp = 0
    stack_node[0] = start
    count = 0
    while sp >= 0:
        node = stack_node[sp]
        if node == top:
            for k in range(1, depth + 1):
                sums[stack_elem[k]] += worth[stack_node[k]] - worth[stack_node[k - 1]]
            count += 1
            sp -= 1
            continue
        pos = stack_pos[sp]
        if pos < nsucc[node]:
            stack_pos[sp] = pos + 1
            sp += 1
            stack_node[sp] = succ[node, pos]
            stack_elem[sp] = succ_elem[node, pos]
            stack_pos[sp] = 0
        else:
            sp -= 1
    return sums, count


def _sample_paths_counted_py(succ, succ_elem, nsucc, ways, start, top, depth, uniforms):
    n = uniforms.shape[0]
    paths = np.empty((n, depth + 1), dtype=np.int64)
    elems = np.empty((n, depth), dtype=np.int64)
    for s in range(n):
        node = start
        paths[s, 0] = node
        for k in range(depth):
            target = uniforms[s, k] * ways[node]
            acc = 0.0
            chosen = nsucc[node] - 1
            for j in range(nsucc[node]):
                acc += ways[succ[node, j]]
                if target < acc:
                    chosen = j
                    break
            elems[s, k] = succ_elem[node, chosen]
            node = succ[node, chosen]
            paths[s, k + 1] = node
    return paths, elems


def _sample_paths_greedy_py(succ, succ_elem, nsucc, start, top, depth, uniforms):
    n = uniforms.shape[0]
    paths = np.empty((n, depth + 1), dtype=np.int64)
    elems = np.empty((n, depth), dtype=np.int64)
    log_weight = np.zeros(n, dtype=np.float64)
    for s in range(n):
        node = start
        paths[s, 0] = node
        for k in range(depth):
            width = nsucc[node]
            j = int(uniforms[s, k] * width)
            if j >= width:
                j = width - 1
            log_weight[s] += np.log(width)
            elems[s, k] = succ_elem[node, j]
            node = succ[node, j]
            paths[s, k + 1] = node
    return paths, elems, log_weight


def _marginal_matrix_nb_src(paths, elems, worth, n_players):
    n, depth = elems.shape
    out = np.zeros((n, n_players), dtype=np.float64)
    for s in range(n):
        for k in range(depth):
            out[s, elems[s, k]] = worth[paths[s, k + 1]] - worth[paths[s, k]]
    return out


def _marginal_matrix_py(paths, elems, worth, n_players):
    deltas = worth[paths[:, 1:]] - worth[paths[:, :-1]]
    out = np.zeros((elems.shape[0], n_players), dtype=np.float64)
    np.put_along_axis(out, elems, deltas, axis=1)
    return out


def _mobius_nb_src(masks, worth):
    # masks sorted by cardinality, so every proper subset has a smaller index
    d = masks.shape[0]
    out = np.empty(d, dtype=np.float64)
    for s in range(d):
        acc = worth[s]
        ms = masks[s]
        for t in range(s):
            if masks[t] & ~ms == 0:
                acc -= out[t]
        out[s] = acc
    return out


def _mobius_py(masks, worth):
    d = masks.shape[0]
    out = np.empty(d, dtype=np.float64)
    for s in range(d):
        sub = (masks[:s] & ~masks[s]) == 0
        out[s] = worth[s] - out[:s][sub].sum()
    return out


def _zeta_nb_src(masks, dividends):
    d = masks.shape[0]
    out = np.empty(d, dtype=np.float64)
    for s in range(d):
        acc = 0.0
        ms = masks[s]
        for t in range(s + 1):
            if masks[t] & ~ms == 0:
                acc += dividends[t]
        out[s] = acc
    return out


def _zeta_py(masks, dividends):
    d = masks.shape[0]
    out = np.empty(d, dtype=np.float64)
    for s in range(d):
        sub = (masks[: s + 1] & ~masks[s]) == 0
        out[s] = dividends[: s + 1][sub].sum()
    return out


_count_paths_nb = _accel.njit(_count_paths_py)
_enumerate_paths_nb = _accel.njit(_enumerate_paths_py)
_stream_marginal_sums_nb = _accel.njit(_stream_marginal_sums_py)
_sample_paths_counted_nb = _accel.njit(_sample_paths_counted_py)
_sample_paths_greedy_nb = _accel.njit(_sample_paths_greedy_py)
_marginal_matrix_nb = _accel.njit(_marginal_matrix_nb_src)
_mobius_nb = _accel.njit(_mobius_nb_src)
_zeta_nb = _accel.njit(_zeta_nb_src)


def _pick(nb, py):
    return nb if _accel.numba_enabled() else py


def count_paths(succ, nsucc, start, top, depth):
    return int(_pick(_count_paths_nb, _count_paths_py)(succ, nsucc, start, top, depth))


def enumerate_paths(succ, succ_elem, nsucc, start, top, depth, total):
    fn = _pick(_enumerate_paths_nb, _enumerate_paths_py)
    paths, elems, seen = fn(succ, succ_elem, nsucc, start, top, depth, total)
    if seen != total:
        raise RuntimeError(f"chain enumeration visited {seen} chains, expected {total}")
    return paths, elems


def stream_marginal_sums(succ, succ_elem, nsucc, start, top, depth, worth, n_players):
    fn = _pick(_stream_marginal_sums_nb, _stream_marginal_sums_py)
    sums, count = fn(succ, succ_elem, nsucc, start, top, depth,
                     np.ascontiguousarray(worth, dtype=np.float64), n_players)
    return sums, int(count)


def sample_paths_counted(succ, succ_elem, nsucc, ways, start, top, depth, uniforms):
    fn = _pick(_sample_paths_counted_nb, _sample_paths_counted_py)
    return fn(succ, succ_elem, nsucc, ways, start, top, depth, uniforms)


def sample_paths_greedy(succ, succ_elem, nsucc, start, top, depth, uniforms):
    fn = _pick(_sample_paths_greedy_nb, _sample_paths_greedy_py)
    return fn(succ, succ_elem, nsucc, start, top, depth, uniforms)


def marginal_matrix(paths, elems, worth, n_players):
    fn = _pick(_marginal_matrix_nb, _marginal_matrix_py)
    return fn(paths, elems, np.ascontiguousarray(worth, dtype=np.float64), n_players)


def mobius(masks, worth):
    return _pick(_mobius_nb, _mobius_py)(masks, np.ascontiguousarray(worth, dtype=np.float64))


def zeta(masks, dividends):
    return _pick(_zeta_nb, _zeta_py)(masks, np.ascontiguousarray(dividends, dtype=np.float64))

"""Time every hot kernel under numba and under the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--skip-slow] [--json out.json]

Each row reports the best of ``--repeat`` runs after one untimed warm-up call
(which also absorbs JIT compilation), plus the speed-up and a check that both
backends returned the same result.
"""

import argparse
import json
import sys
import time

import numpy as np

from infoattrib import _accel, _kernels
from infoattrib.games import random_game
from infoattrib.lattice import boolean_algebra, get_lattice, sample_extensions


def _cases(skip_slow):
    rng = np.random.default_rng(0)
    out = []

    for rank in (3, 4) if not skip_slow else (3,):
        lat = get_lattice(rank)
        succ, _, nsucc = lat.successor_table
        out.append((f"count extensions (stream), rank {rank}",
                    lambda lat=lat, succ=succ, nsucc=nsucc:
                    _kernels.count_paths(succ, nsucc, 0, lat.top_index, lat.n_players)))

    lat3 = get_lattice(3)
    succ, elem, nsucc = lat3.successor_table
    v3 = random_game(lat3, rng)
    out.append(("exact random-order sums, rank 3",
                lambda: _kernels.stream_marginal_sums(succ, elem, nsucc, 0, lat3.top_index,
                                                      lat3.n_players, v3.worth, lat3.n_players)[0]))
    if not skip_slow:
        lat4 = get_lattice(4)
        s4, e4, n4 = lat4.successor_table
        v4 = random_game(lat4, rng)
        out.append(("exact random-order sums, rank 4",
                    lambda: _kernels.stream_marginal_sums(s4, e4, n4, 0, lat4.top_index,
                                                          lat4.n_players, v4.worth, lat4.n_players)[0]))

    for rank in (3, 4):
        alg = boolean_algebra(rank)
        for method in ("exact", "greedy"):
            out.append((f"sample 100k extensions ({method}), rank {rank}",
                        lambda alg=alg, method=method: sample_extensions(alg, 100_000, 1, method).orders))

    batch = sample_extensions(boolean_algebra(4), 100_000, 2)
    lat4 = get_lattice(4)
    w4 = random_game(lat4, rng).worth
    out.append(("marginal vectors of 100k extensions, rank 4",
                lambda: _kernels.marginal_matrix(batch.paths, batch.orders, w4, lat4.n_players)))

    lat5 = get_lattice(5)
    w5 = random_game(lat5, rng).worth
    masks5 = lat5.masks
    out.append(("Moebius transform, rank 5 (7581 coalitions)", lambda: _kernels.mobius(masks5, w5)))
    return out


def _best(fn, repeat):
    fn()
    times = []
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def _same(a, b):
    if isinstance(a, (int, np.integer)):
        return a == b
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype.kind == "f":
        return bool(np.allclose(a, b, rtol=1e-12, atol=1e-9))
    return bool(np.array_equal(a, b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--skip-slow", action="store_true", help="drop the rank-4 streaming cases")
    parser.add_argument("--json", help="also write the rows to this file")
    args = parser.parse_args(argv)

    if not _accel.HAVE_NUMBA:
        print("numba is not importable; nothing to compare", file=sys.stderr)
        return 1

    rows = []
    for name, fn in _cases(args.skip_slow):
        _accel.set_numba_enabled(True)
        t_nb, r_nb = _best(fn, args.repeat)
        _accel.set_numba_enabled(False)
        t_np, r_np = _best(fn, max(1, min(args.repeat, 2)))
        _accel.set_numba_enabled(True)
        rows.append({"kernel": name, "numba_s": t_nb, "numpy_s": t_np,
                     "speedup": t_np / t_nb if t_nb > 0 else float("inf"), "agree": _same(r_nb, r_np)})

    width = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel':<{width}}  {'numba [s]':>10}  {'numpy [s]':>10}  {'speed-up':>9}  agree")
    for r in rows:
        print(f"{r['kernel']:<{width}}  {r['numba_s']:>10.4f}  {r['numpy_s']:>10.4f}  "
              f"{r['speedup']:>8.1f}x  {'yes' if r['agree'] else 'NO'}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())

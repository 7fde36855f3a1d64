"""Shared fixtures: appendix labels and the symbolic dividend tables.

The rank-3 figure labels join atoms: d = ab, e = ac, f = bc, h = abc. In the
tables a coalition is written by its maximal labels without commas, so
"cd" means the down-set generated by c and d.
"""

from infoattrib.lattice import boolean_algebra, down_closure

LABELS = {"0": "0", "a": "a", "b": "b", "c": "c", "d": "ab", "e": "ac", "f": "bc", "h": "abc"}


def coalition(rank, labels):
    """Down-set generated by the labelled players (``"cd"`` → ⟨c, d⟩)."""
    alg = boolean_algebra(rank)
    if labels == "P":
        return down_closure(alg, [alg.top])
    if rank == 2:
        table = {"0": "0", "a": "a", "b": "b", "h": "ab"}
    else:
        table = LABELS
    return down_closure(alg, [alg.parse(table[ch]) for ch in labels])


# coalition -> [(coefficient, coalition), ...] with v(⟨⊥⟩) = 0
TABLE_RANK2 = {
    "0": [],
    "a": [(1, "a")],
    "b": [(1, "b")],
    "ab": [(1, "ab"), (-1, "a"), (-1, "b")],
    "P": [(1, "P"), (-1, "ab")],
}

TABLE_RANK3 = {
    "0": [],
    "a": [(1, "a")],
    "b": [(1, "b")],
    "c": [(1, "c")],
    "ab": [(1, "ab"), (-1, "a"), (-1, "b")],
    "ac": [(1, "ac"), (-1, "a"), (-1, "c")],
    "bc": [(1, "bc"), (-1, "b"), (-1, "c")],
    "d": [(1, "d"), (-1, "ab")],
    "e": [(1, "e"), (-1, "ac")],
    "f": [(1, "f"), (-1, "bc")],
    "abc": [(1, "abc"), (-1, "ab"), (-1, "ac"), (-1, "bc"), (1, "a"), (1, "b"), (1, "c")],
    "cd": [(1, "cd"), (-1, "abc"), (-1, "d"), (1, "ab")],
    "be": [(1, "be"), (-1, "abc"), (-1, "e"), (1, "ac")],
    "af": [(1, "af"), (-1, "abc"), (-1, "f"), (1, "bc")],
    "de": [(1, "de"), (-1, "cd"), (-1, "be"), (1, "abc")],
    "df": [(1, "df"), (-1, "cd"), (-1, "af"), (1, "abc")],
    "ef": [(1, "ef"), (-1, "be"), (-1, "af"), (1, "abc")],
    "def": [(1, "def"), (-1, "de"), (-1, "df"), (-1, "ef"), (1, "cd"), (1, "be"), (1, "af"),
            (-1, "abc")],
    "h": [(1, "P"), (-1, "def")],
}


def table_rhs(v, table, rank):
    """Evaluate every table row on game ``v``: {coalition label: value}."""
    return {
        row: sum(c * v(coalition(rank, lab)) for c, lab in terms)
        for row, terms in table.items()
    }

"""Kakutani-Rokhlin tower partitions of Cantor space and refinement moves.

A tower partition is a finite list of columns; a column is a stack of
pairwise disjoint nonempty clopen atoms, all of the same value vector
under the measure family, read bottom to top.  All atoms together
partition the space.  The partition encodes a partial homeomorphism:
each atom maps to the one above it, and the union of the column tops
maps onto the union of the bases in a way later stages pin down.

The two workhorses are balance_columns, which makes the per-column visit
counts of two equivalent clopen sets agree, and refine_small_base_top,
which rebuilds the tower so that base and top fit inside prescribed
small cylinders while refining the old tower.
"""

from __future__ import annotations

from fractions import Fraction

from cantordyn.clopen import FULL, ClopenSet, union_all
from cantordyn.measure import frac_text
from cantordyn.oracles import (
    DivisibilityFailure,
    GoodnessFailure,
    NotEquivalent,
    approx_divide,
    select_copy,
    subset_in_box,
)

__all__ = [
    "KRPartition",
    "NotAPartition",
    "NotEquivalentColumn",
    "PartialAutomorphism",
    "balance_columns",
    "cut_column_at_level",
    "from_columns",
    "locate_atom",
    "partial_automorphism",
    "refine_small_base_top",
    "refines",
    "run_decomposition",
    "to_dot",
    "trivial_partition",
]


class NotAPartition(ValueError):
    """The proposed atoms do not partition the space."""


class NotEquivalentColumn(ValueError):
    """A column's atoms do not all share one value vector."""


class KRPartition:
    """Columns of stacked clopen atoms partitioning the space."""

    __slots__ = ("columns", "_base", "_top")

    def __init__(self, columns):
        self.columns = tuple(tuple(col) for col in columns)
        self._base = None
        self._top = None

    @property
    def base(self):
        if self._base is None:
            self._base = union_all(col[0] for col in self.columns)
        return self._base

    @property
    def top(self):
        if self._top is None:
            self._top = union_all(col[-1] for col in self.columns)
        return self._top

    @property
    def atoms(self):
        return tuple(a for col in self.columns for a in col)

    @property
    def heights(self):
        return tuple(len(col) for col in self.columns)

    def __eq__(self, other):
        return isinstance(other, KRPartition) and self.columns == other.columns

    def __hash__(self):
        return hash(self.columns)

    def __repr__(self):
        return "KRPartition(%d columns, heights %r)" % (len(self.columns), list(self.heights))


def trivial_partition():
    """One column, one atom: the whole space."""
    return KRPartition(((FULL,),))


def from_columns(k, columns):
    """Validated construction: per-column equivalence, then partition.

    Full support makes the partition check cheap: nonempty atoms whose
    union is the space and whose first-generator masses sum to one are
    automatically pairwise disjoint.
    """
    cols = tuple(tuple(col) for col in columns)
    if not cols:
        raise NotAPartition("no columns")
    for ci, col in enumerate(cols):
        if not col:
            raise NotAPartition("column %d has no atoms" % ci)
        for ri, a in enumerate(col):
            if a.is_empty:
                raise NotAPartition("column %d level %d is empty" % (ci, ri))
        v0 = k.vec(col[0])
        for ri, a in enumerate(col[1:], start=1):
            if k.vec(a) != v0:
                raise NotEquivalentColumn(
                    "column %d level %d differs in mass from its base" % (ci, ri)
                )
    atoms = [a for col in cols for a in col]
    if union_all(atoms) != FULL:
        raise NotAPartition("atoms do not cover the space")
    if sum((k.generators[0].eval(a) for a in atoms), Fraction(0)) != 1:
        raise NotAPartition("atoms overlap")
    return KRPartition(cols)


class PartialAutomorphism:
    """The climb-one-level map of a tower; tops stay unassigned."""

    __slots__ = ("atom_map", "top_to_base")

    def __init__(self, atom_map, top_to_base):
        self.atom_map = dict(atom_map)
        self.top_to_base = top_to_base


def partial_automorphism(t):
    amap = {}
    for col in t.columns:
        for a, b in zip(col, col[1:]):
            amap[a] = b
    return PartialAutomorphism(amap, (t.top, t.base))


def _atom_index(t):
    idx = {}
    for ci, col in enumerate(t.columns):
        for ri, a in enumerate(col):
            for leaf in a.leaves:
                idx[leaf] = (ci, ri)
    return idx


def _locate(idx, word):
    # canonical leaves: [word] lies in an atom iff some leaf prefixes word
    for i in range(len(word) + 1):
        hit = idx.get(word[:i])
        if hit is not None:
            return hit
    return None


def locate_atom(t, word):
    """(column, level) of the atom whose set contains the cylinder [word]."""
    hit = _locate(_atom_index(t), word)
    if hit is None:
        raise ValueError("[%s] is not contained in a single atom" % word)
    return hit


def run_decomposition(s, t):
    """How each column of s climbs through whole columns of t.

    Returns, per s-column, the sequence of t-column indices it traverses
    bottom to top, or None if s does not refine t as a tower: every run
    must start at a t-base, match t's atoms level by level, and the runs
    must exhaust the column exactly.
    """
    idx = _atom_index(t)
    traces = []
    for col in s.columns:
        trace = []
        r = 0
        height = len(col)
        while r < height:
            hit = _locate(idx, col[r].leaves[0])
            if hit is None or hit[1] != 0:
                return None
            ci = hit[0]
            tcol = t.columns[ci]
            if r + len(tcol) > height:
                return None
            for j, ta in enumerate(tcol):
                if not col[r + j].is_subset(ta):
                    return None
            trace.append(ci)
            r += len(tcol)
        traces.append(tuple(trace))
    return tuple(traces)


def refines(s, t):
    """Tower refinement: smaller base and top, columns climb t in runs."""
    if not (s.base.is_subset(t.base) and s.top.is_subset(t.top)):
        return False
    return run_decomposition(s, t) is not None


def _split_column(k, column, level, pieces, max_depth=12):
    """Split a column along a partition of its atom at one level.

    Returns one sub-column per nonempty piece, in piece order.  At every
    other level, matching parts are picked off in sequence; the last
    piece takes the forced remainder, which is exact by additivity.
    """
    pieces = [p for p in pieces if not p.is_empty]
    if not pieces:
        raise ValueError("no nonempty pieces to split along")
    atom = column[level]
    if union_all(pieces) != atom:
        raise ValueError("pieces do not cover the atom")
    if sum((k.generators[0].eval(p) for p in pieces), Fraction(0)) != k.generators[0].eval(atom):
        raise ValueError("pieces overlap")
    if len(pieces) == 1:
        return [tuple(column)]
    vecs = [k.vec(p) for p in pieces]
    subs = [[None] * len(column) for _ in pieces]
    for j, p in enumerate(pieces):
        subs[j][level] = p
    for r, a in enumerate(column):
        if r == level:
            continue
        rem = a
        for j in range(len(pieces) - 1):
            q = select_copy(k, vecs[j], rem, max_depth)
            subs[j][r] = q
            rem = rem - q
        subs[-1][r] = rem
    return [tuple(c) for c in subs]


def cut_column_at_level(k, t, ci, level, pieces, max_depth=12):
    """New tower with column ci split along a partition of one atom."""
    subs = _split_column(k, t.columns[ci], level, pieces, max_depth)
    cols = list(t.columns)
    cols[ci : ci + 1] = subs
    return KRPartition(cols)


def _pure(a, u):
    return a.is_subset(u) or (a & u).is_empty


def _count_in(col, u):
    return sum(1 for a in col if a.is_subset(u))


def balance_columns(k, t, u, v, max_depth=12, _trace=None):
    """Rebuild the tower so every column meets u and v equally often.

    First cuts columns until each atom lies inside or outside both sets,
    then repeatedly stacks columns of opposite count defect onto the
    worst offenders.  Each stacked sub-column absorbs exactly one piece
    of the opposite sign, so the worst defect strictly decreases.
    """
    if not k.sim(u, v):
        raise NotEquivalent("u and v differ in mass under some generator")
    cols = [tuple(col) for col in t.columns]
    changed = True
    while changed:
        changed = False
        for ci, col in enumerate(cols):
            for ri, a in enumerate(col):
                if _pure(a, u) and _pure(a, v):
                    continue
                pieces = [a & u & v, (a & u) - v, (a & v) - u, (a - u) - v]
                cols[ci : ci + 1] = _split_column(k, col, ri, pieces, max_depth)
                changed = True
                break
            if changed:
                break
    while True:
        ns = [_count_in(col, u) - _count_in(col, v) for col in cols]
        imb = max((abs(x) for x in ns), default=0)
        if imb == 0:
            break
        if _trace is not None:
            _trace.append(imb)
        for sign in (1, -1):
            while True:
                ns = [_count_in(col, u) - _count_in(col, v) for col in cols]
                if sign * imb not in ns:
                    break
                di = ns.index(sign * imb)
                pool = [ci for ci, x in enumerate(ns) if x and (x < 0) == (sign > 0)]
                cols = _stack_pool_onto(k, cols, di, pool, max_depth)
    return from_columns(k, cols)


def _stack_pool_onto(k, cols, di, pool, max_depth):
    """Stack pieces of the pool columns onto column di, one per sub-column."""
    dcol = cols[di]
    top_d = dcol[-1]
    isel = select_copy(k, k.vec(top_d), union_all(cols[qi][0] for qi in pool), max_depth)
    parts = []
    for qi in pool:
        x = isel & cols[qi][0]
        if not x.is_empty:
            parts.append((qi, x))
    rem = top_d
    pieces = []
    for _, x in parts[:-1]:
        piece = select_copy(k, k.vec(x), rem, max_depth)
        pieces.append(piece)
        rem = rem - piece
    pieces.append(rem)
    dsubs = _split_column(k, dcol, len(dcol) - 1, pieces, max_depth)
    stacked = []
    leftover = {}
    for (qi, x), dsub in zip(parts, dsubs):
        qcol = cols[qi]
        if x == qcol[0]:
            qsub0, qrest = qcol, None
        else:
            qsubs = _split_column(k, qcol, 0, [x, qcol[0] - x], max_depth)
            qsub0, qrest = qsubs[0], qsubs[1]
        stacked.append(tuple(dsub) + tuple(qsub0))
        leftover[qi] = qrest
    out = []
    for ci, col in enumerate(cols):
        if ci == di:
            out.extend(stacked)
        elif ci in leftover:
            if leftover[ci] is not None:
                out.append(leftover[ci])
        else:
            out.append(col)
    return out


def refine_small_base_top(k, t, eps, max_depth=12):
    """Refine the tower until base and top have diameter below eps.

    The tower is rebuilt around a deep cylinder [u] inside the first
    column's top: everything is rerouted so the new base is a small
    piece below [u0] plus a leftover of mass below eps, and the new top
    sits inside [u].  Returns t itself when both diameters are already
    small enough.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if t.base.diameter() < eps and t.top.diameter() < eps:
        return t
    d_eps = 1
    while Fraction(1, 2 ** d_eps) >= eps:
        d_eps += 1
    cols = [tuple(col) for col in t.columns]

    # pin the top: split the first column's top around a deep cylinder
    top0 = cols[0][-1]
    u = top0.refine_to_depth(max(d_eps, top0.max_leaf_len))[0]
    cu = ClopenSet([u])
    pieces = [ClopenSet([u + "0"]), ClopenSet([u + "1"]), top0 - cu]
    cols[0:1] = _split_column(k, cols[0], len(cols[0]) - 1, pieces, max_depth)
    i0, i1 = 0, 1

    # pin the base: shrink the designated column's base to one cylinder
    b0 = cols[i0][0]
    if b0.diameter() >= eps:
        w = b0.refine_to_depth(max(d_eps, b0.max_leaf_len))[0]
        cw = ClopenSet([w])
        cols[i0 : i0 + 1] = _split_column(k, cols[i0], 0, [cw, b0 - cw], max_depth)
        i1 += 1

    # give the two designated columns tops of equal vector
    t0, t1 = cols[i0][-1], cols[i1][-1]
    if k.vec(t0) != k.vec(t1):
        sigma0 = None
        for d in range(t0.max_leaf_len + 1, max_depth + 1):
            cand = ClopenSet([t0.refine_to_depth(d)[0]])
            if all(x < y for x, y in zip(k.vec(cand), k.vec(t1))):
                sigma0 = cand
                break
        if sigma0 is None:
            raise GoodnessFailure("no common small top", max_depth)
        cols[i0 : i0 + 1] = _split_column(
            k, cols[i0], len(cols[i0]) - 1, [sigma0, t0 - sigma0], max_depth
        )
        i1 += 1
        sigma1 = select_copy(k, k.vec(sigma0), t1, max_depth)
        cols[i1 : i1 + 1] = _split_column(
            k, cols[i1], len(cols[i1]) - 1, [sigma1, t1 - sigma1], max_depth
        )

    # division order: 1/n strictly below the designated base mass
    m = k.vec(cols[i0][0])
    n = 4
    while any(Fraction(1, n) >= x for x in m):
        n *= 2
    b_all = union_all(col[0] for col in cols)
    bv = k.vec(b_all)
    slack = min(n * x - y for x, y in zip(m, bv)) / (2 * (n - 1))
    bprime = approx_divide(k, b_all, n, slack, max_depth)
    pv = k.vec(bprime)

    # n disjoint copies of the near-n-th part, anchored in the two
    # designated bases, the rest carved from the remaining base mass
    c0 = select_copy(k, pv, cols[i0][0], max_depth)
    c1 = select_copy(k, pv, cols[i1][0], max_depth)
    f = cols[i0][0] - c0
    wset = (b_all - cols[i0][0]) - c1
    cs = [c0, c1]
    for j in range(2, n):
        after = n - 1 - j
        wv = k.vec(wset)
        lo = tuple(max(Fraction(0), x - after * y) for x, y in zip(wv, pv))
        hi = tuple(min(x, y) for x, y in zip(pv, wv))
        wj = subset_in_box(k, wset, lo, hi, max_depth)
        if wj is None:
            raise DivisibilityFailure("carving copy %d of %d failed" % (j, n), max_depth)
        comp = select_copy(k, tuple(x - y for x, y in zip(pv, k.vec(wj))), f, max_depth)
        cs.append(wj | comp)
        wset = wset - wj
        f = f - comp
    assert wset.is_empty
    e = f  # leftover of mass at most `slack`, kept as its own column

    # recut every column so each new base sits in exactly one copy
    table = {}
    order = []
    next_key = 0
    for col in cols:
        b = col[0]
        bits = [b & c for c in cs]
        bits.append(b & e)
        bits = [p for p in bits if not p.is_empty]
        for sub in _split_column(k, col, 0, bits, max_depth):
            table[next_key] = sub
            order.append(next_key)
            next_key += 1
    key0 = key1 = keye = None
    for key in order:
        b = table[key][0]
        if b == c0:
            key0 = key
        elif b == c1:
            key1 = key
        elif not e.is_empty and b == e:
            keye = key
    if keye is not None:
        order.remove(keye)

    # absorb all remaining columns into stacks over the c0 copy
    principals = [key0]
    for _ in range(n - 2):
        new_principals = []
        for pk in list(principals):
            protected = set(principals) | set(new_principals) | {key1}
            pool = [q for q in order if q not in protected]
            pcol = table[pk]
            dsel = select_copy(
                k, k.vec(pcol[0]), union_all(table[q][0] for q in pool), max_depth
            )
            parts = []
            for q in pool:
                x = dsel & table[q][0]
                if not x.is_empty:
                    parts.append((q, x))
            rem = pcol[0]
            bits = []
            for _, x in parts[:-1]:
                piece = select_copy(k, k.vec(x), rem, max_depth)
                bits.append(piece)
                rem = rem - piece
            bits.append(rem)
            psubs = _split_column(k, pcol, 0, bits, max_depth)
            keys = []
            stacked = []
            for (q, x), psub in zip(parts, psubs):
                qcol = table[q]
                if x == qcol[0]:
                    qsub0, qrest = qcol, None
                else:
                    qsubs = _split_column(k, qcol, 0, [x, qcol[0] - x], max_depth)
                    qsub0, qrest = qsubs[0], qsubs[1]
                stacked.append(tuple(psub) + tuple(qsub0))
                if qrest is None:
                    order.remove(q)
                    del table[q]
                else:
                    table[q] = qrest
            pos = order.index(pk)
            for colx in stacked:
                table[next_key] = colx
                keys.append(next_key)
                next_key += 1
            order[pos : pos + 1] = keys
            del table[pk]
            principals.remove(pk)
            new_principals.extend(keys)
        principals = new_principals

    # route every stack through its matched piece of the c1 copy
    col1 = table[key1]
    rem = col1[0]
    bits = []
    for pk in principals[:-1]:
        piece = select_copy(k, k.vec(table[pk][0]), rem, max_depth)
        bits.append(piece)
        rem = rem - piece
    bits.append(rem)
    csubs = _split_column(k, col1, 0, bits, max_depth)
    for pk, csub in zip(principals, csubs):
        table[pk] = tuple(table[pk]) + tuple(csub)
    order.remove(key1)
    del table[key1]

    final_cols = [table[q] for q in order]
    if keye is not None:
        final_cols.append(table[keye])
    return from_columns(k, final_cols)


def to_dot(t, k):
    """Graphviz text for the tower: one cluster per column, edges go up."""
    lines = ["digraph tower {", "  rankdir=BT;", "  node [shape=box];"]
    for ci, col in enumerate(t.columns):
        lines.append("  subgraph cluster_c%d {" % ci)
        lines.append('    label="column %d";' % ci)
        for ri, a in enumerate(col):
            masses = " ".join(frac_text(x) for x in k.vec(a))
            lines.append('    a%d_%d [label="%s\\n%s"];' % (ci, ri, a.text(), masses))
        for ri in range(len(col) - 1):
            lines.append("    a%d_%d -> a%d_%d;" % (ci, ri, ci, ri + 1))
        lines.append("  }")
    lines.append('  base [shape=plaintext, label="base"];')
    lines.append('  top [shape=plaintext, label="top"];')
    lines.append("  top -> base [style=dashed];")
    for ci, col in enumerate(t.columns):
        lines.append("  base -> a%d_0 [style=dotted];" % ci)
        lines.append("  a%d_%d -> top [style=dotted];" % (ci, len(col) - 1))
    lines.append("}")
    return "\n".join(lines) + "\n"

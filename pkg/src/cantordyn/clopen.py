"""Clopen subsets of the Cantor space {0,1}^N.

A clopen set is a finite union of cylinders [w] = {x : w is a prefix of x}.
Every set is stored in a canonical form: the unique antichain of binary
words covering it in which no word is a prefix of another and no two
siblings w0, w1 are both present (such a pair merges into w), sorted
lexicographically.  The empty antichain denotes the empty set and the
antichain ("",) denotes the whole space.  With this normal form, equality
of point sets is literal equality of leaf tuples.

The metric is d(x, y) = 2^(-k) where k is the length of the longest common
prefix, so a nonempty set has diameter 2^(-k) with k the depth of its
smallest enclosing cylinder.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

__all__ = [
    "ClopenSet",
    "DepthTooSmall",
    "EMPTY",
    "FULL",
    "enumerate_clopen",
    "normalize",
    "union_all",
]


class DepthTooSmall(ValueError):
    """Asked to refine a set to a depth above one of its leaves."""


_FULL_LEAVES = ("",)


def _check_word(word):
    if not isinstance(word, str) or any(c not in "01" for c in word):
        raise ValueError("cylinder words use the alphabet {0,1}, got %r" % (word,))


def _norm(words):
    """Canonical antichain covering the union of the given cylinders."""
    ws = set(words)
    if not ws:
        return ()
    if "" in ws:
        return _FULL_LEAVES
    zero = _norm(w[1:] for w in ws if w[0] == "0")
    one = _norm(w[1:] for w in ws if w[0] == "1")
    return _graft(zero, one)


def _graft(zero, one):
    # merge the two half trees; the only new sibling pair can appear at the root
    if zero == _FULL_LEAVES and one == _FULL_LEAVES:
        return _FULL_LEAVES
    return tuple("0" + w for w in zero) + tuple("1" + w for w in one)


def _split(leaves):
    # assumes canonical input, neither empty nor the full space
    zero = tuple(w[1:] for w in leaves if w[0] == "0")
    one = tuple(w[1:] for w in leaves if w[0] == "1")
    return zero, one


def _union(a, b):
    if a == _FULL_LEAVES or b == _FULL_LEAVES:
        return _FULL_LEAVES
    if not a:
        return b
    if not b:
        return a
    a0, a1 = _split(a)
    b0, b1 = _split(b)
    return _graft(_union(a0, b0), _union(a1, b1))


def _inter(a, b):
    if a == _FULL_LEAVES:
        return b
    if b == _FULL_LEAVES:
        return a
    if not a or not b:
        return ()
    a0, a1 = _split(a)
    b0, b1 = _split(b)
    return _graft(_inter(a0, b0), _inter(a1, b1))


def _minus(a, b):
    if not a or b == _FULL_LEAVES:
        return ()
    if not b:
        return a
    if a == _FULL_LEAVES:
        return _compl(b)
    a0, a1 = _split(a)
    b0, b1 = _split(b)
    return _graft(_minus(a0, b0), _minus(a1, b1))


def _compl(a):
    if not a:
        return _FULL_LEAVES
    if a == _FULL_LEAVES:
        return ()
    a0, a1 = _split(a)
    return _graft(_compl(a0), _compl(a1))


class ClopenSet:
    """A clopen subset of {0,1}^N in canonical antichain form."""

    __slots__ = ("leaves", "_hash")

    def __init__(self, words=()):
        if isinstance(words, ClopenSet):
            self.leaves = words.leaves
        else:
            ws = tuple(words)
            for w in ws:
                _check_word(w)
            self.leaves = _norm(ws)
        self._hash = None

    @classmethod
    def _raw(cls, leaves):
        # internal constructor for leaves already known to be canonical
        s = cls.__new__(cls)
        s.leaves = leaves
        s._hash = None
        return s

    def union(self, other):
        return ClopenSet._raw(_union(self.leaves, other.leaves))

    def intersect(self, other):
        return ClopenSet._raw(_inter(self.leaves, other.leaves))

    def minus(self, other):
        return ClopenSet._raw(_minus(self.leaves, other.leaves))

    def complement(self):
        return ClopenSet._raw(_compl(self.leaves))

    def is_subset(self, other):
        return _minus(self.leaves, other.leaves) == ()

    __or__ = union
    __and__ = intersect
    __sub__ = minus

    def __invert__(self):
        return self.complement()

    def __le__(self, other):
        return self.is_subset(other)

    def __bool__(self):
        return bool(self.leaves)

    @property
    def is_empty(self):
        return not self.leaves

    @property
    def max_leaf_len(self):
        return max((len(w) for w in self.leaves), default=0)

    def diameter(self):
        """2^(-k) for the deepest cylinder containing the set; 0 if empty."""
        if not self.leaves:
            return Fraction(0)
        first, last = self.leaves[0], self.leaves[-1]
        k = 0
        for x, y in zip(first, last):
            if x != y:
                break
            k += 1
        return Fraction(1, 2 ** k)

    def refine_to_depth(self, depth):
        """All depth-`depth` words whose cylinders make up the set, in order."""
        out = []
        for w in self.leaves:
            if len(w) > depth:
                raise DepthTooSmall("leaf %r is deeper than %d" % (w, depth))
            out.extend(w + "".join(tail) for tail in product("01", repeat=depth - len(w)))
        return tuple(out)

    def text(self):
        if not self.leaves:
            return "∅"
        if self.leaves == _FULL_LEAVES:
            return "X"
        return ",".join(self.leaves)

    @classmethod
    def from_text(cls, s):
        s = s.strip()
        if s in ("∅", "empty"):
            return EMPTY
        if s == "X":
            return FULL
        parts = [p.strip() for p in s.split(",")]
        if not s or any(not p for p in parts):
            raise ValueError("bad clopen text: %r" % (s,))
        return cls(parts)

    def __eq__(self, other):
        return isinstance(other, ClopenSet) and self.leaves == other.leaves

    def __hash__(self):
        h = self._hash
        if h is None:
            h = self._hash = hash(self.leaves)
        return h

    def __repr__(self):
        return "ClopenSet(%s)" % self.text()


EMPTY = ClopenSet._raw(())
FULL = ClopenSet._raw(_FULL_LEAVES)


def normalize(words):
    """Canonical ClopenSet covering exactly the given cylinder words."""
    return ClopenSet(words)


def union_all(sets):
    """Union of many clopen sets in one normalization pass."""
    words = []
    for s in sets:
        words.extend(s.leaves)
    return ClopenSet._raw(_norm(words))


def enumerate_clopen(depth_cap=None):
    """Canonical enumeration of clopen sets of canonical depth <= depth_cap.

    Sets are ordered first by the depth their canonical form needs, then by
    the indicator bit-vector over the depth-d words taken in lexicographic
    order.  The empty set and the full space come first.  With depth_cap
    None the iterator never stops.
    """
    yield EMPTY
    yield FULL
    d = 1
    while depth_cap is None or d <= depth_cap:
        words = ["".join(t) for t in product("01", repeat=d)]
        for bits in product((0, 1), repeat=len(words)):
            s = ClopenSet(w for w, b in zip(words, bits) if b)
            if s.max_leaf_len == d:
                yield s
        d += 1

"""Bernoulli-type Borel probability measures on {0,1}^N.

A measure is specified by branching weights: p_w is the fraction of the
mass of the cylinder [w] that goes to [w0], the rest goes to [w1].  Weights
default to 1/2, so only finitely many need to be stored and the uniform
(coin-flipping) measure is the empty specification.  All arithmetic is
exact over Fraction.

A family of such measures plays the role of the generator set of a
finite-dimensional simplex of measures; the module provides the vector of
values of a clopen set under the family, equality and domination of those
vectors, structural validation with a bound table relating set diameter to
set mass, and a plain-text format for families.
"""

from __future__ import annotations

import re
from fractions import Fraction

from cantordyn.clopen import ClopenSet

__all__ = [
    "FamilyParseError",
    "FamilyReport",
    "InvalidWeights",
    "MeasureFamily",
    "TreeMeasure",
    "dominated",
    "format_family",
    "frac_text",
    "parse_family",
    "sim_k",
    "validate_family",
]

_HALF = Fraction(1, 2)


class InvalidWeights(ValueError):
    """A branching weight lies outside the open interval (0, 1)."""


class FamilyParseError(ValueError):
    """Malformed family text; carries 1-based line and column."""

    def __init__(self, line, col, msg):
        super().__init__("line %d, col %d: %s" % (line, col, msg))
        self.line = line
        self.col = col


def frac_text(q):
    """Rational as num/den, always with the slash: 0/1, 1/1, 5/16."""
    q = Fraction(q)
    return "%d/%d" % (q.numerator, q.denominator)


class TreeMeasure:
    """One measure given by its non-default branching weights.

    The constructor does not range-check weights; validate_family does,
    so a structurally broken specification can still be loaded, reported
    on, and rejected in one place.
    """

    __slots__ = ("weights", "depth_bound", "name")

    def __init__(self, weights=None, depth_bound=0, name=""):
        stored = {}
        if weights:
            for word, q in weights.items():
                if any(c not in "01" for c in word):
                    raise ValueError("bad branching word %r" % (word,))
                q = Fraction(q)
                if q != _HALF:
                    stored[word] = q
        self.weights = dict(sorted(stored.items()))
        need = max((len(w) + 1 for w in self.weights), default=0)
        self.depth_bound = max(int(depth_bound), need)
        self.name = name

    def weight(self, word):
        return self.weights.get(word, _HALF)

    def cyl(self, word):
        """Mass of the cylinder [word]."""
        mass = Fraction(1)
        for i, c in enumerate(word):
            p = self.weight(word[:i])
            mass *= p if c == "0" else 1 - p
        return mass

    def eval(self, a):
        """Mass of a clopen set."""
        return sum((self.cyl(w) for w in a.leaves), Fraction(0))

    def __eq__(self, other):
        return isinstance(other, TreeMeasure) and self.weights == other.weights

    def __hash__(self):
        return hash(tuple(self.weights.items()))

    def __repr__(self):
        return "TreeMeasure(%r, depth_bound=%d)" % (self.weights, self.depth_bound)


class MeasureFamily:
    """Finite ordered family of measures, the generators of a simplex."""

    __slots__ = ("generators",)

    def __init__(self, generators):
        gens = tuple(generators)
        if not gens:
            raise ValueError("a family needs at least one measure")
        self.generators = gens

    def vec(self, a):
        """Value vector (mu_1(a), ..., mu_G(a))."""
        return tuple(m.eval(a) for m in self.generators)

    def vec_word(self, word):
        return tuple(m.cyl(word) for m in self.generators)

    def sim(self, a, b):
        """Equal mass under every generator."""
        return self.vec(a) == self.vec(b)

    def leq(self, a, b):
        return all(x <= y for x, y in zip(self.vec(a), self.vec(b)))

    def dominated(self, a, b):
        return self.leq(a, b)

    def __eq__(self, other):
        return isinstance(other, MeasureFamily) and self.generators == other.generators

    def __hash__(self):
        return hash(self.generators)

    def __len__(self):
        return len(self.generators)


def sim_k(k, a, b):
    return k.sim(a, b)


def dominated(k, a, b):
    return k.dominated(a, b)


def _max_cyl(m, depth):
    """Largest mass of a depth-`depth` cylinder under measure m."""
    prefixes = set()
    for w in m.weights:
        for i in range(len(w) + 1):
            prefixes.add(w[:i])
    best = Fraction(0)
    stack = [("", Fraction(1))]
    while stack:
        word, mass = stack.pop()
        if len(word) == depth:
            if mass > best:
                best = mass
            continue
        if word not in prefixes:
            # all deeper weights are 1/2: every extension halves evenly
            mass = mass * Fraction(1, 2 ** (depth - len(word)))
            if mass > best:
                best = mass
            continue
        p = m.weight(word)
        stack.append((word + "0", mass * p))
        stack.append((word + "1", mass * (1 - p)))
    return best


class FamilyReport:
    """Outcome of validate_family: verdict, report lines, delta table."""

    __slots__ = ("ok", "lines", "delta_table")

    def __init__(self, ok, lines, delta_table):
        self.ok = ok
        self.lines = tuple(lines)
        self.delta_table = tuple(delta_table)

    def __bool__(self):
        return self.ok


def validate_family(k, max_eps_exp=8):
    """Check a family and compute its diameter-to-mass bound table.

    Raises InvalidWeights if any branching weight leaves (0, 1); such a
    specification has no measure at all.  Duplicate generators make the
    family degenerate and are reported with ok=False.  For each
    eps = 2^-1 .. 2^-max_eps_exp the table records a delta such that any
    clopen set of diameter < delta has mass at most eps under every
    generator: delta = 2^-(d-1) for the least depth d at which every
    depth-d cylinder already has mass at most eps.
    """
    lines = []
    for i, m in enumerate(k.generators):
        for word, q in m.weights.items():
            if not (0 < q < 1):
                raise InvalidWeights(
                    "measure %d weight at %r is %s, not in (0,1)"
                    % (i, word or "e", frac_text(q))
                )
    ok = True
    seen = {}
    for i, m in enumerate(k.generators):
        if m in seen:
            ok = False
            lines.append("duplicate generators: %d and %d" % (seen[m], i))
        else:
            seen[m] = i
    lines.append("generators %d, all weights in (0,1)" % len(k.generators))
    table = []
    d = 1
    for j in range(1, max_eps_exp + 1):
        eps = Fraction(1, 2 ** j)
        while max(_max_cyl(m, d) for m in k.generators) > eps:
            d += 1
        delta = Fraction(1, 2 ** (d - 1))
        table.append((eps, delta))
        lines.append("eps %s -> delta %s (depth %d)" % (frac_text(eps), frac_text(delta), d))
    return FamilyReport(ok, lines, table)


_RAT_RE = re.compile(r"^[0-9]+/[0-9]+$")


def _parse_rational(tok, lineno, col):
    if not _RAT_RE.match(tok):
        raise FamilyParseError(lineno, col, "expected num/den, got %r" % (tok,))
    num, den = tok.split("/")
    if int(den) == 0:
        raise FamilyParseError(lineno, col, "zero denominator in %r" % (tok,))
    return Fraction(int(num), int(den))


def parse_family(text):
    """Parse the plain-text family format.

    One measure per `measure <name>` header, followed by optional
    `depth_bound <int>` and `weight <word> <num>/<den>` lines, where the
    word `e` names the root.  Blank lines and full-line # comments are
    ignored.  Weights outside (0,1) are rejected here so that a bad file
    never produces a family object.
    """
    measures = []
    names = set()
    cur = None  # [name, depth_bound or None, weights dict, header lineno]

    def finish():
        if cur is None:
            return
        name, bound, weights, lineno = cur
        need = max((len(w) + 1 for w in weights), default=0)
        if bound is not None and bound < need:
            raise FamilyParseError(
                lineno, 1, "depth_bound %d below weight depth %d in measure %s" % (bound, need, name)
            )
        measures.append(TreeMeasure(weights, bound or 0, name))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        col = raw.index(toks[0]) + 1
        if toks[0] == "measure":
            if len(toks) != 2:
                raise FamilyParseError(lineno, col, "measure takes exactly one name")
            if toks[1] in names:
                raise FamilyParseError(lineno, raw.index(toks[1]) + 1, "duplicate measure name %r" % toks[1])
            names.add(toks[1])
            finish()
            cur = [toks[1], None, {}, lineno]
        elif toks[0] == "depth_bound":
            if cur is None:
                raise FamilyParseError(lineno, col, "depth_bound outside a measure")
            if len(toks) != 2 or not toks[1].isdigit():
                raise FamilyParseError(lineno, col, "depth_bound takes one nonnegative integer")
            if cur[1] is not None:
                raise FamilyParseError(lineno, col, "depth_bound given twice")
            cur[1] = int(toks[1])
        elif toks[0] == "weight":
            if cur is None:
                raise FamilyParseError(lineno, col, "weight outside a measure")
            if len(toks) != 3:
                raise FamilyParseError(lineno, col, "weight takes a word and a rational")
            word = "" if toks[1] == "e" else toks[1]
            wcol = raw.index(toks[1], col) + 1
            if any(c not in "01" for c in word):
                raise FamilyParseError(lineno, wcol, "bad branching word %r" % toks[1])
            if word in cur[2]:
                raise FamilyParseError(lineno, wcol, "duplicate weight for %r" % toks[1])
            q = _parse_rational(toks[2], lineno, raw.index(toks[2], wcol) + 1)
            if not (0 < q < 1):
                raise FamilyParseError(
                    lineno, raw.index(toks[2], wcol) + 1, "weight %s not in (0,1)" % frac_text(q)
                )
            cur[2][word] = q
        else:
            raise FamilyParseError(lineno, col, "unknown keyword %r" % toks[0])
    finish()
    if not measures:
        raise FamilyParseError(1, 1, "no measures in file")
    return MeasureFamily(measures)


def format_family(k):
    """Family as parse_family text; parsing it back gives an equal family."""
    out = []
    for i, m in enumerate(k.generators):
        out.append("measure %s" % (m.name or "mu%d" % i))
        out.append("depth_bound %d" % m.depth_bound)
        for word, q in m.weights.items():
            out.append("weight %s %s" % (word or "e", frac_text(q)))
    return "\n".join(out) + "\n"

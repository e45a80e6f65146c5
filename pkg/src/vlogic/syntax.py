"""Two-sorted labelled formulas, contexts, sorts, fitting and ranks.

The object language talks about finite systems of nested neighbourhoods
(Lewis-style spheres).  Formulas come in two disjoint sorts: N-sort
formulas are evaluated at a reference world, W-sort formulas at a
reference neighbourhood.  A formula carries a stack of labels (its
attribute); the top label is consumed first during evaluation.
Attributes never nest: wrapping an already-labelled formula simply
extends the stack.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, Union


class Sort(Enum):
    N = "n"  # evaluated on models (reference world)
    W = "w"  # evaluated on templates (reference neighbourhood)

    def flip(self) -> "Sort":
        return Sort.W if self is Sort.N else Sort.N


class SortError(ValueError):
    """Raised when a syntax tree violates the sorting rules.

    ``path`` is the child-index path from the root to the offending
    subterm.
    """

    def __init__(self, message: str, path: tuple[int, ...]):
        super().__init__(f"{message} (at path {list(path)})")
        self.path = path


# ---------------------------------------------------------------------------
# labels

NALL = "nall"    # every neighbourhood of the reference system
NSOME = "nsome"  # some neighbourhood of the reference system
NVAR = "nvar"    # named neighbourhood (uppercase identifier)
WALL = "wall"    # every world of the reference neighbourhood
WSOME = "wsome"  # some world of the reference neighbourhood
WVAR = "wvar"    # named world (lowercase identifier)

_N_KINDS = frozenset({NALL, NSOME, NVAR})
_W_KINDS = frozenset({WALL, WSOME, WVAR})


@dataclass(frozen=True)
class Label:
    kind: str
    name: str | None = None

    def __post_init__(self):
        if self.kind not in _N_KINDS and self.kind not in _W_KINDS:
            raise ValueError(f"unknown label kind {self.kind!r}")
        if self.kind in (NVAR, WVAR):
            if not self.name:
                raise ValueError("variable label needs a name")
            if self.kind == NVAR and not self.name[0].isupper():
                raise ValueError(f"neighbourhood variables are uppercase-initial: {self.name!r}")
            if self.kind == WVAR and not self.name[0].islower():
                raise ValueError(f"world variables are lowercase-initial: {self.name!r}")
        elif self.name is not None:
            raise ValueError("quantifier labels carry no name")

    @property
    def sort(self) -> Sort:
        return Sort.N if self.kind in _N_KINDS else Sort.W

    def is_universal(self) -> bool:
        return self.kind in (NALL, WALL)

    def is_existential(self) -> bool:
        return self.kind in (NSOME, WSOME)

    def is_variable(self) -> bool:
        return self.kind in (NVAR, WVAR)


N_ALL = Label(NALL)
N_SOME = Label(NSOME)
W_ALL = Label(WALL)
W_SOME = Label(WSOME)


def nvar(name: str) -> Label:
    return Label(NVAR, name)


def wvar(name: str) -> Label:
    return Label(WVAR, name)


# ---------------------------------------------------------------------------
# formulas

@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Top:
    sort: Sort


@dataclass(frozen=True)
class Bot:
    sort: Sort


@dataclass(frozen=True)
class Contains:
    """The reference neighbourhood contains the one named ``var``."""
    var: str


@dataclass(frozen=True)
class Inside:
    """The reference neighbourhood is contained in the one named ``var``."""
    var: str


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Cmp:
    """Comparative possibility ``left <= right`` (surface sugar).

    Expanded by :func:`expand_comparisons` before evaluation or proof
    checking.
    """
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Labeled:
    body: "Formula"
    label: Label


Formula = Union[Atom, Top, Bot, Contains, Inside, Not, And, Or, Implies, Cmp, Labeled]

_BINARY = (And, Or, Implies, Cmp)

TOP_N = Top(Sort.N)
TOP_W = Top(Sort.W)
BOT_N = Bot(Sort.N)
BOT_W = Bot(Sort.W)

Context = tuple[Label, ...]


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Not):
        return (f.body,)
    if isinstance(f, _BINARY):
        return (f.left, f.right)
    if isinstance(f, Labeled):
        return (f.body,)
    return ()


def subterm_at(f: Formula, path: tuple[int, ...]) -> Formula:
    for i in path:
        kids = children(f)
        if i >= len(kids):
            raise ValueError(f"no subterm at path {list(path)}")
        f = kids[i]
    return f


def classify(f: Formula, _path: tuple[int, ...] = ()) -> Sort:
    """Sort of ``f``; raises :class:`SortError` on ill-sorted trees."""
    if isinstance(f, Atom):
        return Sort.N
    if isinstance(f, (Top, Bot)):
        return f.sort
    if isinstance(f, (Contains, Inside)):
        return Sort.W
    if isinstance(f, Not):
        return classify(f.body, _path + (0,))
    if isinstance(f, _BINARY):
        ls = classify(f.left, _path + (0,))
        rs = classify(f.right, _path + (1,))
        if ls is not rs:
            raise SortError("binary connective joins formulas of unequal sort", _path)
        if isinstance(f, Cmp) and ls is not Sort.N:
            raise SortError("comparative possibility needs N-sort operands", _path)
        return ls
    if isinstance(f, Labeled):
        bs = classify(f.body, _path + (0,))
        if bs is f.label.sort:
            raise SortError(
                f"label of sort {f.label.sort.value} cannot apply to a "
                f"{bs.value}-sort formula", _path)
        return bs.flip()
    raise TypeError(f"not a formula: {f!r}")


def is_well_sorted(f: Formula) -> bool:
    try:
        classify(f)
        return True
    except SortError:
        return False


# ---------------------------------------------------------------------------
# attributes

def strip_attribute(f: Formula) -> tuple[Formula, Context]:
    """Split ``f`` into its label-free core and its attribute stack.

    The returned stack lists labels innermost first, so the last element
    is the index (the outermost label, consumed first in evaluation).
    """
    labels: list[Label] = []
    while isinstance(f, Labeled):
        labels.append(f.label)
        f = f.body
    labels.reverse()
    return f, tuple(labels)


def attribute(f: Formula) -> Context:
    return strip_attribute(f)[1]


def with_attribute(f: Formula, labels: Context) -> Formula:
    for lab in labels:
        f = Labeled(f, lab)
    return f


# ---------------------------------------------------------------------------
# contexts

def context_sort(ctx: Context) -> Sort:
    """Empty contexts are W-sort; otherwise the sort of the top label."""
    if not ctx:
        return Sort.W
    return ctx[-1].sort


def context_ok(ctx: Context) -> bool:
    """Labels must alternate sort, N-sort at the bottom."""
    want = Sort.N
    for lab in ctx:
        if lab.sort is not want:
            return False
        want = want.flip()
    return True


def parity_ok(ctx: Context) -> bool:
    """Odd-size contexts are N-sort, even-size ones W-sort."""
    if not context_ok(ctx):
        return False
    return (len(ctx) % 2 == 1) == (context_sort(ctx) is Sort.N)


def fits(f: Formula, ctx: Context) -> bool:
    """True iff appending the reversed context to ``f``'s attribute yields
    an N-sort formula."""
    try:
        sort = classify(f)
    except SortError:
        return False
    for lab in reversed(ctx):
        if sort is lab.sort:
            return False
        sort = sort.flip()
    return sort is Sort.N


def resolve_through(f: Formula, ctx: Context) -> Formula:
    """The formula ``f`` relocated out of ``ctx``: attribute extended with
    the reversed context."""
    return with_attribute(f, tuple(reversed(ctx)))


# ---------------------------------------------------------------------------
# ranks

def label_rank(f: Formula) -> Fraction:
    """Depth of label nesting.  Attributes add half a unit per label,
    binary connectives take the max of their children, negation is
    transparent.  Integer for every N-sort formula."""
    core, attr = strip_attribute(f)
    if isinstance(core, Not):
        base = label_rank(core.body)
    elif isinstance(core, _BINARY):
        base = max(label_rank(core.left), label_rank(core.right))
    else:
        base = Fraction(0)
    return base + Fraction(len(attr), 2)


def label_occurrences(f: Formula) -> Iterator[tuple[tuple[int, ...], Label]]:
    """Yield (path, label) for every labelled subterm of ``f``.

    The path addresses the Labeled node whose index is the occurrence.
    """
    def walk(g: Formula, path: tuple[int, ...]):
        if isinstance(g, Labeled):
            yield path, g.label
        for i, kid in enumerate(children(g)):
            yield from walk(kid, path + (i,))
    yield from walk(f, ())


def flat_depth(f: Formula, occ: tuple[int, ...]) -> Fraction:
    """Relative depth of the label occurrence addressed by ``occ``:
    rank of the whole formula minus rank of the indexed subformula."""
    sub = subterm_at(f, occ)
    if not isinstance(sub, Labeled):
        raise ValueError(f"path {list(occ)} does not address a label occurrence")
    return label_rank(f) - label_rank(sub)


# ---------------------------------------------------------------------------
# variables

def substitute(f: Formula, old: Label, new: Label) -> Formula:
    """Replace every occurrence of the variable ``old`` by ``new``, in
    attributes and in neighbourhood-inclusion atoms."""
    if not (old.is_variable() and new.is_variable() and old.kind == new.kind):
        raise ValueError("substitution requires two variables of the same sort")
    if old.kind == NVAR:
        def go(g: Formula) -> Formula:
            if isinstance(g, Contains) and g.var == old.name:
                return Contains(new.name)
            if isinstance(g, Inside) and g.var == old.name:
                return Inside(new.name)
            return _rebuild(g, go, old, new)
    else:
        def go(g: Formula) -> Formula:
            return _rebuild(g, go, old, new)
    return go(f)


def _rebuild(g: Formula, go, old: Label, new: Label) -> Formula:
    if isinstance(g, Not):
        return Not(go(g.body))
    if isinstance(g, _BINARY):
        return type(g)(go(g.left), go(g.right))
    if isinstance(g, Labeled):
        lab = new if g.label == old else g.label
        return Labeled(go(g.body), lab)
    return g


def substitute_context(ctx: Context, old: Label, new: Label) -> Context:
    return tuple(new if lab == old else lab for lab in ctx)


def formula_variables(f: Formula) -> set[Label]:
    """All variable labels occurring in ``f`` (attributes and inclusion
    atoms)."""
    out: set[Label] = set()

    def walk(g: Formula):
        if isinstance(g, Contains) or isinstance(g, Inside):
            out.add(nvar(g.var))
        elif isinstance(g, Labeled):
            if g.label.is_variable():
                out.add(g.label)
            walk(g.body)
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, _BINARY):
            walk(g.left)
            walk(g.right)

    walk(f)
    return out


def context_variables(ctx: Context) -> set[Label]:
    return {lab for lab in ctx if lab.is_variable()}


def occurs_in_formula(var: Label, f: Formula) -> bool:
    return var in formula_variables(f)


def occurs_in_context(var: Label, ctx: Context) -> bool:
    return var in ctx


def atoms_of(f: Formula) -> set[str]:
    out: set[str] = set()

    def walk(g: Formula):
        if isinstance(g, Atom):
            out.add(g.name)
        for kid in children(g):
            walk(kid)

    walk(f)
    return out


def is_sentence(f: Formula) -> bool:
    """No variables in attributes, no neighbourhood-inclusion atoms."""
    def walk(g: Formula) -> bool:
        if isinstance(g, (Contains, Inside)):
            return False
        if isinstance(g, Labeled) and g.label.is_variable():
            return False
        return all(walk(kid) for kid in children(g))
    return walk(f)


def connectives(f: Formula) -> int:
    """Propositional connective count (labels do not count)."""
    n = 1 if isinstance(f, (Not,) + _BINARY) else 0
    return n + sum(connectives(kid) for kid in children(f))


# ---------------------------------------------------------------------------
# comparative possibility sugar

def expand_comparisons(f: Formula) -> Formula:
    """Rewrite every ``a <= b`` into ``(b^{+} -> a^{+})^{@*}``, to a
    fixpoint."""
    if isinstance(f, Cmp):
        left = expand_comparisons(f.left)
        right = expand_comparisons(f.right)
        inner = Implies(Labeled(right, W_SOME), Labeled(left, W_SOME))
        return Labeled(inner, N_ALL)
    if isinstance(f, Not):
        return Not(expand_comparisons(f.body))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(expand_comparisons(f.left), expand_comparisons(f.right))
    if isinstance(f, Labeled):
        return Labeled(expand_comparisons(f.body), f.label)
    return f


def has_comparisons(f: Formula) -> bool:
    if isinstance(f, Cmp):
        return True
    return any(has_comparisons(kid) for kid in children(f))

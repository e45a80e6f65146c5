"""Finite frames, models and templates over nested neighbourhood systems.

A frame assigns every world a chain of neighbourhoods: non-empty world
sets totally ordered by inclusion.  A model points the frame at a
reference world; a template additionally picks one of that world's
neighbourhoods.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

Neighbourhood = frozenset[str]


def canon_chain(chain) -> tuple[Neighbourhood, ...]:
    """Neighbourhoods sorted by size then lexicographically."""
    return tuple(sorted((frozenset(nb) for nb in chain),
                        key=lambda nb: (len(nb), sorted(nb))))


@dataclass(frozen=True)
class Frame:
    worlds: tuple[str, ...]
    nesting: dict[str, tuple[Neighbourhood, ...]]
    valuation: dict[str, frozenset[str]]

    def __post_init__(self):
        object.__setattr__(self, "nesting",
                           {w: canon_chain(c) for w, c in self.nesting.items()})
        object.__setattr__(self, "valuation",
                           {a: frozenset(ws) for a, ws in self.valuation.items()})

    def spheres(self, world: str) -> tuple[Neighbourhood, ...]:
        return self.nesting.get(world, ())

    def holds(self, atom: str, world: str) -> bool:
        return world in self.valuation.get(atom, frozenset())


@dataclass(frozen=True)
class Model:
    frame: Frame
    reference: str

    def spheres(self) -> tuple[Neighbourhood, ...]:
        return self.frame.spheres(self.reference)


@dataclass(frozen=True)
class Template:
    model: Model
    reference_neighbourhood: Neighbourhood

    @property
    def frame(self) -> Frame:
        return self.model.frame


Structure = Union[Model, Template]


@dataclass(frozen=True)
class Assignment:
    """Partial map from neighbourhood variables to world sets and from
    world variables to worlds."""
    neigh: dict[str, Neighbourhood] = field(default_factory=dict)
    world: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "neigh",
                           {n: frozenset(ws) for n, ws in self.neigh.items()})


EMPTY_ASSIGNMENT = Assignment()


# ---------------------------------------------------------------------------
# validation

@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def add(self, msg: str):
        self.problems.append(msg)


def validate(frame: Frame, reference: str | None = None,
             assignment: Assignment | None = None,
             reference_neighbourhood: Neighbourhood | None = None) -> ValidationReport:
    """Collect every structural violation instead of failing fast."""
    report = ValidationReport()
    universe = set(frame.worlds)
    if not frame.worlds:
        report.add("the world set is empty")
    if len(universe) != len(frame.worlds):
        report.add("duplicate world names")

    for w, chain in sorted(frame.nesting.items()):
        if w not in universe:
            report.add(f"nesting given for unknown world {w!r}")
        for i, nb in enumerate(chain):
            if not nb:
                report.add(f"nesting[{w}][{i}] is empty")
            if not nb <= universe:
                stray = sorted(nb - universe)
                report.add(f"nesting[{w}][{i}] mentions unknown worlds {stray}")
        for a, b in zip(chain, chain[1:]):
            if a == b:
                report.add(f"nesting[{w}] repeats the neighbourhood {sorted(a)}")
            elif not a < b:
                report.add(f"nesting[{w}] is not an inclusion chain: "
                           f"{sorted(a)} vs {sorted(b)} are incomparable")

    for atom, ws in sorted(frame.valuation.items()):
        if atom in ("Tn", "Fn", "Tw", "Fw"):
            report.add(f"valuation must not mention the constant {atom}")
        elif not atom or not atom[0].islower():
            report.add(f"atom names are lowercase-initial: {atom!r}")
        if not ws <= universe:
            report.add(f"valuation[{atom}] mentions unknown worlds "
                       f"{sorted(ws - universe)}")

    if reference is not None and reference not in universe:
        report.add(f"reference world {reference!r} is not in the universe")
    if reference_neighbourhood is not None:
        if reference is None or reference_neighbourhood not in frame.spheres(reference):
            report.add("reference neighbourhood is not a neighbourhood of "
                       "the reference world")

    if assignment is not None:
        for n, ws in sorted(assignment.neigh.items()):
            if not ws:
                report.add(f"assignment[{n}] is empty")
            if not ws <= universe:
                report.add(f"assignment[{n}] mentions unknown worlds "
                           f"{sorted(ws - universe)}")
        for u, w in sorted(assignment.world.items()):
            if w not in universe:
                report.add(f"assignment[{u}] = {w!r} is not in the universe")
    return report


def validate_structure(structure: Structure,
                       assignment: Assignment | None = None) -> ValidationReport:
    if isinstance(structure, Template):
        return validate(structure.frame, structure.model.reference, assignment,
                        structure.reference_neighbourhood)
    return validate(structure.frame, structure.reference, assignment)


# ---------------------------------------------------------------------------
# reachability

def delta(model: Model, n: int) -> frozenset[str]:
    """Worlds reachable from the reference in at most ``n`` sphere hops:
    the union of the first ``n`` steps of the reachability sequence."""
    if n < 0:
        raise ValueError("n must be non-negative")
    layer = frozenset({model.reference})
    seen = layer
    for _ in range(n):
        layer = frozenset(w for v in layer
                          for nb in model.frame.spheres(v) for w in nb)
        new = seen | layer
        if new == seen:
            break
        seen = new
    return seen


# ---------------------------------------------------------------------------
# perspective steps

def perspectives(structure: Structure) -> list[Structure]:
    """One descent step: a model yields its templates, a template the
    models at its worlds."""
    if isinstance(structure, Model):
        return [Template(structure, nb) for nb in structure.spheres()]
    return [Model(structure.frame, w)
            for w in sorted(structure.reference_neighbourhood)]


def paths(structure: Structure, n: int) -> Iterator[Structure]:
    """All structures reachable by exactly ``n`` perspective steps."""
    if n == 0:
        yield structure
        return
    for nxt in perspectives(structure):
        yield from paths(nxt, n - 1)

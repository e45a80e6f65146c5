"""Satisfaction on models and templates, resolution through a context,
and brute-force bounded validity used as the semantic oracle.

Evaluation follows the two-sorted satisfaction relation clause by
clause.  Named neighbourhoods evaluate to false when the assigned set is
not a sphere of the reference world, since a template's reference
neighbourhood must come from the reference world's system; inclusion
atoms use non-strict containment (see the format reference for why the
total-order rules need reflexive comparability).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .model import (Assignment, EMPTY_ASSIGNMENT, Frame, Model, Neighbourhood,
                    Structure, Template)
from .syntax import (And, Atom, Bot, Cmp, Contains, Context, Formula, Implies,
                     Inside, Label, Labeled, Not, Or, Sort, Top, classify,
                     fits, is_sentence, label_rank, resolve_through,
                     NALL, NSOME, NVAR, WALL, WSOME, WVAR)


class EvalError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


Trace = list[tuple[Structure, Formula, bool]]


@dataclass
class EvalOutcome:
    value: bool
    trace: Trace | None = None


def satisfies(structure: Structure, f: Formula,
              assignment: Assignment = EMPTY_ASSIGNMENT,
              trace: Trace | None = None) -> bool:
    """The satisfaction relation.  Models take N-sort formulas, templates
    W-sort ones."""
    sort = classify(f)
    if isinstance(structure, Model) and sort is not Sort.N:
        raise EvalError("models satisfy N-sort formulas only")
    if isinstance(structure, Template) and sort is not Sort.W:
        raise EvalError("templates satisfy W-sort formulas only")
    if isinstance(structure, Model):
        return _sat_model(structure, f, assignment, trace)
    return _sat_template(structure, f, assignment, trace)


def evaluate(structure: Structure, f: Formula,
             assignment: Assignment = EMPTY_ASSIGNMENT,
             want_trace: bool = False) -> EvalOutcome:
    trace: Trace | None = [] if want_trace else None
    value = satisfies(structure, f, assignment, trace)
    return EvalOutcome(value, trace)


def _record(trace: Trace | None, structure: Structure, f: Formula, value: bool) -> bool:
    if trace is not None:
        trace.append((structure, f, value))
    return value


def _sat_model(m: Model, f: Formula, sigma: Assignment, trace: Trace | None) -> bool:
    if isinstance(f, Atom):
        return _record(trace, m, f, m.frame.holds(f.name, m.reference))
    if isinstance(f, Top):
        return _record(trace, m, f, True)
    if isinstance(f, Bot):
        return _record(trace, m, f, False)
    if isinstance(f, Not):
        return _record(trace, m, f, not _sat_model(m, f.body, sigma, trace))
    if isinstance(f, And):
        v = _sat_model(m, f.left, sigma, trace) and _sat_model(m, f.right, sigma, trace)
        return _record(trace, m, f, v)
    if isinstance(f, Or):
        v = _sat_model(m, f.left, sigma, trace) or _sat_model(m, f.right, sigma, trace)
        return _record(trace, m, f, v)
    if isinstance(f, Implies):
        v = (not _sat_model(m, f.left, sigma, trace)) or _sat_model(m, f.right, sigma, trace)
        return _record(trace, m, f, v)
    if isinstance(f, Labeled):
        lab = f.label
        if lab.kind == NALL:
            v = all(_sat_template(Template(m, nb), f.body, sigma, trace)
                    for nb in m.spheres())
        elif lab.kind == NSOME:
            v = any(_sat_template(Template(m, nb), f.body, sigma, trace)
                    for nb in m.spheres())
        elif lab.kind == NVAR:
            if lab.name not in sigma.neigh:
                raise EvalError(f"unassigned neighbourhood variable {lab.name}")
            picked = sigma.neigh[lab.name]
            v = picked in m.spheres() and \
                _sat_template(Template(m, picked), f.body, sigma, trace)
        else:
            raise EvalError("world label on an N-sort formula")
        return _record(trace, m, f, v)
    if isinstance(f, Cmp):
        raise EvalError("comparative possibility must be expanded before evaluation")
    raise EvalError(f"cannot evaluate {f!r} at a model")


def _sat_template(t: Template, f: Formula, sigma: Assignment, trace: Trace | None) -> bool:
    if isinstance(f, Top):
        return _record(trace, t, f, True)
    if isinstance(f, Bot):
        return _record(trace, t, f, False)
    if isinstance(f, Contains):
        if f.var not in sigma.neigh:
            raise EvalError(f"unassigned neighbourhood variable {f.var}")
        picked = sigma.neigh[f.var]
        v = picked in t.model.spheres() and picked <= t.reference_neighbourhood
        return _record(trace, t, f, v)
    if isinstance(f, Inside):
        if f.var not in sigma.neigh:
            raise EvalError(f"unassigned neighbourhood variable {f.var}")
        picked = sigma.neigh[f.var]
        v = picked in t.model.spheres() and t.reference_neighbourhood <= picked
        return _record(trace, t, f, v)
    if isinstance(f, Not):
        return _record(trace, t, f, not _sat_template(t, f.body, sigma, trace))
    if isinstance(f, And):
        v = _sat_template(t, f.left, sigma, trace) and _sat_template(t, f.right, sigma, trace)
        return _record(trace, t, f, v)
    if isinstance(f, Or):
        v = _sat_template(t, f.left, sigma, trace) or _sat_template(t, f.right, sigma, trace)
        return _record(trace, t, f, v)
    if isinstance(f, Implies):
        v = (not _sat_template(t, f.left, sigma, trace)) or \
            _sat_template(t, f.right, sigma, trace)
        return _record(trace, t, f, v)
    if isinstance(f, Labeled):
        lab = f.label
        frame = t.frame
        if lab.kind == WALL:
            v = all(_sat_model(Model(frame, w), f.body, sigma, trace)
                    for w in sorted(t.reference_neighbourhood))
        elif lab.kind == WSOME:
            v = any(_sat_model(Model(frame, w), f.body, sigma, trace)
                    for w in sorted(t.reference_neighbourhood))
        elif lab.kind == WVAR:
            if lab.name not in sigma.world:
                raise EvalError(f"unassigned world variable {lab.name}")
            w = sigma.world[lab.name]
            v = w in t.reference_neighbourhood and \
                _sat_model(Model(frame, w), f.body, sigma, trace)
        else:
            raise EvalError("neighbourhood label on a W-sort formula")
        return _record(trace, t, f, v)
    if isinstance(f, Cmp):
        raise EvalError("comparative possibility must be expanded before evaluation")
    raise EvalError(f"cannot evaluate {f!r} at a template")


def resolves(m: Model, ctx: Context, f: Formula,
             assignment: Assignment = EMPTY_ASSIGNMENT) -> bool:
    """Resolution: ``f`` fits ``ctx`` and the relocated formula holds."""
    if not fits(f, ctx):
        return False
    return satisfies(m, resolve_through(f, ctx), assignment)


# ---------------------------------------------------------------------------
# bounded enumeration

@lru_cache(maxsize=None)
def sphere_chains(worlds: tuple[str, ...]) -> tuple[tuple[Neighbourhood, ...], ...]:
    """Every strict inclusion chain of non-empty subsets of ``worlds``,
    shortest first, then lexicographic."""
    subsets = [frozenset(c)
               for size in range(1, len(worlds) + 1)
               for c in itertools.combinations(worlds, size)]
    chains: list[tuple[Neighbourhood, ...]] = [()]

    def extend(prefix: tuple[Neighbourhood, ...], start: int):
        for i in range(start, len(subsets)):
            if not prefix or prefix[-1] < subsets[i]:
                chain = prefix + (subsets[i],)
                chains.append(chain)
                extend(chain, i + 1)

    extend((), 0)
    key = lambda ch: (len(ch), [(len(nb), sorted(nb)) for nb in ch])
    return tuple(sorted(chains, key=key))


def _world_names(n: int) -> tuple[str, ...]:
    return tuple(f"w{i}" for i in range(n))


def _subsets(worlds: tuple[str, ...]) -> list[frozenset[str]]:
    out = [frozenset()]
    for size in range(1, len(worlds) + 1):
        out.extend(frozenset(c) for c in itertools.combinations(worlds, size))
    return out


def enumerate_models(atoms: tuple[str, ...], max_worlds: int,
                     rank: Fraction) -> "itertools.chain[Model]":
    """All models over canonical worlds, in a fixed order: size, then
    reference, then nesting, then valuation.

    Nesting is enumerated only where evaluation can inspect it: nowhere
    for label-free formulas, at the reference for rank <= 1, everywhere
    beyond that.
    """
    def gen():
        for n in range(1, max_worlds + 1):
            worlds = _world_names(n)
            chains = sphere_chains(worlds)
            val_subsets = _subsets(worlds)
            for reference in worlds:
                if rank > 1:
                    active = worlds
                elif rank > 0:
                    active = (reference,)
                else:
                    active = ()
                for combo in itertools.product(chains, repeat=len(active)):
                    nesting = dict(zip(active, combo))
                    for vals in itertools.product(val_subsets, repeat=len(atoms)):
                        frame = Frame(worlds, nesting, dict(zip(atoms, vals)))
                        yield Model(frame, reference)
    return gen()


def enumerate_templates(atoms: tuple[str, ...], max_worlds: int,
                        rank: Fraction):
    for m in enumerate_models(atoms, max_worlds, rank + Fraction(1, 2)):
        for nb in m.spheres():
            yield Template(m, nb)


@dataclass
class BoundedVerdict:
    valid: bool
    countermodel: Structure | None = None
    structures_checked: int = 0
    bound: int = 0


def _require_sentence(f: Formula, expected: Sort | None = None):
    sort = classify(f)
    if expected is not None and sort is not expected:
        raise EvalError(f"expected a {expected.value}-sort sentence")
    if not is_sentence(f):
        raise EvalError("free variables or inclusion atoms: not a sentence")
    return sort


def valid_bounded(f: Formula, max_worlds: int,
                  budget: int | None = None) -> BoundedVerdict:
    """Exhaustively search all models up to ``max_worlds`` worlds for a
    countermodel of the N-sort sentence ``f``."""
    _require_sentence(f, Sort.N)
    rank = label_rank(f)
    atoms = tuple(sorted(_atoms(f)))
    checked = 0
    for m in enumerate_models(atoms, max_worlds, rank):
        checked += 1
        if budget is not None and checked > budget:
            raise BudgetExceeded(f"exceeded {budget} structures")
        if not satisfies(m, f):
            return BoundedVerdict(False, m, checked, max_worlds)
    return BoundedVerdict(True, None, checked, max_worlds)


def consequence_bounded(premises: list[Formula], f: Formula, max_worlds: int,
                        budget: int | None = None) -> BoundedVerdict:
    """Bounded logical consequence: every structure satisfying all
    premises satisfies ``f``.  Templates are enumerated for W-sort input."""
    sort = _require_sentence(f)
    for g in premises:
        if _require_sentence(g) is not sort:
            raise EvalError("premises and conclusion must share one sort")
    rank = max([label_rank(f)] + [label_rank(g) for g in premises])
    atom_set: set[str] = _atoms(f)
    for g in premises:
        atom_set |= _atoms(g)
    atoms = tuple(sorted(atom_set))
    structures = (enumerate_models(atoms, max_worlds, rank)
                  if sort is Sort.N else
                  enumerate_templates(atoms, max_worlds, rank))
    checked = 0
    for s in structures:
        checked += 1
        if budget is not None and checked > budget:
            raise BudgetExceeded(f"exceeded {budget} structures")
        if all(satisfies(s, g) for g in premises) and not satisfies(s, f):
            return BoundedVerdict(False, s, checked, max_worlds)
    return BoundedVerdict(True, None, checked, max_worlds)


def _atoms(f: Formula) -> set[str]:
    from .syntax import atoms_of
    return atoms_of(f)

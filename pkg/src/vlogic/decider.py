"""Satisfiability and validity by bounded model search.

The label structure of a sentence bounds how big a satisfying model must
be: spheres are only ever demanded by labels at integer depth, worlds by
labels half a level deeper (plus one world per demanded sphere, since a
strict inclusion chain of c spheres needs c distinct witnesses).  The
search enumerates models inside those budgets; an exhausted search is a
refutation, certified for the conjunction/implication/existential-world
fragment whose completeness argument backs the bound.

Within the rank-one fast path, models are enumerated up to isomorphism:
worlds that share sphere membership are interchangeable, so only
canonical representatives (sorted zone valuations) are materialised.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .model import Frame, Model, Neighbourhood, validate
from .semantics import BudgetExceeded, satisfies
from .syntax import (
    And, Atom, Bot, Formula, Implies, Labeled, Not, Sort, Top, atoms_of,
    children, classify, flat_depth, is_sentence, label_occurrences,
    label_rank, NSOME, NALL, WSOME,
)


class DeciderError(ValueError):
    pass


@dataclass(frozen=True)
class ModelBounds:
    depth: int
    neigh_per_world: dict[int, int]
    worlds_per_neigh: dict[int, int]

    @property
    def total_worlds(self) -> int:
        return 1 + sum(self.worlds_per_neigh.values())


def bounds(f: Formula) -> ModelBounds:
    """Search budgets for an N-sort sentence, read off its label depths."""
    if classify(f) is not Sort.N:
        raise DeciderError("bounds are defined for N-sort sentences")
    if not is_sentence(f):
        raise DeciderError("not a sentence: variables or inclusion atoms present")
    rank = label_rank(f)
    assert rank.denominator == 1
    k = int(rank)
    neigh: dict[int, int] = {n: 0 for n in range(k)}
    half: dict[int, int] = {n: 0 for n in range(k)}
    for path, _lab in label_occurrences(f):
        depth = flat_depth(f, path)
        if depth.denominator == 1:
            neigh[int(depth)] = neigh.get(int(depth), 0) + 1
        else:
            level = int(depth - Fraction(1, 2))
            half[level] = half.get(level, 0) + 1
    worlds = {n: half.get(n, 0) + neigh.get(n, 0) for n in
              sorted(set(neigh) | set(half))}
    return ModelBounds(k, neigh, worlds)


IN_FRAGMENT_LABELS = {WSOME, NSOME, NALL}


def in_certified_fragment(f: Formula) -> bool:
    """Conjunction, implication and the three quantifier labels whose
    completeness construction justifies the finite bound."""
    if isinstance(f, (Atom, Top, Bot)):
        return True
    if isinstance(f, (And, Implies)):
        return all(in_certified_fragment(c) for c in children(f))
    if isinstance(f, Labeled):
        return f.label.kind in IN_FRAGMENT_LABELS and \
            in_certified_fragment(f.body)
    return False


# ---------------------------------------------------------------------------
# verdicts

VALID = "VALID"
UNSAT = "UNSAT"
SAT = "SAT"
COUNTERMODEL = "COUNTERMODEL"


@dataclass
class Verdict:
    verdict: str
    model: Model | None = None
    fragment_certified: bool = False
    bound_limited: bool = False
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from .parser import model_to_json
        doc = {"verdict": self.verdict,
               "fragment_certified": self.fragment_certified,
               "bound_limited": self.bound_limited,
               "stats": self.stats}
        if self.model is not None:
            doc["model"] = model_to_json(self.model)
        return doc


# ---------------------------------------------------------------------------
# the search

def decide_sat(f: Formula, max_worlds: int | None = None,
               budget: int | None = None) -> Verdict:
    """First satisfying model within the computed budgets, else UNSAT."""
    b = bounds(f)
    cap = b.total_worlds
    limited = False
    if max_worlds is not None and max_worlds < cap:
        cap = max_worlds
        limited = True
    atoms = tuple(sorted(atoms_of(f)))
    checked = 0
    for m in _enumerate(b, atoms, cap):
        checked += 1
        if budget is not None and checked > budget:
            raise BudgetExceeded(f"exceeded {budget} candidate models")
        if satisfies(m, f):
            _assert_witness(m, f, True)
            return Verdict(SAT, m, in_certified_fragment(f), False,
                           {"structures": checked, "bound": cap})
    return Verdict(UNSAT, None, in_certified_fragment(f), limited,
                   {"structures": checked, "bound": cap})


def decide_valid(f: Formula, max_worlds: int | None = None,
                 budget: int | None = None) -> Verdict:
    """Search for a countermodel of ``f`` by deciding its negation."""
    sub = decide_sat(Not(f), max_worlds, budget)
    certified = in_certified_fragment(f)
    if sub.verdict == SAT:
        _assert_witness(sub.model, f, False)
        return Verdict(COUNTERMODEL, sub.model, certified, False, sub.stats)
    return Verdict(VALID, None, certified, sub.bound_limited, sub.stats)


class WitnessError(RuntimeError):
    pass


def _assert_witness(m: Model, f: Formula, expected: bool):
    # verdict models are re-validated independently before emission
    report = validate(m.frame, m.reference)
    if not report.ok:
        raise WitnessError(f"witness fails validation: {report.problems}")
    if satisfies(m, f) is not expected:
        raise WitnessError("witness does not decide the formula as claimed")


# ---------------------------------------------------------------------------
# enumeration

def _enumerate(b: ModelBounds, atoms: tuple[str, ...], cap: int):
    if b.depth <= 1:
        yield from _enumerate_rank1(b, atoms, cap)
    else:
        yield from _enumerate_layered(b, atoms, cap)


def _atom_subsets(atoms: tuple[str, ...]) -> list[frozenset[str]]:
    out = []
    for mask in range(1 << len(atoms)):
        out.append(frozenset(a for i, a in enumerate(atoms) if mask >> i & 1))
    return out


def _valuation(atoms, assignment: dict[str, frozenset[str]]) -> dict:
    val: dict[str, set[str]] = {a: set() for a in atoms}
    for w, held in assignment.items():
        for a in held:
            val[a].add(w)
    return {a: frozenset(ws) for a, ws in val.items()}


def _enumerate_rank1(b: ModelBounds, atoms: tuple[str, ...], cap: int):
    """Canonical representatives for depth <= 1 searches.

    A structure class fixes the sphere count ``c``, the sphere the
    reference world first enters (``c + 1`` for none), and how many other
    worlds first appear in each sphere.  Worlds inside one zone are
    interchangeable, so zone valuations are enumerated as sorted
    multisets.
    """
    nb = b.neigh_per_world.get(0, 0)
    wb = b.worlds_per_neigh.get(0, 0)
    types = _atom_subsets(atoms)
    for n in range(1, cap + 1):
        worlds = tuple(f"w{i}" for i in range(n))
        chi, others = worlds[0], worlds[1:]
        for c in range(0, nb + 1):
            if c == 0 and n > 1:
                continue  # every world must be reachable
            for chi_level in range(1, c + 2):
                for zones in _compositions(n - 1, c):
                    sizes = []
                    total = 0
                    ok = True
                    for i in range(c):
                        total += zones[i]
                        size = total + (1 if chi_level <= i + 1 else 0)
                        if size > wb or (sizes and size <= sizes[-1]) or size == 0:
                            ok = False
                            break
                        sizes.append(size)
                    if not ok:
                        continue
                    if c == 0 and chi_level != 1:
                        continue  # one canonical form for the empty system
                    spheres = []
                    used = 0
                    members: list[str] = []
                    for i in range(c):
                        members.extend(others[used:used + zones[i]])
                        used += zones[i]
                        sphere = set(members)
                        if chi_level <= i + 1:
                            sphere.add(chi)
                        spheres.append(frozenset(sphere))
                    nesting = {chi: tuple(spheres)} if spheres else {}
                    zone_lists = [[chi]] + [list(others[sum(zones[:i]):sum(zones[:i + 1])])
                                            for i in range(c)]
                    for combo in itertools.product(
                            *(itertools.combinations_with_replacement(types, len(z))
                              for z in zone_lists)):
                        held: dict[str, frozenset[str]] = {}
                        for zone, picks in zip(zone_lists, combo):
                            for w, t in zip(zone, picks):
                                held[w] = t
                        frame = Frame(worlds, nesting, _valuation(atoms, held))
                        yield Model(frame, chi)


def _compositions(total: int, parts: int):
    """All ways to split ``total`` into ``parts`` non-negative counts."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _chains_within(worlds: tuple[str, ...], max_len: int, max_size: int):
    """Sphere chains over ``worlds`` with bounded length and sphere size."""
    subsets = [frozenset(c)
               for size in range(1, min(max_size, len(worlds)) + 1)
               for c in itertools.combinations(worlds, size)]
    chains: list[tuple[Neighbourhood, ...]] = [()]

    def extend(prefix, start):
        if len(prefix) == max_len:
            return
        for i in range(start, len(subsets)):
            if not prefix or prefix[-1] < subsets[i]:
                chains.append(prefix + (subsets[i],))
                extend(prefix + (subsets[i],), i + 1)

    if max_len > 0:
        extend((), 0)
    key = lambda ch: (len(ch), [(len(nb), sorted(nb)) for nb in ch])
    return sorted(chains, key=key)


def _enumerate_layered(b: ModelBounds, atoms: tuple[str, ...], cap: int):
    """Concrete breadth-first construction for depth >= 2: assign each
    reached world a sphere chain within its level's budgets; keep models
    whose worlds are all reached within ``depth`` hops."""
    types = _atom_subsets(atoms)
    chain_cache: dict[int, list] = {}

    for n in range(1, cap + 1):
        worlds = tuple(f"w{i}" for i in range(n))
        chi = worlds[0]

        def chains_at(level: int) -> list:
            if level not in chain_cache:
                chain_cache[level] = _chains_within(
                    worlds, b.neigh_per_world.get(level, 0),
                    b.worlds_per_neigh.get(level, 0))
            return chain_cache[level]

        def rec(nesting: dict, levels: dict, queue: list):
            if not queue:
                if len(levels) == n:
                    for vals in itertools.product(types, repeat=n):
                        frame = Frame(worlds, dict(nesting),
                                      _valuation(atoms, dict(zip(worlds, vals))))
                        yield Model(frame, chi)
                return
            w, lvl = queue[0]
            rest = queue[1:]
            for chain in chains_at(lvl):
                newly = []
                for sphere in chain:
                    for v in sorted(sphere):
                        if v not in levels:
                            levels[v] = lvl + 1
                            newly.append(v)
                nesting[w] = chain
                nxt = rest + [(v, lvl + 1) for v in newly if lvl + 1 < b.depth]
                yield from rec(nesting, levels, nxt)
                del nesting[w]
                for v in newly:
                    del levels[v]

        chain_cache.clear()
        yield from rec({}, {chi: 0}, [(chi, 0)])

"""Detour detection and elimination for checked derivations.

A detour is an introduction immediately consumed by the matching
elimination (conjunction and implication), a classical-absurdity step on
a non-atomic conclusion, a context-shuffling round trip (rules 13/14,
15/16, 21/22 and the existential intro/elim pairs), or an inclusion-
propagation cycle restoring a formula in its original context.

Reduction never changes the end formula or context and never creates
open hypotheses; a rewrite step can duplicate subderivations (implication
reduction substitutes the minor derivation for hypothesis occurrences)
but always lowers the usual normalization measure, so the driver
terminates well inside its step budget on sane input.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from .checker import Hyp, Node, Step, concl
from .rules import resolve_rule, UnknownRule
from .syntax import (
    And, Bot, Formula, Implies, Label, Not, Or, Sort, connectives,
    context_sort, context_variables, formula_variables, nvar, substitute,
    substitute_context, wvar, NVAR, WVAR,
)


@dataclass(frozen=True)
class Redex:
    kind: str
    path: tuple[int, ...]
    rank: int = 0
    info: tuple = ()


class StaleRedex(ValueError):
    pass


class NormalizationBudget(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# tree helpers

def node_at(root: Node, path: tuple[int, ...]) -> Node:
    node = root
    for i in path:
        node = node.premises[i]
    return node


def replace_at(root: Node, path: tuple[int, ...], new: Node) -> Node:
    if not path:
        return new
    head, rest = path[0], path[1:]
    premises = list(root.premises)
    premises[head] = replace_at(premises[head], rest, new)
    return Step(root.rule, root.context, root.conclusion, tuple(premises),
                root.discharge)


def iter_steps(root: Node, path: tuple[int, ...] = ()):
    yield path, root
    if isinstance(root, Step):
        for i, p in enumerate(root.premises):
            yield from iter_steps(p, path + (i,))


def leaf_ids(root: Node) -> set[int]:
    return {n.id for _, n in iter_steps(root) if isinstance(n, Hyp)}


def replace_hyp_leaves(root: Node, ids: frozenset[int],
                       make: Callable[[Hyp], Node]) -> Node:
    if isinstance(root, Hyp):
        return make(root) if root.id in ids else root
    return Step(root.rule, root.context, root.conclusion,
                tuple(replace_hyp_leaves(p, ids, make) for p in root.premises),
                root.discharge)


def substitute_derivation(root: Node, old: Label, new: Label) -> Node:
    ctx = substitute_context(root.context, old, new)
    if isinstance(root, Hyp):
        return Hyp(root.id, ctx, substitute(root.formula, old, new))
    return Step(root.rule, ctx, substitute(root.conclusion, old, new),
                tuple(substitute_derivation(p, old, new) for p in root.premises),
                root.discharge)


def derivation_var_names(root: Node) -> set[str]:
    names: set[str] = set()
    for _, n in iter_steps(root):
        for v in formula_variables(concl(n)) | context_variables(n.context):
            names.add(v.name)
    return names


def _fresh_name(taken: set[str], lower: bool) -> str:
    for i in itertools.count():
        name = (f"z{i}" if lower else f"Z{i}")
        if name not in taken:
            return name


def _rule_of(node: Node) -> str | None:
    if not isinstance(node, Step):
        return None
    try:
        return resolve_rule(node.rule)
    except UnknownRule:
        return None


def _max_hyp_id(root: Node) -> int:
    ids = leaf_ids(root)
    return max(ids) if ids else 0


def _bot_for_ctx(ctx) -> Bot:
    return Bot(Sort.N) if context_sort(ctx) is Sort.W else Bot(Sort.W)


# ---------------------------------------------------------------------------
# redex detection

_ELIM_TO_INTRO = {"and-elim-l": 0, "and-elim-r": 1}
_CYCLE_RULES = {"w-exist-prop": "r23-cycle", "w-univ-prop": "r24-cycle",
                "trans-incl-neg": "r25-cycle", "trans-incl-pos": "r26-cycle"}


def find_redexes(derivation: Node) -> list[Redex]:
    """Every reducible detour, in tree order."""
    out: list[Redex] = []
    for path, node in iter_steps(derivation):
        if not isinstance(node, Step):
            continue
        rule = _rule_of(node)
        if rule in _ELIM_TO_INTRO:
            p = node.premises[0]
            if _rule_of(p) == "and-intro" and p.context == node.context:
                out.append(Redex("and-red", path, connectives(concl(p))))
        elif rule == "imp-elim":
            r = _match_imp_red(node)
            if r is not None:
                out.append(Redex("imp-red", path, r))
        elif rule == "bot-classical":
            kind = _match_atomize(node)
            if kind is not None:
                out.append(Redex("absurd-atomize", path,
                                 connectives(node.conclusion)))
            r = _match_absurd_detour(node)
            if r is not None:
                out.append(Redex("r9-r7", path, 0, r))
        elif rule == "bot-intuitionistic":
            r = _match_absurd_detour(node)
            if r is not None:
                out.append(Redex("r9-r8", path, 0, r))
        elif rule == "ctx-elim":
            p = node.premises[0] if node.premises else None
            if p is not None and _rule_of(p) == "ctx-intro" and p.premises:
                start = p.premises[0]
                if concl(start) == node.conclusion and \
                        start.context == node.context:
                    out.append(Redex("r13-r14", path))
        elif rule == "ctx-intro":
            p = node.premises[0] if node.premises else None
            if p is not None and _rule_of(p) == "ctx-elim" and p.premises:
                start = p.premises[0]
                if concl(start) == node.conclusion and \
                        start.context == node.context:
                    out.append(Redex("r14-r13", path))
        elif rule == "w-univ-elim":
            if _match_univ_roundtrip(node, "w-univ-intro"):
                out.append(Redex("r15-r16", path))
        elif rule == "w-univ-intro":
            p = node.premises[0] if node.premises else None
            if p is not None and _rule_of(p) == "w-univ-elim" and p.premises:
                start = p.premises[0]
                if concl(start) == node.conclusion and \
                        start.context == node.context:
                    out.append(Redex("r16-r15", path))
        elif rule == "n-univ-wildcard":
            if _match_wildcard_roundtrip(node):
                out.append(Redex("r21-r22", path))
        elif rule == "n-univ-intro":
            main = node.premises[0] if node.premises else None
            if main is not None and _rule_of(main) == "n-univ-wildcard":
                start = _wildcard_main(main)
                if start is not None and concl(start) == node.conclusion and \
                        start.context == node.context:
                    out.append(Redex("r22-r21", path))
        elif rule == "w-exist-elim":
            r = _match_exist_red(node, "w-exist-intro", None)
            if r is not None:
                out.append(Redex("r17-r19", path, 0, r))
        elif rule == "n-exist-elim":
            r = _match_exist_red(node, "n-exist-intro", "main")
            if r is not None:
                out.append(Redex("r18-r20", path, 0, r))
        if rule in _CYCLE_RULES:
            hop = _match_cycle(node)
            if hop is not None:
                out.append(Redex(_CYCLE_RULES[rule], path, 0, hop))
    return out


def _match_imp_red(node: Step) -> int | None:
    """Rank of the cut implication if the major premise is a matching
    introduction in the same context."""
    if len(node.premises) != 2:
        return None
    for idx in (0, 1):
        major = node.premises[idx]
        if _rule_of(major) != "imp-intro" or major.context != node.context:
            continue
        mf = concl(major)
        minor = node.premises[1 - idx]
        if isinstance(mf, Implies) and concl(minor) == mf.left \
                and node.conclusion == mf.right:
            return connectives(mf)
        if isinstance(mf, Not) and concl(minor) == mf.body \
                and node.conclusion == _bot_for_ctx(node.context):
            return connectives(mf)
    return None


def _match_atomize(node: Step) -> str | None:
    c = node.conclusion
    if not isinstance(c, (And, Implies)):
        return None
    if any(lab.is_existential() for lab in node.context):
        return None  # the rewrite needs conjunction/implication rules
    return "and" if isinstance(c, And) else "imp"


def residual_absurd_sites(derivation: Node) -> list[tuple[int, ...]]:
    """Classical-absurdity steps with a compound conclusion that the
    normalizer does not rewrite (disjunctions, negations, or existential
    contexts)."""
    out = []
    for path, node in iter_steps(derivation):
        if isinstance(node, Step) and _rule_of(node) == "bot-classical":
            c = node.conclusion
            compound = isinstance(c, (And, Implies, Or, Not))
            if compound and _match_atomize(node) is None:
                out.append(path)
    return out


def _match_absurd_detour(node: Step) -> tuple[int, ...] | None:
    """Find an absurd-expansion step feeding this absurdity elimination
    through a spine of context/absurdity shuffling, such that its own
    premise already concludes the needed absurdity in this context."""
    spine = ("ctx-intro", "ctx-elim", "bot-intuitionistic", "hyp-injection")
    if not node.premises:
        return None
    want = _bot_for_ctx(node.context)
    path: tuple[int, ...] = (0,)
    cur = node.premises[0]
    while True:
        rule = _rule_of(cur)
        if rule == "absurd-expansion" and cur.premises:
            src = cur.premises[0]
            if concl(src) == want and src.context == node.context:
                return path + (0,)
            return None
        if rule not in spine or not cur.premises:
            return None
        path = path + (0,)
        cur = cur.premises[0]


def _match_univ_roundtrip(node: Step, intro_rule: str) -> bool:
    p = node.premises[0] if node.premises else None
    if p is None or _rule_of(p) != intro_rule or not p.premises:
        return False
    start = p.premises[0]
    if concl(start) != node.conclusion:
        return False
    u = start.context[-1] if start.context else None
    v = node.context[-1] if node.context else None
    if u is None or v is None or start.context[:-1] != node.context[:-1]:
        return False
    if u == v:
        return True
    # renaming must not disturb the end formula or the shared context
    blocked = formula_variables(node.conclusion) | \
        context_variables(node.context[:-1])
    return u not in blocked


def _wildcard_main(step: Step) -> Node | None:
    for p in step.premises:
        if p.context and p.context[-1].kind == "nall" and \
                concl(p) == step.conclusion:
            return p
    return None


def _match_wildcard_roundtrip(node: Step) -> bool:
    main = _wildcard_main(node)
    if main is None or _rule_of(main) != "n-univ-intro" or not main.premises:
        return False
    start = main.premises[0]
    if concl(start) != node.conclusion:
        return False
    if not start.context or not node.context or \
            start.context[:-1] != node.context[:-1]:
        return False
    n, m = start.context[-1], node.context[-1]
    if n == m:
        return True
    blocked = formula_variables(node.conclusion) | \
        context_variables(node.context[:-1])
    return n not in blocked


def _match_exist_red(node: Step, intro_rule: str,
                     intro_shape: str | None) -> tuple[int, int] | None:
    """(major index, minor index) when the existential major premise is a
    matching introduction."""
    if len(node.premises) != 2:
        return None
    for major_idx in (0, 1):
        major = node.premises[major_idx]
        minor_idx = 1 - major_idx
        minor = node.premises[minor_idx]
        if concl(minor) != node.conclusion or minor.context != node.context:
            continue
        if _rule_of(major) != intro_rule:
            continue
        start = _intro_source(major, intro_shape)
        if start is None:
            continue
        if not node.discharge:
            return major_idx, minor_idx
        hyps = [n for _, n in iter_steps(minor)
                if isinstance(n, Hyp) and n.id in node.discharge]
        if not hyps:
            return major_idx, minor_idx
        v = hyps[0].context[-1] if hyps[0].context else None
        u = start.context[-1] if start.context else None
        if v is None or u is None:
            continue
        if u == v:
            return major_idx, minor_idx
        blocked = formula_variables(node.conclusion) | \
            context_variables(node.context) | \
            formula_variables(concl(start)) | \
            context_variables(start.context[:-1])
        if u not in blocked:
            return major_idx, minor_idx
    return None


def _intro_source(major: Step, shape: str | None) -> Node | None:
    """The variable-scoped premise of an existential introduction."""
    if shape == "main":
        for p in major.premises:
            if p.context and p.context[-1].kind == NVAR and \
                    concl(p) == concl(major):
                return p
        return None
    return major.premises[0] if major.premises else None


def _match_cycle(node: Step) -> tuple[int, ...] | None:
    """Relative path to an ancestor payload with the same conclusion and
    context, reached through a chain of same-rule propagation steps."""
    rule = _rule_of(node)
    rel: tuple[int, ...] = ()
    cur: Node = node
    while True:
        payload_idx = _payload_index(cur)
        if payload_idx is None:
            return None
        rel = rel + (payload_idx,)
        payload = cur.premises[payload_idx]
        if concl(payload) == node.conclusion and \
                payload.context == node.context:
            return rel
        if _rule_of(payload) != rule:
            return None
        cur = payload


def _payload_index(step: Step) -> int | None:
    for i, p in enumerate(step.premises):
        if concl(p) == step.conclusion:
            return i
    return None


# ---------------------------------------------------------------------------
# reduction

def reduce_redex(derivation: Node, redex: Redex) -> Node:
    """Apply one rewrite; raises StaleRedex when the tree no longer
    matches."""
    node = node_at(derivation, redex.path)
    if not isinstance(node, Step):
        raise StaleRedex("redex path does not address a step")
    rule = _rule_of(node)
    kind = redex.kind

    if kind == "and-red":
        if rule not in _ELIM_TO_INTRO or _rule_of(node.premises[0]) != "and-intro":
            raise StaleRedex(kind)
        intro = node.premises[0]
        return replace_at(derivation, redex.path,
                          intro.premises[_ELIM_TO_INTRO[rule]])

    if kind == "imp-red":
        if _match_imp_red(node) is None:
            raise StaleRedex(kind)
        for idx in (0, 1):
            if _rule_of(node.premises[idx]) == "imp-intro" and \
                    node.premises[idx].context == node.context:
                major, minor = node.premises[idx], node.premises[1 - idx]
                body = major.premises[0]
                new = replace_hyp_leaves(body, major.discharge, lambda h: minor)
                return replace_at(derivation, redex.path, new)
        raise StaleRedex(kind)

    if kind in ("r9-r8", "r9-r7"):
        src_rel = _match_absurd_detour(node)
        if src_rel is None:
            raise StaleRedex(kind)
        src = node_at(node, src_rel)
        dropped_leaves = leaf_ids(node.premises[0]) - leaf_ids(src)
        if kind == "r9-r7" and not (node.discharge <= dropped_leaves):
            raise StaleRedex("discharged hypotheses survive the reduction")
        new = Step("bot-intuitionistic", node.context, node.conclusion, (src,))
        return replace_at(derivation, redex.path, new)

    if kind == "absurd-atomize":
        shape = _match_atomize(node)
        if shape is None:
            raise StaleRedex(kind)
        new = _atomize(node, derivation)
        return replace_at(derivation, redex.path, new)

    if kind in ("r13-r14", "r14-r13", "r16-r15"):
        inner = node.premises[0] if node.premises else None
        if not isinstance(inner, Step) or not inner.premises:
            raise StaleRedex(kind)
        start = inner.premises[0]
        if concl(start) != node.conclusion or start.context != node.context:
            raise StaleRedex(kind)
        return replace_at(derivation, redex.path, start)

    if kind == "r15-r16":
        if not _match_univ_roundtrip(node, "w-univ-intro"):
            raise StaleRedex(kind)
        start = node.premises[0].premises[0]
        u, v = start.context[-1], node.context[-1]
        new = start if u == v else _rename(start, u, v, derivation)
        return replace_at(derivation, redex.path, new)

    if kind == "r21-r22":
        if not _match_wildcard_roundtrip(node):
            raise StaleRedex(kind)
        start = _wildcard_main(node).premises[0]
        n, m = start.context[-1], node.context[-1]
        new = start if n == m else _rename(start, n, m, derivation)
        return replace_at(derivation, redex.path, new)

    if kind == "r22-r21":
        main = node.premises[0]
        start = _wildcard_main(main)
        if start is None or concl(start) != node.conclusion or \
                start.context != node.context:
            raise StaleRedex(kind)
        return replace_at(derivation, redex.path, start)

    if kind in ("r17-r19", "r18-r20"):
        intro_rule = "w-exist-intro" if kind == "r17-r19" else "n-exist-intro"
        shape = None if kind == "r17-r19" else "main"
        match = _match_exist_red(node, intro_rule, shape)
        if match is None:
            raise StaleRedex(kind)
        major_idx, minor_idx = match
        major, minor = node.premises[major_idx], node.premises[minor_idx]
        start = _intro_source(major, shape)
        if not node.discharge:
            return replace_at(derivation, redex.path, minor)
        hyps = [n for _, n in iter_steps(minor)
                if isinstance(n, Hyp) and n.id in node.discharge]
        v = hyps[0].context[-1]
        u = start.context[-1]
        body = minor
        if u != v:
            taken = derivation_var_names(derivation)
            w_lab = wvar(_fresh_name(taken, True)) if u.kind == WVAR \
                else nvar(_fresh_name(taken, False))
            body = substitute_derivation(body, u, w_lab)
            body = substitute_derivation(body, v, u)
        new = replace_hyp_leaves(body, node.discharge, lambda h: start)
        return replace_at(derivation, redex.path, new)

    if kind in _CYCLE_RULES.values():
        rel = _match_cycle(node)
        if rel is None:
            raise StaleRedex(kind)
        return replace_at(derivation, redex.path, node_at(node, rel))

    raise ValueError(f"unknown redex kind {kind!r}")


def _rename(root: Node, old: Label, new: Label, whole: Node) -> Node:
    """Rename ``old`` to ``new`` inside ``root``; when ``new`` already
    occurs there it is first moved out of the way."""
    if new.name in derivation_var_names(root):
        taken = derivation_var_names(whole) | {new.name}
        spare = wvar(_fresh_name(taken, True)) if new.kind == WVAR \
            else nvar(_fresh_name(taken, False))
        root = substitute_derivation(root, new, spare)
    return substitute_derivation(root, old, new)


def _atomize(node: Step, whole: Node) -> Step:
    """Push a classical-absurdity application on a conjunction or an
    implication one connective inward, following the standard rewrite."""
    ctx = node.context
    bot = _bot_for_ctx(ctx)
    gamma = node.conclusion
    next_id = itertools.count(_max_hyp_id(whole) + 1)

    def derive_negation(contradict: Callable[[Hyp], Step]) -> Callable[[Hyp], Node]:
        # rebuilds each discharged negation leaf from the local case data
        def make(leaf: Hyp) -> Node:
            hyp_gamma = Hyp(next(next_id), ctx, gamma)
            return Step("imp-intro", ctx, leaf.formula,
                        (contradict(hyp_gamma),), frozenset({hyp_gamma.id}))
        return make

    if isinstance(gamma, And):
        def half(which: str, part: Formula) -> Step:
            neg = Hyp(next(next_id), ctx, Not(part))

            def contradict(hyp_gamma: Hyp) -> Step:
                proj = Step(f"and-elim-{which}", ctx, part, (hyp_gamma,))
                return Step("imp-elim", ctx, bot, (proj, neg))

            body = replace_hyp_leaves(node.premises[0], node.discharge,
                                      derive_negation(contradict))
            return Step("bot-classical", ctx, part, (body,),
                        frozenset({neg.id}))

        return Step("and-intro", ctx, gamma,
                    (half("l", gamma.left), half("r", gamma.right)))

    assert isinstance(gamma, Implies)
    hyp_a = Hyp(next(next_id), ctx, gamma.left)
    neg_b = Hyp(next(next_id), ctx, Not(gamma.right))

    def contradict(hyp_gamma: Hyp) -> Step:
        mp = Step("imp-elim", ctx, gamma.right, (hyp_a, hyp_gamma))
        return Step("imp-elim", ctx, bot, (mp, neg_b))

    body = replace_hyp_leaves(node.premises[0], node.discharge,
                              derive_negation(contradict))
    s7 = Step("bot-classical", ctx, gamma.right, (body,),
              frozenset({neg_b.id}))
    return Step("imp-intro", ctx, gamma, (s7,), frozenset({hyp_a.id}))


# ---------------------------------------------------------------------------
# driver

@dataclass
class ReductionLog:
    steps: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)


def normalize(derivation: Node, budget: int = 10_000,
              log: ReductionLog | None = None) -> Node:
    """Reduce until no redex remains: highest-rank redexes first, the
    uppermost-leftmost among them."""
    current = derivation
    for _ in range(budget):
        redexes = find_redexes(current)
        if not redexes:
            return current
        best = max(redexes,
                   key=lambda r: (r.rank, len(r.path),
                                  tuple(-i for i in r.path)))
        if log is not None:
            log.steps.append((best.kind, best.path))
        current = reduce_redex(current, best)
    raise NormalizationBudget(f"no normal form within {budget} reductions")

"""Derivation checking for the labelled natural-deduction calculus.

A derivation is a tree of steps.  Every step carries a context (a label
stack); its conclusion must fit that context.  Hypotheses are numbered
leaves; discharge is by explicit id, so syntactically equal assumptions
in different branches stay distinct.

Negation is primitive in the language but the calculus manipulates it
through the classical equivalence with implication-to-absurdity:
implication introduction may conclude ``~a`` from a refutation of ``a``,
and modus ponens accepts ``~a`` as the major premise against ``a``,
concluding the absurdity constant of the context's sort.  The bundled
derivations require exactly this reading.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

from .rules import Profile, UnknownRule, required_profile, resolve_rule
from .syntax import (
    And, Bot, BOT_N, BOT_W, Contains, Context, Formula, Implies,
    Inside, Label, Labeled, Not, Or, Sort, Top, TOP_N, TOP_W,
    context_sort, context_variables, expand_comparisons, fits,
    formula_variables, is_well_sorted, nvar, parity_ok, wvar,
    NALL, NSOME, NVAR, WALL, WSOME, WVAR, N_ALL, N_SOME, W_ALL, W_SOME,
)

expand_sugar = expand_comparisons


@dataclass(frozen=True)
class Hyp:
    id: int
    context: Context
    formula: Formula


@dataclass(frozen=True)
class Step:
    rule: Union[int, str]
    context: Context
    conclusion: Formula
    premises: tuple["Node", ...] = ()
    discharge: frozenset[int] = frozenset()


Node = Union[Hyp, Step]


def concl(node: Node) -> Formula:
    return node.formula if isinstance(node, Hyp) else node.conclusion


@dataclass(frozen=True)
class Diagnostic:
    path: tuple[int, ...]
    rule: str
    message: str

    def __str__(self):
        where = ".".join(map(str, self.path)) or "root"
        return f"[{where}] {self.rule}: {self.message}"


@dataclass
class CheckReport:
    ok: bool
    diagnostics: list[Diagnostic]
    open_hypotheses: list[Hyp]
    contexts: list[Context] = field(default_factory=list)

    def to_json(self) -> dict:
        from .parser import render_context, render_formula
        return {
            "ok": self.ok,
            "diagnostics": [
                {"path": list(d.path), "rule": d.rule, "message": d.message}
                for d in self.diagnostics
            ],
            "open_hypotheses": [
                {"id": h.id, "context": render_context(h.context),
                 "formula": render_formula(h.formula)}
                for h in self.open_hypotheses
            ],
        }


# ---------------------------------------------------------------------------
# helpers

def _bot_for(ctx: Context) -> Bot:
    # the absurdity constant that fits the context
    return BOT_N if context_sort(ctx) is Sort.W else BOT_W


def _top_for(ctx: Context) -> Top:
    return TOP_N if context_sort(ctx) is Sort.W else TOP_W


def _has_existential(ctx: Context) -> bool:
    return any(lab.is_existential() for lab in ctx)


def _has_universal(ctx: Context) -> bool:
    return any(lab.is_universal() for lab in ctx)


def _fmt(f: Formula) -> str:
    from .parser import render_formula
    return render_formula(f)


def _fmt_ctx(ctx: Context) -> str:
    from .parser import render_context
    return render_context(ctx)


def _as_implication(f: Formula) -> tuple[Formula, Formula | None] | None:
    """View ``f`` as an implication: ``a -> b`` gives (a, b); ``~a`` gives
    (a, None) meaning the consequent is the contextual absurdity."""
    if isinstance(f, Implies):
        return f.left, f.right
    if isinstance(f, Not):
        return f.body, None
    return None


class _StepChecker:
    """Checks one step; accumulates diagnostics through ``fail``."""

    def __init__(self, report: "_Run", step: Step, path: tuple[int, ...],
                 opens: list[dict[int, Hyp]], rule: str):
        self.run = report
        self.step = step
        self.path = path
        self.opens = opens
        self.rule = rule
        self.failed = False

    def fail(self, message: str):
        self.failed = True
        self.run.diag(self.path, self.rule, message)

    def restriction(self, letter: str, message: str):
        self.fail(f"restriction ({letter}): {message}")

    # discharge ------------------------------------------------------------

    def discharged(self) -> dict[int, tuple[int, Hyp]]:
        """Map each discharged id to (premise index, leaf), checking that
        it is open in exactly one premise subtree."""
        out: dict[int, tuple[int, Hyp]] = {}
        for hid in sorted(self.step.discharge):
            homes = [i for i, o in enumerate(self.opens) if hid in o]
            if not homes:
                self.fail(f"discharge: hypothesis {hid} is not open above this step")
            elif len(homes) > 1:
                self.fail(f"discharge: hypothesis {hid} occurs in more than one "
                          "premise branch")
            else:
                out[hid] = (homes[0], self.opens[homes[0]][hid])
        return out

    def no_discharge(self):
        if self.step.discharge:
            self.fail("this rule discharges no hypotheses")

    def expect_discharge_shape(self, disc: dict[int, tuple[int, Hyp]],
                               premise_index: int, formulas: tuple[Formula, ...],
                               ctx: Context):
        """Every discharged id homed at ``premise_index`` must have one of
        the given shapes; ids homed elsewhere are rejected."""
        for hid, (home, hyp) in disc.items():
            if home != premise_index:
                self.fail(f"discharge: hypothesis {hid} lives in premise "
                          f"{home}, not in the subderivation this rule closes")
                continue
            if hyp.context != ctx or all(hyp.formula != f for f in formulas):
                want = " or ".join(_fmt(f) for f in formulas)
                self.fail(f"discharge: hypothesis {hid} is "
                          f"{_fmt(hyp.formula)} {_fmt_ctx(hyp.context)}, "
                          f"expected {want} {_fmt_ctx(ctx)}")

    # freshness -------------------------------------------------------------

    def fresh_for_hyps(self, var: Label, hyps: list[Hyp],
                       letters: tuple[str, str]):
        b, c = letters
        for h in hyps:
            if var in formula_variables(h.formula):
                self.restriction(b, f"{var.name} must not occur in any "
                                 f"hypothesis on which the premise depends "
                                 f"(hypothesis {h.id})")
            if var in context_variables(h.context):
                self.restriction(c, f"{var.name} must not occur in the context "
                                 f"of any hypothesis on which the premise "
                                 f"depends (hypothesis {h.id})")


class _Run:
    def __init__(self, profile: Profile):
        self.profile = profile
        self.diagnostics: list[Diagnostic] = []
        self.contexts: list[Context] = []
        self.leaves: dict[int, Hyp] = {}

    def diag(self, path: tuple[int, ...], rule: str, message: str):
        self.diagnostics.append(Diagnostic(path, rule, message))


def check(derivation: Node, profile: Profile = Profile.V) -> CheckReport:
    """Validate every step of ``derivation`` under ``profile``."""
    run = _Run(profile)
    open_at_root = _visit(run, derivation, ())
    report = CheckReport(
        ok=not run.diagnostics,
        diagnostics=run.diagnostics,
        open_hypotheses=sorted(open_at_root.values(), key=lambda h: h.id),
        contexts=run.contexts,
    )
    return report


def _visit(run: _Run, node: Node, path: tuple[int, ...]) -> dict[int, Hyp]:
    run.contexts.append(node.context)
    if not parity_ok(node.context):
        run.diag(path, "context", "labels must alternate sort from an "
                 "N-sort bottom (odd size iff N-sort scope)")
    formula = concl(node)
    sorted_ok = is_well_sorted(formula)
    if not sorted_ok:
        run.diag(path, "formula", f"ill-sorted formula {_fmt(formula)}")
    elif not fits(formula, node.context):
        run.diag(path, "fitting",
                 f"{_fmt(formula)} does not fit {_fmt_ctx(node.context)}")

    if isinstance(node, Hyp):
        seen = run.leaves.get(node.id)
        if seen is None:
            run.leaves[node.id] = node
        elif (seen.formula, seen.context) != (node.formula, node.context):
            run.diag(path, "hypothesis",
                     f"hypothesis {node.id} occurs with two different shapes")
        return {node.id: node}

    opens = [_visit(run, p, path + (i,)) for i, p in enumerate(node.premises)]

    try:
        rule = resolve_rule(node.rule)
    except UnknownRule as exc:
        run.diag(path, str(node.rule), str(exc))
        return _merge_opens(opens, frozenset())

    need = required_profile(rule)
    if not run.profile.includes(need):
        run.diag(path, rule, f"rule not in profile {run.profile.name} "
                 f"(needs {need.name})")
        return _merge_opens(opens, node.discharge)

    if sorted_ok:
        sc = _StepChecker(run, node, path, opens, rule)
        _HANDLERS[rule](sc)
    return _merge_opens(opens, node.discharge)


def _merge_opens(opens: list[dict[int, Hyp]],
                 discharge: frozenset[int]) -> dict[int, Hyp]:
    merged: dict[int, Hyp] = {}
    for o in opens:
        merged.update(o)
    return {hid: h for hid, h in merged.items() if hid not in discharge}


# ---------------------------------------------------------------------------
# per-rule checking

def _arity(sc: _StepChecker, *counts: int) -> bool:
    if len(sc.step.premises) not in counts:
        want = " or ".join(map(str, counts))
        sc.fail(f"schema: expected {want} premises, found {len(sc.step.premises)}")
        return False
    return True


def _fits_or_restriction(sc: _StepChecker, letter: str, f: Formula, ctx: Context,
                         what: str):
    if not fits(f, ctx):
        sc.restriction(letter, f"{what} {_fmt(f)} must fit into the context "
                       f"{_fmt_ctx(ctx)}")


def _same_context(sc: _StepChecker, premise: Node):
    if premise.context != sc.step.context:
        sc.fail(f"schema: premise context {_fmt_ctx(premise.context)} differs "
                f"from the step context {_fmt_ctx(sc.step.context)}")


def _check_and_elim(sc: _StepChecker, keep_left: bool):
    sc.no_discharge()
    if not _arity(sc, 1):
        return
    p = sc.step.premises[0]
    pf = concl(p)
    _same_context(sc, p)
    if not isinstance(pf, And):
        sc.fail(f"schema: premise must be a conjunction, found {_fmt(pf)}")
        return
    kept = pf.left if keep_left else pf.right
    if kept != sc.step.conclusion:
        sc.fail(f"schema: conclusion must be the {'left' if keep_left else 'right'} "
                f"conjunct {_fmt(kept)}")
    _fits_or_restriction(sc, "a", pf.left, sc.step.context, "left conjunct")
    _fits_or_restriction(sc, "a", pf.right, sc.step.context, "right conjunct")
    if _has_existential(sc.step.context):
        sc.restriction("b", "the context has no existential quantifier")


def _check_and_intro(sc: _StepChecker):
    sc.no_discharge()
    if not _arity(sc, 2):
        return
    c = sc.step.conclusion
    if not isinstance(c, And):
        sc.fail("schema: conclusion must be a conjunction")
        return
    p1, p2 = sc.step.premises
    _same_context(sc, p1)
    _same_context(sc, p2)
    if concl(p1) != c.left or concl(p2) != c.right:
        sc.fail("schema: premises must derive the left and right conjunct in order")
    _fits_or_restriction(sc, "a", c.left, sc.step.context, "left conjunct")
    _fits_or_restriction(sc, "a", c.right, sc.step.context, "right conjunct")
    if _has_existential(sc.step.context):
        sc.restriction("b", "the context has no existential quantifier")


def _check_or_intro(sc: _StepChecker, from_left: bool):
    sc.no_discharge()
    if not _arity(sc, 1):
        return
    c = sc.step.conclusion
    if not isinstance(c, Or):
        sc.fail("schema: conclusion must be a disjunction")
        return
    p = sc.step.premises[0]
    _same_context(sc, p)
    wanted = c.left if from_left else c.right
    if concl(p) != wanted:
        sc.fail(f"schema: premise must be the {'left' if from_left else 'right'} "
                f"disjunct {_fmt(wanted)}")
    _fits_or_restriction(sc, "a", c.left, sc.step.context, "left disjunct")
    _fits_or_restriction(sc, "a", c.right, sc.step.context, "right disjunct")
    if _has_universal(sc.step.context):
        sc.restriction("b", "the context has no universal quantifier")


def _check_or_elim(sc: _StepChecker):
    if not _arity(sc, 3):
        sc.discharged()
        return
    major, m1, m2 = sc.step.premises
    mf = concl(major)
    if not isinstance(mf, Or):
        sc.fail(f"schema: first premise must be a disjunction, found {_fmt(mf)}")
        return
    delta = major.context
    for minor in (m1, m2):
        if concl(minor) != sc.step.conclusion or minor.context != sc.step.context:
            sc.fail("schema: both case subderivations must conclude the step's "
                    "formula in the step's context")
    _fits_or_restriction(sc, "a", mf.left, delta, "left disjunct")
    _fits_or_restriction(sc, "a", mf.right, delta, "right disjunct")
    if _has_universal(delta):
        sc.restriction("b", "the context has no universal quantifier")
    disc = sc.discharged()
    for hid, (home, hyp) in disc.items():
        if home == 1:
            sc.expect_discharge_shape({hid: (home, hyp)}, 1, (mf.left,), delta)
        elif home == 2:
            sc.expect_discharge_shape({hid: (home, hyp)}, 2, (mf.right,), delta)
        else:
            sc.fail(f"discharge: hypothesis {hid} must live in a case branch")


def _check_bot_classical(sc: _StepChecker):
    if not _arity(sc, 1):
        sc.discharged()
        return
    p = sc.step.premises[0]
    _same_context(sc, p)
    bot = _bot_for(sc.step.context)
    if concl(p) != bot:
        sc.fail(f"schema: premise must be {_fmt(bot)}")
    _fits_or_restriction(sc, "a", sc.step.conclusion, sc.step.context, "conclusion")
    _fits_or_restriction(sc, "a", bot, sc.step.context, "the absurdity constant")
    negated = (Not(sc.step.conclusion), Implies(sc.step.conclusion, bot))
    sc.expect_discharge_shape(sc.discharged(), 0, negated, sc.step.context)


def _check_bot_intuitionistic(sc: _StepChecker):
    sc.no_discharge()
    if not _arity(sc, 1):
        return
    p = sc.step.premises[0]
    _same_context(sc, p)
    bot = _bot_for(sc.step.context)
    if concl(p) != bot:
        sc.fail(f"schema: premise must be {_fmt(bot)}")
    _fits_or_restriction(sc, "a", sc.step.conclusion, sc.step.context, "conclusion")
    _fits_or_restriction(sc, "a", bot, sc.step.context, "the absurdity constant")


def _check_absurd_expansion(sc: _StepChecker):
    sc.no_discharge()
    if not _arity(sc, 1):
        return
    p = sc.step.premises[0]
    delta = p.context
    if sc.step.context != ():
        sc.fail("schema: the conclusion context must be empty")
    if sc.step.conclusion != BOT_N:
        sc.fail("schema: the conclusion must be Fn")
    if concl(p) != _bot_for(delta):
        sc.restriction("b", "the absurdity constant must fit into the context")
    if any(lab.kind == NALL for lab in delta) and not sc.run.profile.includes(Profile.VN):
        sc.restriction("a", "the context has no occurrence of the universal "
                       "neighbourhood quantifier")
    if not delta:
        sc.restriction("c", "the context must be non-empty")


def _check_hyp_injection(sc: _StepChecker):
    sc.no_discharge()
    if not _arity(sc, 1):
        return
    p = sc.step.premises[0]
    if not isinstance(p, Hyp):
        sc.fail("schema: the premise must be a hypothesis")
        return
    if p.formula != sc.step.conclusion:
        sc.fail("schema: the conclusion must repeat the hypothesis")
    _fits_or_restriction(sc, "a", sc.step.conclusion, sc.step.context,
                         "the hypothesis")


def _check_imp_intro(sc: _StepChecker):
    if not _arity(sc, 1):
        sc.discharged()
        return
    p = sc.step.premises[0]
    _same_context(sc, p)
    view = _as_implication(sc.step.conclusion)
    if view is None:
        sc.fail("schema: conclusion must be an implication or a negation")
        return
    antecedent, consequent = view
    minor = consequent if consequent is not None else _bot_for(sc.step.context)
    if concl(p) != minor:
        sc.fail(f"schema: premise must be {_fmt(minor)}")
    _fits_or_restriction(sc, "a", antecedent, sc.step.context, "antecedent")
    _fits_or_restriction(sc, "a", minor, sc.step.context, "consequent")
    sc.expect_discharge_shape(sc.discharged(), 0, (antecedent,), sc.step.context)


def _check_imp_elim(sc: _StepChecker):
    sc.no_discharge()
    if not _arity(sc, 2):
        return

    def attempt(minor: Node, major: Node):
        if minor.context != sc.step.context or major.context != sc.step.context:
            return "schema: premise contexts must equal the step context", None
        view = _as_implication(concl(major))
        if view is None:
            return (f"schema: major premise must be an implication or negation, "
                    f"found {_fmt(concl(major))}"), None
        antecedent, consequent = view
        expected = consequent if consequent is not None else _bot_for(sc.step.context)
        if concl(minor) != antecedent:
            return f"schema: minor premise must be the antecedent {_fmt(antecedent)}", None
        if sc.step.conclusion != expected:
            return f"schema: conclusion must be {_fmt(expected)}", None
        return None, (antecedent, expected)

    p1, p2 = sc.step.premises
    err, view = attempt(p1, p2)
    if err is not None:
        err2, view2 = attempt(p2, p1)
        if err2 is None:
            err, view = None, view2
    if err is not None:
        sc.fail(err)
        return
    antecedent, consequent = view
    _fits_or_restriction(sc, "a", antecedent, sc.step.context, "antecedent")
    _fits_or_restriction(sc, "a", consequent, sc.step.context, "consequent")
    if _has_existential(sc.step.context):
        sc.restriction("b", "the context has no existential quantifier")


def _check_ctx_intro(sc: _StepChecker):
    sc.no_discharge()
    if not _arity(sc, 1):
        return
    p = sc.step.premises[0]
    pf = concl(p)
    if not isinstance(pf, Labeled):
        sc.fail("schema: premise must carry at least one label")
        return
    if sc.step.context != p.context + (pf.label,):
        sc.fail("schema: the step context must extend the premise context "
                "with the premise's index")
    if sc.step.conclusion != pf.body:
        sc.fail("schema: conclusion must be the premise without its index")
    _fits_or_restriction(sc, "a", pf, p.context, "premise")


def _check_ctx_elim(sc: _StepChecker):
    sc.no_discharge()
    if not _arity(sc, 1):
        return
    p = sc.step.premises[0]
    if not p.context:
        sc.fail("schema: premise context must be non-empty")
        return
    expected = Labeled(concl(p), p.context[-1])
    if sc.step.conclusion != expected or sc.step.context != p.context[:-1]:
        sc.fail("schema: conclusion must move the premise's scope into the "
                "formula's attribute")
        return
    _fits_or_restriction(sc, "a", concl(p), p.context, "premise")
    _fits_or_restriction(sc, "a", expected, sc.step.context, "conclusion")


def _scope_swap(sc: _StepChecker, want_premise: Callable[[Label], bool],
                premise_desc: str, want_concl: Callable[[Label], bool],
                concl_desc: str) -> tuple[Node, Label, Label] | None:
    """Shared schema for rules that only change the top of the context."""
    if not _arity(sc, 1):
        return None
    p = sc.step.premises[0]
    if not p.context or not want_premise(p.context[-1]):
        sc.fail(f"schema: premise scope must be {premise_desc}")
        return None
    if not sc.step.context or not want_concl(sc.step.context[-1]):
        sc.fail(f"schema: conclusion scope must be {concl_desc}")
        return None
    if p.context[:-1] != sc.step.context[:-1]:
        sc.fail("schema: premise and conclusion contexts must agree below "
                "the scope")
        return None
    if concl(p) != sc.step.conclusion:
        sc.fail("schema: the formula must not change")
        return None
    _fits_or_restriction(sc, "a", sc.step.conclusion, sc.step.context,
                         "the formula")
    return p, p.context[-1], sc.step.context[-1]


def _dep_hyps(sc: _StepChecker, premise_index: int,
              exclude: frozenset[int]) -> list[Hyp]:
    return [h for hid, h in sorted(sc.opens[premise_index].items())
            if hid not in exclude]


def _check_w_univ_intro(sc: _StepChecker):
    sc.no_discharge()
    got = _scope_swap(sc, lambda l: l.kind == WVAR, "a world variable",
                      lambda l: l.kind == WALL, "the universal world quantifier")
    if got is None:
        return
    _, u, _ = got
    sc.fresh_for_hyps(u, _dep_hyps(sc, 0, frozenset()), ("b", "c"))


def _check_w_univ_elim(sc: _StepChecker):
    sc.no_discharge()
    got = _scope_swap(sc, lambda l: l.kind == WALL, "the universal world quantifier",
                      lambda l: l.kind == WVAR, "a world variable")
    if got is None:
        return
    _, _, u = got
    if u in formula_variables(sc.step.conclusion):
        sc.restriction("b", f"{u.name} must not occur in the formula")
    if u in context_variables(sc.step.context[:-1]):
        sc.restriction("b", f"{u.name} must not occur in the context")


def _check_w_exist_intro(sc: _StepChecker):
    sc.no_discharge()
    _scope_swap(sc, lambda l: l.kind == WVAR, "a world variable",
                lambda l: l.kind == WSOME, "the existential world quantifier")


def _exist_elim(sc: _StepChecker, quant_kind: str, var_kind: str, name: str):
    """Rules eliminating an existential scope: a major premise under the
    quantifier and a subderivation from a variable-scoped hypothesis."""
    if not _arity(sc, 2):
        sc.discharged()
        return
    disc = sc.discharged()

    def attempt(major: Node, minor: Node, minor_index: int,
                record: bool) -> bool:
        ok = True

        def bad(msg: str):
            nonlocal ok
            ok = False
            if record:
                sc.fail(msg)

        if not major.context or major.context[-1].kind != quant_kind:
            bad(f"schema: major premise scope must be the existential {name} "
                "quantifier")
            return ok
        delta = major.context[:-1]
        if concl(minor) != sc.step.conclusion or minor.context != sc.step.context:
            bad("schema: the subderivation must conclude the step's formula "
                "in the step's context")
        hyp_formula = concl(major)
        if record:
            _fits_or_restriction(sc, "a", hyp_formula, major.context,
                                 "the major premise")

        var: Label | None = None
        for hid, (home, hyp) in sorted(disc.items()):
            if home != minor_index:
                bad(f"discharge: hypothesis {hid} must live in the "
                    "subderivation")
                continue
            shape_ok = (hyp.formula == hyp_formula and len(hyp.context) > 0
                        and hyp.context[:-1] == delta
                        and hyp.context[-1].kind == var_kind)
            if not shape_ok:
                bad(f"discharge: hypothesis {hid} must assume "
                    f"{_fmt(hyp_formula)} under a fresh {name} variable "
                    f"above {_fmt_ctx(delta)}")
                continue
            if var is None:
                var = hyp.context[-1]
            elif var != hyp.context[-1]:
                bad("discharge: all discharged hypotheses must use the same "
                    "variable")
        if var is not None and record:
            vname = var.name
            if var in formula_variables(hyp_formula):
                sc.restriction("b", f"{vname} must not occur in the major "
                               "premise's formula")
            if var in context_variables(delta):
                sc.restriction("b", f"{vname} must not occur in the context")
            if var in context_variables(sc.step.context):
                sc.restriction("b", f"{vname} must not occur in the "
                               "conclusion's context")
            remaining = _dep_hyps(sc, minor_index, sc.step.discharge)
            sc.fresh_for_hyps(var, remaining, ("b", "c"))
        return ok

    p1, p2 = sc.step.premises
    if attempt(p1, p2, 1, record=False):
        attempt(p1, p2, 1, record=True)
    elif attempt(p2, p1, 0, record=False):
        attempt(p2, p1, 0, record=True)
    else:
        attempt(p1, p2, 1, record=True)


def _check_w_exist_elim(sc: _StepChecker):
    _exist_elim(sc, WSOME, WVAR, "world")


def _check_n_exist_elim(sc: _StepChecker):
    _exist_elim(sc, NSOME, NVAR, "neighbourhood")


def _check_n_exist_intro(sc: _StepChecker):
    sc.no_discharge()
    single = sc.run.profile.includes(Profile.VN)
    if not _arity(sc, *((1, 2) if single else (2,))):
        return
    if not sc.step.context or sc.step.context[-1].kind != NSOME:
        sc.fail("schema: conclusion scope must be the existential "
                "neighbourhood quantifier")
        return
    delta = sc.step.context[:-1]

    def is_main(p: Node) -> bool:
        return (concl(p) == sc.step.conclusion and len(p.context) > 0
                and p.context[:-1] == delta and p.context[-1].kind == NVAR)

    def is_witness(p: Node) -> bool:
        return p.context == sc.step.context

    if len(sc.step.premises) == 1:
        if not is_main(sc.step.premises[0]):
            sc.fail("schema: premise must conclude the formula under a named "
                    "neighbourhood")
        _fits_or_restriction(sc, "a", sc.step.conclusion, sc.step.context,
                             "the formula")
        return
    p1, p2 = sc.step.premises
    if not ((is_main(p1) and is_witness(p2)) or (is_main(p2) and is_witness(p1))):
        sc.fail("schema: one premise must conclude the formula under a named "
                "neighbourhood, the other anything under the existential scope")
    _fits_or_restriction(sc, "a", sc.step.conclusion, sc.step.context,
                         "the formula")


def _check_n_univ_intro(sc: _StepChecker):
    sc.no_discharge()
    got = _scope_swap(sc, lambda l: l.kind == NVAR, "a neighbourhood variable",
                      lambda l: l.kind == NALL,
                      "the universal neighbourhood quantifier")
    if got is None:
        return
    _, n, _ = got
    sc.fresh_for_hyps(n, _dep_hyps(sc, 0, frozenset()), ("b", "c"))


def _check_n_univ_wildcard(sc: _StepChecker):
    sc.no_discharge()
    single = sc.run.profile.includes(Profile.VN)
    if not _arity(sc, *((1, 2) if single else (2,))):
        return
    if not sc.step.context or sc.step.context[-1].kind != NVAR:
        sc.fail("schema: conclusion scope must be a neighbourhood variable")
        return
    delta = sc.step.context[:-1]

    def is_main(p: Node) -> bool:
        return (concl(p) == sc.step.conclusion
                and p.context == delta + (N_ALL,))

    def is_witness(p: Node) -> bool:
        return p.context == sc.step.context

    if len(sc.step.premises) == 1:
        if not is_main(sc.step.premises[0]):
            sc.fail("schema: premise must conclude the formula under the "
                    "universal neighbourhood quantifier")
    else:
        p1, p2 = sc.step.premises
        if not ((is_main(p1) and is_witness(p2)) or
                (is_main(p2) and is_witness(p1))):
            sc.fail("schema: one premise must conclude the formula under the "
                    "universal quantifier, the other anything under the "
                    "named neighbourhood")
    _fits_or_restriction(sc, "a", sc.step.conclusion, sc.step.context,
                         "the formula")


def _propagation(sc: _StepChecker, quant: Label, atom_type, name: str):
    """Rules moving a quantified payload between named neighbourhoods via
    an inclusion fact."""
    sc.no_discharge()
    if not _arity(sc, 2):
        return
    if not sc.step.context or sc.step.context[-1].kind != NVAR:
        sc.fail("schema: conclusion scope must be a neighbourhood variable")
        return
    target = sc.step.context[-1]
    delta = sc.step.context[:-1]
    cf = sc.step.conclusion
    if not (isinstance(cf, Labeled) and cf.label == quant):
        sc.fail(f"schema: conclusion must carry the {name} quantifier as index")
        return

    def attempt(payload: Node, incl: Node, record: bool) -> bool:
        ok = True

        def bad(msg: str):
            nonlocal ok
            ok = False
            if record:
                sc.fail(msg)

        if not (payload.context and payload.context[-1].kind == NVAR
                and payload.context[:-1] == delta):
            bad("schema: the payload premise must sit under a named "
                "neighbourhood in the same context")
            return ok
        source = payload.context[-1]
        if concl(payload) != cf:
            bad("schema: the payload premise must conclude the step's formula")
        want = atom_type(source.name)
        if concl(incl) != want or incl.context != sc.step.context:
            bad(f"schema: the inclusion premise must be {_fmt(want)} "
                f"{_fmt_ctx(sc.step.context)}")
        if record:
            _fits_or_restriction(sc, "a", cf, payload.context, "the payload")
            _fits_or_restriction(sc, "a", want, sc.step.context,
                                 "the inclusion fact")
        return ok

    p1, p2 = sc.step.premises
    if attempt(p1, p2, record=False):
        attempt(p1, p2, record=True)
    elif attempt(p2, p1, record=False):
        attempt(p2, p1, record=True)
    else:
        attempt(p1, p2, record=True)


def _check_w_exist_prop(sc: _StepChecker):
    _propagation(sc, W_SOME, Contains, "existential world")


def _check_w_univ_prop(sc: _StepChecker):
    _propagation(sc, W_ALL, Inside, "universal world")


def _transitivity(sc: _StepChecker, atom_type):
    sc.no_discharge()
    if not _arity(sc, 2):
        return
    if not sc.step.context or sc.step.context[-1].kind != NVAR:
        sc.fail("schema: conclusion scope must be a neighbourhood variable")
        return
    delta = sc.step.context[:-1]
    cf = sc.step.conclusion
    if not isinstance(cf, atom_type):
        sc.fail("schema: conclusion must be a neighbourhood-inclusion atom")
        return

    def attempt(first: Node, second: Node, record: bool) -> bool:
        ok = True

        def bad(msg: str):
            nonlocal ok
            ok = False
            if record:
                sc.fail(msg)

        ff = concl(first)
        if first.context != sc.step.context:
            bad("schema: the first premise must share the step's context")
        if not isinstance(ff, atom_type):
            bad("schema: the first premise must be a neighbourhood-inclusion atom")
            return ok
        middle = ff.var
        if second.context != delta + (nvar(middle),):
            bad(f"schema: the second premise must sit under {middle}")
        if concl(second) != cf:
            bad("schema: the second premise must conclude the step's formula")
        if record:
            _fits_or_restriction(sc, "a", ff, first.context, "the first premise")
            _fits_or_restriction(sc, "a", cf, sc.step.context, "the conclusion")
        return ok

    p1, p2 = sc.step.premises
    if attempt(p1, p2, record=False):
        attempt(p1, p2, record=True)
    elif attempt(p2, p1, record=False):
        attempt(p2, p1, record=True)
    else:
        attempt(p1, p2, record=True)


def _check_trans_neg(sc: _StepChecker):
    _transitivity(sc, Contains)


def _check_trans_pos(sc: _StepChecker):
    _transitivity(sc, Inside)


def _total_order(sc: _StepChecker, mixed: bool, atom_type=None):
    """Case split over how two named neighbourhoods compare."""
    if not _arity(sc, 2):
        sc.discharged()
        return
    for p in sc.step.premises:
        if concl(p) != sc.step.conclusion or p.context != sc.step.context:
            sc.fail("schema: both case subderivations must conclude the "
                    "step's formula in the step's context")
    _fits_or_restriction(sc, "a", sc.step.conclusion, sc.step.context,
                         "the conclusion")
    disc = sc.discharged()
    shapes: dict[int, tuple] = {}
    for hid, (home, hyp) in sorted(disc.items()):
        want_incl = (Contains, Inside) if mixed else (atom_type,)
        if not (isinstance(hyp.formula, want_incl) and hyp.context
                and hyp.context[-1].kind == NVAR):
            sc.fail(f"discharge: hypothesis {hid} must be a neighbourhood-"
                    "inclusion assumption under a named neighbourhood")
            continue
        if home in shapes:
            sc.fail(f"discharge: hypothesis {hid} shares a case branch with "
                    "another discharged hypothesis")
            continue
        shapes[home] = (hyp.formula, hyp.context)
        _fits_or_restriction(sc, "a", hyp.formula, hyp.context,
                             "the case hypothesis")
    if len(shapes) == 2:
        (f1, c1), (f2, c2) = (shapes[h] for h in sorted(shapes))
        if c1[:-1] != c2[:-1]:
            sc.fail("discharge: the case hypotheses must share the context "
                    "below their scope")
        if mixed:
            if c1 != c2 or type(f1) is type(f2) or f1.var != f2.var or \
                    f1.var == c1[-1].name:
                sc.fail("discharge: the cases must compare one neighbourhood "
                        "against the scope from both sides")
        else:
            crossed = (f1.var == c2[-1].name and f2.var == c1[-1].name
                       and c1[-1] != c2[-1])
            if not crossed:
                sc.fail("discharge: the case hypotheses must swap the two "
                        "neighbourhoods")


def _check_total_neg(sc: _StepChecker):
    _total_order(sc, mixed=False, atom_type=Contains)


def _check_total_pos(sc: _StepChecker):
    _total_order(sc, mixed=False, atom_type=Inside)


def _check_total_mixed(sc: _StepChecker):
    _total_order(sc, mixed=True)


def _check_truth(sc: _StepChecker):
    sc.no_discharge()
    if not _arity(sc, 0):
        return
    if any(lab.kind == NSOME for lab in sc.step.context):
        sc.restriction("a", "the context has no occurrence of the existential "
                       "neighbourhood quantifier")
    if sc.step.conclusion != _top_for(sc.step.context):
        sc.restriction("b", "the truth constant must fit into the context")


def _profile_drop(sc: _StepChecker, suffix: tuple[Label, ...]):
    sc.no_discharge()
    if not _arity(sc, 1):
        return
    p = sc.step.premises[0]
    if p.context != sc.step.context + suffix:
        want = _fmt_ctx(sc.step.context + suffix)
        sc.fail(f"schema: premise context must be {want}")
    if concl(p) != sc.step.conclusion:
        sc.fail("schema: the formula must not change")
    _fits_or_restriction(sc, "a", sc.step.conclusion, sc.step.context,
                         "the formula")


def _check_vn_wildcard_drop(sc: _StepChecker):
    sc.no_discharge()
    got = _scope_swap(sc, lambda l: l.kind == NALL,
                      "the universal neighbourhood quantifier",
                      lambda l: l.kind == NVAR, "a neighbourhood variable")
    if got is None:
        return


_HANDLERS: dict[str, Callable[[_StepChecker], None]] = {
    "and-elim-l": lambda sc: _check_and_elim(sc, True),
    "and-elim-r": lambda sc: _check_and_elim(sc, False),
    "and-intro": _check_and_intro,
    "or-intro-l": lambda sc: _check_or_intro(sc, True),
    "or-elim": _check_or_elim,
    "or-intro-r": lambda sc: _check_or_intro(sc, False),
    "bot-classical": _check_bot_classical,
    "bot-intuitionistic": _check_bot_intuitionistic,
    "absurd-expansion": _check_absurd_expansion,
    "hyp-injection": _check_hyp_injection,
    "imp-intro": _check_imp_intro,
    "imp-elim": _check_imp_elim,
    "ctx-intro": _check_ctx_intro,
    "ctx-elim": _check_ctx_elim,
    "w-univ-intro": _check_w_univ_intro,
    "w-univ-elim": _check_w_univ_elim,
    "w-exist-intro": _check_w_exist_intro,
    "w-exist-elim": _check_w_exist_elim,
    "n-exist-intro": _check_n_exist_intro,
    "n-exist-elim": _check_n_exist_elim,
    "n-univ-intro": _check_n_univ_intro,
    "n-univ-wildcard": _check_n_univ_wildcard,
    "w-exist-prop": _check_w_exist_prop,
    "w-univ-prop": _check_w_univ_prop,
    "trans-incl-neg": _check_trans_neg,
    "trans-incl-pos": _check_trans_pos,
    "total-order-neg": _check_total_neg,
    "total-order-pos": _check_total_pos,
    "total-order-mixed": _check_total_mixed,
    "truth": _check_truth,
    "vn-wildcard-drop": _check_vn_wildcard_drop,
    "vt-reflexive": lambda sc: _profile_drop(sc, (N_ALL, W_ALL)),
    "vw-weak-center": lambda sc: _profile_drop(sc, (N_SOME, W_ALL)),
    "vc-center": lambda sc: _profile_drop(sc, (N_ALL, W_SOME)),
}


# ---------------------------------------------------------------------------
# lifting

class LiftError(ValueError):
    pass


def derivation_variables(node: Node) -> set[Label]:
    out = formula_variables(concl(node)) | context_variables(node.context)
    if isinstance(node, Step):
        for p in node.premises:
            out |= derivation_variables(p)
    return out


def lift(derivation: Node, suffix: Context | None = None,
         profile: Profile = Profile.V) -> Node:
    """Replay a closed derivation below ``suffix``: the suffix is placed
    under every context, so the conclusion reappears in ``suffix``.

    The suffix defaults to a fresh named neighbourhood and world.  Its
    variables must be fresh for the derivation, which must check without
    open hypotheses.
    """
    used = derivation_variables(derivation)
    if suffix is None:
        names = {v.name for v in used}
        n = next(f"L{i}" if i else "L" for i in range(len(names) + 1)
                 if (f"L{i}" if i else "L") not in names)
        u = next(f"l{i}" if i else "l" for i in range(len(names) + 1)
                 if (f"l{i}" if i else "l") not in names)
        suffix = (nvar(n), wvar(u))
    for lab in suffix:
        if lab.is_variable() and lab in used:
            raise LiftError(f"suffix variable {lab.name} already occurs in "
                            "the derivation")
    report = check(derivation, profile)
    if not report.ok:
        raise LiftError("only checked derivations can be lifted")
    if report.open_hypotheses:
        ids = [h.id for h in report.open_hypotheses]
        raise LiftError(f"derivation has open hypotheses {ids}")

    def relabel(node: Node) -> Node:
        ctx = suffix + node.context
        if isinstance(node, Hyp):
            return Hyp(node.id, ctx, node.formula)
        return Step(node.rule, ctx, node.conclusion,
                    tuple(relabel(p) for p in node.premises), node.discharge)

    return relabel(derivation)

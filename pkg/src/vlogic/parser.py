"""Concrete syntax: text for formulas and contexts, JSON for models and
derivations.

Formula grammar (ASCII surface):

    formula := or_expr ( '->' formula | '<=' or_expr )?
    or_expr := and_expr ( '|' and_expr )*
    and_expr := post ( '&' post )*
    post := neg ( '^{' label (',' label)* '}' )*
    neg := '~' neg | primary
    primary := atom | 'Tn' | 'Fn' | 'Tw' | 'Fw'
             | 'cont' '(' NVAR ')' | 'sub' '(' NVAR ')' | '(' formula ')'
    label := '@*' | '@+' | '*' | '+' | NVAR | WVAR

``->`` is right-associative and ``<=`` does not chain.  A postfix
attribute binds tighter than the binary connectives but attaches outside
``~``, so ``~p^{*}`` is the labelled negation (all worlds falsify p) and
``~(p^{*})`` the negated labelled formula.  Attribute lists append left
to right; the rightmost label is the index.

Contexts are written ``[l1,...,lk]`` with the rightmost label the scope.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any

from .syntax import (
    Atom, Bot, Cmp, Context, Contains, Formula, Implies, Inside, Label,
    Labeled, Not, And, Or, Sort, Top, classify, expand_comparisons, nvar,
    strip_attribute, wvar, N_ALL, N_SOME, W_ALL, W_SOME,
    NALL, NSOME, NVAR, WALL, WSOME, WVAR,
)
from . import model as _model
from . import checker as _checker


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{message} at {span.start}..{span.end}")
        self.span = span


class SchemaError(ValueError):
    """JSON document does not match the documented schema."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.json_path = path


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<cmp><=)
  | (?P<nall>@\*)
  | (?P<nsome>@\+)
  | (?P<caret>\^\{)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<sym>[()\[\]{},&|~*+])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, SourceSpan]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             SourceSpan(pos, pos + 1))
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            tokens.append((kind if kind != "sym" else value, value,
                           SourceSpan(m.start(), m.end())))
        pos = m.end()
    tokens.append(("eof", "", SourceSpan(len(text), len(text))))
    return tokens


_CONSTS = {"Tn": Top(Sort.N), "Fn": Bot(Sort.N),
           "Tw": Top(Sort.W), "Fw": Bot(Sort.W)}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def at(self, kind: str) -> bool:
        return self.peek()[0] == kind

    # formula levels -------------------------------------------------------

    def formula(self) -> Formula:
        left = self.or_expr()
        if self.at("arrow"):
            self.next()
            return Implies(left, self.formula())
        if self.at("cmp"):
            self.next()
            return Cmp(left, self.or_expr())
        return left

    def or_expr(self) -> Formula:
        f = self.and_expr()
        while self.at("|"):
            self.next()
            f = Or(f, self.and_expr())
        return f

    def and_expr(self) -> Formula:
        f = self.post()
        while self.at("&"):
            self.next()
            f = And(f, self.post())
        return f

    def post(self) -> Formula:
        f = self.neg()
        while self.at("caret"):
            self.next()
            for lab in self.label_list("}"):
                f = Labeled(f, lab)
        return f

    def neg(self) -> Formula:
        if self.at("~"):
            self.next()
            return Not(self.neg())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.next()
        kind, value, span = tok
        if kind == "(":
            f = self.formula()
            self.expect(")")
            return f
        if kind == "ident":
            if value in _CONSTS:
                return _CONSTS[value]
            if value in ("cont", "sub"):
                self.expect("(")
                name_tok = self.expect("ident")
                if not name_tok[1][0].isupper():
                    raise ParseError("neighbourhood variable expected", name_tok[2])
                self.expect(")")
                return Contains(name_tok[1]) if value == "cont" else Inside(name_tok[1])
            if value[0].islower():
                return Atom(value)
            raise ParseError(
                f"uppercase identifier {value!r} is not a formula "
                "(did you mean cont(..) or sub(..)?)", span)
        raise ParseError(f"unexpected token {value!r}", span)

    # labels ---------------------------------------------------------------

    def label(self) -> Label:
        tok = self.next()
        kind, value, span = tok
        if kind == "nall":
            return N_ALL
        if kind == "nsome":
            return N_SOME
        if kind == "*":
            return W_ALL
        if kind == "+":
            return W_SOME
        if kind == "ident":
            return nvar(value) if value[0].isupper() else wvar(value)
        raise ParseError(f"expected a label, found {value!r}", span)

    def label_list(self, closer: str) -> list[Label]:
        labels = [self.label()]
        while self.at(","):
            self.next()
            labels.append(self.label())
        self.expect(closer)
        return labels

    def context(self) -> Context:
        self.expect("[")
        if self.at("]"):
            self.next()
            return ()
        return tuple(self.label_list("]"))

    def done(self):
        tok = self.peek()
        if tok[0] != "eof":
            raise ParseError(f"trailing input {tok[1]!r}", tok[2])


def parse_formula(text: str) -> Formula:
    """Parse and sort-check a formula; ParseError / SortError on failure."""
    p = _Parser(text)
    f = p.formula()
    p.done()
    classify(f)
    return f


def parse_context(text: str) -> Context:
    p = _Parser(text)
    ctx = p.context()
    p.done()
    return ctx


# ---------------------------------------------------------------------------
# rendering

_ASCII_LABEL = {NALL: "@*", NSOME: "@+", WALL: "*", WSOME: "+"}
_UNI_LABEL = {NALL: "⊛", NSOME: "⊚", WALL: "∗", WSOME: "•"}


def render_label(lab: Label, unicode: bool = False) -> str:
    if lab.is_variable():
        return lab.name
    return (_UNI_LABEL if unicode else _ASCII_LABEL)[lab.kind]


def render_context(ctx: Context, unicode: bool = False) -> str:
    return "[" + ",".join(render_label(l, unicode) for l in ctx) + "]"


_PREC_CMP, _PREC_IMPL, _PREC_OR, _PREC_AND, _PREC_UNARY = range(5)


def render_formula(f: Formula, unicode: bool = False) -> str:
    """Canonical text; ``parse_formula(render_formula(f))`` equals ``f``."""
    syms = {
        "and": " ∧ " if unicode else " & ",
        "or": " ∨ " if unicode else " | ",
        "impl": " → " if unicode else " -> ",
        "cmp": " ≼ " if unicode else " <= ",
        "not": "¬" if unicode else "~",
        "Tn": "⊤n" if unicode else "Tn", "Fn": "⊥n" if unicode else "Fn",
        "Tw": "⊤w" if unicode else "Tw", "Fw": "⊥w" if unicode else "Fw",
        "cont": "⊐" if unicode else "cont(", "sub": "⊏" if unicode else "sub(",
    }

    def go(g: Formula, prec: int) -> str:
        core, attr = strip_attribute(g)
        if attr:
            # a labelled negation renders bare (~p^{*}); other compounds
            # need parentheses so the attribute reattaches to the group
            base = go(core, _PREC_UNARY + 1) if not isinstance(core, Not) \
                else syms["not"] + _paren_not_body(core.body)
            txt = base + "^{" + ",".join(render_label(l, unicode) for l in attr) + "}"
            return txt if prec <= _PREC_UNARY else "(" + txt + ")"
        if isinstance(g, Atom):
            return g.name
        if isinstance(g, Top):
            return syms["Tn"] if g.sort is Sort.N else syms["Tw"]
        if isinstance(g, Bot):
            return syms["Fn"] if g.sort is Sort.N else syms["Fw"]
        if isinstance(g, Contains):
            return syms["cont"] + g.var + ("" if unicode else ")")
        if isinstance(g, Inside):
            return syms["sub"] + g.var + ("" if unicode else ")")
        if isinstance(g, Not):
            return syms["not"] + _paren_not_body(g.body)
        if isinstance(g, And):
            txt = go(g.left, _PREC_AND) + syms["and"] + go(g.right, _PREC_AND)
            return txt if prec <= _PREC_AND else "(" + txt + ")"
        if isinstance(g, Or):
            txt = go(g.left, _PREC_OR) + syms["or"] + go(g.right, _PREC_OR)
            return txt if prec <= _PREC_OR else "(" + txt + ")"
        if isinstance(g, Implies):
            txt = go(g.left, _PREC_IMPL + 1) + syms["impl"] + go(g.right, _PREC_IMPL)
            return txt if prec <= _PREC_IMPL else "(" + txt + ")"
        if isinstance(g, Cmp):
            txt = go(g.left, _PREC_CMP + 1) + syms["cmp"] + go(g.right, _PREC_CMP + 1)
            return txt if prec <= _PREC_CMP else "(" + txt + ")"
        raise TypeError(f"not a formula: {g!r}")

    def _paren_not_body(body: Formula) -> str:
        # negation binds tighter than attributes, so a labelled or binary
        # body must be parenthesised to survive the round trip
        if isinstance(body, (Atom, Top, Bot, Contains, Inside, Not)):
            return go(body, _PREC_UNARY)
        return "(" + go(body, _PREC_CMP) + ")"

    return go(f, _PREC_CMP)


# ---------------------------------------------------------------------------
# JSON: models

def _want(obj: Any, typ, path: str, what: str):
    if not isinstance(obj, typ):
        raise SchemaError(f"expected {what}", path)
    return obj


def _world_list(obj: Any, path: str) -> list[str]:
    _want(obj, list, path, "a list of worlds")
    for i, w in enumerate(obj):
        _want(w, str, f"{path}[{i}]", "a world name")
    return obj


def model_from_json(doc: Any) -> tuple[Any, _model.Assignment]:
    """Build a Model or Template (plus assignment) from a parsed JSON
    document.  Structural errors raise SchemaError; semantic problems are
    left to ``model.validate``."""
    _want(doc, dict, "$", "an object")
    known = {"worlds", "valuation", "nesting", "reference",
             "reference_neighbourhood", "assignment"}
    for key in doc:
        if key not in known:
            raise SchemaError(f"unknown key {key!r}", "$")
    worlds = _world_list(doc.get("worlds"), "$.worlds")

    valuation: dict[str, frozenset[str]] = {}
    for atom, ws in _want(doc.get("valuation", {}), dict, "$.valuation",
                          "an object").items():
        valuation[atom] = frozenset(_world_list(ws, f"$.valuation.{atom}"))

    nesting: dict[str, tuple[frozenset[str], ...]] = {}
    for w, chain in _want(doc.get("nesting", {}), dict, "$.nesting",
                          "an object").items():
        _want(chain, list, f"$.nesting.{w}", "a list of neighbourhoods")
        nesting[w] = tuple(
            frozenset(_world_list(nb, f"$.nesting.{w}[{i}]"))
            for i, nb in enumerate(chain))

    reference = _want(doc.get("reference"), str, "$.reference", "a world name")
    frame = _model.Frame(tuple(worlds), nesting, valuation)
    structure: Any = _model.Model(frame, reference)
    if "reference_neighbourhood" in doc:
        ref_nb = frozenset(_world_list(doc["reference_neighbourhood"],
                                       "$.reference_neighbourhood"))
        structure = _model.Template(structure, ref_nb)

    neigh: dict[str, frozenset[str]] = {}
    world_map: dict[str, str] = {}
    for var, val in _want(doc.get("assignment", {}), dict, "$.assignment",
                          "an object").items():
        if var[:1].isupper():
            neigh[var] = frozenset(_world_list(val, f"$.assignment.{var}"))
        elif isinstance(val, str):
            world_map[var] = val
        else:
            raise SchemaError("world variables map to a single world",
                              f"$.assignment.{var}")
    return structure, _model.Assignment(neigh, world_map)


def parse_model(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", f"$ (line {exc.lineno})")
    return model_from_json(doc)


def model_to_json(structure, assignment: _model.Assignment | None = None) -> dict:
    mdl = structure.model if isinstance(structure, _model.Template) else structure
    frame = mdl.frame
    doc: dict[str, Any] = {
        "worlds": list(frame.worlds),
        "valuation": {a: sorted(ws) for a, ws in sorted(frame.valuation.items())},
        "nesting": {w: [sorted(nb) for nb in chain]
                    for w, chain in sorted(frame.nesting.items())},
        "reference": mdl.reference,
    }
    if isinstance(structure, _model.Template):
        doc["reference_neighbourhood"] = sorted(structure.reference_neighbourhood)
    if assignment is not None and (assignment.neigh or assignment.world):
        doc["assignment"] = {**{n: sorted(ws) for n, ws in sorted(assignment.neigh.items())},
                             **dict(sorted(assignment.world.items()))}
    return doc


# ---------------------------------------------------------------------------
# JSON: derivations

def _context_from_tokens(tokens: Any, path: str) -> Context:
    _want(tokens, list, path, "a list of label tokens")
    out = []
    for i, tok in enumerate(tokens):
        _want(tok, str, f"{path}[{i}]", "a label token")
        try:
            p = _Parser(tok)
            lab = p.label()
            p.done()
        except ParseError as exc:
            raise SchemaError(f"bad label token: {exc}", f"{path}[{i}]")
        out.append(lab)
    return tuple(out)


def proof_from_json(doc: Any, path: str = "$") -> _checker.Node:
    """Build a derivation tree from parsed JSON.  Comparative-possibility
    sugar in formula texts is expanded here, so rule matching always sees
    core-language formulas."""
    _want(doc, dict, path, "a proof node object")
    if "rule" not in doc:
        raise SchemaError("missing 'rule'", path)
    rule = doc["rule"]
    try:
        formula = expand_comparisons(parse_formula(
            _want(doc.get("formula"), str, f"{path}.formula", "formula text")))
    except (ParseError, Exception) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"bad formula: {exc}", f"{path}.formula")
    context = _context_from_tokens(doc.get("context", []), f"{path}.context")

    if rule == "hyp":
        hyp_id = _want(doc.get("id"), int, f"{path}.id", "an integer id")
        return _checker.Hyp(hyp_id, context, formula)

    if not isinstance(rule, (str, int)):
        raise SchemaError("'rule' must be a rule id or alias", f"{path}.rule")
    premises = tuple(
        proof_from_json(p, f"{path}.premises[{i}]")
        for i, p in enumerate(_want(doc.get("premises", []), list,
                                    f"{path}.premises", "a list")))
    discharge = doc.get("discharge", [])
    _want(discharge, list, f"{path}.discharge", "a list of hypothesis ids")
    for i, d in enumerate(discharge):
        _want(d, int, f"{path}.discharge[{i}]", "an integer id")
    return _checker.Step(rule, context, formula, premises, frozenset(discharge))


def parse_proof(text: str) -> _checker.Node:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", f"$ (line {exc.lineno})")
    return proof_from_json(doc)


def proof_to_json(node: _checker.Node) -> dict:
    ctx = [render_label(l) for l in node.context]
    if isinstance(node, _checker.Hyp):
        return {"rule": "hyp", "id": node.id, "context": ctx,
                "formula": render_formula(node.formula)}
    doc: dict[str, Any] = {
        "rule": node.rule, "context": ctx,
        "formula": render_formula(node.conclusion),
        "premises": [proof_to_json(p) for p in node.premises],
    }
    if node.discharge:
        doc["discharge"] = sorted(node.discharge)
    return doc

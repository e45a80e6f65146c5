"""Toolkit for Lewis-style counterfactual logics over nested
neighbourhood (sphere) semantics: a two-sorted labelled language, finite
models, a labelled natural-deduction checker with logic profiles, proof
normalization, and a bounded-model decision procedure.
"""

from .syntax import (
    Atom, Bot, Cmp, Contains, Formula, Implies, Inside, Label, Labeled,
    Not, And, Or, Sort, Top, classify, fits, label_rank, flat_depth,
    substitute, expand_comparisons,
)
from .parser import (
    ParseError, SchemaError, parse_context, parse_formula, parse_model,
    parse_proof, render_context, render_formula,
)
from .model import Assignment, Frame, Model, Template, delta, perspectives, validate
from .semantics import (
    EvalError, consequence_bounded, evaluate, resolves, satisfies,
    valid_bounded,
)
from .rules import Profile
from .checker import CheckReport, Hyp, Step, check, expand_sugar, lift
from .normalizer import Redex, find_redexes, normalize, reduce_redex
from .decider import ModelBounds, Verdict, bounds, decide_sat, decide_valid

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"

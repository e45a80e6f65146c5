#!/usr/bin/env python3
"""Regenerate the bundled proof corpus under src/vlogic/corpus/.

Each derivation is built programmatically, checked, serialized with
per-step provenance notes, and re-parsed as a round-trip guard.
Run from the repository root:  python tools/build_corpus.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from vlogic.checker import Hyp, Step, check, lift
from vlogic.parser import parse_context, parse_formula, proof_from_json, proof_to_json
from vlogic.rules import Profile

F = parse_formula
C = parse_context

OUT = Path(__file__).resolve().parent.parent / "src" / "vlogic" / "corpus"


def step(rule, ctx, formula, premises=(), discharge=()):
    return Step(rule, C(ctx), F(formula), tuple(premises),
                frozenset(discharge))


def hyp(hid, ctx, formula):
    return Hyp(hid, C(ctx), F(formula))


# ---------------------------------------------------------------------------
# the worked total-order tautology: some neighbourhood with no p-worlds but
# a q-world forces every neighbourhood to satisfy "p somewhere -> q somewhere"

def tautology():
    A = "~p^{*} & q^{+}"
    AO = "(~p^{*} & q^{+})^{@+}"
    B = "p^{+} -> q^{+}"
    BO = "(p^{+} -> q^{+})^{@*}"

    # containment case: the q-witness propagates up into M
    t1 = step(10, "[N]", A, [hyp(3, "[N]", A)])
    t2 = step(2, "[N]", "q^{+}", [t1])
    t3 = step(10, "[M]", "cont(N)", [hyp(21, "[M]", "cont(N)")])
    t4 = step(23, "[M]", "q^{+}", [t2, t3])
    t5 = step(11, "[M]", B, [t4])

    # inclusion case: "no p-world" restricts down into M, so p^{+} explodes
    u1 = step(10, "[N]", A, [hyp(3, "[N]", A)])
    u2 = step(1, "[N]", "~p^{*}", [u1])
    u3 = step(10, "[M]", "sub(N)", [hyp(22, "[M]", "sub(N)")])
    u4 = step(24, "[M]", "~p^{*}", [u2, u3])
    u5 = step(13, "[M,*]", "~p", [u4])
    u6 = step(16, "[M,u]", "~p", [u5])
    v1 = step(10, "[M]", "p^{+}", [hyp(1, "[M]", "p^{+}")])
    v2 = step(13, "[M,+]", "p", [v1])
    w2 = step(12, "[M,u]", "Fn", [hyp(11, "[M,u]", "p"), u6])
    w3 = step(8, "[M,u]", "q", [w2])
    w4 = step(17, "[M,+]", "q", [w3])
    w5 = step(18, "[M,+]", "q", [v2, w4], [11])
    w6 = step(14, "[M]", "q^{+}", [w5])
    w7 = step(11, "[M]", B, [w6], [1])

    x1 = step(29, "[M]", B, [t5, w7], [21, 22])
    x2 = step(21, "[@*]", B, [x1])
    x3 = step(14, "[]", BO, [x2])

    s1 = step(10, "[]", AO, [hyp(4, "[]", AO)])
    s2 = step(13, "[@+]", A, [s1])
    s3 = step(20, "[]", BO, [s2, x3], [3])
    return step(11, "[]", f"{AO} -> {BO}", [s3], [4])


# ---------------------------------------------------------------------------
# comparative-possibility axioms (expanded form): a <= b is (b+ -> a+)^{@*}

def trans():
    H = "(b^{+} -> a^{+})^{@*} & (c^{+} -> b^{+})^{@*}"
    b1 = step(10, "[@*]", "c^{+}", [hyp(2, "[@*]", "c^{+}")])
    a2 = step(10, "[]", H, [hyp(1, "[]", H)])
    a3 = step(2, "[]", "(c^{+} -> b^{+})^{@*}", [a2])
    a4 = step(13, "[@*]", "c^{+} -> b^{+}", [a3])
    a5 = step(12, "[@*]", "b^{+}", [b1, a4])
    a7 = step(10, "[]", H, [hyp(1, "[]", H)])
    a8 = step(1, "[]", "(b^{+} -> a^{+})^{@*}", [a7])
    a9 = step(13, "[@*]", "b^{+} -> a^{+}", [a8])
    a10 = step(12, "[@*]", "a^{+}", [a5, a9])
    a11 = step(11, "[@*]", "c^{+} -> a^{+}", [a10], [2])
    a12 = step(14, "[]", "(c^{+} -> a^{+})^{@*}", [a11])
    return step(11, "[]", f"({H}) -> (c^{{+}} -> a^{{+}})^{{@*}}", [a12], [1])


def connex():
    L = "(b^{+} -> a^{+})^{@*}"
    R = "(a^{+} -> b^{+})^{@*}"
    D = f"{L} | {R}"
    ND = f"~({D})"
    d1 = step(10, "[@*]", "b^{+}", [hyp(2, "[@*]", "b^{+}")])
    d2 = step(11, "[@*]", "a^{+} -> b^{+}", [d1])
    d3 = step(14, "[]", R, [d2])
    d4 = step(6, "[]", D, [d3])
    d5 = step(10, "[]", ND, [hyp(1, "[]", ND)])
    d6 = step(12, "[]", "Fn", [d4, d5])
    d7 = step(8, "[]", "a^{+,@*}", [d6])
    d8 = step(13, "[@*]", "a^{+}", [d7])
    d9 = step(11, "[@*]", "b^{+} -> a^{+}", [d8], [2])
    d10 = step(14, "[]", L, [d9])
    d11 = step(4, "[]", D, [d10])
    d12 = step(10, "[]", ND, [hyp(1, "[]", ND)])
    d13 = step(12, "[]", "Fn", [d11, d12])
    return step(7, "[]", D, [d13], [1])


def conjunction_theorem():
    """Closed propositional theorem (a & b) -> a, the splice payload for
    the one-premise comparative-possibility rule."""
    e0 = step(10, "[]", "a & b", [hyp(5, "[]", "a & b")])
    e1 = step(1, "[]", "a", [e0])
    return step(11, "[]", "(a & b) -> a", [e1], [5])


def cpr1():
    xi = lift(conjunction_theorem(), C("[M,u]"))
    f1 = step(10, "[M]", "(a & b)^{+}", [hyp(9, "[M]", "(a & b)^{+}")])
    f2 = step(13, "[M,+]", "a & b", [f1])
    f3i = step(10, "[M,u]", "a & b", [hyp(6, "[M,u]", "a & b")])
    f3 = step(12, "[M,u]", "a", [f3i, xi])
    f4 = step(17, "[M,+]", "a", [f3])
    f5 = step(18, "[M,+]", "a", [f2, f4], [6])
    f6 = step(14, "[M]", "a^{+}", [f5])
    f7 = step(11, "[M]", "(a & b)^{+} -> a^{+}", [f6], [9])
    f8 = step(21, "[@*]", "(a & b)^{+} -> a^{+}", [f7])
    return step(14, "[]", "((a & b)^{+} -> a^{+})^{@*}", [f8])


def disjunction_theorem():
    h = step(10, "[]", "a", [hyp(7, "[]", "a")])
    o = step(4, "[]", "a | c", [h])
    return step(11, "[]", "a -> (a | c)", [o], [7])


def cpr2_figure():
    """Verbatim transcription of the published two-disjunct derivation.

    This derivation does NOT check: its inner case analyses run the
    disjunction rules inside universally quantified contexts, which their
    own restriction (b) forbids, and one step generalizes a named
    neighbourhood below the top of the context, which matches no rule.
    It is bundled as a negative exemplar; the checker's diagnostics
    locate both defects.
    """
    D = "(a^{+} -> a^{+})^{@*} | (a^{+} -> c^{+})^{@*}"
    ND = f"~({D})"
    xi = lift(disjunction_theorem(), C("[N,u]"))

    p1 = step(10, "[N]", "a^{+}", [hyp(2, "[N]", "a^{+}")])
    p2 = step(13, "[N,+]", "a", [p1])
    p3 = step(10, "[N,u]", "a", [hyp(4, "[N,u]", "a")])
    p4 = step(12, "[N,u]", "a | c", [p3, xi])
    p5 = step(17, "[N,+]", "a | c", [p4])
    p6 = step(21, "[@*,+]", "a | c", [p5])          # matches no rule shape
    p7 = step(18, "[@*,+]", "a | c", [p2, p6], [4])

    m1 = step(10, "[@*,+]", "a", [hyp(5, "[@*,+]", "a")])
    m2 = step(14, "[@*]", "a^{+}", [m1])
    m3 = step(4, "[@*]", "a^{+} | c^{+}", [m2])     # or-intro under @*
    n1 = step(10, "[@*,+]", "c", [hyp(6, "[@*,+]", "c")])
    n2 = step(14, "[@*]", "c^{+}", [n1])
    n3 = step(6, "[@*]", "a^{+} | c^{+}", [n2])
    pi_end = step(5, "[@*]", "a^{+} | c^{+}", [p7, m3, n3], [5, 6])

    s1 = step(10, "[@*]", "a^{+}", [hyp(31, "[@*]", "a^{+}")])
    s2 = step(11, "[@*]", "a^{+} -> a^{+}", [s1])
    s3 = step(14, "[]", "(a^{+} -> a^{+})^{@*}", [s2])
    s4 = step(4, "[]", D, [s3])
    r1 = step(10, "[@*]", "c^{+}", [hyp(32, "[@*]", "c^{+}")])
    r2 = step(11, "[@*]", "a^{+} -> c^{+}", [r1])
    r3 = step(14, "[]", "(a^{+} -> c^{+})^{@*}", [r2])
    r4 = step(6, "[]", D, [r3])
    sigma_end = step(5, "[]", D, [pi_end, s4, r4], [31, 32])  # or-elim under @*

    o1 = step(12, "[]", "Fn",
              [sigma_end, step(10, "[]", ND, [hyp(1, "[]", ND)])])
    o2 = step(8, "[]", "a^{+,N}", [o1])
    o3 = step(13, "[N]", "a^{+}", [o2])
    o4 = step(11, "[N]", "a^{+} -> a^{+}", [o3], [2])
    o5 = step(21, "[@*]", "a^{+} -> a^{+}", [o4])
    o6 = step(14, "[]", "(a^{+} -> a^{+})^{@*}", [o5])
    o7 = step(4, "[]", D, [o6])
    o8 = step(12, "[]", "Fn", [o7, step(10, "[]", ND, [hyp(1, "[]", ND)])])
    return step(7, "[]", D, [o8], [1])


# ---------------------------------------------------------------------------
# profile demonstrations: each needs exactly its profile's extra power

def profile_vn():
    n1 = step(30, "[@*]", "Tw")
    n2 = step("vn-wildcard-drop", "[N]", "Tw", [n1])
    n3 = step(19, "[@+]", "Tw", [n2])
    return step(14, "[]", "Tw^{@+}", [n3])


def profile_vt():
    t1 = step(10, "[]", "p^{*,@*}", [hyp(1, "[]", "p^{*,@*}")])
    t2 = step(13, "[@*]", "p^{*}", [t1])
    t3 = step(13, "[@*,*]", "p", [t2])
    t4 = step("vt-reflexive", "[]", "p", [t3])
    return step(11, "[]", "p^{*,@*} -> p", [t4], [1])


def profile_vw():
    t1 = step(10, "[]", "p^{*,@+}", [hyp(1, "[]", "p^{*,@+}")])
    t2 = step(13, "[@+]", "p^{*}", [t1])
    t3 = step(13, "[@+,*]", "p", [t2])
    t4 = step("vw-weak-center", "[]", "p", [t3])
    return step(11, "[]", "p^{*,@+} -> p", [t4], [1])


def profile_vc():
    t1 = step(10, "[]", "p^{+,@*}", [hyp(1, "[]", "p^{+,@*}")])
    t2 = step(13, "[@*]", "p^{+}", [t1])
    t3 = step(13, "[@*,+]", "p", [t2])
    t4 = step("vc-center", "[]", "p", [t3])
    return step(11, "[]", "p^{+,@*} -> p", [t4], [1])


CORPUS = [
    # name, builder, profile, expect_ok, description
    ("tautology", tautology, "V", True,
     "worked example: a neighbourhood with a q-world but no p-world makes "
     "'some p implies some q' hold in every neighbourhood (total order)"),
    ("trans", trans, "V", True,
     "transitivity of comparative possibility, in expanded form"),
    ("connex", connex, "V", True,
     "connexity of comparative possibility, in expanded form"),
    ("cpr1", cpr1, "V", True,
     "one-disjunct comparative-possibility rule via a lifted propositional "
     "theorem"),
    ("cpr2_figure", cpr2_figure, "V", False,
     "two-disjunct comparative-possibility rule as published; rejected "
     "because its case analyses break the disjunction rules' quantifier "
     "restriction (negative exemplar)"),
    ("profile_vn", profile_vn, "VN", True,
     "normality: some neighbourhood exists"),
    ("profile_vt", profile_vt, "VT", True,
     "total reflexivity: what holds at all worlds of all neighbourhoods "
     "holds here"),
    ("profile_vw", profile_vw, "VW", True,
     "weak centering: what holds throughout some neighbourhood holds here"),
    ("profile_vc", profile_vc, "VC", True,
     "centering: what holds somewhere in every neighbourhood holds here"),
]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    index = []
    for name, build, profile, expect_ok, description in CORPUS:
        node = build()
        report = check(node, Profile.parse(profile))
        if report.ok != expect_ok:
            for d in report.diagnostics:
                print(f"  {d}")
            raise SystemExit(f"{name}: expected ok={expect_ok}, "
                             f"got {report.ok}")
        if expect_ok and report.open_hypotheses:
            raise SystemExit(f"{name}: unexpected open hypotheses")
        doc = proof_to_json(node)
        doc["note"] = description
        back = proof_from_json(doc)
        if back != node:
            raise SystemExit(f"{name}: JSON round trip changed the derivation")
        path = OUT / f"{name}.proof.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        index.append({"name": name, "file": path.name, "profile": profile,
                      "expect_ok": expect_ok, "description": description})
        print(f"wrote {path.name} (profile {profile}, ok={report.ok})")
    (OUT / "index.json").write_text(json.dumps(index, indent=1) + "\n")
    print(f"wrote index.json ({len(index)} entries)")


if __name__ == "__main__":
    main()

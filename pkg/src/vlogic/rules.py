"""Rule identifiers, aliases and logic profiles.

The calculus has thirty numbered rules plus one extra rule per frame
condition (normality, total reflexivity, weak centering, centering).
Profiles are cumulative: each one keeps everything below it and relaxes
or adds as documented in the checker.
"""

from __future__ import annotations

from enum import Enum


class Profile(Enum):
    V = 0
    VN = 1
    VT = 2
    VW = 3
    VC = 4

    def includes(self, other: "Profile") -> bool:
        return self.value >= other.value

    @classmethod
    def parse(cls, name: str) -> "Profile":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown profile {name!r}; choose from "
                             f"{', '.join(p.name for p in cls)}")


RULE_ALIASES: dict[int, str] = {
    1: "and-elim-l",
    2: "and-elim-r",
    3: "and-intro",
    4: "or-intro-l",
    5: "or-elim",
    6: "or-intro-r",
    7: "bot-classical",
    8: "bot-intuitionistic",
    9: "absurd-expansion",
    10: "hyp-injection",
    11: "imp-intro",
    12: "imp-elim",
    13: "ctx-intro",
    14: "ctx-elim",
    15: "w-univ-intro",
    16: "w-univ-elim",
    17: "w-exist-intro",
    18: "w-exist-elim",
    19: "n-exist-intro",
    20: "n-exist-elim",
    21: "n-univ-intro",
    22: "n-univ-wildcard",
    23: "w-exist-prop",
    24: "w-univ-prop",
    25: "trans-incl-neg",
    26: "trans-incl-pos",
    27: "total-order-neg",
    28: "total-order-pos",
    29: "total-order-mixed",
    30: "truth",
}

ALIAS_TO_ID: dict[str, int] = {a: i for i, a in RULE_ALIASES.items()}

# profile-specific rules and the profile that unlocks each
PROFILE_RULES: dict[str, Profile] = {
    "vn-wildcard-drop": Profile.VN,
    "vt-reflexive": Profile.VT,
    "vw-weak-center": Profile.VW,
    "vc-center": Profile.VC,
}


class UnknownRule(ValueError):
    pass


def resolve_rule(rule) -> str:
    """Canonical alias for a rule given as number or alias string."""
    if isinstance(rule, bool):
        raise UnknownRule(f"not a rule: {rule!r}")
    if isinstance(rule, int):
        if rule in RULE_ALIASES:
            return RULE_ALIASES[rule]
        raise UnknownRule(f"no rule numbered {rule}")
    if isinstance(rule, str):
        name = rule.strip().lower()
        if name in ALIAS_TO_ID or name in PROFILE_RULES:
            return name
        if name.isdigit() and int(name) in RULE_ALIASES:
            return RULE_ALIASES[int(name)]
        raise UnknownRule(f"unknown rule {rule!r}")
    raise UnknownRule(f"not a rule: {rule!r}")


def required_profile(alias: str) -> Profile:
    return PROFILE_RULES.get(alias, Profile.V)


def rule_number(alias: str) -> int | None:
    return ALIAS_TO_ID.get(alias)

"""Bundled derivations: the worked tautology, the comparative-possibility
axioms, profile demonstrations, and one documented negative exemplar.

Regenerate with tools/build_corpus.py; the JSON files carry provenance
notes and are the acceptance suite's primary fixtures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from ..checker import Node
from ..parser import proof_from_json
from ..rules import Profile


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    file: str
    profile: Profile
    expect_ok: bool
    description: str


def _read(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text()


def index() -> list[CorpusEntry]:
    entries = json.loads(_read("index.json"))
    return [CorpusEntry(e["name"], e["file"], Profile.parse(e["profile"]),
                        e["expect_ok"], e["description"])
            for e in entries]


def entry(name: str) -> CorpusEntry:
    for e in index():
        if e.name == name:
            return e
    raise KeyError(f"no bundled proof named {name!r}")


def load(name: str) -> Node:
    return proof_from_json(json.loads(_read(entry(name).file)))


def raw(name: str) -> str:
    return _read(entry(name).file)


def paper_derivations() -> list[str]:
    """The accepted profile-V transcriptions (the soundness-suite corpus)."""
    return [e.name for e in index()
            if e.expect_ok and e.profile is Profile.V]

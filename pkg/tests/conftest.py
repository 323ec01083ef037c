from __future__ import annotations

import random
import string
from pathlib import Path

import pytest

from easytime.frontend import (
    AgentDecl,
    MeasuringPlace,
    Predicate,
    ProgramAst,
    Statement,
    VarDecl,
)

FIXTURES = Path(__file__).parent / "fixtures"

# every keyword of either dialect; generated identifiers must avoid them
KEYWORDS = frozenset(
    "var manual auto mp agnt upd dec true category dynamicvar".split()
)


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


def program_source(name: str) -> str:
    return (FIXTURES / "programs" / f"{name}.ez").read_text(encoding="ascii")


def random_name(rng: random.Random, taken: set[str]) -> str:
    while True:
        length = rng.randint(2, 8)
        name = rng.choice(string.ascii_uppercase) + "".join(
            rng.choice(string.ascii_uppercase + string.digits) for _ in range(length - 1)
        )
        if name not in KEYWORDS and name not in taken:
            taken.add(name)
            return name


def random_var_decl(rng: random.Random, taken: set[str]) -> VarDecl:
    name = random_name(rng, taken)
    kind = rng.choice(("plain", "plain", "categorized", "dynamic"))
    if kind == "plain":
        return VarDecl(name, "plain", value=rng.randint(0, 9999))
    if kind == "dynamic":
        return VarDecl(name, "dynamic")
    categories = rng.sample(range(10), rng.randint(1, 4))
    arms = tuple((c, rng.randint(0, 99)) for c in sorted(categories))
    return VarDecl(name, "categorized", arms=arms)


def random_program(rng: random.Random) -> ProgramAst:
    """A structurally valid EasyTime++ program tree."""
    taken: set[str] = set()
    agent_ids = rng.sample(range(1, 10), rng.randint(1, 3))
    agents = []
    for aid in agent_ids:
        if rng.random() < 0.5:
            agents.append(AgentDecl(aid, "manual", f"file{aid}.dat"))
        else:
            agents.append(AgentDecl(aid, "auto", f"192.168.0.{aid}"))

    decls = [random_var_decl(rng, taken) for _ in range(rng.randint(1, 8))]
    names = [d.name for d in decls]

    places = []
    for mp_id in rng.sample(range(1, 10), rng.randint(0, 4)):
        stmts = []
        for _ in range(rng.randint(1, 4)):
            if rng.random() < 0.5:
                pred = Predicate("true")
            else:
                pred = Predicate("equals", var=rng.choice(names), value=rng.randint(0, 9))
            stmts.append(Statement(pred, rng.choice(("upd", "dec")), rng.choice(names)))
        places.append(MeasuringPlace(mp_id, rng.choice(agent_ids), tuple(stmts)))

    return ProgramAst(tuple(agents), tuple(decls), tuple(places))

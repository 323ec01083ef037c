"""Static meaning of declarations and whole-program checks.

A program's declarations denote a state mapping each variable name to a pair:
a category-to-integer map and a dynamic flag.  Plain declarations bind a
constant map, categorized declarations bind a finite map, and dynamic
declarations bind the everywhere-undefined map with the flag set; their
per-runner values appear only at run time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import ERROR, WARNING, Diagnostic, sort_diagnostics
from .frontend import ProgramAst, VarDecl

CONSTANT = "constant"
ARMS = "arms"
UNDEFINED = "undefined"


@dataclass(frozen=True)
class CategoryMap:
    """Total function from category to integer-or-undefined."""

    kind: str  # CONSTANT, ARMS or UNDEFINED
    value: int | None = None
    arms: dict[int, int] | None = None

    @classmethod
    def constant(cls, value: int) -> "CategoryMap":
        return cls(CONSTANT, value=value)

    @classmethod
    def of_arms(cls, arms: dict[int, int]) -> "CategoryMap":
        return cls(ARMS, arms=dict(arms))

    @classmethod
    def undefined(cls) -> "CategoryMap":
        return cls(UNDEFINED)

    def lookup(self, category: int) -> int | None:
        if self.kind == CONSTANT:
            return self.value
        if self.kind == ARMS:
            return self.arms.get(category)
        return None


@dataclass(frozen=True)
class VarMeta:
    name: str
    values: CategoryMap
    is_dynamic: bool


@dataclass(frozen=True)
class StaticState:
    """Finite map from variable name to metadata; insertion order preserved."""

    env: dict[str, VarMeta] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> "StaticState":
        return cls({})

    def bind(self, meta: VarMeta) -> "StaticState":
        new_env = dict(self.env)
        new_env[meta.name] = meta
        return StaticState(new_env)

    def names(self) -> tuple[str, ...]:
        return tuple(self.env)

    def __contains__(self, name: str) -> bool:
        return name in self.env


class DuplicateDeclarationError(Exception):
    def __init__(self, name: str, line: int, column: int):
        super().__init__(f"{line}:{column}: variable {name} declared twice")
        self.name = name
        self.line = line
        self.column = column


def decl_meaning(decl: VarDecl, state: StaticState) -> StaticState:
    """Bind one declaration into the state; rebinding a name is an error."""
    if decl.name in state:
        raise DuplicateDeclarationError(decl.name, decl.line, decl.column)
    if decl.kind == "plain":
        values = CategoryMap.constant(decl.value)
        dynamic = False
    elif decl.kind == "categorized":
        values = CategoryMap.of_arms(dict(decl.arms))
        dynamic = False
    elif decl.kind == "dynamic":
        values = CategoryMap.undefined()
        dynamic = True
    else:
        raise ValueError(f"unknown declaration kind {decl.kind!r}")
    return state.bind(VarMeta(decl.name, values, dynamic))


def decl_sequence(decls, state: StaticState) -> StaticState:
    """Left fold of decl_meaning: later declarations see earlier bindings."""
    for decl in decls:
        state = decl_meaning(decl, state)
    return state


def analyze(ast: ProgramAst) -> tuple[StaticState, list[Diagnostic]]:
    """Build the program's static state and collect whole-program diagnostics."""
    diags: list[Diagnostic] = []

    state = StaticState.empty()
    for decl in ast.decls:
        try:
            state = decl_meaning(decl, state)
        except DuplicateDeclarationError as exc:
            diags.append(Diagnostic(ERROR, "DuplicateDeclaration",
                                    f"variable {exc.name} declared twice",
                                    exc.line, exc.column))

    agent_ids: set[int] = set()
    for agent in ast.agents:
        if agent.id in agent_ids:
            diags.append(Diagnostic(ERROR, "DuplicateAgent",
                                    f"agent {agent.id} declared twice",
                                    agent.line, agent.column))
        agent_ids.add(agent.id)

    mp_ids: set[int] = set()
    referenced: set[str] = set()
    for place in ast.places:
        if place.mp_id in mp_ids:
            diags.append(Diagnostic(ERROR, "DuplicateMeasuringPlace",
                                    f"measuring place {place.mp_id} declared twice",
                                    place.line, place.column))
        mp_ids.add(place.mp_id)
        if place.agent_id not in agent_ids:
            diags.append(Diagnostic(ERROR, "UnknownAgent",
                                    f"mp[{place.mp_id}] references undeclared"
                                    f" agent {place.agent_id}",
                                    place.line, place.column))
        for stmt in place.stmts:
            referenced.add(stmt.target)
            if stmt.target not in state:
                diags.append(Diagnostic(ERROR, "UndeclaredVariable",
                                        f"{stmt.instr} targets undeclared"
                                        f" variable {stmt.target}",
                                        stmt.line, stmt.column))
            if stmt.pred.kind == "equals":
                referenced.add(stmt.pred.var)
                if stmt.pred.var not in state:
                    diags.append(Diagnostic(ERROR, "UndeclaredVariable",
                                            f"predicate tests undeclared"
                                            f" variable {stmt.pred.var}",
                                            stmt.line, stmt.column))

    for decl in ast.decls:
        if decl.name in state and decl.name not in referenced:
            diags.append(Diagnostic(WARNING, "UnusedVariable",
                                    f"variable {decl.name} is never used",
                                    decl.line, decl.column))

    return state, sort_diagnostics(diags)

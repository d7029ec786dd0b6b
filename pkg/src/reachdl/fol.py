"""Translation into the two-variable counting fragment, plus an evaluator
over finite structures so the translation can be tested against the direct
semantics."""

from __future__ import annotations

from dataclasses import dataclass

from .structures import FiniteStructure
from .syntax import (And, AtMost, Atomic, Bot, Concept, Eq, Exists, FAnd, FNot,
                     FOr, Formula, Incl, Nominal, Not, Or, ReachDLError, Role, Top)


class UnsupportedConstructError(ReachDLError):
    pass


class FOFormula:
    __slots__ = ()


@dataclass(frozen=True)
class FOTrue(FOFormula):
    pass


@dataclass(frozen=True)
class FOFalse(FOFormula):
    pass


@dataclass(frozen=True)
class ConceptAtom(FOFormula):
    name: str
    var: str


@dataclass(frozen=True)
class RoleAtom(FOFormula):
    name: str
    var1: str
    var2: str


@dataclass(frozen=True)
class ConstEq(FOFormula):
    """var = c for a nominal constant c."""

    var: str
    const: str


@dataclass(frozen=True)
class FOAnd(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FOOr(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FONot(FOFormula):
    inner: FOFormula


@dataclass(frozen=True)
class FOImplies(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FOForall(FOFormula):
    var: str
    body: FOFormula


@dataclass(frozen=True)
class FOExists(FOFormula):
    var: str
    body: FOFormula


@dataclass(frozen=True)
class FOAtMost(FOFormula):
    """Counting quantifier: at most `bound` witnesses for var."""

    bound: int
    var: str
    body: FOFormula


_VARS = ("x", "y")


def _tr_role(r: Role, z: str, zbar: str) -> FOFormula:
    if r.updates:
        raise UnsupportedConstructError("update roles have no first-order translation here")
    if r.inverted:
        return RoleAtom(r.name, zbar, z)
    return RoleAtom(r.name, z, zbar)


def _tr_concept(c: Concept, depth: int) -> FOFormula:
    z = _VARS[depth % 2]
    zbar = _VARS[(depth + 1) % 2]
    if isinstance(c, Atomic):
        return ConceptAtom(c.name, z)
    if isinstance(c, Nominal):
        return ConstEq(z, c.name)
    if isinstance(c, Top):
        return FOTrue()
    if isinstance(c, Bot):
        return FOFalse()
    if isinstance(c, And):
        return FOAnd(_tr_concept(c.left, depth), _tr_concept(c.right, depth))
    if isinstance(c, Or):
        return FOOr(_tr_concept(c.left, depth), _tr_concept(c.right, depth))
    if isinstance(c, Not):
        return FONot(_tr_concept(c.inner, depth))
    if isinstance(c, Exists):
        return FOExists(zbar, FOAnd(_tr_role(c.role, z, zbar), _tr_concept(c.inner, depth + 1)))
    if isinstance(c, AtMost):
        return FOAtMost(c.bound, zbar,
                        FOAnd(_tr_role(c.role, z, zbar), _tr_concept(c.inner, depth + 1)))
    raise TypeError(f"not a concept: {c!r}")  # pragma: no cover


def to_first_order(phi: Formula) -> FOFormula:
    """tr(phi): inclusions become universally quantified implications.
    Update roles are rejected."""
    if isinstance(phi, Incl):
        return FOForall("x", FOImplies(_tr_concept(phi.left, 0), _tr_concept(phi.right, 0)))
    if isinstance(phi, Eq):
        return FOAnd(to_first_order(Incl(phi.left, phi.right)),
                     to_first_order(Incl(phi.right, phi.left)))
    if isinstance(phi, FAnd):
        return FOAnd(to_first_order(phi.left), to_first_order(phi.right))
    if isinstance(phi, FOr):
        return FOOr(to_first_order(phi.left), to_first_order(phi.right))
    if isinstance(phi, FNot):
        return FONot(to_first_order(phi.inner))
    raise TypeError(f"not a formula: {phi!r}")  # pragma: no cover


def fo_eval(m: FiniteStructure, f: FOFormula, env: dict[str, int] | None = None) -> bool:
    """Evaluate a first-order formula over a finite structure."""
    env = env or {}
    if isinstance(f, FOTrue):
        return True
    if isinstance(f, FOFalse):
        return False
    if isinstance(f, ConceptAtom):
        return env[f.var] in m.concept_ext(f.name)
    if isinstance(f, RoleAtom):
        return (env[f.var1], env[f.var2]) in m.role_ext(f.name)
    if isinstance(f, ConstEq):
        return env[f.var] == m.nominal_elem(f.const)
    if isinstance(f, FOAnd):
        return fo_eval(m, f.left, env) and fo_eval(m, f.right, env)
    if isinstance(f, FOOr):
        return fo_eval(m, f.left, env) or fo_eval(m, f.right, env)
    if isinstance(f, FONot):
        return not fo_eval(m, f.inner, env)
    if isinstance(f, FOImplies):
        return (not fo_eval(m, f.left, env)) or fo_eval(m, f.right, env)
    if isinstance(f, FOForall):
        return all(fo_eval(m, f.body, {**env, f.var: u}) for u in m.universe)
    if isinstance(f, FOExists):
        return any(fo_eval(m, f.body, {**env, f.var: u}) for u in m.universe)
    if isinstance(f, FOAtMost):
        count = sum(1 for u in m.universe if fo_eval(m, f.body, {**env, f.var: u}))
        return count <= f.bound
    raise TypeError(f"not a first-order formula: {f!r}")  # pragma: no cover

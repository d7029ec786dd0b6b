"""Backwards propagation: substitution, the boolean-condition translation,
the raw transformer table (psi), its ext-renamed form (phi), the
abort-aware composition (theta), and the update-role eliminator.

The transformer rewrites the postcondition over the post-state into a
formula over the pre-state extended with: one copy R_ext per unconstrained
relation R, one label nominal per field read and allocation, and the abort
flag's nominal."""

from __future__ import annotations

from dataclasses import dataclass

from .memory import HeapVocabulary
from .programs import (AndB, Assign, Assume, BoolExpr, Dispose, EqB, Expr,
                       FalseB, FalseE, FieldE, If, New, NotB, NullE, OrB,
                       ReadField, Seq, Skip, Stmt, TrueB, TrueE, UnallocB,
                       VarE, WriteField, instrument_abort, labels_of)
from .syntax import (And, AtMost, Atomic, BOT, Bot, Concept, Eq, Exists, FAnd,
                     FNot, FOr, Formula, Incl, KindMismatchError, Nominal, Not,
                     Or, ReachDLError, Role, TOP, Top, TRUE, UpdatePoint,
                     Vocabulary, formula_symbols, role)


class AssumeInPsiError(ReachDLError):
    pass


class PoolSymbolError(ReachDLError):
    pass


_UNTRACKED = ("MemPool", "PossibleTargets")


def check_postcondition(phi: Formula) -> None:
    """Postconditions cannot mention the pool bookkeeping: allocation and
    disposal move cells between MemPool/PossibleTargets, and the
    transformer table has no rewriting for them (they are excluded from
    the post-state copies for the same reason).  Alloc, Addresses and Aux
    are fine: the first is substituted, the others never change."""
    bad = formula_symbols(phi)["concepts"] & set(_UNTRACKED)
    if bad:
        raise PoolSymbolError(
            f"postcondition mentions untracked pool symbols: {sorted(bad)}")


LABEL_PREFIX = "__lab_"


def label_nominal(label: int) -> str:
    return f"{LABEL_PREFIX}{label}"


def ext_name(name: str) -> str:
    return name + "_ext"


def tau_rem_map(heap: HeapVocabulary) -> dict[str, str]:
    """R -> R_ext for the non-field, non-ghost, non-required relations."""
    return {name: ext_name(name) for name in heap.tau_rem()}


# ---------------------------------------------------------------------------
# Substitution


def _subst_concept(c: Concept, fn) -> Concept:
    out = fn(c)
    if out is not None:
        return out
    if isinstance(c, (Atomic, Nominal, Top, Bot)):
        return c
    if isinstance(c, And):
        return And(_subst_concept(c.left, fn), _subst_concept(c.right, fn))
    if isinstance(c, Or):
        return Or(_subst_concept(c.left, fn), _subst_concept(c.right, fn))
    if isinstance(c, Not):
        return Not(_subst_concept(c.inner, fn))
    if isinstance(c, Exists):
        return Exists(c.role, _subst_concept(c.inner, fn))
    if isinstance(c, AtMost):
        return AtMost(c.bound, c.role, _subst_concept(c.inner, fn))
    raise TypeError(f"not a concept: {c!r}")  # pragma: no cover


def _map_formula(phi: Formula, cfn) -> Formula:
    if isinstance(phi, Incl):
        return Incl(cfn(phi.left), cfn(phi.right))
    if isinstance(phi, Eq):
        return Eq(cfn(phi.left), cfn(phi.right))
    if isinstance(phi, FAnd):
        return FAnd(_map_formula(phi.left, cfn), _map_formula(phi.right, cfn))
    if isinstance(phi, FOr):
        return FOr(_map_formula(phi.left, cfn), _map_formula(phi.right, cfn))
    if isinstance(phi, FNot):
        return FNot(_map_formula(phi.inner, cfn))
    raise TypeError(f"not a formula: {phi!r}")  # pragma: no cover


def substitute(phi: Formula, target, replacement) -> Formula:
    """Syntactic replacement of every occurrence of the target symbol.

    nominal -> nominal renames occurrences including update points;
    atomic concept -> concept replaces concept occurrences; role -> role
    rewrites the base of every role expression with that name (an update
    replacement prepends its points under the occurrence's own points,
    matching textual substitution into the expression)."""
    if isinstance(target, Nominal):
        if not isinstance(replacement, Nominal):
            raise KindMismatchError("a nominal substitutes only for a nominal")
        old, new = target.name, replacement.name

        def crename(c: Concept) -> Concept:
            def fn(cc: Concept):
                if isinstance(cc, Nominal) and cc.name == old:
                    return replacement
                if isinstance(cc, (Exists, AtMost)) and cc.role.updates:
                    ups = tuple(UpdatePoint(new if p.source == old else p.source,
                                            new if p.target == old else p.target)
                                for p in cc.role.updates)
                    r2 = Role(cc.role.name, cc.role.inverted, ups)
                    if isinstance(cc, Exists):
                        return Exists(r2, crename(cc.inner))
                    return AtMost(cc.bound, r2, crename(cc.inner))
                return None

            return _subst_concept(c, fn)

        return _map_formula(phi, crename)

    if isinstance(target, Atomic):
        if not isinstance(replacement, Concept):
            raise KindMismatchError("a concept expression must replace a concept name")

        def creplace(c: Concept) -> Concept:
            return _subst_concept(
                c, lambda cc: replacement if cc == target else None)

        return _map_formula(phi, creplace)

    if isinstance(target, Role):
        if target.inverted or target.updates:
            raise KindMismatchError("role substitution targets a plain role name")
        if not isinstance(replacement, Role) or replacement.inverted:
            raise KindMismatchError("role replacement must be a non-inverted role expression")

        def rreplace(c: Concept) -> Concept:
            def fn(cc: Concept):
                if isinstance(cc, (Exists, AtMost)) and cc.role.name == target.name:
                    r2 = Role(replacement.name, cc.role.inverted,
                              replacement.updates + cc.role.updates)
                    inner = rreplace(cc.inner)
                    if isinstance(cc, Exists):
                        return Exists(r2, inner)
                    return AtMost(cc.bound, r2, inner)
                return None

            return _subst_concept(c, fn)

        return _map_formula(phi, rreplace)

    raise KindMismatchError(f"cannot substitute for {target!r}")


# ---------------------------------------------------------------------------
# Boolean conditions as formulas


def _expr_concept(e: Expr) -> Concept:
    if isinstance(e, VarE):
        return Nominal(e.name)
    if isinstance(e, FieldE):
        return Exists(Role(e.fieldname, inverted=True), Nominal(e.var))
    if isinstance(e, NullE):
        return Nominal("null")
    if isinstance(e, TrueE):
        return Nominal("T")
    if isinstance(e, FalseE):
        return Nominal("F")
    raise TypeError(f"not an expression: {e!r}")  # pragma: no cover


def eps_bool(b: BoolExpr) -> Formula:
    """The condition as a formula: equality tests become concept
    equalities between the value concepts of the two sides."""
    if isinstance(b, EqB):
        return Eq(_expr_concept(b.left), _expr_concept(b.right))
    if isinstance(b, NotB):
        return FNot(eps_bool(b.inner))
    if isinstance(b, AndB):
        return FAnd(eps_bool(b.left), eps_bool(b.right))
    if isinstance(b, OrB):
        return FOr(eps_bool(b.left), eps_bool(b.right))
    if isinstance(b, TrueB):
        return TRUE
    if isinstance(b, FalseB):
        return Incl(TOP, BOT)
    if isinstance(b, UnallocB):
        return FNot(Incl(Nominal(b.var), Atomic("Alloc")))
    raise TypeError(f"not a boolean expression: {b!r}")  # pragma: no cover


def _expr_nominal(e: Expr) -> Nominal:
    c = _expr_concept(e)
    if not isinstance(c, Nominal):
        raise ReachDLError("only variables and literals are allowed here")
    return c


# ---------------------------------------------------------------------------
# The transformer table


def psi(s: Stmt, phi: Formula, heap: HeapVocabulary) -> Formula:
    """The raw backwards transformer; assume commands are out of scope
    (theta handles them through the instrumentation)."""
    if isinstance(s, Skip):
        return phi
    if isinstance(s, Assign):
        return substitute(phi, Nominal(s.var), _expr_nominal(s.expr))
    if isinstance(s, ReadField):
        o_y = Nominal(label_nominal(s.label))
        renamed = substitute(phi, Nominal(s.var), o_y)
        return FAnd(renamed,
                    Eq(Exists(Role(s.fieldname, inverted=True), Nominal(s.src)), o_y))
    if isinstance(s, WriteField):
        update = role(s.fieldname).updated(s.var, _expr_nominal(s.expr).name)
        return substitute(phi, role(s.fieldname), update)
    if isinstance(s, If):
        eb = eps_bool(s.cond)
        return FOr(FAnd(eb, psi(s.then, phi, heap)),
                   FAnd(FNot(eb), psi(s.els, phi, heap)))
    if isinstance(s, New):
        o_y = Nominal(label_nominal(s.label))
        out = substitute(phi, Nominal(s.var), o_y)
        out = substitute(out, Atomic("Alloc"), Or(Atomic("Alloc"), o_y))
        # the MemPool conjunct pins the allocation label to a pool cell;
        # without it, assignments placing the label on an unallocated
        # non-pool cell can satisfy the output although no run allocates it
        return FAnd(FAnd(out, Incl(o_y, Not(Atomic("Alloc")))),
                    Incl(o_y, Atomic("MemPool")))
    if isinstance(s, Dispose):
        out = substitute(phi, Atomic("Alloc"), And(Atomic("Alloc"), Not(Nominal(s.var))))
        occurring = formula_symbols(out)["roles"]
        for f in heap.fields:
            if f in occurring:
                out = substitute(out, role(f), role(f).updated(s.var, "null"))
        return out
    if isinstance(s, Seq):
        return psi(s.first, psi(s.second, phi, heap), heap)
    if isinstance(s, Assume):
        raise AssumeInPsiError("assume is outside the transformer table; use theta")
    raise TypeError(f"not a statement: {s!r}")  # pragma: no cover


def phi_ext(s: Stmt, post: Formula, heap: HeapVocabulary,
            ext_map: dict[str, str] | None = None) -> Formula:
    """psi after renaming the unconstrained relations of the postcondition
    to their post-state copies (the renaming happens once, up front)."""
    ext_map = tau_rem_map(heap) if ext_map is None else ext_map
    renamed = post
    for name in heap.tau_rem():
        new = ext_map[name]
        if name in heap.data_concepts:
            renamed = substitute(renamed, Atomic(name), Atomic(new))
        else:
            renamed = substitute(renamed, role(name), role(new))
    return psi(s, renamed, heap)


@dataclass(frozen=True)
class ThetaResult:
    formula: Formula
    instrumented: Stmt
    label_nominals: tuple[str, ...]
    ext_map: dict[str, str]


def theta_full(s: Stmt, post: Formula, heap: HeapVocabulary,
               ext_map: dict[str, str] | None = None,
               mode: str = "semantic") -> ThetaResult:
    """theta(S, phi): phi_ext over the instrumented program applied to the
    conjunction of phi and (o_abo == o_F), with the fresh-symbol inventory."""
    check_postcondition(post)
    ext_map = tau_rem_map(heap) if ext_map is None else ext_map
    sbar = instrument_abort(s, mode)
    target = FAnd(post, Eq(Nominal("abo"), Nominal("F")))
    out = phi_ext(sbar, target, heap, ext_map)
    labels = tuple(label_nominal(lab) for lab in sorted(labels_of(sbar)))
    return ThetaResult(out, sbar, labels, dict(ext_map))


def theta(s: Stmt, post: Formula, heap: HeapVocabulary,
          ext_map: dict[str, str] | None = None, mode: str = "semantic") -> Formula:
    return theta_full(s, post, heap, ext_map, mode).formula


def theta_vocabulary(heap: HeapVocabulary, res: ThetaResult) -> Vocabulary:
    """The vocabulary of theta's output: tau plus the ext copies, the label
    nominals actually mentioned, and the abort variable."""
    vocab = heap.with_variables(("abo",)).vocabulary()
    ext_concepts = [ext_name(c) for c in heap.data_concepts]
    ext_roles = [ext_name(r) for r in heap.data_roles]
    mentioned = formula_symbols(res.formula)["nominals"]
    labels = tuple(name for name in res.label_nominals if name in mentioned)
    return vocab.with_concepts(ext_concepts).with_roles(ext_roles).with_nominals(labels)


def theta_structure(m1: "MemoryStructure", m2: "MemoryStructure",
                    d: dict[int, int], d_abo: int,
                    ext_map: dict[str, str] | None = None) -> "FiniteStructure":
    """The extended pre-state of the backwards-propagation lemma: m1 plus
    the post-state copies of the unconstrained relations, the label
    constants, and the abort flag's initial value."""
    from .structures import FiniteStructure

    heap = m1.heap
    ext_map = tau_rem_map(heap) if ext_map is None else ext_map
    concepts = dict(m1.fs.concepts)
    roles = dict(m1.fs.roles)
    nominals = dict(m1.fs.nominals)
    for name in heap.data_concepts:
        concepts[ext_map[name]] = m2.fs.concept_ext(name)
    for name in heap.data_roles:
        roles[ext_map[name]] = m2.fs.role_ext(name)
    for lab, elem in d.items():
        nominals[label_nominal(lab)] = elem
    nominals["abo"] = d_abo
    return FiniteStructure(m1.fs.universe, concepts, roles, nominals)


# ---------------------------------------------------------------------------
# Update-role elimination


def _count_updates(phi: Formula) -> int:
    total = 0

    def cwalk(c: Concept) -> None:
        nonlocal total
        if isinstance(c, (And, Or)):
            cwalk(c.left)
            cwalk(c.right)
        elif isinstance(c, Not):
            cwalk(c.inner)
        elif isinstance(c, (Exists, AtMost)):
            total += len(c.role.updates)
            cwalk(c.inner)

    def walk(f: Formula) -> None:
        if isinstance(f, (Incl, Eq)):
            cwalk(f.left)
            cwalk(f.right)
        elif isinstance(f, (FAnd, FOr)):
            walk(f.left)
            walk(f.right)
        else:
            walk(f.inner)

    walk(phi)
    return total


def _first_updated(phi: Formula) -> Concept | None:
    found: list[Concept] = []

    def cwalk(c: Concept) -> bool:
        if isinstance(c, (And, Or)):
            return cwalk(c.left) or cwalk(c.right)
        if isinstance(c, Not):
            return cwalk(c.inner)
        if isinstance(c, (Exists, AtMost)):
            if c.role.updates:
                found.append(c)
                return True
            return cwalk(c.inner)
        return False

    def walk(f: Formula) -> bool:
        if isinstance(f, (Incl, Eq)):
            return cwalk(f.left) or cwalk(f.right)
        if isinstance(f, (FAnd, FOr)):
            return walk(f.left) or walk(f.right)
        return walk(f.inner)

    walk(phi)
    return found[0] if found else None


def _replace_concept(phi: Formula, old: Concept, new: Concept) -> Formula:
    def crepl(c: Concept) -> Concept:
        return _subst_concept(c, lambda cc: new if cc == old else None)

    return _map_formula(phi, crepl)


def eliminate_updates(phi: Formula) -> Formula:
    """Rewrite away update roles, outermost point first.  The point's
    target-membership test is a global condition, so each step splits the
    whole formula on it; the result is update-free and equivalent on every
    structure interpreting the point nominals."""
    target = _first_updated(phi)
    if target is None:
        return phi
    r = target.role
    point = r.updates[-1]
    base = Role(r.name, False, r.updates[:-1])
    base_inv = Role(r.name, True, r.updates[:-1])
    s, t = Nominal(point.source), Nominal(point.target)
    inner = target.inner

    if isinstance(target, Exists):
        if not r.inverted:
            side = Incl(t, inner)  # target element satisfies the filler
            repl_true: Concept = Or(s, And(Not(s), Exists(base, inner)))
            repl_false: Concept = And(Not(s), Exists(base, inner))
        else:
            side = Incl(s, inner)
            rest = Exists(base_inv, And(inner, Not(s)))
            repl_true = Or(rest, t)
            repl_false = rest
    else:
        n = target.bound
        if not r.inverted:
            side = Incl(t, inner)
            keep = AtMost(n, base, inner)
            repl_false = Or(s, And(Not(s), keep))
            if n >= 1:
                repl_true = Or(s, And(Not(s), keep))
            else:
                repl_true = And(Not(s), keep)
        else:
            side = Incl(s, inner)
            rest_c = And(inner, Not(s))
            repl_false = AtMost(n, base_inv, rest_c)
            if n >= 1:
                repl_true = Or(And(t, AtMost(n - 1, base_inv, rest_c)),
                               And(Not(t), AtMost(n, base_inv, rest_c)))
            else:
                repl_true = And(Not(t), AtMost(0, base_inv, rest_c))

    phi_true = _replace_concept(phi, target, repl_true)
    phi_false = _replace_concept(phi, target, repl_false)
    return FOr(FAnd(eliminate_updates(side), eliminate_updates(phi_true)),
               FAnd(FNot(eliminate_updates(side)), eliminate_updates(phi_false)))

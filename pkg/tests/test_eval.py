import random
from itertools import product

from reachdl.parser import parse_formula
from reachdl.structures import (eval_concept, eval_formula, structure, type_of,
                                types_of_all)
from reachdl.syntax import (And, AtMost, Atomic, Bot, Exists, FAnd, Incl,
                            Nominal, Not, Role, TOP, Top, UpdatePoint,
                            Vocabulary, concepts_of, exactly, inv, role,
                            to_text)
from gen import random_formula, random_structure

V = Vocabulary(concepts={"L", "A", "B"}, roles={"next", "r"},
               functional={"next"}, nominals={"head", "proj", "e"})

CHAIN = structure(range(3), {"L": [0, 1, 2]}, {"next": [(0, 1), (1, 2)]},
                  {"head": 0, "proj": 0, "e": 0})


def test_not_top_is_empty():
    assert eval_concept(CHAIN, Not(TOP)) == frozenset()


def test_exists_next_top():
    # direct enumeration of the pairs: sources of next edges
    assert eval_concept(CHAIN, Exists(role("next"), TOP)) == frozenset({0, 1})


def test_update_role_override():
    # universe with proj=5 available; update next at e=2 to point at proj
    m = structure(range(6), {}, {"next": [(0, 1), (1, 2), (2, 3)]},
                  {"e": 2, "proj": 5})
    u = Role("next", updates=(UpdatePoint("e", "proj"),))
    # brute force: e's successors become {proj}; others unchanged
    assert eval_concept(m, Exists(u, Nominal("proj"))) == frozenset({2})
    assert eval_concept(m, Exists(u, TOP)) == frozenset({0, 1, 2})


def test_update_then_invert():
    m = structure(range(3), {}, {"next": [(0, 1)]}, {"e": 0, "proj": 2})
    u = Role("next", updates=(UpdatePoint("e", "proj"),))
    # updated relation is {(0,2)}; its inverse is {(2,0)}
    assert m.role_pairs(u.inverse()) == frozenset({(2, 0)})


def test_bot_inclusion_always_true():
    rng = random.Random(3)
    for _ in range(20):
        m = random_structure(rng, V, 4)
        assert eval_formula(m, Incl(Bot(), Atomic("A")))


def test_chain_predecessor_formula():
    phi = parse_formula("L & !head <= E next^-.L", V)
    assert eval_formula(CHAIN, phi)
    broken = structure(range(3), {"L": [0, 1, 2]}, {"next": [(0, 1)]},
                       {"head": 0, "proj": 0, "e": 0})
    assert not eval_formula(broken, phi)  # element 2 has no predecessor


def test_counting_expansion_matches_direct_count():
    # E=n r.C agrees with counting successors directly
    rng = random.Random(5)
    for _ in range(100):
        m = random_structure(rng, V, 4)
        c = Atomic("A")
        for n in range(3):
            got = eval_concept(m, exactly(n, role("r"), c))
            want = frozenset(
                u for u in m.universe
                if sum(1 for a, b in m.role_ext("r")
                       if a == u and b in m.concept_ext("A")) == n)
            assert got == want


def test_type_of_examples():
    phi = Incl(Atomic("A"), Atomic("B"))
    m = structure(range(2), {"A": [0], "B": [0]}, {}, {})
    assert type_of(m, phi, 0) == frozenset({Atomic("A"), Atomic("B")})
    assert type_of(m, phi, 1) == frozenset()


def test_type_of_distinguishes_head():
    from reachdl.reach import list_spec, assoc_formula

    phi = assoc_formula(list_spec())
    types = types_of_all(CHAIN, concepts_of(phi))
    assert types[0] != types[1]
    assert types[1] == types[2]


def test_lemma_types_same_types_agree():
    """Mutating concepts outside the formula leaves satisfaction unchanged
    whenever all element types agree."""
    rng = random.Random(17)
    for _ in range(200):
        m = random_structure(rng, V, 4)
        phi = random_formula(rng, V, depth=1, cdepth=2)
        cs = concepts_of(phi)
        used = {c.name for c in cs if isinstance(c, Atomic)}
        spare = sorted(V.concepts - used)
        if not spare:
            continue
        mutated = m.with_concept(spare[0],
                                 frozenset(u for u in m.universe if rng.random() < 0.5))
        if types_of_all(m, cs) == types_of_all(mutated, cs):
            assert eval_formula(m, phi) == eval_formula(mutated, phi)


def test_empty_universe_admitted_without_nominals():
    m = structure((), {}, {}, {})
    assert eval_formula(m, Incl(TOP, Bot()))  # vacuous over the empty universe

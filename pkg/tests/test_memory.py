import pytest

from reachdl.memory import (HeapVocabulary, MemoryAxiomError, MemorySearch,
                            MemoryStructure, ghost, infer_memory, make_memory)
from reachdl.parser import parse_memory_file, structure_to_text
from reachdl.structures import eval_formula, structure
from reachdl.syntax import Atomic, Incl, Nominal, ReachDLError

HEAP = HeapVocabulary(fields=("f",), variables=("x", "y"), data_concepts=("P1",))


def test_make_memory_valid():
    m = make_memory(HEAP, alloc=2, targets=1, pool=3)
    assert m.violations() == []
    assert m.alloc() == frozenset({3, 4})
    assert m.targets() == frozenset({5})
    assert m.pool() == frozenset({6, 7, 8})
    assert m.var("x") == m.null()
    # fields are total on addresses, pool cells map to null
    for a in sorted(m.addresses()):
        assert m.field_value("f", a) is not None
    # ghosts snapshot the current interpretation
    assert m.fs.role_ext(ghost("f")) == m.fs.role_ext("f")


def test_heap_vocabulary_reserved_names():
    with pytest.raises(ReachDLError):
        HeapVocabulary(fields=("Alloc",))
    with pytest.raises(ReachDLError):
        HeapVocabulary(variables=("x_gho",))


def test_tau_rem_is_data_relations():
    heap = HeapVocabulary(fields=("f",), variables=("x",),
                          data_concepts=("P1",), data_roles=("rel",))
    assert heap.tau_rem() == ("P1", "rel")


def test_axiom_violations_reported():
    m = make_memory(HEAP, alloc=1, targets=0, pool=2)
    # point a constant into the pool
    bad = m.with_fs(m.fs.with_nominal("x", sorted(m.pool())[0]))
    assert any("MemPool" in v for v in bad.violations())
    # a field leaking into the pool
    bad2 = m.with_fs(m.fs.with_function_value("f", 3, sorted(m.pool())[0]))
    assert any("maps 3 into MemPool" in v for v in bad2.violations())
    # data concept touching the pool
    bad3 = m.with_fs(m.fs.with_concept("P1", m.pool()))
    assert any("P1" in v for v in bad3.violations())
    # broken partition
    bad4 = m.with_fs(m.fs.with_concept("Alloc", m.alloc() | m.pool()))
    assert any("partition" in v for v in bad4.violations())
    with pytest.raises(MemoryAxiomError):
        bad.check()


def test_pool_reserve_parameter():
    m = make_memory(HEAP, alloc=1, targets=0, pool=1)
    assert m.violations(min_pool=1) == []
    assert any("MemPool" in v for v in m.violations(min_pool=2))


def test_memory_file_round_trip(tmp_path):
    m = make_memory(HEAP, alloc=1, targets=0, pool=2,
                    variables={"x": 3}, concepts={"P1": {3}})
    text = "MEMORY\nFIELDS f\nVARS x y\nCONCEPTS P1\n" + structure_to_text(
        m.fs, m.heap.vocabulary().functional)
    back = parse_memory_file(text)
    assert back.fs == m.fs
    assert back.heap.fields == ("f",)


def test_infer_memory():
    m = make_memory(HEAP, alloc=1, targets=0, pool=2, concepts={"P1": {3}})
    inferred = infer_memory(m.fs)
    assert set(inferred.heap.fields) == {"f"}
    assert set(inferred.heap.variables) == {"x", "y"}
    assert set(inferred.heap.data_concepts) == {"P1"}


def test_memory_search_finds_annotated_structures():
    phi = Incl(Nominal("x"), Atomic("Alloc"))
    found = []
    for m in MemorySearch(HEAP, 2, (phi,)):
        assert eval_formula(m.fs, phi)
        assert m.violations(min_pool=0) == []
        found.append(m)
        if len(found) >= 50:
            break
    assert found


def test_memory_search_respects_unsat():
    phi = Incl(Nominal("null"), Atomic("Alloc"))  # null is never allocated
    assert list(MemorySearch(HEAP, 2, (phi,))) == []

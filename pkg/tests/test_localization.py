import numpy as np
import pytest

from conftest import fixture_path
from oracles import RECORDS
from stratspec.errors import ArgumentError
from stratspec.io import load_system
from stratspec.localization import (
    attribute_residue,
    classify_defects,
    disjoint_supports,
    interface_jordan_info,
    interface_operator,
)
from stratspec.system import InterfaceCoupling, Stratum, StratifiedSystem, interaction_residue


def load(name):
    return load_system(fixture_path(name))


def test_block_system_single_interface_covers_residue():
    rep = attribute_residue(load("block_7_4.json"))
    assert rep.mode == "leave_one_out" and rep.covered
    assert len(rep.defect("I12").points) == 4


def test_two_pairs_attributed_to_own_interface():
    sys = load("two_pairs.json")
    rep = attribute_residue(sys)
    expected = RECORDS["two_pairs_attribution"].expected
    ia, ib = rep.defect("IA").points, rep.defect("IB").points
    assert len(ia) == expected["IA"] and len(ib) == expected["IB"]
    assert all(z.real < 7 for z in ia) and all(z.real > 7 for z in ib)
    assert rep.covered


def test_attributed_sets_partition_covered_residue():
    sys = load("two_pairs.json")
    rep = attribute_residue(sys)
    tol = sys.tolerance()
    claimed = [z for d in rep.interfaces for z in d.points]
    assert all(rep.residue.contains(z, tol) for z in claimed)
    assert all(any(abs(z - c) <= tol for c in claimed) for z in rep.residue)


def test_chain_allows_multi_attribution():
    rep = attribute_residue(load("chain_3.json"))
    ab, bc = set(rep.defect("ab").points), set(rep.defect("bc").points)
    assert ab & bc
    assert rep.covered


def test_zero_coupling_gives_empty_attribution():
    rep = attribute_residue(load("zero_coupling.json"))
    assert not rep.residue
    assert all(not d.points for d in rep.interfaces)


def test_tau_support_mode_reports_uncovered_points():
    # the residue points are not eigenvalues of tau^H tau = 0.25 I
    rep = attribute_residue(load("block_7_4.json"), mode="tau_support")
    assert len(rep.uncovered) == 4 and not rep.covered


def test_unknown_mode():
    with pytest.raises(ArgumentError):
        attribute_residue(load("block_7_4.json"), mode="guess")


def test_threaded_attribution_matches_serial(monkeypatch):
    sys = load("two_pairs.json")
    serial = attribute_residue(sys)
    monkeypatch.setenv("STRATSPEC_THREADS", "4")
    threaded = attribute_residue(sys)
    assert [d.points for d in serial.interfaces] == [d.points for d in threaded.interfaces]


def test_interface_operator_choice():
    sys = load("point_7_1.json")
    assert np.array_equal(interface_operator(sys, sys.interface("P")), np.diag([2.5, 3.5]))
    nil = load("nilpotent_7_5.json")
    assert np.array_equal(interface_operator(nil, nil.interface("J")), [[0.7, 1], [0, 0.7]])
    blk = load("block_7_4.json")
    assert np.allclose(interface_operator(blk, blk.interface("I12")), 0.25 * np.eye(2))


def test_point_interface_block_is_semisimple():
    sys = load("point_7_1.json")
    rep = classify_defects(attribute_residue(sys), interface_jordan_info(sys))
    d = rep.defect("P")
    assert d.points and d.label == "(point, semisimple)"
    assert d.signature == "isolated eigenvalue(s)"


def test_nilpotent_interface():
    sys = load("nilpotent_7_5.json")
    rep = classify_defects(attribute_residue(sys), interface_jordan_info(sys))
    d = rep.defect("J")
    assert d.algebraic_class == "nilpotent" and d.depth == 2
    assert d.label == "(point, nilpotent depth 2)"
    assert "Jordan block of size 2" in d.signature


def test_line_interface_is_semisimple_band():
    sys = load("line_7_2.json")
    rep = classify_defects(attribute_residue(sys), interface_jordan_info(sys))
    (d,) = rep.interfaces
    assert d.geometric_class == "line" and d.algebraic_class == "semisimple"
    assert d.signature == "continuous spectral band"


def test_missing_jordan_info_is_an_error():
    sys = load("block_7_4.json")
    with pytest.raises(ArgumentError):
        classify_defects(attribute_residue(sys), {})
    empty = classify_defects(attribute_residue(load("zero_coupling.json")), {})
    assert all(d.algebraic_class is None for d in empty.interfaces)


def test_disjoint_supports_give_disjoint_tau_support_sets():
    # tau^H tau spectra {0.25} and {0.09} are far apart
    sys = load("two_pairs.json")
    tol = sys.tolerance()
    assert disjoint_supports(sys, tol)
    rep = attribute_residue(sys, mode="tau_support")
    sets = [set(d.points) for d in rep.interfaces]
    assert not (sets[0] & sets[1])


def test_tau_support_hits_when_residue_meets_operator_spectrum():
    # H = [[0, 1], [1, 0]] has eigenvalues +-1 and tau^H tau = 1
    sys = StratifiedSystem(
        (Stratum("a", [[0.0]]), Stratum("b", [[0.0]])),
        (InterfaceCoupling("I", "b", "a", [[1.0]], hermitian_completion=True),),
    )
    assert len(interaction_residue(sys)) == 2
    rep = attribute_residue(sys, mode="tau_support")
    assert rep.defect("I").points == [pytest.approx(1.0)]
    assert len(rep.uncovered) == 1

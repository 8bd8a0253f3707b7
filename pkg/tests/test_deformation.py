import numpy as np
import pytest

from conftest import fixture_path
from oracles import RECORDS
from stratspec import deformation
from stratspec.deformation import (
    SweepSchedule,
    check_gap_condition,
    coupled_at,
    detect_exceptional,
    match_branches,
    run_sweep,
    track_beta0_constancy,
)
from stratspec.errors import ArgumentError, ConvergenceError, DiagnosticError
from stratspec.io import load_system
from stratspec.system import InterfaceCoupling, Stratum, StratifiedSystem, assemble_global


def block_sweep(steps=21):
    return run_sweep(load_system(fixture_path("block_7_4.json")), SweepSchedule.uniform(steps))


def closed_form(t):
    r = np.sqrt(1 + t * t)  # coupling 0.5 t on each channel
    return np.sort([(3 - r) / 2, (3 + r) / 2, (9 - r) / 2, (9 + r) / 2])


@pytest.mark.parametrize(
    "values",
    [[0.5], [0.2, 0.1], [0.0, 0.0], [-0.1, 0.5], [0.5, 1.5]],
)
def test_schedule_validation(values):
    with pytest.raises(ArgumentError):
        SweepSchedule(values)


def test_rule_validation():
    sys = load_system(fixture_path("example_1_1.json"))
    with pytest.raises(ArgumentError):
        coupled_at(sys, 0.5, {"eps": "x + s"})
    scaled = coupled_at(sys, 0.5, {"eps": "s^2"})
    assert scaled.interface("eps").tau[0, 0] == pytest.approx(0.125)


def test_block_sweep_endpoints_and_increments():
    tr = block_sweep()
    assert not tr.residues[0] and tr.gaps[0] is None and tr.increments[0] is None
    assert np.allclose(sorted(z.real for z in tr.residues[-1]), closed_form(1.0), atol=1e-9)
    steps = np.array([closed_form(t) for t in tr.t])
    bound = 2 * np.abs(np.diff(steps, axis=0)).max()
    assert max(x for x in tr.increments if x is not None) <= bound
    assert len(tr.rows()) == 21 and not tr.truncated


def test_local_spectrum_constant_along_sweep():
    tr = block_sweep(5)
    assert sorted(z.real for z in tr.local) == pytest.approx([1, 2, 4, 5])


def test_constant_rule_has_zero_increments():
    sys = load_system(fixture_path("block_7_4.json"))
    tr = run_sweep(sys, SweepSchedule.uniform(6, {"I12": "constant"}))
    assert all(x == 0.0 for x in tr.increments)


def test_example_branches_follow_closed_form():
    sys = StratifiedSystem(
        (Stratum("a", [[1.0]]), Stratum("b", [[2.0]])),
        (InterfaceCoupling("eps", "b", "a", [[1.0]], hermitian_completion=True),),
    )
    tr = run_sweep(sys, SweepSchedule.uniform(11))
    for k, t in enumerate(tr.t):
        expected = [(3 - np.sqrt(1 + 4 * t * t)) / 2, (3 + np.sqrt(1 + 4 * t * t)) / 2]
        assert np.abs(np.sort(tr.branches.paths[:, k].real) - expected).max() <= 1e-8
    # each branch stays on one side: lower from 1, upper from 2
    assert tr.branches.branch(0)[-1].real < 1 < 2 < tr.branches.branch(1)[-1].real


def test_branch_matching_reverse_round_trip():
    rng = np.random.default_rng(4)
    base = rng.normal(size=5) + 1j * rng.normal(size=5)
    steps = [rng.permutation(base + 0.01 * k * (1 + 1j) * np.arange(5)) for k in range(8)]
    fwd = match_branches(steps, 1e-9).paths
    rev = match_branches(steps[::-1], 1e-9).paths[:, ::-1]
    key = lambda p: tuple(np.round(p, 12))
    assert sorted(map(key, fwd)) == sorted(map(key, rev))


def test_branch_matching_records_collisions():
    bs = match_branches([[0.0, 1.0], [0.5, 0.5]], 1e-6)
    assert bs.collisions
    with pytest.raises(ArgumentError):
        match_branches([[0.0], [0.0, 1.0]], 1e-6)


def test_gap_condition_on_block_sweep():
    tr = block_sweep()
    # smallest gap on [0.2, 1] sits at t = 0.2: 1 - (3 - sqrt(1.04)) / 2
    check = check_gap_condition(tr, 0.05, (0.2, 1.0))
    assert not check.ok and check.first_violation == pytest.approx(0.2)
    assert check.min_gap == pytest.approx((np.sqrt(1.04) - 1) / 2, rel=1e-8)
    assert check_gap_condition(tr, 0.009, (0.2, 1.0)).ok
    # the gap grows monotonically over that range
    gaps = [g for t, g in zip(tr.t, tr.gaps) if t >= 0.2 - 1e-12]
    assert all(b > a for a, b in zip(gaps, gaps[1:]))


def test_gap_condition_forced_violation_and_vacuous_case():
    tr = block_sweep(5)
    check = check_gap_condition(tr, 10.0)
    assert not check.ok and check.first_violation == tr.t[1]
    empty = run_sweep(load_system(fixture_path("zero_coupling.json")), SweepSchedule.uniform(4))
    assert check_gap_condition(empty, 1.0).ok
    assert check_gap_condition(empty, 1.0).min_gap is None


def test_beta0_constant_on_upper_range():
    tr = run_sweep(load_system(fixture_path("block_7_4.json")), SweepSchedule.uniform(21), beta0_gap=0.1)
    check = track_beta0_constancy(tr, (0.2, 1.0))
    assert check.constant and set(check.values) == {4}


def test_beta0_transition_when_points_coalesce():
    # eigenvalues 0.05 +- sqrt(0.0025 - t^2) meet at t = 0.05 and split into a complex pair
    sys = StratifiedSystem(
        (Stratum("a", [[0.0]]), Stratum("b", [[0.1]])),
        (InterfaceCoupling("I", "b", "a", [[1.0]]), InterfaceCoupling("J", "a", "b", [[-1.0]])),
    )
    sched = SweepSchedule(tuple(np.linspace(0.01, 0.1, 37)))
    tr = run_sweep(sys, sched, beta0_gap=0.05)
    check = track_beta0_constancy(tr)
    assert not check.constant
    assert 1 in check.values and 2 in check.values
    assert 0.04 < check.transitions[0] < 0.06


def test_beta0_empty_family():
    tr = run_sweep(load_system(fixture_path("zero_coupling.json")), SweepSchedule.uniform(3))
    check = track_beta0_constancy(tr)
    assert check.constant and check.values == []


def test_eigensolver_failure_truncates(monkeypatch):
    real = deformation.analyze_residue

    def flaky(sys, tol=None):
        if abs(sys.interfaces[0].tau[0, 0]) > 0.3:
            raise ConvergenceError("stalled")
        return real(sys, tol)

    monkeypatch.setattr(deformation, "analyze_residue", flaky)
    tr = run_sweep(load_system(fixture_path("block_7_4.json")), SweepSchedule.uniform(11))
    assert tr.truncated and "stalled" in tr.diagnostic
    assert len(tr.t) == len(tr.residues) == 6


def jordan_builder(lam, k):
    def build(eps):
        m = lam * np.eye(k) + np.diag(np.ones(k - 1), 1)
        m[k - 1, 0] = eps
        return m
    return build


def test_exceptional_point_j2():
    fit = detect_exceptional(jordan_builder(0.7, 2), 0.7)
    assert fit.exponent == pytest.approx(0.5, abs=0.05)
    assert fit.m == 2 and fit.reliable and fit.cluster_size == 2


def test_exceptional_point_j3():
    fit = detect_exceptional(jordan_builder(0.0, 3), 0.0)
    assert fit.exponent == pytest.approx(RECORDS["exceptional_J3"].expected, abs=0.05)
    assert fit.m == 3 and fit.reliable


def test_exceptional_on_stratified_builder():
    def build(eps):
        return StratifiedSystem(
            (Stratum("a", [[1.0]]), Stratum("b", [[1.0]])),
            (InterfaceCoupling("N", "b", "a", [[1.0]]), InterfaceCoupling("E", "a", "b", [[eps]])),
        )
    fit = detect_exceptional(build, 1.0)
    assert fit.m == 2
    assert assemble_global(build(0.0))[0, 1] == 1


def test_analytic_splitting_is_second_order():
    # the eigenvalue near 1 moves by (sqrt(1 + 4 eps^2) - 1) / 2 ~ eps^2
    def build(eps):
        return np.array([[1.0, eps], [eps, 2.0]])
    fit = detect_exceptional(build, 1.0, eps_grid=np.logspace(-4, -1, 7))
    assert fit.exponent == pytest.approx(RECORDS["analytic_split"].expected, abs=0.05)
    assert fit.m == 1


def test_exceptional_diagnostics():
    def contaminated(eps):
        m = np.zeros((3, 3))
        m[0, 1], m[1, 0], m[2, 2] = 1.0, eps, 5e-3
        return m
    with pytest.raises(DiagnosticError):
        detect_exceptional(contaminated, 0.0, cluster_size=2)
    with pytest.raises(DiagnosticError):
        detect_exceptional(lambda eps: np.array([[0.0, 1.0], [1e-6, 0.0]]), 0.0, cluster_size=2)
    with pytest.raises(ArgumentError):
        detect_exceptional(jordan_builder(0.0, 2), 3.0)
    with pytest.raises(ArgumentError):
        detect_exceptional(jordan_builder(0.0, 2), 0.0, eps_grid=[1e-3, 1e-4, 1e-2])

"""Coupling-strength sweeps, gap and beta_0 tracking, exceptional points.

A sweep scales each interface coupling by ``g_I(t)`` and records, per
``t``, the residue ``R_t``, its distance to the local spectrum, the number
of its connected components at a fixed gap and the global eigenvalues
matched into branches.  Strata never change along a sweep, so ``L_t`` is
constant.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ConvergenceError, DiagnosticError
from .expr import evaluate, parse_expression, variables
from .numlin import default_tolerance, eigenvalues, sort_key
from .spectra import cluster_components, hausdorff_distance, min_distance
from .system import StratifiedSystem, analyze_residue, assemble_global, with_coupling_scales

__all__ = [
    "BranchSet",
    "DeformationTrajectory",
    "ExceptionalFit",
    "GapCheck",
    "SweepSchedule",
    "Beta0Check",
    "check_gap_condition",
    "coupled_at",
    "detect_exceptional",
    "match_branches",
    "run_sweep",
    "track_beta0_constancy",
]

SLOPE_RESIDUAL_MAX = 0.05


class _Rule:
    """Scale factor ``g(t)``: ``linear``, ``constant`` or an expression in ``s``."""

    def __init__(self, spec):
        self.text = "linear" if spec is None else str(spec)
        if self.text in ("linear", "constant"):
            self.node = None
        else:
            self.node = parse_expression(self.text)
            extra = variables(self.node) - {"s"}
            if extra:
                raise ArgumentError(f"sweep rule {self.text!r} may only use the variable s, found {sorted(extra)}")

    def __call__(self, t):
        if self.text == "linear":
            return float(t)
        if self.text == "constant":
            return 1.0
        return float(evaluate(self.node, {"s": float(t)}))


@dataclass(frozen=True)
class SweepSchedule:
    """Parameter values and per-interface coupling rules.

    ``rules`` maps interface ids to ``"linear"`` (``g(t) = t``),
    ``"constant"`` (``g = 1``) or expression text in the variable ``s``
    standing for ``t``.  Interfaces without an entry use their own
    ``sweep_rule`` or, failing that, ``linear``.
    """

    values: tuple
    rules: dict = field(default_factory=dict)
    parameter: str = "t"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ArgumentError("a schedule needs at least 2 values")
        if np.any(np.diff(v) <= 0):
            raise ArgumentError("schedule values must be strictly increasing")
        if v[0] < 0 or v[-1] > 1:
            raise ArgumentError("schedule values must lie in [0, 1]")
        object.__setattr__(self, "values", tuple(float(x) for x in v))
        object.__setattr__(self, "rules", dict(self.rules))

    @classmethod
    def uniform(cls, steps, rules=None, start=0.0, stop=1.0):
        return cls(tuple(np.linspace(start, stop, int(steps))), rules or {})

    def rule_for(self, itf):
        return _Rule(self.rules.get(itf.id, itf.sweep_rule))


def coupled_at(sys, t, rules=None):
    """System with every coupling scaled by its rule evaluated at ``t``."""
    rules = rules or {}
    scales = {itf.id: _Rule(rules.get(itf.id, itf.sweep_rule))(t) for itf in sys.interfaces}
    return with_coupling_scales(sys, scales)


@dataclass(frozen=True)
class BranchSet:
    """Matched eigenvalue paths: ``paths[b, k]`` is branch ``b`` at step ``k``."""

    paths: np.ndarray
    collisions: list

    def branch(self, b):
        return self.paths[b]


def _greedy_pairs(prev, cur):
    d = np.abs(prev[:, None] - cur[None, :])
    order = np.lexsort((np.arange(d.size) % d.shape[1], np.arange(d.size) // d.shape[1], d.ravel()))
    used_p = np.zeros(prev.size, dtype=bool)
    used_c = np.zeros(cur.size, dtype=bool)
    perm = np.empty(prev.size, dtype=int)
    for flat in order:
        i, j = divmod(int(flat), d.shape[1])
        if used_p[i] or used_c[j]:
            continue
        used_p[i] = used_c[j] = True
        perm[i] = j
    return perm


def match_branches(steps, tol):
    """Greedy nearest-neighbour matching of eigenvalue lists across steps.

    At each step the closest unmatched (branch, value) pair is fixed first.
    A collision is recorded when a branch has two candidate values within
    ``tol`` of each other, where the pairing is arbitrary.
    """
    steps = [np.asarray(s, dtype=complex) for s in steps]
    n = steps[0].size
    if any(s.size != n for s in steps):
        raise ArgumentError("every step must carry the same number of eigenvalues")
    paths = np.empty((n, len(steps)), dtype=complex)
    paths[:, 0] = steps[0]
    collisions = []
    for k in range(1, len(steps)):
        prev, cur = paths[:, k - 1], steps[k]
        perm = _greedy_pairs(prev, cur)
        paths[:, k] = cur[perm]
        for b in range(n):
            close = np.abs(cur - cur[perm[b]])
            close[perm[b]] = np.inf
            if close.min(initial=np.inf) <= tol:
                collisions.append((k, b))
    return BranchSet(paths=paths, collisions=collisions)


@dataclass(frozen=True)
class DeformationTrajectory:
    """Per-``t`` residue data of a sweep.

    ``gaps[k]`` is ``dist(R_t, L)`` or ``None`` when ``R_t`` is empty;
    ``increments[k]`` is the Hausdorff distance between ``R`` at steps
    ``k`` and ``k + 1`` or ``None`` when either is empty.  If the
    eigensolver failed at some ``t`` the trajectory stops there and
    ``diagnostic`` says why.
    """

    t: tuple
    residues: list
    gaps: list
    beta0: list
    increments: list
    branches: BranchSet
    local: object
    beta0_gap: float
    tol: float
    diagnostic: str | None = None

    @property
    def truncated(self):
        return self.diagnostic is not None

    def rows(self):
        """``(t, gap, beta0, increment-from-previous, residue points)`` per step."""
        out = []
        for k, t in enumerate(self.t):
            inc = self.increments[k - 1] if k > 0 else None
            out.append((t, self.gaps[k], self.beta0[k], inc, self.residues[k].to_list()))
        return out


def _default_gap(residues, fallback):
    for r in residues:
        if len(r) >= 2:
            d = np.abs(r.points[:, None] - r.points[None, :])
            np.fill_diagonal(d, np.inf)
            return 0.1 * float(np.median(d.min(axis=1)))
        if len(r) == 1:
            return fallback
    return fallback


def run_sweep(sys, sched, beta0_gap=None, tol=None):
    """Sweep the coupling strengths along ``sched``.

    The matching tolerance is fixed for the whole sweep (the system
    tolerance at full coupling unless ``tol`` is given).  The beta_0 gap
    defaults to ``0.1`` times the median nearest-neighbour distance of the
    first residue with at least two points.
    """
    if not isinstance(sys, StratifiedSystem):
        raise ArgumentError("run_sweep needs a StratifiedSystem")
    tol = sys.tolerance() if tol is None else float(tol)
    ts, analyses, diag = [], [], None
    for t in sched.values:
        try:
            analyses.append(analyze_residue(coupled_at(sys, t, sched.rules), tol))
        except ConvergenceError as exc:
            diag = f"eigensolver failed at t = {t:g}: {exc}"
            break
        ts.append(t)
    if not analyses:
        raise ConvergenceError(diag or "sweep produced no steps")
    residues = [a.residue for a in analyses]
    local = analyses[0].local_all
    if beta0_gap is None:
        beta0_gap = _default_gap(residues, 1e-3 * max(1.0, float(np.linalg.norm(assemble_global(sys), 2))))
    beta0 = [cluster_components(r, beta0_gap).beta0 if r else 0 for r in residues]
    gaps = [min_distance(r, local) for r in residues]
    increments = [hausdorff_distance(a, b) for a, b in zip(residues, residues[1:])]
    expanded = [a.global_.points.repeat(a.global_.weights.astype(int)) for a in analyses]
    if len({e.size for e in expanded}) == 1:
        expanded = [np.array(sorted(e, key=sort_key)) for e in expanded]
        branches = match_branches(expanded, tol)
    else:
        # weights can drift when clusters split; fall back to raw eigenvalues
        raw = [eigenvalues(assemble_global(coupled_at(sys, t, sched.rules)), tol).raw for t in ts]
        branches = match_branches(raw, tol)
    return DeformationTrajectory(
        t=tuple(ts), residues=residues, gaps=gaps, beta0=beta0, increments=increments,
        branches=branches, local=local, beta0_gap=float(beta0_gap), tol=tol, diagnostic=diag,
    )


@dataclass(frozen=True)
class GapCheck:
    ok: bool
    first_violation: float | None
    min_gap: float | None


def _in_range(t, t_range):
    return t_range is None or t_range[0] <= t <= t_range[1]


def check_gap_condition(traj, delta, t_range=None):
    """Check ``dist(R_t, L) >= delta`` at every ``t`` with a defined gap.

    Returns the first violating ``t`` and the smallest observed gap so the
    hypothesis can be audited rather than assumed.
    """
    first, smallest = None, None
    for t, g in zip(traj.t, traj.gaps):
        if g is None or not _in_range(t, t_range):
            continue
        smallest = g if smallest is None else min(smallest, g)
        if g < delta and first is None:
            first = t
    return GapCheck(first is None, first, smallest)


@dataclass(frozen=True)
class Beta0Check:
    constant: bool
    transitions: list
    values: list


def track_beta0_constancy(traj, t_range=None):
    """Check that beta_0 is constant over steps with a nonempty residue.

    ``transitions`` lists the ``t`` values where beta_0 differs from the
    previous nonempty step; these are candidate phase transitions.
    """
    prev, trans, seen = None, [], []
    for t, r, b in zip(traj.t, traj.residues, traj.beta0):
        if not r or not _in_range(t, t_range):
            continue
        seen.append(b)
        if prev is not None and b != prev:
            trans.append(t)
        prev = b
    return Beta0Check(not trans, trans, seen)


@dataclass(frozen=True)
class ExceptionalFit:
    """Puiseux fit ``rho(eps) ~ C eps**exponent`` of a splitting cluster."""

    exponent: float
    m: int
    fit_residual: float
    cluster_size: int
    eps: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)

    @property
    def reliable(self):
        return self.fit_residual <= SLOPE_RESIDUAL_MAX


def _global_matrix(obj):
    if isinstance(obj, StratifiedSystem):
        return assemble_global(obj)
    return np.asarray(obj, dtype=complex)


def detect_exceptional(builder, lam0, eps_grid=None, cluster_size=None):
    """Estimate the Puiseux exponent of eigenvalues splitting from ``lam0``.

    Parameters
    ----------
    builder : callable
        ``eps -> StratifiedSystem`` or ``eps -> matrix``.
    lam0 : complex
        Eigenvalue of ``builder(0)``.
    eps_grid : array_like, optional
        Perturbation sizes, default ``logspace(-8, -2, 13)``.
    cluster_size : int, optional
        Number of branches leaving ``lam0``; defaults to the algebraic
        multiplicity of ``lam0`` at ``eps = 0``.

    The splitting radius is ``rho = max |lambda_k(eps) - lam0|`` over the
    cluster, the exponent is the least-squares slope of ``log rho`` against
    ``log eps`` and ``m = max(1, round(1 / exponent))``.  ``fit_residual``
    is the largest deviation of a local slope from the fitted one.
    """
    eps = np.logspace(-8, -2, 13) if eps_grid is None else np.asarray(eps_grid, dtype=float)
    if eps.size < 3 or np.any(eps <= 0) or np.any(np.diff(eps) <= 0):
        raise ArgumentError("eps grid must hold at least 3 increasing positive values")
    a0 = _global_matrix(builder(0.0))
    lam0 = complex(lam0)
    if cluster_size is None:
        ev = eigenvalues(a0)
        k = int(np.argmin(np.abs(ev.values - lam0)))
        if abs(ev.values[k] - lam0) > 1e-6 * max(1.0, abs(lam0)):
            raise ArgumentError(f"{lam0} is not an eigenvalue of the unperturbed operator")
        cluster_size = int(ev.multiplicities[k])
    rho = np.empty(eps.size)
    for i, e in enumerate(eps):
        a = _global_matrix(builder(float(e)))
        raw = eigenvalues(a, tol=default_tolerance(a)).raw
        d = np.sort(np.abs(raw - lam0))
        rho[i] = d[cluster_size - 1]
        if d.size > cluster_size and d[cluster_size] <= 2 * rho[i]:
            raise DiagnosticError(
                f"cluster at {lam0} contaminated at eps = {e:g}: unrelated eigenvalue at distance "
                f"{d[cluster_size]:.3g} vs radius {rho[i]:.3g}",
                {"eps": float(e)},
            )
    if np.any(rho <= 0) or np.any(np.diff(rho) <= 0):
        raise DiagnosticError("splitting radius is not strictly increasing in eps", {"rho": rho.tolist()})
    x, y = np.log(eps), np.log(rho)
    slope, _ = np.polyfit(x, y, 1)
    local = np.diff(y) / np.diff(x)
    resid = float(np.abs(local - slope).max())
    m = max(1, int(round(1.0 / slope)))
    return ExceptionalFit(float(slope), m, resid, cluster_size, eps, rho)

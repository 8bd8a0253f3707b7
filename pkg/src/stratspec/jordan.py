"""Jordan and nilpotent structure of small dense matrices.

The analysis starts from the complex Schur form.  Computed eigenvalues are
grouped into clusters (see :func:`stratspec.numlin.cluster_eigenvalues`),
the Schur form is reordered so each cluster is contiguous, and Sylvester
solves decouple the clusters into a block-diagonal form ``A = W B W^-1``.
Each diagonal block ``B_i`` is the restriction of ``A`` to one generalized
eigenspace; the Weyr sequence comes from numerical ranks of powers of
``B_i - lambda_i I``.
"""

from dataclasses import dataclass, field
from math import factorial
from typing import NamedTuple

import numpy as np

from .errors import AmbiguousClusterError, ArgumentError, ConditioningError, DiagnosticError
from .numlin import (
    as_matrix,
    cluster_eigenvalues,
    default_tolerance,
    matrix_power,
    cluster_diameter,
    rank_with_tolerance,
    schur,
)

__all__ = [
    "EigenData",
    "EigenStructure",
    "JCSplit",
    "PoleOrder",
    "apply_holomorphic",
    "conjugate_partition",
    "eigen_structure",
    "jc_split",
    "nilpotent_residual",
    "resolvent_pole_order",
]

MAX_DIMENSION = 32
# relative singular-value threshold for ranks of nilpotent powers
NILPOTENT_RANK_TOL = 1e-8


def conjugate_partition(parts):
    """Conjugate of an integer partition (Weyr <-> Jordan block sizes)."""
    parts = [p for p in parts if p > 0]
    if not parts:
        return []
    return [sum(1 for p in parts if p > j) for j in range(max(parts))]


@dataclass(frozen=True)
class EigenData:
    value: complex
    algebraic_mult: int
    geometric_mult: int
    weyr: tuple
    jordan_blocks: tuple
    nilpotent_depth: int

    @property
    def semisimple(self):
        return self.nilpotent_depth == 1


@dataclass(frozen=True)
class EigenStructure:
    """Per-eigenvalue multiplicities, Weyr sequence and Jordan blocks.

    ``basis`` and ``blocks`` hold the block-diagonalizing similarity
    (``A = basis @ blockdiag(blocks) @ inv(basis)``) reused by
    :func:`jc_split`.
    """

    eigen: tuple
    dimension: int
    tol: float
    basis: np.ndarray = field(repr=False)
    blocks: tuple = field(repr=False)

    @property
    def values(self):
        return [e.value for e in self.eigen]

    @property
    def max_depth(self):
        return max(e.nilpotent_depth for e in self.eigen)

    def at(self, lam, tol=None):
        """The :class:`EigenData` whose value is nearest ``lam`` (within ``tol``)."""
        d = [abs(e.value - lam) for e in self.eigen]
        k = int(np.argmin(d))
        if tol is not None and d[k] > tol:
            raise ArgumentError(f"{lam} is not an eigenvalue (nearest {self.eigen[k].value})")
        return self.eigen[k]


def _swap(t, z, k):
    # exchange diagonal entries k, k+1 of the triangular t by a unitary rotation
    a, b, c = t[k, k], t[k, k + 1], t[k + 1, k + 1]
    x = np.array([b, c - a])
    nx = np.linalg.norm(x)
    if nx == 0:
        return
    x /= nx
    q = np.array([[x[0], -np.conj(x[1])], [x[1], np.conj(x[0])]])
    t[k:k + 2, :] = q.conj().T @ t[k:k + 2, :]
    t[:, k:k + 2] = t[:, k:k + 2] @ q
    z[:, k:k + 2] = z[:, k:k + 2] @ q
    t[k + 1, k] = 0.0


def _triangular_sylvester(t11, t22, c):
    # solve t11 x - x t22 = c for upper triangular t11, t22
    p, q = c.shape
    x = np.zeros((p, q), dtype=complex)
    eye = np.eye(p)
    for j in range(q):
        rhs = c[:, j] + x[:, :j] @ t22[:j, j]
        x[:, j] = np.linalg.solve(t11 - t22[j, j] * eye, rhs)
    return x


def _weyr(m, a):
    """Nullity increments of powers of the (a x a) near-nilpotent block ``m``."""
    scale = max(1.0, float(np.linalg.norm(m, 2)))
    weyr, prev, power = [], 0, np.eye(a, dtype=complex)
    for k in range(1, a + 1):
        power = power @ m
        null = a - rank_with_tolerance(power, NILPOTENT_RANK_TOL * scale ** k)
        if null < prev:
            raise AmbiguousClusterError("kernel dimensions of successive powers decreased")
        if null == prev:
            break
        weyr.append(null - prev)
        prev = null
        if null == a:
            break
    if prev != a:
        raise AmbiguousClusterError(
            f"cluster of size {a} is not nilpotent after shifting (kernel dimension {prev})"
        )
    if any(weyr[i] < weyr[i + 1] for i in range(len(weyr) - 1)):
        raise AmbiguousClusterError(f"Weyr sequence {weyr} is not non-increasing")
    return weyr


def eigen_structure(m, tol=None):
    """Multiplicities, Weyr sequence and Jordan blocks of each eigenvalue.

    Raises :class:`AmbiguousClusterError` when two eigenvalue clusters sit
    too close to tell apart, or when a cluster's rank sequence is not that
    of a nilpotent matrix.
    """
    a = as_matrix(m, square=True)
    n = a.shape[0]
    if n > MAX_DIMENSION:
        raise ArgumentError(f"dimension {n} exceeds the Jordan analysis cap {MAX_DIMENSION}")
    scale = float(np.linalg.norm(a, 2))
    tol = default_tolerance(a) if tol is None else tol
    sf = schur(a)
    t, z = sf.t.copy(), sf.z.copy()
    diag = np.diag(t).copy()
    groups = cluster_eigenvalues(diag, tol, scale)
    cents = [diag[g].mean() for g in groups]
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            d = abs(cents[i] - cents[j])
            k = len(groups[i]) + len(groups[j])
            if d < max(10 * tol, 3 * cluster_diameter(k, tol, scale)):
                raise AmbiguousClusterError(
                    f"eigenvalue clusters at {cents[i]:.6g} and {cents[j]:.6g} are "
                    f"{d:.3g} apart; too close to separate"
                )
    label = np.empty(n, dtype=int)
    for ci, g in enumerate(groups):
        label[g] = ci
    # bubble the Schur form into cluster order
    for _ in range(n):
        moved = False
        for k in range(n - 1):
            if label[k] > label[k + 1]:
                _swap(t, z, k)
                label[k], label[k + 1] = label[k + 1], label[k]
                moved = True
        if not moved:
            break
    sizes = [len(g) for g in groups]
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    w = z.copy()
    for i in range(len(sizes) - 1):
        p, q = bounds[i], bounds[i + 1]
        x = _triangular_sylvester(t[p:q, p:q], t[q:, q:], -t[p:q, q:])
        t[p:q, q:] = 0.0
        w[:, q:] += w[:, p:q] @ x
    blocks, eigen = [], []
    for i in range(len(sizes)):
        p, q = bounds[i], bounds[i + 1]
        b = t[p:q, p:q].copy()
        lam = np.trace(b) / sizes[i]
        weyr = _weyr(b - lam * np.eye(sizes[i]), sizes[i])
        jb = conjugate_partition(weyr)
        blocks.append(b)
        eigen.append(EigenData(
            value=complex(lam),
            algebraic_mult=sizes[i],
            geometric_mult=weyr[0],
            weyr=tuple(weyr),
            jordan_blocks=tuple(jb),
            nilpotent_depth=len(weyr),
        ))
    return EigenStructure(eigen=tuple(eigen), dimension=n, tol=tol, basis=w, blocks=tuple(blocks))


@dataclass(frozen=True)
class JCSplit:
    """Jordan-Chevalley split ``A = d + n`` with spectral projectors."""

    d: np.ndarray
    n: np.ndarray
    values: tuple
    depths: tuple
    projectors: tuple = field(repr=False)
    condition: float = 0.0

    @property
    def depth(self):
        return max(self.depths)


def jc_split(m, s=None, max_condition=1e8):
    """Split ``m`` into commuting diagonalizable and nilpotent parts.

    ``d = sum_i lambda_i P_i`` with spectral projectors ``P_i`` built from
    the generalized-eigenspace basis of ``s``; ``n = m - d``.  Raises
    :class:`ConditioningError` if that basis has condition number above
    ``max_condition``.
    """
    a = as_matrix(m, square=True)
    s = eigen_structure(a) if s is None else s
    w = s.basis
    cond = float(np.linalg.cond(w))
    if not np.isfinite(cond) or cond > max_condition:
        raise ConditioningError(f"generalized eigenbasis condition {cond:.3g} exceeds {max_condition:.3g}")
    winv = np.linalg.inv(w)
    dim = a.shape[0]
    d = np.zeros((dim, dim), dtype=complex)
    projectors = []
    pos = 0
    for e in s.eigen:
        sl = slice(pos, pos + e.algebraic_mult)
        p = w[:, sl] @ winv[sl, :]
        projectors.append(p)
        d += e.value * p
        pos += e.algebraic_mult
    return JCSplit(
        d=d,
        n=a - d,
        values=tuple(e.value for e in s.eigen),
        depths=tuple(e.nilpotent_depth for e in s.eigen),
        projectors=tuple(projectors),
        condition=cond,
    )


def apply_holomorphic(split, derivatives):
    """Evaluate ``f(A)`` from a Jordan-Chevalley split.

    ``derivatives`` is a sequence ``[f, f', f'', ...]`` of scalar callables;
    at least ``depth`` of them are needed, where ``depth`` is the largest
    nilpotent depth.  The result is
    ``sum_i sum_{q < depth_i} f^(q)(lambda_i) / q! * N^q P_i``.
    """
    derivatives = list(derivatives)
    if len(derivatives) < split.depth:
        raise ArgumentError(
            f"need derivatives up to order {split.depth - 1}, got {len(derivatives)} function(s)"
        )
    dim = split.d.shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    npow = [np.eye(dim, dtype=complex)]
    for _ in range(1, split.depth):
        npow.append(npow[-1] @ split.n)
    for lam, depth, p in zip(split.values, split.depths, split.projectors):
        for q in range(depth):
            out += complex(derivatives[q](lam)) / factorial(q) * (npow[q] @ p)
    return out


class PoleOrder(NamedTuple):
    order: int
    slope: float
    fit_residual: float
    depth: int

    @property
    def matches_depth(self):
        return self.order == self.depth


def resolvent_pole_order(m, lam, deltas=None):
    """Estimate the pole order of the resolvent at eigenvalue ``lam``.

    Samples ``||(zI - A)^-1||`` on ``z = lam + delta * exp(i theta)`` for
    ``delta`` log-spaced from 1e-2 to 1e-6 and fits the slope of
    ``log ||R||`` against ``log(1/delta)``.  The direction ``theta`` points
    away from the nearest other eigenvalue.  ``fit_residual`` is the
    distance of the slope from the rounded order.
    """
    a = as_matrix(m, square=True)
    s = eigen_structure(a)
    e = s.at(lam, tol=max(s.tol, 1e-6 * max(1.0, abs(lam))))
    lam = e.value
    deltas = np.logspace(-2, -6, 9) if deltas is None else np.asarray(deltas, dtype=float)
    others = [x.value for x in s.eigen if x is not e]
    theta = 0.3
    if others:
        near = min(others, key=lambda v: abs(v - lam))
        if abs(near - lam) <= 100 * deltas.max():
            raise DiagnosticError(
                f"eigenvalue {near:.6g} lies within {100 * deltas.max():g} of {lam:.6g}; fit contaminated",
                {"nearest": near},
            )
        theta = float(np.angle(lam - near))
    sf = schur(a)
    t = sf.t
    eye = np.eye(a.shape[0])
    logs = []
    for delta in deltas:
        zval = lam + delta * np.exp(1j * theta)
        inv = np.linalg.inv(zval * eye - t)
        logs.append(np.log(np.linalg.norm(inv, 2)))
    x = np.log(1.0 / deltas)
    slope = float(np.polyfit(x, np.array(logs), 1)[0])
    order = max(1, int(round(slope)))
    return PoleOrder(order=order, slope=slope, fit_residual=abs(slope - order), depth=e.nilpotent_depth)


def nilpotent_residual(split):
    """Relative size of ``N**depth`` (zero for an exact split)."""
    scale = max(1.0, float(np.linalg.norm(split.d + split.n, 2)))
    return float(np.linalg.norm(matrix_power(split.n, split.depth), 2)) / scale ** split.depth

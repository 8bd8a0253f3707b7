"""Tolerance-aware finite spectral sets.

A :class:`SpectralSet` is a finite multiset of complex points kept in a
canonical form: points closer than ``match_tol / 2`` are merged (weighted
mean, weights summed) and the survivors are sorted by real then imaginary
part.  Set difference at a matching tolerance is the residue operation.
"""

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError
from .numlin import cluster_values, sort_key

__all__ = [
    "ComponentDecomposition",
    "PartitionCheck",
    "SpectralSet",
    "boundary_ambiguous",
    "cluster_components",
    "hausdorff_distance",
    "min_distance",
    "set_difference",
    "union",
    "verify_minimality_universality",
    "verify_partition",
]


def _modulus(z):
    # hypot is correctly rounded in practice; vectorized complex abs is not
    return np.hypot(z.real, z.imag)


def _canonical(points, weights, match_tol):
    points = np.asarray(points, dtype=complex).ravel()
    weights = np.asarray(weights, dtype=int).ravel()
    while True:
        groups = cluster_values(points, match_tol / 2.0)
        if len(groups) == points.size:
            order = np.lexsort((points.imag, points.real)) if points.size else np.array([], int)
            return points[order], weights[order]
        new_p = np.empty(len(groups), dtype=complex)
        new_w = np.empty(len(groups), dtype=int)
        for k, g in enumerate(groups):
            w = weights[g]
            new_p[k] = np.average(points[g], weights=w) if w.sum() > 0 else points[g].mean()
            new_w[k] = w.sum()
        points, weights = new_p, new_w


@dataclass(frozen=True, eq=False)
class SpectralSet:
    """Finite set of complex spectral points with optional multiplicities.

    Build instances with :meth:`from_values`, which canonicalizes.
    """

    points: np.ndarray
    weights: np.ndarray
    match_tol: float

    @classmethod
    def from_values(cls, values, match_tol=0.0, weights=None):
        if match_tol < 0:
            raise ArgumentError("match_tol must be non-negative")
        values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                            dtype=complex).ravel()
        if weights is None:
            weights = np.ones(values.size, dtype=int)
        elif len(weights) != values.size:
            raise ArgumentError("weights and values differ in length")
        p, w = _canonical(values, weights, float(match_tol))
        return cls(points=p, weights=w, match_tol=float(match_tol))

    @classmethod
    def empty(cls, match_tol=0.0):
        return cls.from_values([], match_tol)

    def canonical(self):
        return SpectralSet.from_values(self.points, self.match_tol, self.weights)

    def __len__(self):
        return int(self.points.size)

    def __iter__(self):
        return iter(complex(z) for z in self.points)

    def __bool__(self):
        return self.points.size > 0

    def __repr__(self):
        pts = ", ".join(f"{z:.6g}" for z in self)
        return f"SpectralSet({{{pts}}}, match_tol={self.match_tol:g})"

    def distances(self, z):
        """Distances from ``z`` to every stored point."""
        return _modulus(self.points - complex(z))

    def distance_to(self, z):
        """Distance from ``z`` to the nearest point, ``inf`` when empty."""
        return float(self.distances(z).min()) if self else float("inf")

    def contains(self, z, tol=None):
        tol = self.match_tol if tol is None else tol
        return self.distance_to(z) <= tol

    def same_support(self, other, tol=None):
        """True when every point of each set lies within ``tol`` of the other."""
        tol = max(self.match_tol, other.match_tol) if tol is None else tol
        return (all(other.contains(z, tol) for z in self)
                and all(self.contains(z, tol) for z in other))

    def scaled(self, c):
        c = complex(c)
        return SpectralSet.from_values(self.points * c, self.match_tol * abs(c), self.weights)

    def to_list(self):
        return [complex(z) for z in self]


def union(*sets, match_tol=None):
    """Multiset union of spectral sets (weights add on merged points)."""
    if match_tol is None:
        match_tol = max((s.match_tol for s in sets), default=0.0)
    if not sets:
        return SpectralSet.empty(match_tol)
    pts = np.concatenate([s.points for s in sets])
    wts = np.concatenate([s.weights for s in sets])
    return SpectralSet.from_values(pts, match_tol, wts)


def set_difference(g, l, tol):
    """Points of ``g`` farther than ``tol`` from every point of ``l``.

    This is the residue ``G \\ L`` at matching tolerance ``tol``.
    """
    if tol <= 0:
        raise ArgumentError("tolerance must be positive")
    if not l:
        keep = np.ones(len(g), dtype=bool)
    else:
        d = _modulus(g.points[:, None] - l.points[None, :])
        keep = d.min(axis=1) > tol
    return SpectralSet(points=g.points[keep], weights=g.weights[keep], match_tol=g.match_tol)


class PartitionCheck(NamedTuple):
    ok: bool
    witness: complex | None = None


def verify_partition(g, l, r, tol):
    """Check that ``g`` is exactly covered by ``l`` together with ``r``.

    Every point of ``g`` must match a point of ``l`` or ``r`` and every
    point of ``r`` must match a point of ``g`` (points of ``l`` match
    themselves).  Weights are ignored.  On failure the first violating
    point is returned as witness.
    """
    for z in g:
        if not (l.contains(z, tol) or r.contains(z, tol)):
            return PartitionCheck(False, z)
    for z in r:
        if not (g.contains(z, tol) or l.contains(z, tol)):
            return PartitionCheck(False, z)
    return PartitionCheck(True, None)


def _subsets(n, trials, rng):
    """Nonempty index subsets of ``range(n)``: exhaustive if small, else sampled."""
    if n == 0:
        return
    if 2 ** n - 1 <= max(trials, 1):
        for k in range(1, n + 1):
            yield from combinations(range(n), k)
        return
    for _ in range(trials):
        mask = rng.random(n) < 0.5
        if not mask.any():
            mask[rng.integers(n)] = True
        yield tuple(np.nonzero(mask)[0])


def verify_minimality_universality(g, l, r, tol, trials=100, rng_seed=0):
    """Check that ``r`` is the smallest set completing ``l`` to ``g``.

    Minimality: removing any nonempty subset of ``r`` breaks the partition.
    Universality: any ``O`` with ``l`` and ``O`` covering ``g`` contains
    every point of ``r``.  Subsets are enumerated exhaustively when there
    are at most ``trials`` of them and sampled otherwise.
    """
    if not r:
        return True
    rng = np.random.default_rng(rng_seed)
    rp, rw = r.points, r.weights
    for drop in _subsets(len(r), trials, rng):
        keep = np.ones(len(r), dtype=bool)
        keep[list(drop)] = False
        reduced = SpectralSet(points=rp[keep], weights=rw[keep], match_tol=r.match_tol)
        if verify_partition(g, l, reduced, tol).ok:
            return False
    # O must hold every point of g not covered by l; anything else is optional
    required = np.array([not l.contains(z, tol) for z in g], dtype=bool)
    optional = np.nonzero(~required)[0]
    draws = [()] + list(_subsets(optional.size, trials, rng))
    for extra in draws:
        mask = required.copy()
        mask[optional[list(extra)]] = True
        o = SpectralSet(points=g.points[mask], weights=g.weights[mask], match_tol=g.match_tol)
        if not all(o.contains(z, tol) for z in r):
            return False
    return True


def hausdorff_distance(a, b):
    """Two-sided Hausdorff distance; ``None`` if either set is empty."""
    if not a or not b:
        return None
    d = _modulus(a.points[:, None] - b.points[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def min_distance(a, b):
    """Smallest pairwise distance between two sets; ``None`` if either is empty."""
    if not a or not b:
        return None
    return float(_modulus(a.points[:, None] - b.points[None, :]).min())


def boundary_ambiguous(g, l, tol):
    """Points of ``g`` lying between ``tol`` and ``10 * tol`` from ``l``."""
    out = []
    for z in g:
        d = l.distance_to(z)
        if tol < d <= 10 * tol:
            out.append(z)
    return out


@dataclass(frozen=True)
class ComponentDecomposition:
    """Chain-connected components of a spectral set at a fixed gap."""

    components: list
    beta0: int


def cluster_components(s, gap):
    """Single-linkage components: points joined by hops of length <= ``gap``."""
    if gap <= 0:
        raise ArgumentError("gap must be positive")
    groups = cluster_values(s.points, gap)
    groups = [sorted(int(i) for i in grp) for grp in groups]
    groups.sort(key=lambda grp: sort_key(s.points[grp[0]]))
    return ComponentDecomposition(components=groups, beta0=len(groups))

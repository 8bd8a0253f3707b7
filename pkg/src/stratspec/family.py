"""Line and surface interface families sampled on uniform grids.

A family maps interface parameters to scalar spectral values, ``s`` on an
interval for lines and ``(x, y)`` on a rectangle for surfaces.  Sampling
reports the band support, a density histogram and grid points where the
gradient nearly vanishes; those are classified as minima, maxima, saddles
or degenerate points from finite-difference Hessians.

Grid sampling biases band endpoints by O(1/n) for Lipschitz families (the
bias is O(1/n**2) at smooth interior extrema).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .expr import EvaluationError, evaluate, parse_expression, to_text, variables

__all__ = [
    "CriticalPoint",
    "FamilyResidue",
    "FamilyResult",
    "VanHoveFlag",
    "detect_van_hove",
    "family_residue",
    "sample_family",
]

GRADIENT_REL_TOL = 1e-3


@dataclass(frozen=True)
class CriticalPoint:
    point: tuple
    value: float
    gradient_norm: float
    hessian: np.ndarray = field(repr=False)
    near_boundary: bool = False


@dataclass(frozen=True)
class FamilyResult:
    """Sampled family: values on the grid plus derived band data."""

    expr: object
    variables: tuple
    axes: tuple = field(repr=False)
    values: np.ndarray = field(repr=False)
    support_intervals: list = field(default_factory=list)
    min: float = 0.0
    max: float = 0.0
    bin_edges: np.ndarray = field(default=None, repr=False)
    counts: np.ndarray = field(default=None, repr=False)
    critical: list = field(default_factory=list)
    support_gap: float = 0.0

    @property
    def critical_values(self):
        return [c.value for c in self.critical]

    @property
    def samples(self):
        """``(parameter point, value)`` pairs in grid order."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        return list(zip(map(tuple, pts), self.values.ravel()))

    def density_rows(self):
        """Histogram as ``(bin_left, bin_right, count)`` rows."""
        return [
            (float(self.bin_edges[k]), float(self.bin_edges[k + 1]), int(self.counts[k]))
            for k in range(self.counts.size)
        ]


def _domain_axes(domain, n):
    dom = np.asarray(domain, dtype=float)
    if dom.shape == (2,):
        return (np.linspace(dom[0], dom[1], n),), ("s",)
    if dom.shape == (2, 2):
        return (np.linspace(dom[0, 0], dom[0, 1], n), np.linspace(dom[1, 0], dom[1, 1], n)), ("x", "y")
    raise ArgumentError(f"domain must be an interval or a rectangle, got {domain!r}")


def _support(values, gap):
    v = np.sort(values.ravel())
    breaks = np.nonzero(np.diff(v) > gap)[0]
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [v.size - 1]])
    return [(float(v[a]), float(v[b])) for a, b in zip(starts, ends)]


def _critical_points(values, axes, vrange):
    h = [ax[1] - ax[0] for ax in axes]
    grads = np.gradient(values, *h, edge_order=2)
    if values.ndim == 1:
        grads = [grads]
    gnorm = np.sqrt(sum(g ** 2 for g in grads))
    hess = np.empty(values.shape + (values.ndim, values.ndim))
    for i, g in enumerate(grads):
        second = np.gradient(g, *h, edge_order=2)
        if values.ndim == 1:
            second = [second]
        for j in range(values.ndim):
            hess[..., i, j] = second[j]
    hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    hnorm = np.abs(np.linalg.eigvalsh(hess)).max(axis=-1)
    # a critical point between grid nodes leaves a gradient of order |H| h
    thresh = np.maximum(vrange * GRADIENT_REL_TOL, hnorm * max(h))
    interior = tuple(slice(1, s - 1) for s in values.shape)
    flagged = np.zeros(values.shape, dtype=bool)
    flagged[interior] = gnorm[interior] < thresh[interior]
    # keep local minima of |grad| only, then one representative per connected patch
    padded = np.pad(gnorm, 1, constant_values=np.inf)
    offsets = np.stack(np.meshgrid(*[[-1, 0, 1]] * values.ndim, indexing="ij"), -1).reshape(-1, values.ndim)
    local_min = np.ones(values.shape, dtype=bool)
    for off in offsets:
        if not off.any():
            continue
        sl = tuple(slice(1 + o, 1 + o + s) for o, s in zip(off, values.shape))
        local_min &= gnorm <= padded[sl]
    flagged &= local_min
    seen = np.zeros(values.shape, dtype=bool)
    out = []
    for idx in zip(*np.nonzero(flagged)):
        if seen[idx]:
            continue
        patch, stack = [], [idx]
        seen[idx] = True
        while stack:
            cur = stack.pop()
            patch.append(cur)
            for off in offsets:
                nb = tuple(c + o for c, o in zip(cur, off))
                if all(0 <= c < s for c, s in zip(nb, values.shape)) and flagged[nb] and not seen[nb]:
                    seen[nb] = True
                    stack.append(nb)
        best = min(patch, key=lambda p: (gnorm[p], p))
        near = any(c <= 1 or c >= s - 2 for c, s in zip(best, values.shape))
        out.append(CriticalPoint(
            point=tuple(float(ax[c]) for ax, c in zip(axes, best)),
            value=float(values[best]),
            gradient_norm=float(gnorm[best]),
            hessian=hess[best].copy(),
            near_boundary=near,
        ))
    out.sort(key=lambda c: (c.value, c.point))
    return out


def sample_family(expr, domain, n=1000, bins=50):
    """Sample a family on a uniform grid with ``n`` points per axis.

    ``expr`` is an expression tree or its text.  Support intervals come
    from splitting the sorted values wherever consecutive values differ by
    more than ``4 * range / n``.
    """
    if isinstance(expr, str):
        expr = parse_expression(expr)
    if n < 16:
        raise ArgumentError("need at least 16 samples per axis")
    axes, names = _domain_axes(domain, int(n))
    extra = variables(expr) - set(names)
    if extra:
        raise ArgumentError(f"expression uses {sorted(extra)} outside the domain variables {list(names)}")
    grids = np.meshgrid(*axes, indexing="ij")
    env = dict(zip(names, grids))
    try:
        with np.errstate(all="raise"):
            values = np.broadcast_to(np.asarray(evaluate(expr, env), dtype=float), grids[0].shape).copy()
    except (EvaluationError, FloatingPointError) as exc:
        raise EvaluationError(f"evaluation of {to_text(expr)} failed on the grid: {exc}") from exc
    if not np.all(np.isfinite(values)):
        bad = tuple(float(g[np.unravel_index(np.argmax(~np.isfinite(values)), values.shape)]) for g in grids)
        raise EvaluationError(f"non-finite value at parameter point {bad}")
    vmin, vmax = float(values.min()), float(values.max())
    vrange = vmax - vmin
    gap = 4.0 * vrange / n
    support = _support(values, gap)
    hist_range = (vmin, vmax) if vrange > 0 else (vmin - 0.5, vmax + 0.5)
    counts, edges = np.histogram(values, bins=bins, range=hist_range)
    critical = _critical_points(values, axes, vrange) if vrange > 0 else []
    return FamilyResult(
        expr=expr,
        variables=names,
        axes=axes,
        values=values,
        support_intervals=support,
        min=vmin,
        max=vmax,
        bin_edges=edges,
        counts=counts,
        critical=critical,
        support_gap=gap,
    )


@dataclass(frozen=True)
class VanHoveFlag:
    value: float
    kind: str
    point: tuple
    enhancement: float
    unreliable: bool


def detect_van_hove(result):
    """Classify critical grid points and measure the local density enhancement.

    ``kind`` is ``min``, ``max``, ``saddle`` or ``degenerate`` from the signs
    of the finite-difference Hessian eigenvalues; ``enhancement`` is the
    histogram count in the bin holding the critical value divided by the
    median bin count.  Points within one cell of the boundary are flagged
    ``unreliable``.
    """
    counts = result.counts
    med = float(np.median(counts)) if counts.size else 0.0
    flags = []
    for c in result.critical:
        ev = np.linalg.eigvalsh(c.hessian)
        small = 1e-6 * max(1.0, float(np.abs(ev).max()))
        if np.all(ev > small):
            kind = "min"
        elif np.all(ev < -small):
            kind = "max"
        elif ev.min() < -small and ev.max() > small:
            kind = "saddle"
        else:
            kind = "degenerate"
        k = int(np.clip(np.searchsorted(result.bin_edges, c.value, side="right") - 1, 0, counts.size - 1))
        enhancement = counts[k] / med if med > 0 else float("inf")
        flags.append(VanHoveFlag(c.value, kind, c.point, float(enhancement), c.near_boundary))
    return flags


@dataclass(frozen=True)
class FamilyResidue:
    """Band support with local points that already cover parts of it."""

    intervals: list
    covered: list
    isolated_local: list
    annotations: list

    def global_report(self):
        """Isolated local points and bands, sorted by left end."""
        items = [(p, p) for p in self.isolated_local] + list(self.intervals)
        return sorted(items, key=lambda it: (np.real(it[0]), np.imag(it[0])))


def family_residue(result, local, tol=None):
    """Compare a family's bands with a local spectrum.

    Local points inside a band or on its boundary (within ``tol``, default
    the support clustering gap) are not residue; they are returned as
    ``covered`` with an annotation such as ``"3 covered by local"``.  The
    bands themselves stay closed intervals.
    """
    tol = max(result.support_gap, 1e-12) if tol is None else tol
    pts = sorted({complex(z) for z in local}, key=lambda z: (z.real, z.imag)) if local is not None else []
    covered, isolated, notes = [], [], []
    for z in pts:
        p = z.real if abs(z.imag) <= tol else z
        hit = [k for k, (a, b) in enumerate(result.support_intervals)
               if not isinstance(p, complex) and a - tol <= p <= b + tol]
        if hit:
            covered.append((p, hit[0]))
            notes.append(f"{p:g} covered by local")
        else:
            isolated.append(p)
    return FamilyResidue(list(result.support_intervals), covered, isolated, notes)

"""Dense complex linear algebra kernel.

Eigenvalues come from a Householder reduction to upper Hessenberg form
followed by implicitly shifted complex QR iteration (Wilkinson shifts,
exceptional shifts every tenth stalled sweep).  The Schur factors are kept
because the Jordan analysis reuses them.

Aberth-Ehrlich root finding is provided as an independent cross-check of
the eigensolver on characteristic polynomials.  It is a test aid and is
capped at degree 16.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ConvergenceError, DimensionError

__all__ = [
    "DEFAULT_DIMENSION_CAP",
    "EigenResult",
    "SchurForm",
    "as_matrix",
    "cluster_diameter",
    "cluster_eigenvalues",
    "cluster_values",
    "default_tolerance",
    "eigenvalues",
    "hessenberg",
    "matrix_power",
    "nullity",
    "rank_with_tolerance",
    "schur",
    "sort_key",
]

DEFAULT_DIMENSION_CAP = 256
EPS = np.finfo(float).eps


def as_matrix(m, square=False, name="matrix"):
    """Validate ``m`` and return it as a 2-D complex array (a copy)."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ArgumentError(f"{name} has non-finite entries")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def sort_key(z):
    """Deterministic ordering for complex values: real part, then imaginary."""
    z = complex(z)
    return (z.real, z.imag)


def _sorted(values):
    values = np.asarray(values, dtype=complex)
    if values.size == 0:
        return values
    order = np.lexsort((values.imag, values.real))
    return values[order]


def hessenberg(a):
    """Reduce a square matrix to upper Hessenberg form.

    Returns ``(h, q)`` with ``a = q @ h @ q.conj().T`` and ``q`` unitary.
    """
    h = as_matrix(a, square=True)
    n = h.shape[0]
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h, q


def _givens(x, y):
    # (c, s) with c real such that [[c, s], [-conj(s), c]] @ [x, y] = [r, 0]
    if y == 0:
        return 1.0, 0.0
    if x == 0:
        return 0.0, 1.0
    ax = abs(x)
    r = np.hypot(ax, abs(y))
    return ax / r, (x / ax) * np.conj(y) / r


def _rot_rows(h, k, c, s, start):
    rk = h[k, start:].copy()
    rk1 = h[k + 1, start:]
    h[k, start:] = c * rk + s * rk1
    h[k + 1, start:] = -np.conj(s) * rk + c * rk1


def _rot_cols(h, k, c, s, stop):
    ck = h[:stop, k].copy()
    ck1 = h[:stop, k + 1]
    h[:stop, k] = c * ck + np.conj(s) * ck1
    h[:stop, k + 1] = -s * ck + c * ck1


@dataclass(frozen=True)
class SchurForm:
    """Complex Schur factorization ``a = z @ t @ z^H``."""

    t: np.ndarray
    z: np.ndarray
    iterations: int

    @property
    def eigenvalues(self):
        return np.diag(self.t).copy()


def _unscale(x, expo):
    return np.ldexp(x.real, expo) + 1j * np.ldexp(x.imag, expo)


def schur(a, max_sweeps_per_value=None):
    """Complex Schur form via Hessenberg reduction and shifted QR.

    Raises :class:`ConvergenceError` (carrying the eigenvalues deflated so
    far in ``partial``) if one eigenvalue needs more than
    ``max_sweeps_per_value`` QR sweeps (default ``30 * max(10, n)``; derogatory
    defective eigenvalues converge only linearly).
    """
    a = as_matrix(a, square=True)
    # power-of-two scaling keeps tiny or huge inputs clear of under/overflow
    amax = float(np.abs(a).max())
    expo = int(np.frexp(amax)[1]) if amax > 0 else 0
    a = np.ldexp(a.real, -expo) + 1j * np.ldexp(a.imag, -expo)
    # entries below eps**2 relative are noise far under the QR backward error
    a[np.abs(a) <= EPS * EPS] = 0.0
    h, z = hessenberg(a)
    n = h.shape[0]
    if max_sweeps_per_value is None:
        max_sweeps_per_value = 30 * max(10, n)
    hi = n - 1
    its = 0
    total = 0
    norm1 = np.abs(h).sum(axis=0).max()
    while hi > 0:
        # locate the active unreduced window [lo, hi]
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = norm1
            # relative test, plus an absolute floor far below any matching tolerance
            if abs(h[lo, lo - 1]) <= max(EPS * s, EPS * EPS * norm1):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            its = 0
            continue
        its += 1
        total += 1
        if its > max_sweeps_per_value:
            raise ConvergenceError(
                f"QR iteration stalled at index {hi} after {its} sweeps",
                partial=_sorted(_unscale(np.diag(h)[hi + 1:], expo)),
                iterations=total,
            )
        if its % 10 == 0:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            p, q_, r, d = h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi]
            half = 0.5 * (p - d)
            disc = np.sqrt(half * half + q_ * r)
            mu1 = 0.5 * (p + d) + disc
            mu2 = 0.5 * (p + d) - disc
            mu = mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2
        # implicit single-shift sweep (bulge chase)
        c, s = _givens(h[lo, lo] - mu, h[lo + 1, lo])
        _rot_rows(h, lo, c, s, lo)
        _rot_cols(h, lo, c, s, min(lo + 3, hi + 1))
        _rot_cols(z, lo, c, s, n)
        for k in range(lo + 1, hi):
            c, s = _givens(h[k, k - 1], h[k + 1, k - 1])
            _rot_rows(h, k, c, s, k - 1)
            h[k + 1, k - 1] = 0.0
            _rot_cols(h, k, c, s, min(k + 3, hi + 1))
            _rot_cols(z, k, c, s, n)
    return SchurForm(t=_unscale(np.triu(h), expo), z=z, iterations=total)


def cluster_values(values, tol):
    """Single-linkage grouping of complex values within ``tol``.

    Returns a list of index arrays, ordered by the sort key of each group's
    mean.
    """
    values = np.asarray(values, dtype=complex)
    n = values.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if n > 1:
        d = np.abs(values[:, None] - values[None, :])
        for i, j in zip(*np.nonzero(np.triu(d <= tol, k=1))):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = [np.array(g) for g in groups.values()]
    out.sort(key=lambda g: sort_key(values[g].mean()))
    return out


# Backward-error level assumed for defective clusters: a k-fold defective
# eigenvalue perturbed at this level spreads over radius ~ level**(1/k).
DEFECT_NOISE = 1e-12


def cluster_diameter(k, tol, scale=1.0):
    """Largest diameter accepted for a cluster of ``k`` computed eigenvalues."""
    if k < 2:
        return 0.0
    return max(tol, 4.0 * (DEFECT_NOISE * max(1.0, scale)) ** (1.0 / k))


def _longest_edge_split(values, idx):
    # Prim's MST over idx, then cut its longest edge
    idx = list(idx)
    d = np.abs(values[idx][:, None] - values[idx][None, :])
    n = len(idx)
    in_tree = [0]
    best = d[0].copy()
    link = np.zeros(n, dtype=int)
    edges = []
    remaining = set(range(1, n))
    while remaining:
        j = min(remaining, key=lambda r: (best[r], r))
        edges.append((best[j], link[j], j))
        remaining.remove(j)
        in_tree.append(j)
        closer = d[j] < best
        link[closer] = j
        best = np.minimum(best, d[j])
    cut = max(range(len(edges)), key=lambda e: (edges[e][0], -e))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for e, (_, u, v) in enumerate(edges):
        if e != cut:
            parent[find(u)] = find(v)
    side = find(0)
    left = [idx[i] for i in range(n) if find(i) == side]
    right = [idx[i] for i in range(n) if find(i) != side]
    return left, right


def cluster_eigenvalues(values, tol, scale=1.0):
    """Group computed eigenvalues into multiplicity clusters.

    Divisive single linkage: a group is accepted once its diameter fits
    :func:`cluster_diameter` for its size, otherwise it is cut at the
    longest edge of its minimum spanning tree.  The accepted diameter grows
    with cluster size because rounding splits a defective eigenvalue of
    multiplicity ``k`` by roughly ``noise**(1/k)``, far more than ``tol``.
    Returns index arrays ordered by the sort key of each cluster centroid.
    """
    values = np.asarray(values, dtype=complex)
    out, stack = [], [list(range(values.size))] if values.size else []
    while stack:
        idx = stack.pop()
        sub = values[idx]
        diam = np.abs(sub[:, None] - sub[None, :]).max() if len(idx) > 1 else 0.0
        if len(idx) == 1 or diam <= cluster_diameter(len(idx), tol, scale):
            out.append(np.array(sorted(idx)))
        else:
            stack.extend(_longest_edge_split(values, idx))
    out.sort(key=lambda g: sort_key(values[g].mean()))
    return out


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalues of a square matrix.

    ``values`` are the distinct (clustered) eigenvalues in deterministic
    order and ``multiplicities`` their algebraic multiplicities.  ``raw``
    holds all ``n`` computed eigenvalues before clustering.
    ``residual_norm`` is the relative backward error
    ``||A Z - Z T|| / ||A||`` of the underlying Schur factorization.
    """

    values: np.ndarray
    multiplicities: np.ndarray
    residual_norm: float
    raw: np.ndarray = field(repr=False)
    schur: SchurForm = field(repr=False, default=None)

    @property
    def dimension(self):
        return int(self.multiplicities.sum())

    def expanded(self):
        """Clustered values repeated by multiplicity."""
        return np.repeat(self.values, self.multiplicities)


def default_tolerance(m):
    """Matching tolerance ``1e-8 * max(1, ||m||_2)``."""
    m = np.asarray(m)
    if m.size == 0:
        return 1e-8
    return 1e-8 * max(1.0, float(np.linalg.norm(m, 2)))


def eigenvalues(m, tol=None, cap=DEFAULT_DIMENSION_CAP):
    """All eigenvalues of a square complex matrix, with multiplicities.

    Parameters
    ----------
    m : array_like
        Square matrix, dimension between 1 and ``cap``.
    tol : float, optional
        Matching tolerance, defaults to ``1e-8 * max(1, ||m||)``.  Values
        are clustered with :func:`cluster_eigenvalues`, whose radius grows
        with cluster size so defective eigenvalues get one entry.
    cap : int
        Maximum accepted dimension.
    """
    a = as_matrix(m, square=True)
    n = a.shape[0]
    if n > cap:
        raise ArgumentError(f"dimension {n} exceeds cap {cap}")
    if tol is None:
        tol = default_tolerance(a)
    sf = schur(a)
    anorm = np.linalg.norm(a)
    resid = np.linalg.norm(a @ sf.z - sf.z @ sf.t)
    resid = float(resid / anorm) if anorm > 0 else float(resid)
    raw = _sorted(sf.eigenvalues)
    groups = cluster_eigenvalues(raw, tol, float(np.linalg.norm(a, 2)))
    values = np.array([raw[g].mean() for g in groups], dtype=complex)
    mults = np.array([len(g) for g in groups], dtype=int)
    return EigenResult(values=values, multiplicities=mults, residual_norm=resid, raw=raw, schur=sf)


def rank_with_tolerance(m, tol="auto"):
    """Numerical rank: number of singular values above a threshold.

    With ``tol="auto"`` the threshold is
    ``sigma_max * max(rows, cols) * eps * 64``.
    """
    a = as_matrix(m)
    sv = np.linalg.svd(a, compute_uv=False)
    if tol == "auto":
        thresh = sv[0] * max(a.shape) * EPS * 64 if sv.size else 0.0
    else:
        thresh = float(tol)
    return int(np.count_nonzero(sv > thresh))


def nullity(m, tol="auto"):
    """Dimension of the numerical kernel (columns minus rank)."""
    a = as_matrix(m)
    return a.shape[1] - rank_with_tolerance(a, tol)


def matrix_power(m, k):
    """``m**k`` by repeated multiplication; ``k = 0`` gives the identity."""
    a = as_matrix(m, square=True)
    k = int(k)
    if k < 0:
        raise ArgumentError("power must be non-negative")
    out = np.eye(a.shape[0], dtype=complex)
    for _ in range(k):
        out = out @ a
    return out

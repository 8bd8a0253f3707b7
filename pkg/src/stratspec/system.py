"""Stratified block-operator systems and their interaction residue.

Strata are square diagonal blocks; interfaces are binary couplings placed
off the diagonal.  The global operator is the assembled block matrix, its
eigenvalues are the global spectrum ``G``, the union of the stratum
eigenvalues is the local spectrum ``L`` and the interaction residue is
``R = G \\ L`` at the matching tolerance.

A stratum flagged ``interface_block`` models an interface algebra carried
as its own summand: its eigenvalues enter ``G`` but not ``L``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError, DimensionError, PartitionError, RefinementError
from .numlin import as_matrix, default_tolerance, eigenvalues
from .spectra import SpectralSet, set_difference, union, verify_partition

__all__ = [
    "Geometry",
    "InterfaceCoupling",
    "ResidueAnalysis",
    "Stratum",
    "StratifiedSystem",
    "analyze_residue",
    "assemble_global",
    "global_spectrum",
    "interaction_residue",
    "local_spectra",
    "local_union",
    "refine_stratum",
    "scale_system",
    "with_coupling_scales",
]

GEOMETRY_KINDS = ("point", "line", "surface")


@dataclass(frozen=True)
class Geometry:
    """Interface geometry tag.

    ``domain`` is ``None`` for points, ``(a, b)`` for lines and
    ``((a, b), (c, d))`` for surfaces; ``expr`` is the family expression.
    """

    kind: str = "point"
    domain: tuple | None = None
    expr: str | None = None

    def __post_init__(self):
        if self.kind not in GEOMETRY_KINDS:
            raise ArgumentError(f"unknown geometry {self.kind!r}")

    @property
    def dimension(self):
        return GEOMETRY_KINDS.index(self.kind)


@dataclass(frozen=True)
class Stratum:
    id: str
    block: np.ndarray
    interface_block: bool = False

    def __post_init__(self):
        object.__setattr__(self, "block", as_matrix(self.block, square=True, name=f"stratum {self.id!r}"))

    @property
    def dim(self):
        return self.block.shape[0]


@dataclass(frozen=True)
class InterfaceCoupling:
    """Coupling ``tau`` from stratum ``source`` into stratum ``target``.

    ``tau`` has shape ``(dim target, dim source)`` and lands in block-row
    ``target``, block-column ``source``.  With ``hermitian_completion`` its
    conjugate transpose also fills the mirrored block.  ``operator`` picks
    the interface operator analysed for algebraic structure: ``"gram"`` for
    ``tau^H tau`` or ``"tau"`` for ``tau`` itself (square couplings only).
    ``sweep_rule`` overrides the deformation rule for this interface.
    """

    id: str
    source: str
    target: str
    tau: np.ndarray
    hermitian_completion: bool = False
    geometry: Geometry = field(default_factory=Geometry)
    operator: str = "gram"
    sweep_rule: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "tau", as_matrix(self.tau, name=f"interface {self.id!r} tau"))
        if self.source == self.target:
            raise ArgumentError(f"interface {self.id!r} couples stratum {self.source!r} to itself")
        if self.operator not in ("gram", "tau"):
            raise ArgumentError(f"interface {self.id!r}: operator must be 'gram' or 'tau'")
        if self.operator == "tau" and self.tau.shape[0] != self.tau.shape[1]:
            raise DimensionError(f"interface {self.id!r}: operator 'tau' needs a square coupling")

    @property
    def family_expr(self):
        return self.geometry.expr


@dataclass(frozen=True)
class StratifiedSystem:
    strata: tuple
    interfaces: tuple = ()
    match_tol: float | str = "auto"
    cluster_gap: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "strata", tuple(self.strata))
        object.__setattr__(self, "interfaces", tuple(self.interfaces))
        if not self.strata:
            raise ArgumentError("a system needs at least one stratum")
        ids = [s.id for s in self.strata]
        if len(set(ids)) != len(ids):
            raise ArgumentError(f"duplicate stratum ids in {ids}")
        iids = [i.id for i in self.interfaces]
        if len(set(iids)) != len(iids):
            raise ArgumentError(f"duplicate interface ids in {iids}")
        dims = {s.id: s.dim for s in self.strata}
        occupied = {}
        for itf in self.interfaces:
            for end in (itf.source, itf.target):
                if end not in dims:
                    raise ArgumentError(f"interface {itf.id!r} references unknown stratum {end!r}")
            want = (dims[itf.target], dims[itf.source])
            if itf.tau.shape != want:
                raise DimensionError(
                    f"interface {itf.id!r}: tau has shape {itf.tau.shape} but strata "
                    f"{itf.target!r} (dim {want[0]}) and {itf.source!r} (dim {want[1]}) need {want}"
                )
            slots = [(itf.target, itf.source)]
            if itf.hermitian_completion:
                slots.append((itf.source, itf.target))
            for slot in slots:
                if slot in occupied:
                    raise ArgumentError(
                        f"interfaces {occupied[slot]!r} and {itf.id!r} both occupy block {slot}"
                    )
                occupied[slot] = itf.id
        if self.match_tol != "auto" and not float(self.match_tol) > 0:
            raise ArgumentError("match_tol must be positive or 'auto'")

    @property
    def dimension(self):
        return sum(s.dim for s in self.strata)

    def stratum(self, sid):
        for s in self.strata:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def interface(self, iid):
        for i in self.interfaces:
            if i.id == iid:
                return i
        raise KeyError(iid)

    def offsets(self, exclude_strata=()):
        out, pos = {}, 0
        for s in self.strata:
            if s.id in exclude_strata:
                continue
            out[s.id] = (pos, pos + s.dim)
            pos += s.dim
        return out

    def tolerance(self):
        """Matching tolerance: explicit, or ``1e-8 * max(1, ||H||_2)``."""
        if self.match_tol == "auto":
            return default_tolerance(assemble_global(self))
        return float(self.match_tol)

    def incident_interface_blocks(self, itf):
        """Ids of interface-block strata at either end of ``itf``."""
        return tuple(e for e in (itf.source, itf.target) if self.stratum(e).interface_block)


def assemble_global(sys, exclude_interfaces=(), exclude_strata=()):
    """Assemble the global block matrix in stratum order.

    Interfaces named in ``exclude_interfaces`` are treated as zero and
    strata in ``exclude_strata`` are dropped together with every coupling
    touching them.
    """
    off = sys.offsets(exclude_strata)
    n = off and max(b for _, b in off.values())
    h = np.zeros((n, n), dtype=complex)
    for s in sys.strata:
        if s.id in off:
            a, b = off[s.id]
            h[a:b, a:b] = s.block
    for itf in sys.interfaces:
        if itf.id in exclude_interfaces or itf.source not in off or itf.target not in off:
            continue
        (ta, tb), (sa, sb) = off[itf.target], off[itf.source]
        h[ta:tb, sa:sb] = itf.tau
        if itf.hermitian_completion:
            h[sa:sb, ta:tb] = itf.tau.conj().T
    return h


def _spectrum(m, tol):
    if m.size == 0:
        return SpectralSet.empty(tol)
    ev = eigenvalues(m, tol=tol)
    return SpectralSet.from_values(ev.values, tol, ev.multiplicities)


def local_spectra(sys, tol=None):
    """Eigenvalues of each diagonal block, keyed by stratum id, couplings ignored."""
    tol = sys.tolerance() if tol is None else tol
    return {s.id: _spectrum(s.block, tol) for s in sys.strata}


def local_union(sys, tol=None, spectra=None):
    """Union of local spectra over ordinary (non interface-block) strata."""
    tol = sys.tolerance() if tol is None else tol
    spectra = local_spectra(sys, tol) if spectra is None else spectra
    return union(*[spectra[s.id] for s in sys.strata if not s.interface_block], match_tol=tol)


def global_spectrum(sys, tol=None, exclude_interfaces=(), exclude_strata=()):
    tol = sys.tolerance() if tol is None else tol
    return _spectrum(assemble_global(sys, exclude_interfaces, exclude_strata), tol)


@dataclass(frozen=True)
class ResidueAnalysis:
    """Global spectrum, local spectra and residue of one system."""

    global_: SpectralSet
    local: dict
    local_all: SpectralSet
    residue: SpectralSet
    tol: float


def analyze_residue(sys, tol=None):
    """Compute ``G``, ``L`` and ``R`` and verify the partition.

    Raises :class:`PartitionError` with the offending point when ``G`` is
    not covered by ``L`` together with ``R``, which signals a tolerance
    pathology rather than a property of the system.
    """
    tol = sys.tolerance() if tol is None else tol
    g = global_spectrum(sys, tol)
    loc = local_spectra(sys, tol)
    l_all = local_union(sys, tol, loc)
    r = set_difference(g, l_all, tol)
    check = verify_partition(g, l_all, r, tol)
    if not check.ok:
        raise PartitionError(f"partition check failed at {check.witness}", witness=check.witness)
    return ResidueAnalysis(global_=g, local=loc, local_all=l_all, residue=r, tol=tol)


def interaction_residue(sys, tol=None):
    """The interaction residue ``R = G \\ L`` as a :class:`SpectralSet`."""
    return analyze_residue(sys, tol).residue


def _split_index_ok(block, k, tol):
    return (np.abs(block[:k, k:]).max(initial=0.0) <= tol
            and np.abs(block[k:, :k]).max(initial=0.0) <= tol)


def refine_stratum(sys, stratum_id, split_index):
    """Split a block-diagonal stratum into two strata at ``split_index``.

    The parts are named ``<id>.0`` and ``<id>.1`` and keep the original
    position, so the assembled global matrix is unchanged entry for entry.
    Couplings touching the stratum are cut row- or column-wise; all-zero
    pieces are dropped.  Raises :class:`RefinementError` when the block has
    nonzero entries across the split.
    """
    s = sys.stratum(stratum_id)
    k = int(split_index)
    if not 0 < k < s.dim:
        raise ArgumentError(f"split index {k} outside 1..{s.dim - 1}")
    if not _split_index_ok(s.block, k, sys.tolerance()):
        raise RefinementError(
            f"stratum {stratum_id!r} has nonzero coupling across index {k}; "
            "splitting would create a new internal interface"
        )
    ids = (f"{stratum_id}.0", f"{stratum_id}.1")
    parts = (
        Stratum(ids[0], s.block[:k, :k], s.interface_block),
        Stratum(ids[1], s.block[k:, k:], s.interface_block),
    )
    strata = []
    for t in sys.strata:
        strata.extend(parts if t.id == stratum_id else (t,))
    interfaces = []
    for itf in sys.interfaces:
        if stratum_id not in (itf.source, itf.target):
            interfaces.append(itf)
            continue
        for j, sl in enumerate((slice(0, k), slice(k, None))):
            if itf.source == stratum_id:
                tau, src, tgt = itf.tau[:, sl], ids[j], itf.target
            else:
                tau, src, tgt = itf.tau[sl, :], itf.source, ids[j]
            if not np.any(tau):
                continue
            interfaces.append(replace(itf, id=f"{itf.id}.{j}", source=src, target=tgt, tau=tau))
    return StratifiedSystem(tuple(strata), tuple(interfaces), sys.match_tol, sys.cluster_gap)


def scale_system(sys, c):
    """Multiply every block and coupling by ``c``; an explicit tolerance scales by ``|c|``.

    The assembled matrix becomes ``c * H`` exactly for real ``c``.  For
    non-real ``c`` a Hermitian-completed coupling carries ``conj(c)`` in its
    mirrored block, so covariance of the residue holds only for systems
    without completion.
    """
    c = complex(c)
    if c == 0:
        raise ArgumentError("scale factor must be nonzero")
    strata = tuple(replace(s, block=s.block * c) for s in sys.strata)
    interfaces = tuple(replace(i, tau=i.tau * c) for i in sys.interfaces)
    tol = sys.match_tol if sys.match_tol == "auto" else float(sys.match_tol) * abs(c)
    gap = None if sys.cluster_gap is None else sys.cluster_gap * abs(c)
    return StratifiedSystem(strata, interfaces, tol, gap)


def with_coupling_scales(sys, scales):
    """Copy of ``sys`` with interface ``id`` coupling multiplied by ``scales[id]``."""
    interfaces = tuple(
        replace(i, tau=i.tau * scales[i.id]) if i.id in scales else i for i in sys.interfaces
    )
    return replace(sys, interfaces=interfaces)

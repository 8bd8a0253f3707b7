"""Attribution of residue points to interfaces and defect classification.

Two attribution modes are available:

``leave_one_out``
    A residue point belongs to interface ``I`` when switching ``I`` off
    (coupling set to zero, plus any interface-block stratum it touches
    removed) leaves no global eigenvalue within tolerance of the point.
``tau_support``
    A residue point belongs to ``I`` when it lies within tolerance of the
    spectrum of the interface operator of ``I``.

The two modes answer different questions and need not agree: for a scalar
coupling ``tau = eps * I`` the interface operator ``tau^H tau = eps**2 I``
has nothing to do with where the coupled eigenvalues move.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError
from .jordan import eigen_structure
from .system import analyze_residue, global_spectrum

__all__ = [
    "MODES",
    "DefectReport",
    "InterfaceDefect",
    "attribute_residue",
    "classify_defects",
    "interface_jordan_info",
    "interface_operator",
]

MODES = ("leave_one_out", "tau_support")
SIGNATURES = {
    "point": "isolated eigenvalue(s)",
    "line": "continuous spectral band",
    "surface": "two-dimensional spectral region",
}


def _workers():
    try:
        return max(1, int(os.environ.get("STRATSPEC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class InterfaceDefect:
    interface: str
    points: list
    geometric_class: str
    algebraic_class: str | None = None
    depth: int | None = None
    signature: str = ""

    @property
    def label(self):
        if self.algebraic_class is None:
            return self.geometric_class
        if self.algebraic_class == "nilpotent":
            return f"({self.geometric_class}, nilpotent depth {self.depth})"
        return f"({self.geometric_class}, semisimple)"


@dataclass(frozen=True)
class DefectReport:
    """Residue split by interface plus the points no interface explains."""

    mode: str
    residue: object
    interfaces: list
    uncovered: list = field(default_factory=list)

    @property
    def covered(self):
        return not self.uncovered

    def defect(self, interface_id):
        for d in self.interfaces:
            if d.interface == interface_id:
                return d
        raise KeyError(interface_id)


def interface_operator(sys, itf):
    """Matrix whose algebraic structure classifies interface ``itf``.

    An adjacent interface-block stratum supplies its own block; otherwise
    ``tau`` itself (``operator="tau"``) or ``tau^H tau``.
    """
    blocks = sys.incident_interface_blocks(itf)
    if blocks:
        return sys.stratum(blocks[0]).block
    if itf.operator == "tau":
        return itf.tau
    return itf.tau.conj().T @ itf.tau


def _support_points(sys, itf, tol):
    op = interface_operator(sys, itf)
    return global_spectrum_of(op, tol)


def global_spectrum_of(m, tol):
    from .spectra import SpectralSet
    from .numlin import eigenvalues

    ev = eigenvalues(m, tol=tol)
    return SpectralSet.from_values(ev.values, tol, ev.multiplicities)


def attribute_residue(sys, mode="leave_one_out", analysis=None, tol=None):
    """Attribute each residue point to the interfaces that generate it.

    A point may be attributed to several interfaces.  Points attributed to
    none are listed in ``uncovered``; that is reported data, not an error.
    """
    if mode not in MODES:
        raise ArgumentError(f"unknown attribution mode {mode!r}; expected one of {MODES}")
    analysis = analyze_residue(sys, tol) if analysis is None else analysis
    tol = analysis.tol
    residue = analysis.residue
    pts = residue.to_list()

    def attributed(itf):
        if not pts:
            return []
        if mode == "leave_one_out":
            g = global_spectrum(sys, tol, exclude_interfaces={itf.id},
                                exclude_strata=set(sys.incident_interface_blocks(itf)))
            return [z for z in pts if not g.contains(z, tol)]
        support = _support_points(sys, itf, tol)
        return [z for z in pts if support.contains(z, tol)]

    workers = _workers()
    if workers > 1 and len(sys.interfaces) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = list(pool.map(attributed, sys.interfaces))
    else:
        hits = [attributed(itf) for itf in sys.interfaces]
    defects = [
        InterfaceDefect(interface=itf.id, points=h, geometric_class=itf.geometry.kind)
        for itf, h in zip(sys.interfaces, hits)
    ]
    claimed = [z for h in hits for z in h]
    uncovered = [z for z in pts if not any(abs(z - c) <= tol for c in claimed)]
    return DefectReport(mode=mode, residue=residue, interfaces=defects, uncovered=uncovered)


def interface_jordan_info(sys, tol=None):
    """Eigen structure of every interface operator, keyed by interface id."""
    return {itf.id: eigen_structure(interface_operator(sys, itf), tol) for itf in sys.interfaces}


def classify_defects(report, jordan_info):
    """Fill geometric and algebraic classes of every interface defect.

    The algebraic class is ``nilpotent`` with depth ``d`` when the
    interface operator has a Jordan block of size ``d >= 2`` and
    ``semisimple`` otherwise.  Interfaces with attributed points must have
    an entry in ``jordan_info``.
    """
    out = []
    for d in report.interfaces:
        info = jordan_info.get(d.interface)
        if info is None:
            if d.points:
                raise ArgumentError(f"no Jordan data for interface {d.interface!r} with attributed points")
            out.append(replace(d, signature=SIGNATURES[d.geometric_class]))
            continue
        depth = max(e.nilpotent_depth for e in info.eigen)
        alg = "semisimple" if depth == 1 else "nilpotent"
        sig = SIGNATURES[d.geometric_class]
        if alg == "nilpotent":
            sig += f"; Jordan block of size {depth} (derivative terms in f(T))"
        out.append(replace(d, algebraic_class=alg, depth=depth, signature=sig))
    return replace(report, interfaces=out)


def disjoint_supports(sys, tol):
    """True when interface-operator spectra are pairwise more than ``2 tol`` apart."""
    sups = [_support_points(sys, itf, tol).points for itf in sys.interfaces]
    for i in range(len(sups)):
        for j in range(i + 1, len(sups)):
            if sups[i].size and sups[j].size and np.abs(sups[i][:, None] - sups[j][None, :]).min() <= 2 * tol:
                return False
    return True

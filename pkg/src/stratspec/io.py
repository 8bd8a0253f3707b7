"""System description files, analysis reports and CSV output.

Input schema (JSON, ``version`` 1)::

    {
      "version": 1,
      "strata": [{"id": str, "matrix": [[entry, ...], ...], "interface_block": bool?}],
      "interfaces": [{"id": str, "source": str, "target": str, "tau": [[entry, ...], ...],
                      "hermitian_completion": bool?, "operator": "gram" | "tau"?,
                      "sweep_rule": str?,
                      "geometry": {"type": "point" | "line" | "surface",
                                   "domain": [a, b] | [[a, b], [c, d]]?, "expr": str?}?}],
      "tolerances": {"match_tol": float | "auto"?, "cluster_gap": float?}?
    }

An ``entry`` is a real number or an ``[re, im]`` pair.  Reports are JSON
with sorted keys and floats rounded to 12 significant digits so identical
inputs give byte-identical output.
"""

import csv
import hashlib
import json
import os
import tempfile
from io import StringIO

import numpy as np

from .errors import SchemaError, StratSpecError
from .system import Geometry, InterfaceCoupling, Stratum, StratifiedSystem

__all__ = [
    "SCHEMA_VERSION",
    "atomic_write",
    "complex_list",
    "digest",
    "dump_report",
    "load_system",
    "parse_system",
    "round_float",
    "system_to_dict",
    "write_csv",
]

SCHEMA_VERSION = 1
_SIG = 12


def _fail(msg, path):
    raise SchemaError(msg, path)


def _entry(v, path):
    if isinstance(v, bool):
        _fail("booleans are not matrix entries", path)
    if isinstance(v, (int, float)):
        return complex(float(v), 0.0)
    if isinstance(v, list) and len(v) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        return complex(float(v[0]), float(v[1]))
    _fail("matrix entry must be a number or an [re, im] pair", path)


def _matrix(rows, path):
    if not isinstance(rows, list) or not rows:
        _fail("matrix must be a nonempty list of rows", path)
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or not row:
            _fail("row must be a nonempty list", f"{path}[{i}]")
        out.append([_entry(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    widths = {len(r) for r in out}
    if len(widths) != 1:
        _fail(f"rows have different lengths {sorted(widths)}", path)
    return np.array(out, dtype=complex)


def _field(obj, key, path, kind, default=...):
    if key not in obj:
        if default is ...:
            _fail("required field missing", f"{path}.{key}")
        return default
    v = obj[key]
    if kind is not None and not isinstance(v, kind) or (kind is not bool and isinstance(v, bool)):
        _fail(f"expected {getattr(kind, '__name__', kind)}", f"{path}.{key}")
    return v


def _check_keys(obj, allowed, path):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        _fail(f"unknown field(s) {extra}", path)


def _geometry(obj, path):
    if obj is None:
        return Geometry()
    if not isinstance(obj, dict):
        _fail("expected an object", path)
    _check_keys(obj, ("type", "domain", "expr"), path)
    kind = _field(obj, "type", path, str)
    if kind not in ("point", "line", "surface"):
        _fail(f"unknown geometry type {kind!r}", f"{path}.type")
    dom = obj.get("domain")
    expr = obj.get("expr")
    if kind == "point":
        if dom is not None or expr is not None:
            _fail("point geometry takes no domain or expr", path)
        return Geometry()
    if expr is None or not isinstance(expr, str):
        _fail(f"{kind} geometry needs an expr string", f"{path}.expr")
    try:
        d = np.asarray(dom, dtype=float)
    except (TypeError, ValueError):
        _fail("domain must be numeric", f"{path}.domain")
    want = (2,) if kind == "line" else (2, 2)
    if dom is None or d.shape != want:
        _fail(f"{kind} domain must have shape {list(want)}", f"{path}.domain")
    if np.any(d[..., 0] >= d[..., 1]):
        _fail("domain intervals must have a < b", f"{path}.domain")
    dom_t = tuple(d.tolist()) if kind == "line" else tuple(tuple(r) for r in d.tolist())
    return Geometry(kind, dom_t, expr)


def parse_system(doc):
    """Build a :class:`StratifiedSystem` from a decoded JSON document."""
    if not isinstance(doc, dict):
        _fail("top level must be an object", "$")
    _check_keys(doc, ("version", "strata", "interfaces", "tolerances"), "$")
    version = _field(doc, "version", "$", int)
    if version != SCHEMA_VERSION:
        _fail(f"unsupported version {version}; expected {SCHEMA_VERSION}", "$.version")
    strata = []
    for k, s in enumerate(_field(doc, "strata", "$", list)):
        p = f"strata[{k}]"
        if not isinstance(s, dict):
            _fail("expected an object", p)
        _check_keys(s, ("id", "matrix", "interface_block"), p)
        m = _matrix(_field(s, "matrix", p, list), f"{p}.matrix")
        if m.shape[0] != m.shape[1]:
            _fail(f"stratum matrix must be square, got {m.shape}", f"{p}.matrix")
        strata.append(Stratum(_field(s, "id", p, str), m, _field(s, "interface_block", p, bool, False)))
    dims = {s.id: s.dim for s in strata}
    interfaces = []
    for k, i in enumerate(_field(doc, "interfaces", "$", list, [])):
        p = f"interfaces[{k}]"
        if not isinstance(i, dict):
            _fail("expected an object", p)
        _check_keys(i, ("id", "source", "target", "tau", "hermitian_completion", "geometry",
                        "operator", "sweep_rule"), p)
        op = _field(i, "operator", p, str, "gram")
        if op not in ("gram", "tau"):
            _fail("operator must be 'gram' or 'tau'", f"{p}.operator")
        tau = _matrix(_field(i, "tau", p, list), f"{p}.tau")
        src, tgt = _field(i, "source", p, str), _field(i, "target", p, str)
        if src in dims and tgt in dims and tau.shape != (dims[tgt], dims[src]):
            _fail(f"tau has shape {tau.shape} but strata {tgt!r} (dim {dims[tgt]}) and "
                  f"{src!r} (dim {dims[src]}) need {(dims[tgt], dims[src])}", f"{p}.tau")
        try:
            interfaces.append(InterfaceCoupling(
                id=_field(i, "id", p, str),
                source=src,
                target=tgt,
                tau=tau,
                hermitian_completion=_field(i, "hermitian_completion", p, bool, False),
                geometry=_geometry(i.get("geometry"), f"{p}.geometry"),
                operator=op,
                sweep_rule=_field(i, "sweep_rule", p, str, None),
            ))
        except SchemaError:
            raise
        except StratSpecError as exc:
            raise SchemaError(str(exc), p) from exc
    tols = _field(doc, "tolerances", "$", dict, {})
    _check_keys(tols, ("match_tol", "cluster_gap"), "tolerances")
    match_tol = tols.get("match_tol", "auto")
    if match_tol != "auto" and (isinstance(match_tol, bool) or not isinstance(match_tol, (int, float))
                                or match_tol <= 0):
        _fail("match_tol must be a positive number or 'auto'", "tolerances.match_tol")
    gap = tols.get("cluster_gap")
    if gap is not None and (isinstance(gap, bool) or not isinstance(gap, (int, float)) or gap <= 0):
        _fail("cluster_gap must be a positive number", "tolerances.cluster_gap")
    try:
        return StratifiedSystem(tuple(strata), tuple(interfaces), match_tol,
                                None if gap is None else float(gap))
    except StratSpecError as exc:
        raise SchemaError(str(exc), "$") from exc


def load_system(path):
    """Read and validate a system description file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise SchemaError(f"not UTF-8 text: {exc}", str(path)) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"JSON parse error: {exc.msg} at line {exc.lineno} column {exc.colno}",
                          str(path)) from exc
    return parse_system(doc)


def digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _pair(z):
    return [float(z.real), float(z.imag)]


def system_to_dict(sys):
    """Inverse of :func:`parse_system` (entries always as ``[re, im]`` pairs)."""
    def mat(m):
        return [[_pair(z) for z in row] for row in m]

    strata = []
    for s in sys.strata:
        d = {"id": s.id, "matrix": mat(s.block)}
        if s.interface_block:
            d["interface_block"] = True
        strata.append(d)
    interfaces = []
    for i in sys.interfaces:
        d = {"id": i.id, "source": i.source, "target": i.target, "tau": mat(i.tau),
             "hermitian_completion": i.hermitian_completion, "operator": i.operator}
        if i.sweep_rule is not None:
            d["sweep_rule"] = i.sweep_rule
        g = {"type": i.geometry.kind}
        if i.geometry.kind != "point":
            g["domain"] = (list(i.geometry.domain) if i.geometry.kind == "line"
                           else [list(r) for r in i.geometry.domain])
            g["expr"] = i.geometry.expr
        d["geometry"] = g
        interfaces.append(d)
    doc = {"version": SCHEMA_VERSION, "strata": strata, "interfaces": interfaces}
    tols = {}
    if sys.match_tol != "auto":
        tols["match_tol"] = float(sys.match_tol)
    if sys.cluster_gap is not None:
        tols["cluster_gap"] = float(sys.cluster_gap)
    if tols:
        doc["tolerances"] = tols
    return doc


def round_float(x):
    """Round to 12 significant digits; ``-0.0`` becomes ``0.0``."""
    if x is None:
        return None
    x = float(f"{float(x):.{_SIG}g}")
    return 0.0 if x == 0 else x


def snap(z):
    """Drop a real or imaginary part below ``1e-13`` of the modulus (rounding noise)."""
    z = complex(z)
    eps = 1e-13 * abs(z)
    return complex(0.0 if abs(z.real) <= eps else z.real, 0.0 if abs(z.imag) <= eps else z.imag)


def complex_list(values):
    return [[round_float(z.real), round_float(z.imag)] for z in map(snap, values)]


def _normalize(obj):
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = snap(obj)
        return [round_float(z.real), round_float(z.imag)]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_report(report):
    """Deterministic JSON text for a report dictionary."""
    return json.dumps(_normalize(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_complex(z):
    z = snap(z)
    return f"{round_float(z.real)!r}{'+' if round_float(z.imag) >= 0 else '-'}{abs(round_float(z.imag))!r}j"


def write_csv(path, header, rows):
    """Write rows atomically; ``None`` cells become empty fields."""
    buf = StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if c is None else (repr(round_float(c)) if isinstance(c, float) else c) for c in row])
    atomic_write(path, buf.getvalue())

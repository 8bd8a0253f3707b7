"""Command line interface: ``analyze``, ``sweep``, ``family`` and ``version``.

Exit codes: 0 on success, 2 when the analysis succeeded but flagged a
soft failure (uncovered residue points, or a truncated sweep), 1 on hard
errors.  Reports go to standard output, diagnostics to standard error.
"""

import argparse
import os
import sys as _sys

from . import __version__
from .deformation import (
    SweepSchedule,
    check_gap_condition,
    coupled_at,
    detect_exceptional,
    run_sweep,
    track_beta0_constancy,
)
from .errors import StratSpecError
from .family import detect_van_hove, family_residue, sample_family
from .io import complex_list, digest, dump_report, format_complex, load_system, write_csv
from .jordan import eigen_structure
from .localization import attribute_residue, classify_defects, interface_operator
from .spectra import boundary_ambiguous, verify_minimality_universality
from .system import analyze_residue, assemble_global

RIGIDITY = "spectral rigidity regime"
NONTRIVIAL = "nontrivial interaction residue"
SWEEP_COLUMNS = ["t", "gap", "beta0", "hausdorff_increment", "residue_points"]
DENSITY_COLUMNS = ["bin_left", "bin_right", "count"]


def _spectral(s):
    return [{"value": complex(z), "multiplicity": int(w)} for z, w in zip(s.points, s.weights)]


def _jordan_summary(es):
    return [
        {
            "value": e.value,
            "algebraic_mult": e.algebraic_mult,
            "geometric_mult": e.geometric_mult,
            "weyr": list(e.weyr),
            "jordan_blocks": list(e.jordan_blocks),
            "nilpotent_depth": e.nilpotent_depth,
        }
        for e in es.eigen
    ]


def _header(command, path):
    return {"tool": {"name": "stratspec", "version": __version__}, "command": command,
            "input": {"path": os.path.basename(path), "sha256": digest(path)}}


def analyze(path, mode="leave_one_out", tol=None):
    """Full pipeline for one input file; returns ``(report, exit_code)``."""
    system = load_system(path)
    res = analyze_residue(system, tol)
    tol = res.tol
    warnings = []
    verdict_min = verify_minimality_universality(res.global_, res.local_all, res.residue, tol)
    amb = boundary_ambiguous(res.global_, res.local_all, tol)
    if amb:
        warnings.append({"kind": "boundary_ambiguous", "points": complex_list(amb)})
    report = attribute_residue(system, mode, analysis=res)
    jordan_info, jordan_out = {}, {}
    for itf in system.interfaces:
        try:
            es = eigen_structure(interface_operator(system, itf))
        except StratSpecError as exc:
            warnings.append({"kind": "jordan_failed", "interface": itf.id, "message": str(exc)})
            continue
        jordan_info[itf.id] = es
        jordan_out[itf.id] = _jordan_summary(es)
    report = classify_defects(report, jordan_info)
    if report.uncovered:
        warnings.append({"kind": "coverage_failure", "points": complex_list(report.uncovered)})
    per_point = []
    for z in res.residue:
        owners = [d.interface for d in report.interfaces if any(abs(z - p) <= tol for p in d.points)]
        per_point.append({"point": complex(z), "interfaces": owners})
    out = _header("analyze", path)
    out.update({
        "tolerance": tol,
        "local_spectra": {sid: _spectral(s) for sid, s in res.local.items()},
        "local_union": _spectral(res.local_all),
        "global_spectrum": _spectral(res.global_),
        "residue": _spectral(res.residue),
        "verdict": RIGIDITY if not res.residue else NONTRIVIAL,
        "partition": {"ok": True},
        "minimality_universality": bool(verdict_min),
        "attribution": {
            "mode": mode,
            "residue_points": per_point,
            "interfaces": [
                {"id": d.interface, "points": complex_list(d.points),
                 "geometric_class": d.geometric_class, "algebraic_class": d.algebraic_class,
                 "nilpotent_depth": d.depth, "signature": d.signature}
                for d in report.interfaces
            ],
            "uncovered_count": len(report.uncovered),
        },
        "jordan": jordan_out,
        "warnings": warnings,
    })
    return out, (2 if report.uncovered else 0)


def _analyze_text(r):
    lines = [f"stratspec {r['tool']['version']}  input {r['input']['path']}  sha256 {r['input']['sha256'][:16]}",
             f"tolerance {r['tolerance']:.3g}",
             f"global spectrum: {_fmt_points(r['global_spectrum'])}",
             f"local union:     {_fmt_points(r['local_union'])}",
             f"residue:         {_fmt_points(r['residue'])}",
             f"verdict: {r['verdict']}",
             f"attribution ({r['attribution']['mode']}):"]
    for d in r["attribution"]["interfaces"]:
        cls = d["algebraic_class"] or "unclassified"
        if cls == "nilpotent":
            cls = f"nilpotent depth {d['nilpotent_depth']}"
        lines.append(f"  {d['id']}: {len(d['points'])} point(s), ({d['geometric_class']}, {cls}); {d['signature']}")
    for w in r["warnings"]:
        lines.append(f"warning: {w['kind']}")
    return "\n".join(lines) + "\n"


def _fmt_points(items):
    if not items:
        return "{}"
    return "{" + ", ".join(format_complex(complex(*it["value"]) if isinstance(it["value"], list)
                                          else it["value"]) for it in items) + "}"


def sweep(path, steps=21, rule=None, beta0_gap=None, delta=0.0, csv_path=None, t_range=None):
    """Coupling sweep plus exceptional-point fits; returns ``(report, exit_code)``."""
    system = load_system(path)
    rules = {} if rule is None else {itf.id: rule for itf in system.interfaces}
    sched = SweepSchedule.uniform(steps, rules)
    gap = beta0_gap if beta0_gap is not None else system.cluster_gap
    traj = run_sweep(system, sched, beta0_gap=gap)
    if csv_path:
        rows = [(t, g, b, inc, ";".join(format_complex(z) for z in pts))
                for t, g, b, inc, pts in traj.rows()]
        write_csv(csv_path, SWEEP_COLUMNS, rows)
    gc = check_gap_condition(traj, delta, t_range)
    bc = track_beta0_constancy(traj, t_range)
    exceptional, warnings = [], []
    a0 = assemble_global(coupled_at(system, 0.0, rules))
    try:
        es0 = eigen_structure(a0)
    except StratSpecError as exc:
        es0 = None
        warnings.append({"kind": "jordan_failed", "message": str(exc)})
    for e in es0.eigen if es0 is not None else ():
        if e.nilpotent_depth < 2:
            continue
        entry = {"value": e.value, "nilpotent_depth": e.nilpotent_depth}
        try:
            fit = detect_exceptional(lambda eps: coupled_at(system, eps, rules), e.value,
                                     cluster_size=e.algebraic_mult)
            entry.update({"exponent": fit.exponent, "m": fit.m, "fit_residual": fit.fit_residual,
                          "reliable": fit.reliable})
        except StratSpecError as exc:
            entry["error"] = str(exc)
        exceptional.append(entry)
    out = _header("sweep", path)
    out.update({
        "steps": len(traj.t),
        "t": list(traj.t),
        "beta0_gap": traj.beta0_gap,
        "residue_first": complex_list(traj.residues[0].to_list()),
        "residue_last": complex_list(traj.residues[-1].to_list()),
        "gap_condition": {"delta": delta, "ok": gc.ok, "first_violation": gc.first_violation,
                          "min_gap": gc.min_gap},
        "beta0": {"constant": bc.constant, "transitions": bc.transitions, "values": traj.beta0},
        "max_hausdorff_increment": max((i for i in traj.increments if i is not None), default=None),
        "branch_collisions": len(traj.branches.collisions),
        "exceptional_points": exceptional,
        "diagnostic": traj.diagnostic,
        "warnings": warnings,
    })
    return out, (2 if traj.truncated else 0)


def family(path, samples=1000, bins=50, csv_path=None):
    """Sample every line/surface family of the input; returns ``(report, exit_code)``."""
    system = load_system(path)
    fams = [i for i in system.interfaces if i.geometry.kind != "point"]
    if not fams:
        raise StratSpecError("input has no line or surface interface geometry")
    res = analyze_residue(system)
    local = res.local_all.to_list()
    entries = []
    for itf in fams:
        n = samples if itf.geometry.kind == "line" else min(samples, 200)
        fr = sample_family(itf.geometry.expr, itf.geometry.domain, n=n, bins=bins)
        cov = family_residue(fr, local)
        flags = detect_van_hove(fr)
        if csv_path:
            target = csv_path
            if len(fams) > 1:
                stem, ext = os.path.splitext(csv_path)
                target = f"{stem}.{itf.id}{ext or '.csv'}"
            write_csv(target, DENSITY_COLUMNS, fr.density_rows())
        entries.append({
            "interface": itf.id,
            "geometry": itf.geometry.kind,
            "expr": itf.geometry.expr,
            "samples_per_axis": n,
            "support_intervals": [list(iv) for iv in fr.support_intervals],
            "min": fr.min,
            "max": fr.max,
            "critical_values": fr.critical_values,
            "van_hove": [{"value": f.value, "kind": f.kind, "point": list(f.point),
                          "enhancement": f.enhancement, "unreliable": f.unreliable} for f in flags],
            "annotations": cov.annotations,
            "global_report": [[a, b] for a, b in cov.global_report()],
        })
    out = _header("family", path)
    out["families"] = entries
    return out, 0


def _family_text(r):
    lines = []
    for f in r["families"]:
        sup = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in f["support_intervals"])
        lines.append(f"{f['interface']} ({f['geometry']}) {f['expr']}: support {sup}")
        for v in f["van_hove"]:
            lines.append(f"  {v['kind']} at {v['value']:.6g} (enhancement {v['enhancement']:.3g})")
        for a in f["annotations"]:
            lines.append(f"  {a}")
    return "\n".join(lines) + "\n"


def _sweep_text(r):
    g = r["gap_condition"]
    lines = [f"steps {r['steps']}  residue at t=0: {len(r['residue_first'])} point(s), "
             f"at t=1: {len(r['residue_last'])} point(s)",
             f"gap condition (delta={g['delta']}): {'holds' if g['ok'] else 'violated at t=' + str(g['first_violation'])}"
             f"  min gap {g['min_gap']}",
             f"beta0 {'constant' if r['beta0']['constant'] else 'changes at ' + str(r['beta0']['transitions'])}"]
    for e in r["exceptional_points"]:
        if "exponent" in e:
            lines.append(f"exceptional point: Puiseux exponent {e['exponent']:.4f} (m = {e['m']})")
        else:
            lines.append(f"exceptional point: fit failed: {e['error']}")
    return "\n".join(lines) + "\n"


def build_parser():
    p = argparse.ArgumentParser(prog="stratspec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="residue, attribution and defect classes of a system")
    a.add_argument("input")
    a.add_argument("--mode", choices=["leave-one-out", "tau-support"], default="leave-one-out")
    a.add_argument("--tol", type=float, default=None, help="matching tolerance (default 1e-8 max(1, ||H||))")
    a.add_argument("--format", choices=["json", "text"], default="json")
    s = sub.add_parser("sweep", help="coupling-strength sweep from t = 0 to 1")
    s.add_argument("input")
    s.add_argument("--steps", type=int, default=21)
    s.add_argument("--rule", default=None, help="'linear', 'constant' or an expression in s for every interface")
    s.add_argument("--beta0-gap", type=float, default=None)
    s.add_argument("--delta", type=float, default=0.0, help="gap-condition threshold")
    s.add_argument("--t-min", type=float, default=None, help="lower end of the range for the verdicts")
    s.add_argument("--csv", default=None)
    s.add_argument("--format", choices=["json", "text"], default="json")
    f = sub.add_parser("family", help="band support, density and critical values of interface families")
    f.add_argument("input")
    f.add_argument("--samples", type=int, default=1000)
    f.add_argument("--bins", type=int, default=50)
    f.add_argument("--csv", default=None)
    f.add_argument("--format", choices=["json", "text"], default="json")
    sub.add_parser("version", help="print the tool version")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(f"stratspec {__version__}")
        return 0
    try:
        if args.command == "analyze":
            report, code = analyze(args.input, args.mode.replace("-", "_"), args.tol)
            text = _analyze_text
        elif args.command == "sweep":
            t_range = None if args.t_min is None else (args.t_min, 1.0)
            report, code = sweep(args.input, args.steps, args.rule, args.beta0_gap, args.delta, args.csv, t_range)
            text = _sweep_text
        else:
            report, code = family(args.input, args.samples, args.bins, args.csv)
            text = _family_text
    except (StratSpecError, OSError) as exc:
        print(f"stratspec: error: {exc}", file=_sys.stderr)
        return 1
    _sys.stdout.write(dump_report(report) if args.format == "json" else text(report))
    if code == 2:
        print("stratspec: residue coverage failure or truncated sweep, see report", file=_sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())

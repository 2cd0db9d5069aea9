"""Command-line front end.

Commands: check-identifiability, region, reconstruct, lump, simulate,
sweep, reproduce-paper.  Reports are JSON on stdout; file artifacts
(CSV, SVG, JSON) go to --out-dir and are written atomically.  Exit
codes: 0 success, 1 negative verdict under --strict (or a failed
reproduction check), 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import fixtures, ratmat, svgplot
from .identifiability import (
    IDENTIFIABLE, NOT_IDENTIFIABLE, RegionIsTrivial, UndiffRegion, WrongCase,
    ZeroDiagonal, check_identifiable_at, check_identifiable_known_entries,
    check_identifiable_parameterized, undiff_region,
)
from .model import (
    DimensionError, KnownEntries, NotRegular, NotWellPosed, SCMatrix,
    SchemaError, check_well_posed, nds_tfm, parse_constraints, parse_model,
    parse_rat, tfm_equal,
)
from .polymat import ShapeError
from .reconstruction import (
    Inconsistent, LumpedModel, NotReconstructible, SingularRecovery,
    check_consistency, check_reconstructible, lump, recover_scm,
)
from .sim import (
    NoConvergence, SimConfig, SingularE, Unstable, ZeroSpectrum,
    choose_sampling, distance_freq, distance_time, exact_tfm, is_stable,
    prbs, relative_error, simulate, stability_margins, stm, tau_sweep,
    _freq_eval, _sigma_max,
)

DEFAULT_SEED = 0

INPUT_ERRORS = (SchemaError, DimensionError, ShapeError, NotRegular,
                NotWellPosed, NotReconstructible, Inconsistent, WrongCase,
                RegionIsTrivial, ZeroDiagonal, ZeroSpectrum, SingularE,
                Unstable, IndexError, ValueError, OSError, KeyError)


def frac_str(x) -> str:
    f = Fraction(x)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def mat_strs(m):
    return [[frac_str(x) for x in row] for row in m]


def atomic_write(path, text: str):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ndscope-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    return atomic_write(path, "\n".join(lines) + "\n")


def fmt_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))


def default_seed() -> int:
    env = os.environ.get("NDSCOPE_SEED")
    return int(env) if env else DEFAULT_SEED


def load_model(path):
    with open(path, "rb") as fh:
        return parse_model(fh.read())


def load_scm(text_or_path, nds) -> SCMatrix:
    if os.path.exists(text_or_path):
        with open(text_or_path, "r", encoding="utf-8") as fh:
            phi = SCMatrix.from_rows(json.load(fh))
    else:
        phi = SCMatrix.parse_inline(text_or_path)
    phi.check_shape(nds)
    return phi


def resolve_scm(args, nds, embedded, flag="--scm") -> SCMatrix:
    if getattr(args, "scm", None):
        return load_scm(args.scm, nds)
    if embedded is not None:
        return embedded
    raise SchemaError(f"no SCM: pass {flag} or embed one in the model file")


def emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2) + "\n")


def _report(command: str, result: dict, artifacts=()) -> dict:
    return {"command": command, "ok": True, "error": None,
            "result": result, "artifacts": list(artifacts)}


def _region_payload(report, phi0):
    if report.verdict != NOT_IDENTIFIABLE or report.null_basis is None:
        return None
    return {
        "transposed": report.transposed,
        "basis": mat_strs(report.null_basis),
    }


def cmd_check_identifiability(args) -> int:
    nds, embedded, constraint = load_model(args.model)
    phi0 = resolve_scm(args, nds, embedded)
    if args.constraints:
        with open(args.constraints, "r", encoding="utf-8") as fh:
            constraint = parse_constraints(json.load(fh), nds)
    result: dict = {}
    if constraint is None:
        rep = check_identifiable_at(nds, phi0)
        result["mode"] = "unconstrained"
    elif isinstance(constraint, KnownEntries):
        rep = check_identifiable_known_entries(nds, phi0, constraint)
        result["mode"] = "known_entries"
        result["per_column"] = {
            str(j): {"kept": info["kept"], "fcr": info["fcr"],
                     "null_basis": mat_strs(info["null_basis"])}
            for j, info in rep.per_column.items()}
    else:
        theta0 = constraint.theta if constraint.theta else \
            tuple(Fraction(0) for _ in range(constraint.q))
        rep = check_identifiable_parameterized(nds, constraint, theta0)
        result["mode"] = "affine"
        if rep.theta_null_basis is not None:
            result["theta_null_basis"] = mat_strs(rep.theta_null_basis)
    result["case"] = rep.case.kind
    result["verdict"] = rep.verdict
    result["warnings"] = list(rep.warnings)
    result["null_basis"] = mat_strs(rep.null_basis) \
        if rep.null_basis is not None else None
    result["region"] = _region_payload(rep, phi0)
    emit(_report("check-identifiability", result))
    if args.strict and not rep.identifiable:
        return 1
    return 0


def cmd_region(args) -> int:
    nds, embedded, _ = load_model(args.model)
    phi0 = resolve_scm(args, nds, embedded)
    rep = check_identifiable_at(nds, phi0)
    seed = args.seed if args.seed is not None else default_seed()
    if rep.verdict != NOT_IDENTIFIABLE:
        emit(_report("region", {
            "verdict": rep.verdict, "trivial": True, "basis": None,
            "samples": []}))
        return 1 if args.strict else 0
    region = undiff_region(rep, phi0)
    import random as _random
    rng = _random.Random(seed)
    samples = []
    h0 = nds_tfm(nds, phi0)
    gcols = phi0.rows if region.transposed else phi0.cols
    for _ in range(args.samples):
        gamma = [[Fraction(rng.randint(-24, 24), 8) for _ in range(gcols)]
                 for _ in range(region.dim)]
        member = region.member(gamma)
        samples.append({
            "scm": mat_strs(member.entries),
            "tfm_equal": tfm_equal(nds_tfm(nds, member), h0),
        })
    emit(_report("region", {
        "verdict": rep.verdict,
        "trivial": False,
        "transposed": region.transposed,
        "basis": mat_strs(region.basis),
        "samples": samples,
    }))
    return 0


def _load_lumped(path, nds) -> LumpedModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    for key in ("A", "B", "C", "D"):
        if key not in doc:
            raise SchemaError(f"lumped model file is missing {key!r}")

    def parse(rows):
        return ratmat.freeze([[parse_rat(x) for x in r] for r in rows])

    return LumpedModel(
        E_hat=ratmat.freeze(nds.block("E")),
        A_hat=parse(doc["A"]), B_hat=parse(doc["B"]),
        C_hat=parse(doc["C"]), D_hat=parse(doc["D"]))


def cmd_reconstruct(args) -> int:
    nds, _, _ = load_model(args.model)
    model = _load_lumped(args.lumped, nds)
    recon = check_reconstructible(nds)
    result = {
        "reconstructible": recon.reconstructible,
        "per_subsystem": [dict(p) for p in recon.per_subsystem],
        "consistent": None, "conditions": None, "scm": None,
    }
    exit_code = 0
    if recon.reconstructible:
        rep = check_consistency(nds, model)
        result["consistent"] = rep.consistent
        result["conditions"] = {
            "cond_left": rep.cond_left, "cond_right": rep.cond_right,
            "cond_hm": rep.cond_hm, "recovery_unique": rep.recovery_unique,
        }
        result["H_m"] = mat_strs(rep.H_m)
        if rep.consistent:
            result["scm"] = mat_strs(recover_scm(nds, model).entries)
        elif args.strict:
            exit_code = 1
    elif args.strict:
        exit_code = 1
    emit(_report("reconstruct", result))
    return exit_code


def cmd_lump(args) -> int:
    nds, embedded, _ = load_model(args.model)
    phi = resolve_scm(args, nds, embedded)
    model = lump(nds, phi)
    payload = {
        "E": mat_strs(model.E_hat), "A": mat_strs(model.A_hat),
        "B": mat_strs(model.B_hat), "C": mat_strs(model.C_hat),
        "D": mat_strs(model.D_hat),
    }
    artifacts = []
    if args.out_dir:
        path = os.path.join(args.out_dir, "lumped.json")
        atomic_write(path, json.dumps(payload, indent=2) + "\n")
        artifacts.append(path)
    emit(_report("lump", {"lumped": payload}, artifacts))
    return 0


def _simulate_pair(nds, phi_a, phi_b, seed, amplitude=10.0):
    a_a = stm(nds, phi_a)
    a_b = stm(nds, phi_b)
    for name, a in (("a", a_a), ("b", a_b)):
        if not is_stable(a, nds.time_domain):
            raise Unstable(f"system {name} is unstable")
    t, m = choose_sampling(a_a, a_b)
    u = prbs(seed, m, nds.m_u, amplitude)
    cfg = SimConfig(T=t, M=m, seed=seed, amplitude=amplitude)
    tr_a = simulate(nds, phi_a, u, cfg)
    tr_b = simulate(nds, phi_b, u, cfg)
    return t, m, u, tr_a, tr_b


def cmd_simulate(args) -> int:
    nds, embedded, _ = load_model(args.model)
    phi_a = load_scm(args.scm_a, nds)
    phi_b = load_scm(args.scm_b, nds)
    seed = args.seed if args.seed is not None else default_seed()
    for phi in (phi_a, phi_b):
        if not check_well_posed(nds, phi):
            raise NotWellPosed("both SCMs must be well-posed")
    t, m, u, tr_a, tr_b = _simulate_pair(nds, phi_a, phi_b, seed)
    err = relative_error(tr_a, tr_b)
    with np.errstate(invalid="ignore"):
        max_err = [float(np.nanmax(err[:, j])) if np.any(~np.isnan(err[:, j]))
                   else None for j in range(err.shape[1])]
    d_t = distance_time(tr_a, tr_b)
    d_f = distance_freq(nds, phi_a, phi_b)
    margins_a = stability_margins(stm(nds, phi_a), nds.time_domain)
    margins_b = stability_margins(stm(nds, phi_b), nds.time_domain)
    artifacts = []
    out = args.out_dir or "."
    header = (["t"]
              + [f"u{j + 1}" for j in range(nds.m_u)]
              + [f"y_a{j + 1}" for j in range(nds.m_y)]
              + [f"y_b{j + 1}" for j in range(nds.m_y)]
              + [f"e{j + 1}" for j in range(nds.m_y)])
    rows = []
    for k in range(m):
        row = [fmt_float(tr_a.times[k])]
        row += [fmt_float(v) for v in u[k]]
        row += [fmt_float(v) for v in tr_a.y[k]]
        row += [fmt_float(v) for v in tr_b.y[k]]
        row += [fmt_float(v) for v in err[k]]
        rows.append(row)
    artifacts.append(write_csv(os.path.join(out, "traces.csv"), header, rows))
    metrics = {
        "T": t, "M": m, "seed": seed,
        "d_T": d_t, "d_F": d_f,
        "max_relative_error": max_err,
        "margins_a": margins_a.__dict__, "margins_b": margins_b.__dict__,
    }
    path = os.path.join(out, "metrics.json")
    atomic_write(path, json.dumps(metrics, indent=2) + "\n")
    artifacts.append(path)
    times = tr_a.times
    for j in range(nds.m_y):
        artifacts.append(svgplot.line_plot(
            os.path.join(out, f"outputs_y{j + 1}.svg"),
            [("system a", times, tr_a.y[:, j]),
             ("system b", times, tr_b.y[:, j])],
            title=f"external output {j + 1}", xlabel="time",
            ylabel=f"y{j + 1}"))
    artifacts.append(svgplot.line_plot(
        os.path.join(out, "relative_differences.svg"),
        [(f"channel {j + 1}", times, err[:, j]) for j in range(nds.m_y)],
        title="relative output differences", xlabel="time",
        ylabel="|y_b - y_a| / |y_a|", ylog=True))
    emit(_report("simulate", metrics, artifacts))
    return 0


def _parse_tau_grid(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise SchemaError("tau grid must look like start:step:stop")
    start, step, stop = (Fraction(p.strip()) for p in parts)
    if step <= 0:
        raise SchemaError("tau step must be positive")
    taus = []
    k = 0
    while True:
        tau = start + k * step
        if tau > stop:
            break
        taus.append(tau)
        k += 1
    return taus


def _sweep_one(packed):
    nds, phi0, direction, taus, seed, region = packed
    cfg = SimConfig(T=1.0, M=1, seed=seed)
    return tau_sweep(nds, phi0, direction, taus, cfg, region=region)


def _chunks(seq, n):
    size = max(1, -(-len(seq) // n))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def cmd_sweep(args) -> int:
    nds, embedded, _ = load_model(args.model)
    phi0 = load_scm(args.scm0, nds) if args.scm0 else resolve_scm(
        args, nds, embedded, flag="--scm0")
    if args.directions == "paper":
        directions = list(fixtures.SWEEP_DIRECTIONS)
        if (phi0.rows, phi0.cols) != (4, 2):
            raise SchemaError("the bundled directions are 4x2")
    else:
        with open(args.directions, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        directions = [SCMatrix.from_rows(m) for m in doc]
        for d in directions:
            d.check_shape(nds)
    seed = args.seed if args.seed is not None else default_seed()
    taus = _parse_tau_grid(args.tau)
    rep = check_identifiable_at(nds, phi0)
    region = undiff_region(rep, phi0) if rep.verdict == NOT_IDENTIFIABLE \
        else UndiffRegion(phi0=phi0, basis=[[] for _ in range(phi0.rows)])
    jobs = max(args.jobs, 1)
    if jobs > 1:
        # rows are seed-deterministic per tau, so any split is safe
        per_dir = max(1, -(-jobs // len(directions)))
        tasks = [(k, (nds, phi0, d, chunk, seed, region))
                 for k, d in enumerate(directions)
                 for chunk in _chunks(taus, per_dir)]
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, [t for _, t in tasks]))
        all_rows = [[] for _ in directions]
        for (k, _), rows in zip(tasks, results):
            all_rows[k].extend(rows)
    else:
        all_rows = [_sweep_one((nds, phi0, d, taus, seed, region))
                    for d in directions]
    out = args.out_dir or "."
    header = ["k", "tau", "d_T", "d_F", "d_S", "s_mr", "s_md", "skipped"]
    csv_rows = []
    for k, rows in enumerate(all_rows, start=1):
        for r in rows:
            csv_rows.append([
                str(k), fmt_float(r.tau),
                fmt_float(r.d_T), fmt_float(r.d_F), fmt_float(r.d_S),
                fmt_float(r.margins.s_mr) if r.margins else "",
                fmt_float(r.margins.s_md) if r.margins else "",
                "1" if r.skipped else "0"])
    artifacts = [write_csv(os.path.join(out, "sweep.csv"), header, csv_rows)]
    # d_T against d_F, one curve per direction
    series_tf = []
    for k, rows in enumerate(all_rows, start=1):
        kept = [r for r in rows if not r.skipped]
        series_tf.append((f"direction {k}",
                          [r.d_F for r in kept], [r.d_T for r in kept]))
    artifacts.append(svgplot.line_plot(
        os.path.join(out, "dT_vs_dF.svg"), series_tf,
        title="time distance against frequency distance",
        xlabel="d_F", ylabel="d_T", xlog=True, ylog=True))
    series_tau = []
    for k, rows in enumerate(all_rows, start=1):
        kept = [r for r in rows if not r.skipped]
        series_tau.append((f"d_T, direction {k}",
                           [float(r.tau) for r in kept],
                           [r.d_T for r in kept]))
        series_tau.append((f"0.016 s_mr, direction {k}",
                           [float(r.tau) for r in kept],
                           [0.016 * r.margins.s_mr
                            if r.margins.s_mr is not None else float("nan")
                            for r in kept]))
        series_tau.append((f"0.002 s_md, direction {k}",
                           [float(r.tau) for r in kept],
                           [0.002 * r.margins.s_md
                            if r.margins.s_md is not None else float("nan")
                            for r in kept]))
    artifacts.append(svgplot.line_plot(
        os.path.join(out, "dT_vs_tau.svg"), series_tau,
        title="time distance and scaled stability margins",
        xlabel="tau", ylabel="d_T and scaled margins", ylog=True))
    # singular values of a representative frequency response difference
    best = None
    for k, rows in enumerate(all_rows, start=1):
        for r in rows:
            if not r.skipped and r.d_F is not None:
                if best is None or r.d_F > best[2]:
                    best = (k, r.tau, r.d_F)
    if best is not None:
        k, tau, _ = best
        direction = directions[k - 1]
        delta = ratmat.sub(direction.as_lists(), phi0.as_lists())
        phi_t = SCMatrix(ratmat.freeze(ratmat.add(
            phi0.as_lists(), ratmat.scale(delta, tau))))
        diff = exact_tfm(nds, phi_t) - exact_tfm(nds, phi0)
        omegas = np.logspace(-3, 3, 400)
        resp = _freq_eval(diff, 1j * omegas)
        svals = np.linalg.svd(resp, compute_uv=False)
        series_sv = [(f"sigma_{i + 1}", omegas, svals[:, i])
                     for i in range(svals.shape[1])]
        artifacts.append(svgplot.line_plot(
            os.path.join(out, "singular_values.svg"), series_sv,
            title=f"singular values, direction {k}, tau={float(tau):g}",
            xlabel="omega", ylabel="singular value", xlog=True, ylog=True))
    n_skip = sum(1 for rows in all_rows for r in rows if r.skipped)
    emit(_report("sweep", {
        "directions": len(directions), "taus": len(taus),
        "skipped": n_skip, "seed": seed,
    }, artifacts))
    return 0


def cmd_reproduce_paper(args) -> int:
    nds = fixtures.demo_nds()
    phi0, phi_u, phi_i = fixtures.PHI0, fixtures.PHI_EQUIV, fixtures.PHI_DIFF
    seed = args.seed if args.seed is not None else default_seed()
    checks = []
    notes = []

    def check(name, ok, detail=""):
        checks.append({"name": name, "ok": bool(ok), "detail": detail})

    rep = check_identifiable_at(nds, phi0)
    check("not identifiable at Phi0", rep.verdict == NOT_IDENTIFIABLE,
          f"verdict={rep.verdict}")
    expected = [[Fraction(0)], [Fraction(0)], [Fraction(1)], [Fraction(-2)]]
    check("null basis spans (0,0,1,-2)^T",
          rep.null_basis == expected,
          f"basis={mat_strs(rep.null_basis) if rep.null_basis else None}")
    region = undiff_region(rep, phi0)
    check("Phi_u in region", region.contains(phi_u))
    check("Phi_i not in region", not region.contains(phi_i))

    recon = check_reconstructible(nds)
    check("K FCR and L FRR per subsystem", recon.reconstructible,
          str(recon.per_subsystem))

    h0 = nds_tfm(nds, phi0)
    check("H(Phi0) = H(Phi_u) exactly", tfm_equal(h0, nds_tfm(nds, phi_u)))
    check("H(Phi0) != H(Phi_i)", not tfm_equal(h0, nds_tfm(nds, phi_i)))

    for name, phi in (("Phi0", phi0), ("Phi_u", phi_u), ("Phi_i", phi_i)):
        got = recover_scm(nds, lump(nds, phi))
        check(f"round trip recovers {name}", got.entries == phi.entries)

    _, _, _, tr0, tru = _simulate_pair(nds, phi0, phi_u, seed)
    err_u = relative_error(tr0, tru)
    max_u = float(np.nanmax(err_u))
    check("max relative error (Phi0, Phi_u) <= 1e-6", max_u <= 1e-6,
          f"max={max_u:.3e}")
    _, _, _, tr0i, tri = _simulate_pair(nds, phi0, phi_i, seed)
    err_i = relative_error(tr0i, tri)
    max_i = float(np.nanmax(err_i))
    check("max relative error (Phi0, Phi_i) >= 10", max_i >= 10.0,
          f"max={max_i:.3e}")

    step = Fraction(1, 10) if args.full else Fraction(1)
    taus = []
    t = Fraction(0)
    while t <= 20:
        taus.append(t)
        t += step
    cfg = SimConfig(T=1.0, M=1, seed=seed)
    lin_ok = True
    skip_ok = True
    for k, direction in enumerate(fixtures.SWEEP_DIRECTIONS, start=1):
        rows = tau_sweep(nds, phi0, direction, taus, cfg, region=region)
        base = next((r for r in rows if not r.skipped and r.tau == 1), None)
        for r in rows:
            if r.skipped:
                a = stm(nds, SCMatrix(ratmat.freeze(ratmat.add(
                    phi0.as_lists(),
                    ratmat.scale(ratmat.sub(direction.as_lists(),
                                            phi0.as_lists()), r.tau)))))
                skip_ok = skip_ok and not is_stable(a, nds.time_domain)
                continue
            if base is not None and r.tau != 0:
                want = float(r.tau) * base.d_S
                if abs(r.d_S - want) > 1e-9 * max(1.0, abs(want)):
                    lin_ok = False
    check("d_S linear in tau over the sweep", lin_ok)
    check("skipped samples are exactly the unstable/irregular ones", skip_ok)

    # published frequency-distance spot value on the 0.1 grid
    spot = _spot_value_scan(nds, phi0, fixtures.SWEEP_DIRECTIONS[0])
    published = 179.20
    ok_spot = abs(spot["max_dF_retained"] - published) <= 0.01 * published
    check("max d_F for direction 1 reproduces 1.7920e2 within 1%", ok_spot,
          f"retained-grid max d_F = {spot['max_dF_retained']:.4f} at "
          f"tau = {spot['argmax_tau']}")
    if not ok_spot:
        notes.append(
            "exact arithmetic shows the tau = 1.1 grid sample has a real "
            "eigenvalue at +6.37e-5 and is discarded as unstable; the "
            "published significand is reproduced at the stable near-graze "
            "point tau = 1.11, where sup sigma = "
            f"{spot['sup_sigma_at_1_11']:.4f} (ten times the published "
            "value; see the acceptance suite for the full analysis)")

    all_ok = all(c["ok"] for c in checks)
    artifacts = []
    if args.out_dir:
        path = os.path.join(args.out_dir, "summary.json")
        atomic_write(path, json.dumps(
            {"checks": checks, "notes": notes}, indent=2) + "\n")
        artifacts.append(path)
    for c in checks:
        status = "ok" if c["ok"] else "MISMATCH"
        sys.stderr.write(f"[{status}] {c['name']}"
                         + (f" ({c['detail']})" if c["detail"] else "") + "\n")
    emit(_report("reproduce-paper",
                 {"checks": checks, "notes": notes, "all_ok": all_ok},
                 artifacts))
    return 0 if all_ok else 1


def _spot_value_scan(nds, phi0, direction):
    """Retained-grid d_F maximum for one direction plus the graze probe."""
    delta = ratmat.sub(direction.as_lists(), phi0.as_lists())
    best, best_tau = -1.0, None
    from .model import check_nds_regular
    for k in range(0, 201):
        tau = Fraction(k, 10)
        phi = SCMatrix(ratmat.freeze(ratmat.add(
            phi0.as_lists(), ratmat.scale(delta, tau))))
        if not check_nds_regular(nds, phi) or not check_well_posed(nds, phi):
            continue
        try:
            a = stm(nds, phi)
        except SingularE:
            continue
        if not is_stable(a, nds.time_domain):
            continue
        d_f = distance_freq(nds, phi, phi0)
        if d_f > best:
            best, best_tau = d_f, tau
    phi_g = SCMatrix(ratmat.freeze(ratmat.add(
        phi0.as_lists(), ratmat.scale(delta, Fraction(111, 100)))))
    diff = exact_tfm(nds, phi_g) - exact_tfm(nds, phi0)
    sup = float(_sigma_max(diff, np.array([0.0 + 0.0j]))[0])
    return {"max_dF_retained": best, "argmax_tau": str(best_tau),
            "sup_sigma_at_1_11": sup}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ndscope",
        description="structure identifiability and SCM reconstruction "
                    "for networked descriptor systems")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, scm=True):
        p.add_argument("model", help="model JSON file")
        if scm:
            p.add_argument("--scm", help="inline rows 'a,b;c,d' or JSON file")
        p.add_argument("--strict", action="store_true",
                       help="exit 1 on a negative verdict")

    p = sub.add_parser("check-identifiability",
                       help="decide global identifiability at an SCM")
    add_common(p)
    p.add_argument("--constraints", help="JSON file with a constraints object")
    p.set_defaults(func=cmd_check_identifiability)

    p = sub.add_parser("region", help="emit the undifferentiable region")
    add_common(p)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("reconstruct",
                       help="recover the SCM from a lumped model file")
    add_common(p, scm=False)
    p.add_argument("--lumped", required=True,
                   help='JSON file {"A":..,"B":..,"C":..,"D":..}')
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("lump", help="lump the NDS at an SCM")
    add_common(p)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_lump)

    p = sub.add_parser("simulate", help="paired simulation of two SCMs")
    p.add_argument("model")
    p.add_argument("--scm-a", required=True)
    p.add_argument("--scm-b", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="distance sweep along SCM rays")
    p.add_argument("model")
    p.add_argument("--scm0", default=None)
    p.add_argument("--scm", default=None, help=argparse.SUPPRESS)
    p.add_argument("--directions", required=True,
                   help="JSON file with a list of SCMs, or 'paper'")
    p.add_argument("--tau", default="0:0.1:20")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce-paper",
                       help="run the bundled study end to end")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--full", action="store_true",
                   help="tau step 0.1 instead of 1.0")
    p.set_defaults(func=cmd_reproduce_paper)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (NoConvergence, SingularRecovery) as exc:
        emit({"command": args.command, "ok": False, "error": str(exc),
              "result": {}, "artifacts": []})
        return 3
    except INPUT_ERRORS as exc:
        emit({"command": args.command, "ok": False,
              "error": f"{type(exc).__name__}: {exc}",
              "result": {}, "artifacts": []})
        return 2


if __name__ == "__main__":
    sys.exit(main())

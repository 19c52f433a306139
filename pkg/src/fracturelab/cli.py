"""Command line front end: solve, evolve, measures, verify.

Each subcommand reads one YAML scenario, writes a report.json plus
deterministic CSV tables (and rendered figures) into the output directory,
and exits 0 on success, 1 when a verification verdict fails, 2 on
configuration or runtime errors.  Heavy imports happen after argument
parsing so that --threads can cap the numerical backends through the
environment before they load.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracturelab",
        description="quasistatic brittle fracture laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
            ("solve", "equilibrium displacement at one load"),
            ("evolve", "quasistatic crack trajectories"),
            ("measures", "configurational measures of one state"),
            ("verify", "inequality, hypothesis, and axiom suites")):
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, metavar="PATH",
                       help="YAML scenario file")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory (default: output.dir "
                            "from the scenario)")
        p.add_argument("--threads", type=int, default=None, metavar="N",
                       help="cap BLAS/OpenMP threads")
        p.add_argument("--seed", type=int, default=0, metavar="N",
                       help="seed for randomized verification sweeps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("config error: --threads must be a positive integer",
                  file=sys.stderr)
            return 2
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    return _run(args)


def _run(args) -> int:
    from .config import ConfigError, load_config

    t_parse = time.perf_counter()
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    from .report import RunReport, write_report

    report = RunReport(command=args.command, config_sha256=cfg.sha256,
                       scenario=cfg.raw)
    report.timings["parse"] = time.perf_counter() - t_parse
    try:
        out = args.out or cfg.output_dir()
        os.makedirs(out, exist_ok=True)
        handler = {"solve": cmd_solve, "evolve": cmd_evolve,
                   "measures": cmd_measures, "verify": cmd_verify}
        handler[args.command](cfg, report, out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        # every domain error (geometry, energetics, solver, measures,
        # search, evolution) derives from these
        print(f"error: {exc}", file=sys.stderr)
        return 2

    t_report = time.perf_counter()
    path = write_report(report, out)
    report.timings["report"] = time.perf_counter() - t_report
    for v in report.verdicts:
        tag = {True: "PASS", False: "FAIL", None: "SKIP"}[v["pass"]]
        line = f"{tag} {v['name']}"
        if v["detail"]:
            line += f": {v['detail']}"
        print(line)
    print(f"report: {path}")
    return 0 if report.passed else 1


def _timed(report, name: str):
    class _Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, *exc):
            report.timings[name] = report.timings.get(name, 0.0) \
                + time.perf_counter() - self.t0
            return False
    return _Timer()


def _crack_summary(crack) -> dict:
    return {"description": crack.describe(), "measure": crack.length(),
            "tips": sorted(int(v) for v in crack.tips)}


def _state_rows(state) -> tuple[list[str], list[list]]:
    mesh = state.space.mesh
    header = ["dof", "node"] + (["x"] if mesh.dim == 1 else ["x", "y"])
    header.append("u")
    rows = []
    for dof in range(state.space.n_dofs):
        node = int(state.space.dof_node[dof])
        rows.append([dof, node, *[float(c) for c in mesh.nodes[node]],
                     float(state.u[dof])])
    return header, rows


def _emit_state_files(state, out: str, report) -> None:
    from .elastostatics import write_state
    from .plots import plot_state
    from .report import write_csv

    header, rows = _state_rows(state)
    write_csv(os.path.join(out, "state.csv"), header, rows)
    write_state(os.path.join(out, "state.txt"), state)
    plot_state(state, os.path.join(out, "state.png"))
    report.files += ["state.csv", "state.txt", "state.png"]


def _build_state(cfg, report):
    """Mesh, crack, material, F, u0, state per the scenario's state section."""
    from .elastostatics import CrackedSpace, solve_displacement

    sp = cfg.state_params()
    with _timed(report, "build"):
        material = cfg.material()
        F = cfg.surface()
        if sp["kind"] == "manufactured":
            from .config import ConfigError
            from .oracles import manufactured_slit_state

            mesh_node = cfg.raw.get("mesh") or {}
            if mesh_node.get("kind") != "disk":
                raise ConfigError("state.kind: manufactured needs mesh.kind "
                                  "disk")
            with _timed(report, "solve"):
                state, crack, exact = manufactured_slit_state(
                    material, F, radius=float(mesh_node.get("radius", 1.0)),
                    h=float(mesh_node.get("h", 1.0 / 64.0)),
                    amplitude=sp["amplitude"])
            report.results["exact"] = {
                "elastic_energy": exact.total_energy,
                "release_rate": exact.release_rate}
            return state.space.mesh, crack, material, F, state.boundary, state
        mesh = cfg.build_mesh()
        crack = cfg.build_crack()
        u0 = cfg.boundary_at(sp["t"])
    with _timed(report, "solve"):
        state = solve_displacement(CrackedSpace(mesh, crack), material, F,
                                   u0)
    return mesh, crack, material, F, u0, state


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(cfg, report, out: str, seed: int) -> None:
    from .elastostatics import residual_report
    from .report import write_csv

    mesh, crack, material, F, u0, state = _build_state(cfg, report)
    residual = residual_report(state, material)
    report.results["mesh"] = {"dim": mesh.dim, "nodes": mesh.n_nodes,
                              "elements": mesh.n_elements, "h": mesh.h}
    report.results["crack"] = _crack_summary(crack)
    report.results["boundary"] = u0.label
    report.results["energy"] = {"elastic": state.energy.elastic,
                                "surface": state.energy.surface,
                                "total": state.energy.total}
    report.results["solver"] = state.diagnostics
    report.results["residual"] = residual
    report.add_verdict(
        "solve.residual", residual["interior_residual"] <= 1e-6,
        f"relative interior residual {residual['interior_residual']:.3e}")
    report.add_verdict(
        "solve.crack-faces", residual["crack_face_residual"] <= 1e-6,
        f"relative crack-face flux {residual['crack_face_residual']:.3e}")
    with _timed(report, "write"):
        write_csv(os.path.join(out, "energies.csv"),
                  ["elastic", "surface", "total"],
                  [[state.energy.elastic, state.energy.surface,
                    state.energy.total]])
        report.files.append("energies.csv")
        _emit_state_files(state, out, report)


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------


def cmd_evolve(cfg, report, out: str, seed: int) -> None:
    from .plots import plot_trajectories
    from .quasistatic import (audit_axioms, evolve_equilibrium,
                              evolve_minimal)
    from .report import write_csv

    with _timed(report, "build"):
        mesh = cfg.build_mesh()
        K = cfg.build_crack()
        material = cfg.material()
        F = cfg.surface()
        schedule = cfg.schedule()
        search = cfg.search_params()
        ep = cfg.evolve_params()

    trajectories = {}
    for mode in ep["modes"]:
        with _timed(report, f"evolve.{mode}"):
            if mode == "minimal":
                traj = evolve_minimal(mesh, K, material, F, schedule,
                                      depth=search["depth"],
                                      budget=search["budget"],
                                      nucleation=search["nucleation"],
                                      mode=search["mode"])
            else:
                traj = evolve_equilibrium(mesh, K, material, F, schedule,
                                          hop_depth=ep["hop_depth"],
                                          nucleation=search["nucleation"])
        trajectories[mode] = traj
        audit = audit_axioms(traj)
        report.add_verdict(f"axioms.{mode}", audit.ok,
                           "; ".join(audit.violations) if audit.violations
                           else f"checks: {', '.join(sorted(audit.checks))}")
        report.results[f"trajectory_{mode}"] = [
            {"t": t, "elastic": e, "surface": s, "total": tot,
             "crack_measure": ln}
            for t, e, s, tot, ln in traj.energy_rows()]
        rows = []
        for i, step in enumerate(traj.steps):
            e = step.state.energy
            rows.append([i, step.t, e.elastic, e.surface, e.total,
                         step.state.space.crack.length(), len(step.hops),
                         step.state.space.crack.describe()])
        name = f"trajectory_{mode}.csv"
        write_csv(os.path.join(out, name),
                  ["step", "t", "elastic", "surface", "total",
                   "crack_measure", "hops", "crack"], rows)
        report.files.append(name)

    if len(trajectories) == 2:
        tmin, teq = trajectories["minimal"], trajectories["equilibrium"]
        div = None
        for i, (a, b) in enumerate(zip(tmin.steps, teq.steps)):
            if a.state.space.crack.edge_set != b.state.space.crack.edge_set \
                    or a.state.space.crack.nodes != b.state.space.crack.nodes:
                div = i
                break
        if div is None:
            report.results["divergence"] = None
        else:
            gap = teq.steps[div].state.energy.total \
                - tmin.steps[div].state.energy.total
            report.results["divergence"] = {
                "step": div, "t": tmin.steps[div].t, "energy_gap": gap}
        worst = min(
            (b.state.energy.total - a.state.energy.total
             for a, b in zip(tmin.steps, teq.steps)), default=0.0)
        tol = max(1e-9 * (1.0 + abs(s.state.energy.total))
                  for s in tmin.steps)
        report.add_verdict(
            "order.minimal-not-above", worst >= -tol,
            f"min over steps of E_equilibrium - E_minimal = {worst:.3e}")
    with _timed(report, "write"):
        plot_trajectories(trajectories, os.path.join(out, "trajectory.png"))
        report.files.append("trajectory.png")


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------


def _chain_verdicts(report, er_value: float, ce, cf, prefix: str = "chain"
                    ) -> None:
    tol_er = 1e-9 * (1.0 + abs(er_value))
    report.add_verdict(
        f"{prefix}.er-le-ce",
        er_value <= ce.value + ce.error + tol_er,
        f"|ER|={er_value:.6g} <= CE={ce.value:.6g} (+-{ce.error:.2g})")
    if cf.extras.get("divergent"):
        report.add_verdict(
            f"{prefix}.ce-le-cf", None,
            "shell quotient diverges (point crack in 1D); the comparison "
            "holds vacuously")
    else:
        tol_ce = 1e-9 * (1.0 + abs(ce.value))
        report.add_verdict(
            f"{prefix}.ce-le-cf",
            ce.value <= cf.value + ce.error + cf.error + tol_ce,
            f"CE={ce.value:.6g} <= CF={cf.value:.6g} (+-{cf.error:.2g})")


def cmd_measures(cfg, report, out: str, seed: int) -> None:
    from .measures import (MeasuresError, elastic_concentration,
                           er_total_variation, j_contour, perimeter_sup,
                           surface_concentration)
    from .plots import plot_measures
    from .report import measure_dict, write_csv

    mesh, crack, material, F, u0, state = _build_state(cfg, report)
    mp = cfg.measure_params()
    D = cfg.region(mesh)
    report.results["region"] = D.kind
    report.results["crack"] = _crack_summary(crack)
    report.results["energy"] = {"elastic": state.energy.elastic,
                                "surface": state.energy.surface,
                                "total": state.energy.total}

    with _timed(report, "measures"):
        er = er_total_variation(state, material, D, K=crack,
                                fan_count=mp["fan"])
        ce = elastic_concentration(state, material, D, radii=mp["radii"])
        cf = surface_concentration(F, crack, D, radii=mp["radii"])
        perim = perimeter_sup(crack)
        tips_in = [v for v in sorted(crack.tips)
                   if D.contains_points(mesh.nodes[[v]])[0]] \
            if mesh.dim == 2 else []
        j_rows = []
        for tip in tips_in:
            try:
                est = j_contour(state, material, tip, radii=mp["radii"])
            except MeasuresError as exc:
                j_rows.append({"tip": int(tip), "value": None,
                               "note": str(exc)})
                continue
            j_rows.append({"tip": int(tip), **measure_dict(est)})

    report.results["er_total_variation"] = measure_dict(er)
    report.results["elastic_concentration"] = measure_dict(ce)
    report.results["surface_concentration"] = measure_dict(cf)
    report.results["cf_normalizations"] = {
        "raw_shell_quotient": cf.value,
        "per_tip": cf.extras.get("per_tip"),
        "note": "the raw shell quotient carries a factor 2*pi per isolated "
                "planar tip (2 per 1D point); per_tip divides it out",
    }
    report.results["j_contour"] = j_rows
    j_vals = [r["value"] for r in j_rows if r.get("value") is not None]
    if j_vals:
        report.results["j_contour_mean"] = float(sum(j_vals) / len(j_vals))
    report.results["perimeter_sup"] = {"value": perim.value,
                                       "note": perim.note}
    _chain_verdicts(report, er.value, ce, cf)

    with _timed(report, "write"):
        write_csv(os.path.join(out, "er_family.csv"),
                  ["field", "value", "admissible", "waived"],
                  [[r.field, r.value, r.admissible, r.waived]
                   for r in er.table])
        write_csv(os.path.join(out, "ce_sweep.csv"), ["r", "quotient"],
                  [[r, q] for r, q in ce.samples])
        write_csv(os.path.join(out, "cf_sweep.csv"), ["r", "quotient"],
                  [[r, q] for r, q in cf.samples])
        plot_measures(report.results, os.path.join(out, "measures.png"))
        report.files += ["er_family.csv", "ce_sweep.csv", "cf_sweep.csv",
                         "measures.png"]
        _emit_state_files(state, out, report)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _verify_battery(cfg, report, out: str, inject: bool) -> list[dict]:
    from .measures import (elastic_concentration, er_total_variation,
                           surface_concentration)
    from .scenarios import standard_battery

    rows = []
    with _timed(report, "battery"):
        members = standard_battery(include_nonequilibrium=inject)
        for m in members:
            base = {"state": m.name, "dim": m.state.space.mesh.dim,
                    "equilibrium": m.equilibrium}
            if not m.equilibrium:
                report.add_verdict(f"battery.{m.name}", None,
                                   "precondition: equilibrium required")
                rows.append({**base, "status": "skipped",
                             "reason": "precondition: equilibrium required"})
                continue
            er = er_total_variation(m.state, m.material, m.region, K=m.crack)
            ce = elastic_concentration(m.state, m.material, m.region,
                                       radii=m.radii)
            cf = surface_concentration(m.F, m.crack, m.region, radii=m.radii)
            divergent = bool(cf.extras.get("divergent"))
            ok_1 = er.value <= ce.value + ce.error \
                + 1e-9 * (1.0 + abs(er.value))
            ok_2 = divergent or ce.value <= cf.value + ce.error + cf.error \
                + 1e-9 * (1.0 + abs(ce.value))
            rows.append({
                **base, "status": "checked",
                "er": er.value, "ce": ce.value, "ce_err": ce.error,
                "cf": cf.value, "cf_err": cf.error,
                "cf_per_tip": cf.extras.get("per_tip"),
                "cf_divergent": divergent,
                "ce_minus_er": ce.value - er.value,
                "cf_minus_ce": math.nan if divergent
                else cf.value - ce.value,
            })
            report.add_verdict(
                f"battery.{m.name}", ok_1 and ok_2,
                f"|ER|={er.value:.4g} CE={ce.value:.4g} CF="
                + ("divergent" if divergent else f"{cf.value:.4g}"))
    checked = [r for r in rows if r["status"] == "checked"]
    report.add_verdict(
        "battery.size", len(checked) >= 10,
        f"{len(checked)} equilibrium states checked across "
        f"{len({r['dim'] for r in checked})} dimensions")
    return rows


def _verify_hypotheses(cfg, report, pairs: int, seed: int) -> None:
    import numpy as np

    from .energetics import SurfaceEnergySpec
    from .geometry import build_rect_mesh
    from .scenarios import hypothesis_sweep

    with _timed(report, "hypotheses"):
        mesh = build_rect_mesh(1.0, 1.0, 8)
        F = SurfaceEnergySpec("griffith", G=1.5)
        sweep = hypothesis_sweep(F, mesh, pairs,
                                 np.random.default_rng(seed))
    report.results["hypotheses"] = {
        "pairs": sweep["pairs"],
        "h1_failures": sweep["h1_failures"],
        "h2_failures": sweep["h2_failures"],
        "h1_worst_slack": sweep["h1_worst_slack"],
        "h2_worst_slack": sweep["h2_worst_slack"],
        "point_probe": sweep["point_probe"].values,
        "segment_probe": sweep["segment_probe"].values,
    }
    report.add_verdict(
        "hypotheses.subadditive", sweep["h1_failures"] == 0,
        f"{pairs} random pairs, worst slack {sweep['h1_worst_slack']:.2e}")
    report.add_verdict(
        "hypotheses.dilation", sweep["h2_failures"] == 0,
        f"{pairs} random dilations, worst slack "
        f"{sweep['h2_worst_slack']:.2e}")
    point = sweep["point_probe"].values
    report.add_verdict(
        "hypotheses.shell-point", not point.get("divergent"),
        f"finite shell limit {point.get('limsup_estimate'):.4g}")
    seg = sweep["segment_probe"].values
    report.add_verdict(
        "hypotheses.shell-segment", bool(seg.get("divergent")),
        "positive-length set flagged divergent")


def _verify_axioms(cfg, report) -> None:
    from .quasistatic import (audit_axioms, evolve_equilibrium,
                              evolve_minimal)
    from .scenarios import barrier_scenario, threshold_scenario

    with _timed(report, "axioms"):
        bar = threshold_scenario()
        traj_bar = evolve_minimal(bar["mesh"], bar["K"], bar["material"],
                                  bar["F"], bar["schedule"],
                                  depth=bar["depth"])
        audit_bar = audit_axioms(traj_bar)
        report.add_verdict(
            "axioms.bar", audit_bar.ok,
            "; ".join(audit_bar.violations) if audit_bar.violations else
            "ramp through the intact/broken exchange passes every audit")

        scn = barrier_scenario()
        tmin = evolve_minimal(scn["mesh"], scn["K"], scn["material"],
                              scn["F"], scn["schedule"], depth=scn["depth"])
        teq = evolve_equilibrium(scn["mesh"], scn["K"], scn["material"],
                                 scn["F"], scn["schedule"],
                                 hop_depth=scn["hop_depth"])
        for traj in (tmin, teq):
            audit = audit_axioms(traj)
            report.add_verdict(
                f"axioms.barrier-{traj.mode}", audit.ok,
                "; ".join(audit.violations) if audit.violations else
                "all audits pass")
        div = None
        for i, (a, b) in enumerate(zip(tmin.steps, teq.steps)):
            if a.state.space.crack.edge_set != b.state.space.crack.edge_set:
                div = i
                break
        gap = 0.0 if div is None else \
            teq.steps[div].state.energy.total \
            - tmin.steps[div].state.energy.total
        tol = 1e-9 * (1.0 + abs(tmin.steps[-1].state.energy.total))
        report.results["metastability"] = {
            "divergence_step": div,
            "divergence_t": None if div is None else tmin.steps[div].t,
            "energy_gap": gap, "tolerance": tol}
        report.add_verdict(
            "metastability.divergence", div is not None,
            "trajectories never part ways" if div is None else
            f"modes diverge at step {div} (t={tmin.steps[div].t:g})")
        report.add_verdict(
            "metastability.gap", gap > 10.0 * tol,
            f"equilibrium sits {gap:.4g} above the minimal state "
            f"(tolerance {tol:.2e})")
        worst = min(b.state.energy.total - a.state.energy.total
                    for a, b in zip(tmin.steps, teq.steps))
        report.add_verdict(
            "order.minimal-not-above", worst >= -tol,
            f"min over steps of E_equilibrium - E_minimal = {worst:.3e}")


def _verify_chain(cfg, report, out: str) -> None:
    from .quasistatic import evolve_minimal, verify_measure_chain
    from .report import write_csv
    from .scenarios import growth_scenario

    with _timed(report, "chain"):
        scn = growth_scenario()
        traj = evolve_minimal(scn["mesh"], scn["K"], scn["material"],
                              scn["F"], scn["schedule"], depth=scn["depth"])
        chain = verify_measure_chain(traj)
    report.add_verdict("chain.growth", chain.ok, chain.note)
    report.results["chain"] = [
        {"t": r.t, "er": r.er_tv, "ce": r.ce.value, "cf": r.cf.value,
         "er_le_ce": r.er_le_ce, "ce_le_cf": r.ce_le_cf,
         "residual_er_ce": r.eq_residual_er_ce,
         "residual_ce_cf_raw": r.eq_residual_ce_cf_raw,
         "residual_ce_cf_per_tip": r.eq_residual_ce_cf_per_tip}
        for r in chain.steps]
    write_csv(os.path.join(out, "chain_steps.csv"),
              ["t", "er", "ce", "cf", "er_le_ce", "ce_le_cf",
               "residual_er_ce", "residual_ce_cf_raw",
               "residual_ce_cf_per_tip"],
              [[r.t, r.er_tv, r.ce.value, r.cf.value, r.er_le_ce,
                r.ce_le_cf, r.eq_residual_er_ce, r.eq_residual_ce_cf_raw,
                r.eq_residual_ce_cf_per_tip] for r in chain.steps])
    report.files.append("chain_steps.csv")


def cmd_verify(cfg, report, out: str, seed: int) -> None:
    from .plots import plot_battery
    from .report import write_csv

    vp = cfg.verify_params()
    if "battery" in vp["suites"]:
        rows = _verify_battery(cfg, report, out,
                               vp["inject_nonequilibrium"])
        report.results["battery"] = rows
        header = ["state", "dim", "status", "equilibrium", "er", "ce",
                  "ce_err", "cf", "cf_err", "cf_per_tip", "cf_divergent",
                  "reason"]
        write_csv(os.path.join(out, "battery.csv"), header,
                  [[r.get(k, "") for k in header] for r in rows])
        report.files.append("battery.csv")
        checked = [r for r in rows if r["status"] == "checked"]
        plot_battery(checked, os.path.join(out, "verify.png"))
        report.files.append("verify.png")
    if "hypotheses" in vp["suites"]:
        _verify_hypotheses(cfg, report, vp["pairs"], seed)
    if "axioms" in vp["suites"]:
        _verify_axioms(cfg, report)
    if "chain" in vp["suites"]:
        _verify_chain(cfg, report, out)


if __name__ == "__main__":
    sys.exit(main())

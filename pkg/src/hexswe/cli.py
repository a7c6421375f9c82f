"""Command-line interface.

Subcommands: convert, generate, run, validate, calibrate, sensitivity.
Exit codes: 0 on success, 2 on configuration errors, 3 on numeric failure.
The HEXSWE_THREADS environment variable overrides the solver thread count.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

import numpy as np

from . import outputs
from .errors import ConfigError, GridFormatError, HexsweError, NumericError
from .grid import load_esri_ascii, port_to_hex
from .physics import rain_rate
from .scenario import Scenario, build_grid_from_section, load_scenario, _floats
from .simulate import simulate
from .solver import resolve_boundaries


def _apply_thread_override() -> None:
    req = os.environ.get("HEXSWE_THREADS")
    if not req:
        return
    import numba

    n = max(1, min(int(req), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)


# ---------------------------------------------------------------------------
# convert / generate
# ---------------------------------------------------------------------------


def cmd_convert(args) -> int:
    rect = load_esri_ascii(args.dem)
    crop = tuple(args.crop) if args.crop else None
    grid = port_to_hex(rect, args.n_first_row, crop=crop)
    grid.save(args.output)
    in_dom = int(np.count_nonzero(grid.in_domain))
    print(
        f"ported {args.dem}: radius={grid.radius:.6g} m, cells={grid.n_cells} "
        f"({in_dom} in domain), rows={grid.rows} -> {args.output}"
    )
    return 0


def cmd_generate(args) -> int:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not cp.read(args.spec):
        raise ConfigError(f"cannot read surface spec {args.spec}")
    if "grid" not in cp:
        raise ConfigError("surface spec needs a [grid] section")
    grid = build_grid_from_section(cp["grid"], os.path.dirname(os.path.abspath(args.spec)))
    grid.save(args.output)
    in_dom = int(np.count_nonzero(grid.in_domain))
    print(
        f"generated {cp['grid'].get('surface', '?')} grid: radius={grid.radius:.6g} m, "
        f"cells={grid.n_cells} ({in_dom} in domain) -> {args.output}"
    )
    return 0


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _query_cell(scenario: Scenario, x: float, y: float) -> int:
    grid = scenario.grid
    cid = grid.cell_at(x, y)
    if cid < 0:
        print("no in-domain cell found")
        return 2
    nb = " ".join(str(int(j)) for j in grid.neighbors[cid])
    print(f"cell {cid}: center=({grid.centers[cid, 0]:.6g}, {grid.centers[cid, 1]:.6g})")
    print(f"  z={grid.z[cid]:.6g} m  theta={scenario.env.theta[cid]:.6g}")
    print(f"  class={['interior', 'boundary', 'outside'][int(grid.cell_class[cid])]}")
    print(f"  neighbors: {nb}")
    return 0


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.query_cell:
        return _query_cell(scenario, args.query_cell[0], args.query_cell[1])
    outdir = outputs.ensure_dir(args.output or f"{scenario.name}_out")
    state = scenario.initial
    if args.resume:
        state, _ = outputs.load_checkpoint(args.resume)
    out = scenario.output
    snap_count = [0]

    def snapshot_hook(st):
        tag = f"{st.t:.6g}".replace(".", "p")
        outputs.write_snapshot_csv(
            os.path.join(outdir, f"snapshot_{tag}.csv"), scenario.grid, scenario.env, st
        )
        if out.heatmaps:
            h_ref = out.h_ref
            if h_ref <= 0:
                h_ref = max(float(np.max(st.h)), 1e-6) / 4.0
            outputs.write_heatmap_ppm(
                os.path.join(outdir, f"snapshot_{tag}.ppm"),
                scenario.grid,
                scenario.env,
                st,
                h_ref=h_ref,
                width_px=out.width_px,
            )
        snap_count[0] += 1

    result = simulate(
        state,
        scenario.env,
        scenario.grid,
        scenario.controls,
        gauges=list(out.gauges),
        record_interval=out.interval,
        snapshot_times=list(out.snapshot_times),
        viscosity=scenario.viscosity,
        snapshot_hook=snapshot_hook,
    )
    if out.gauges:
        outputs.write_gauge_csv(os.path.join(outdir, "gauges.csv"), result.gauge_rows, len(out.gauges))
    if out.interval > 0:
        outputs.write_hydrograph_csv(os.path.join(outdir, "hydrograph.csv"), result.hydrograph_rows)
        from . import figures

        figures.fig_hydrograph(os.path.join(outdir, "hydrograph.png"), result.hydrograph_rows)
    outputs.write_budget_csv(os.path.join(outdir, "budget.csv"), result.budget)
    outputs.save_checkpoint(
        os.path.join(outdir, "final_state.npz"), result.state, result.budget
    )
    b = result.budget
    print(
        f"run {scenario.name}: t={result.state.t:g} s in {result.steps} steps"
        + (" (stopped steady)" if result.stopped_steady else "")
    )
    print(
        f"  budget [m^3]: rainfall={b['rainfall_m3']:.6g} in={b['boundary_in_m3']:.6g} "
        f"out={b['water_out_m3']:.6g} left={b['water_left_m3']:.6g} "
        f"closure={b['closure_m3']:.3g}"
    )
    print(f"  outputs in {outdir} ({snap_count[0]} snapshots)")
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    from . import validation

    outdir = outputs.ensure_dir(args.output or f"validate_{args.suite}")
    if args.suite == "thacker":
        radius = 2.8 if args.scale == "desk" else 0.888231
        res = validation.thacker_validation(radius=radius, outdir=outdir)
        print(f"thacker: {res['n_cells']} cells, radius {res['radius']} m")
        for t, e, ep in zip(res["times"], res["errors"], res["errors_point"]):
            print(f"  t={t:>5g} s  sup rel surface error {e:.4f} (center-ref {ep:.4f})")
    elif args.suite == "radial":
        radius = 0.7 if args.scale == "desk" else 0.35
        for kind in ("crater", "hillock"):
            res = validation.radial_validation(kind=kind, radius=radius, outdir=outdir)
            print(
                f"radial {kind}: {res['n_cells']} cells  eps_h={res['eps_h']:.4f} "
                f"eps_v={res['eps_v']:.4f} (steady={res['steady']})"
            )
    elif args.suite == "riemann":
        n_section = 300 if args.scale == "desk" else 1122
        res = validation.riemann_validation(
            n_section=n_section, cache_dir=os.path.join(outdir, "cache"), outdir=outdir
        )
        print(
            f"riemann: section of {res['n_section']} points, mean rel surface error "
            f"{res['mean_rel_surface_error']:.5f}, moving fronts: {res['n_moving_fronts']}"
        )
    elif args.suite == "flume":
        uni = validation.flume_uniform_check()
        for case in uni:
            print(
                f"flume uniform q={case['q']:g} theta={case['theta']:g}: "
                f"h_mid={case['h_mid'] * 1000:.2f} mm vs root={case['h_root'] * 1000:.2f} mm "
                f"(rel err {case['rel_err']:.4f})"
            )
        res = validation.flume_transition_check(outdir=outdir)
        print(
            f"flume transition: jump at x={res['x_at_max_gradient']:.2f} m, "
            f"veg side deeper: {res['veg_side_deeper']}"
        )
    else:
        raise ConfigError(f"unknown validation suite {args.suite!r}")
    print(f"reports in {outdir}")
    return 0


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------


def _load_calibrate_config(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not cp.read(path):
        raise ConfigError(f"cannot read calibration config {path}")
    from .calibrate import ParamBox
    from .flume import FlumeConfig, standard_layout

    if "box" not in cp:
        raise ConfigError("calibration config needs a [box] section")
    bsec = cp["box"]
    a_s = _floats(bsec.get("alpha_s", ""))
    a_p = _floats(bsec.get("alpha_p", ""))
    if len(a_s) != 2 or len(a_p) != 2:
        raise ConfigError("[box] alpha_s and alpha_p need 'lo hi' pairs")
    box = ParamBox(
        alpha_s_lo=a_s[0],
        alpha_s_hi=a_s[1],
        alpha_p_lo=a_p[0],
        alpha_p_hi=a_p[1],
        n_s=int(bsec.get("n_s", "21")),
        n_p=int(bsec.get("n_p", "26")),
    )
    csec = cp["channel"] if "channel" in cp else {}
    flume = FlumeConfig(
        length=float(csec.get("length", "18")),
        width=float(csec.get("width", "0.6")),
        radius=float(csec.get("radius", "0.1")),
        slope=float(csec.get("slope", "0.00105")),
    )
    esec = cp["experiments"] if "experiments" in cp else {}
    theta_v = float(esec.get("theta_v", "0.99364"))
    x_jump = float(esec.get("x_jump", "9.0"))
    meta = {}
    for key in sorted(k for k in esec.keys() if k.startswith("exp")):
        tokens = esec[key].split()
        label = tokens[0]
        params = dict(tok.split("=", 1) for tok in tokens[1:])
        if "q" not in params or "layout" not in params:
            raise ConfigError(f"experiment line {key} needs q= and layout=")
        breaks, values = standard_layout(params["layout"], x_jump, theta_v)
        meta[label] = {"q": float(params["q"]), "theta_breaks": breaks, "theta_values": values}
    ssec = cp["search"] if "search" in cp else {}
    return cp, box, flume, meta, ssec


def cmd_calibrate(args) -> int:
    from . import figures
    from .calibrate import chi, chi_surface, pattern_search, read_experiments_csv
    from .flume import FlumeGaugeRunner

    cp, box, flume_cfg, meta, ssec = _load_calibrate_config(args.config)
    if not meta:
        raise ConfigError("calibration config lists no experiments")
    exps = read_experiments_csv(args.experiments, meta)
    runner = FlumeGaugeRunner(flume_cfg)
    outdir = outputs.ensure_dir(args.output or "calibrate_out")

    objective = lambda p: chi(p[0], p[1], exps, runner)
    start_txt = (ssec.get("start", "") or "").strip()
    if start_txt:
        start = _floats(start_txt)
        if len(start) != 2:
            raise ConfigError("[search] start needs two values: alpha_s alpha_p")
        if not box.contains(start[0], start[1]):
            raise ConfigError("search start lies outside the parameter box")
        starts = [tuple(start)]
    else:
        starts = [
            (box.alpha_s_lo, box.alpha_p_lo),
            (box.alpha_s_lo, box.alpha_p_hi),
            (box.alpha_s_hi, box.alpha_p_lo),
            (box.alpha_s_hi, box.alpha_p_hi),
        ]
    tol = float(ssec.get("tol", "1e-3") or 1e-3)
    max_evals = int(ssec.get("max_evals", "500") or 500)
    bounds = [(box.alpha_s_lo, box.alpha_s_hi), (box.alpha_p_lo, box.alpha_p_hi)]
    spans = (box.alpha_s_hi - box.alpha_s_lo, box.alpha_p_hi - box.alpha_p_lo)
    step0 = [0.25 * spans[0], 0.25 * spans[1]]
    rows = []
    best = None
    for s in starts:
        res = pattern_search(
            objective,
            s,
            step0,
            tol=[tol * spans[0], tol * spans[1]],
            max_evals=max_evals,
            bounds=bounds,
        )
        rows.append([s[0], s[1], res.x[0], res.x[1], res.fun, res.evals, str(res.converged)])
        print(
            f"start ({s[0]:.5g}, {s[1]:.5g}) -> ({res.x[0]:.5g}, {res.x[1]:.5g}) "
            f"chi={res.fun:.4f} mm in {res.evals} evaluations"
        )
        if best is None or res.fun < best.fun:
            best = res
    outputs.write_csv(
        os.path.join(outdir, "search_results.csv"),
        ["start_alpha_s", "start_alpha_p", "alpha_s", "alpha_p", "chi_mm", "evals", "converged"],
        rows,
    )
    if (cp["search"].get("grid_surface", "true") if "search" in cp else "true").lower() in (
        "1",
        "true",
        "yes",
    ):
        gs, gp, surface = chi_surface(exps, box, runner)
        grid_rows = []
        for i, a_s in enumerate(gs):
            for j, a_p in enumerate(gp):
                grid_rows.append([a_s, a_p, surface[i, j]])
        outputs.write_csv(
            os.path.join(outdir, "chi_surface.csv"), ["alpha_s", "alpha_p", "chi_mm"], grid_rows
        )
        figures.fig_error_surface(
            os.path.join(outdir, "chi_surface.png"), gs, gp, surface, minimum=best.x
        )
    print(
        f"best: alpha_s={best.x[0]:.5g} alpha_p={best.x[1]:.5g} chi={best.fun:.4f} mm "
        f"({runner.runs} steady runs)"
    )
    print(f"reports in {outdir}")
    return 0


# ---------------------------------------------------------------------------
# sensitivity
# ---------------------------------------------------------------------------


def cmd_sensitivity(args) -> int:
    from . import figures
    from .calibrate import ParamBox, sensitivity
    from .channel import steady_flume_profile

    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not cp.read(args.sweep):
        raise ConfigError(f"cannot read sweep file {args.sweep}")
    if "sweep" not in cp:
        raise ConfigError("sweep file needs a [sweep] section")
    ssec = cp["sweep"]
    pts_txt = (ssec.get("points", "") or "").strip()
    points = []
    for chunk in pts_txt.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        vals = _floats(chunk)
        if len(vals) != 3:
            raise ConfigError(f"sweep point {chunk!r} needs q,theta_v,m")
        points.append(tuple(vals))
    if not points:
        raise ConfigError("sweep file lists no environment points")
    bsec = cp["box"] if "box" in cp else {}
    a_s = _floats(bsec.get("alpha_s", "0.0025 0.0185"))
    a_p = _floats(bsec.get("alpha_p", "55 80"))
    box = ParamBox(
        alpha_s_lo=a_s[0],
        alpha_s_hi=a_s[1],
        alpha_p_lo=a_p[0],
        alpha_p_hi=a_p[1],
        n_s=int(bsec.get("n_s", "5")),
        n_p=int(bsec.get("n_p", "5")),
    )
    model = ssec.get("model", "solver").strip().lower()
    csec = cp["channel"] if "channel" in cp else {}
    length = float(csec.get("length", "18"))
    width = float(csec.get("width", "0.6"))
    radius = float(csec.get("radius", "0.1"))
    x_jump = float(csec.get("x_jump", "9"))
    table = []
    for q, theta_v, m in points:
        if model == "affine":
            c0 = float(ssec.get("c0", "0"))
            cs = float(ssec.get("cs", "0"))
            cpp = float(ssec.get("cp", "0"))
            hbar = lambda a_s_, a_p_: c0 + cs * a_s_ + cpp * a_p_
        elif model == "solver":

            def hbar(a_s_, a_p_, q=q, theta_v=theta_v, m=m):
                x, h, _, converged = steady_flume_profile(
                    length=length,
                    width=width,
                    radius=radius,
                    slope=m,
                    theta_breaks=(x_jump,),
                    theta_values=(1.0, theta_v),
                    q=q,
                    alpha_s=a_s_,
                    alpha_p=a_p_,
                )
                if not converged:
                    raise NumericError(
                        f"sweep run did not reach steady state at q={q:g}, m={m:g}"
                    )
                veg = x >= x_jump
                return float(np.mean(h[veg]))

        else:
            raise ConfigError(f"unknown sweep model {model!r}")
        d_s = sensitivity("s", hbar, box)
        d_p = sensitivity("p", hbar, box)
        table.append([q, theta_v, m, d_s, d_p])
        print(f"q={q:g} theta_v={theta_v:g} m={m:g}: delta_s={d_s:.6g} delta_p={d_p:.6g}")
    outdir = outputs.ensure_dir(args.output or "sensitivity_out")
    outputs.write_csv(
        os.path.join(outdir, "sensitivities.csv"),
        ["q", "theta_v", "m", "delta_s", "delta_p"],
        table,
    )
    figures.fig_sensitivity(os.path.join(outdir, "sensitivities.png"), table)
    print(f"reports in {outdir}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexswe",
        description="Porous shallow-water flow on regular hexagonal rasters",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="port an ESRI ASCII DEM to a hexagonal raster")
    p.add_argument("dem", help="input .asc file")
    p.add_argument("-n", "--n-first-row", type=int, required=True,
                   help="hexagon count across the raster width")
    p.add_argument("--crop", type=float, nargs=4, metavar=("X0", "Y0", "X1", "Y1"),
                   help="restrict porting to a raster-coordinate window")
    p.add_argument("-o", "--output", default="grid.txt")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("generate", help="generate a hexagonal raster from an analytic surface")
    p.add_argument("spec", help="surface spec file with a [grid] section")
    p.add_argument("-o", "--output", default="grid.txt")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="simulate a scenario file")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", help="output directory")
    p.add_argument("--resume", help="resume from a checkpoint file")
    p.add_argument("--query-cell", type=float, nargs=2, metavar=("X", "Y"),
                   help="print info for the cell at (X, Y) and exit")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="run a validation suite")
    p.add_argument("suite", choices=["thacker", "radial", "riemann", "flume"])
    p.add_argument("--scale", choices=["desk", "paper"], default="desk")
    p.add_argument("-o", "--output", help="report directory")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("calibrate", help="estimate friction parameters from gauge data")
    p.add_argument("experiments", help="experiments CSV (experiment, x_m, h_measured_mm)")
    p.add_argument("-c", "--config", required=True, help="calibration config file")
    p.add_argument("-o", "--output", help="report directory")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sensitivity", help="friction-sensitivity sweep over environment points")
    p.add_argument("sweep", help="sweep spec file")
    p.add_argument("-o", "--output", help="report directory")
    p.set_defaults(func=cmd_sensitivity)
    return parser


def main(argv=None) -> int:
    _apply_thread_override()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GridFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except HexsweError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: bifurcation, monodromy, taylor, polygon, dh, spectrum,
invert, converge, reproduce-figures.  Every run writes a manifest JSON
(config echo, package version, seed, wall time) next to its artifacts.
Exit codes: 0 ok, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import ConfigError, SemitoricError
from .models import MomentValue, get_model, model_from_json
from .svg import SvgCanvas

DEFAULT_SEED = 42


def _out_dir(args):
    out = os.environ.get("SEMITORIC_OUT", args.out)
    os.makedirs(out, exist_ok=True)
    return out


def _model_from_args(args):
    if args.params:
        try:
            params = json.loads(args.params)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--params is not valid JSON: {exc}") from exc
        return model_from_json({"model": args.model, "params": params})
    return get_model(args.model)


def _write_manifest(out, name, config, t0, seed):
    clean = {
        k: v
        for k, v in dict(config).items()
        if isinstance(v, (str, int, float, bool, type(None)))
    }
    manifest = {
        "command": name,
        "config": clean,
        "version": __version__,
        "seed": seed,
        "wall_time_s": round(time.time() - t0, 3),
    }
    with open(os.path.join(out, f"{name}_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _parse_window(s):
    vals = [float(v) for v in s.split(",")]
    if len(vals) != 4:
        raise ConfigError("window must be mu_lo,mu_hi,lam_lo,lam_hi")
    return (vals[0], vals[1]), (vals[2], vals[3])


def _spectrum_for(args, window):
    from .quantum import jc_params, jc_spectrum, pendulum_params, pendulum_spectrum

    if args.model == "spherical_pendulum":
        qp = pendulum_params(args.hbar, args.L)
        return pendulum_spectrum(qp, window)
    if args.model == "spin_oscillator":
        if args.j is not None:
            j = args.j
        else:
            j = 1.0 / args.hbar - 0.5
        qp = jc_params(j, args.nmax)
        return jc_spectrum(qp, window)
    raise ConfigError(f"no quantization implemented for '{args.model}'")


def _bifurcation_overlay(canvas, model, seed):
    from .singularities import bifurcation_diagram

    rng = np.random.default_rng(seed)
    pts = model.sample(rng, 4000)
    mv = np.array([model.moment(z) for z in pts])
    lo = mv.min(axis=0)
    hi = mv.max(axis=0)
    base = ((lo[0] - 0.1, hi[0] + 0.1), (lo[1] - 0.1, hi[1] + 0.1))
    scale = float(np.max(np.abs(pts))) * 1.2
    phase = (-scale * np.ones(model.dim), scale * np.ones(model.dim))
    diag = bifurcation_diagram(model, base, phase, rng=rng)
    for mv_, wt in diag.critical_values:
        if wt.k == 1:
            canvas.dot(mv_.a, mv_.b, r=1.2, color="red")
        elif wt.as_tuple() == (0, 0, 0, 1):
            canvas.circle(mv_.a, mv_.b, r_px=6, color="red")
        else:
            canvas.dot(mv_.a, mv_.b, r=3.0, color="red")
    return diag


def cmd_bifurcation(args):
    import csv

    from .singularities import bifurcation_diagram

    out = _out_dir(args)
    t0 = time.time()
    model = _model_from_args(args)
    rng = np.random.default_rng(args.seed)
    pts = model.sample(rng, 4000)
    mv = np.array([model.moment(z) for z in pts])
    lo, hi = mv.min(axis=0), mv.max(axis=0)
    base = ((lo[0] - 0.1, hi[0] + 0.1), (lo[1] - 0.1, hi[1] + 0.1))
    scale = float(np.max(np.abs(pts))) * 1.2
    phase = (-scale * np.ones(model.dim), scale * np.ones(model.dim))
    diag = bifurcation_diagram(model, base, phase, resolution=args.resolution,
                               grid_density=args.grid_density, rng=rng)
    path = os.path.join(out, "bifurcation.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["a", "b", "type_k", "type_e", "type_h", "type_ff"])
        for mv_, wt in diag.critical_values:
            wr.writerow([f"{mv_.a:.12g}", f"{mv_.b:.12g}", *wt.as_tuple()])
    canvas = SvgCanvas(base[0], base[1])
    canvas.axes("J", "H")
    sel = np.random.default_rng(args.seed).choice(len(mv), min(2000, len(mv)),
                                                  replace=False)
    for a, b in mv[sel]:
        canvas.dot(a, b, r=0.8, color="#bbb", opacity=0.5)
    for mv_, wt in diag.critical_values:
        if wt.k == 1:
            canvas.dot(mv_.a, mv_.b, r=1.2, color="red")
        elif wt.as_tuple() == (0, 0, 0, 1):
            canvas.circle(mv_.a, mv_.b, 6, "red")
        else:
            canvas.dot(mv_.a, mv_.b, r=3.0, color="red")
    canvas.write(os.path.join(out, "bifurcation.svg"))
    print(f"bifurcation: {len(diag.critical_values)} critical values, "
          f"m_ff = {diag.m_ff} -> {path}")
    _write_manifest(out, "bifurcation", vars(args), t0, args.seed)
    return 0


def cmd_monodromy(args):
    from .actions import classical_monodromy, rectangle_loop

    out = _out_dir(args)
    t0 = time.time()
    model = _model_from_args(args)
    cx, cy = (float(v) for v in args.center.split(","))
    loop = rectangle_loop(MomentValue(cx, cy), args.half_width, args.half_height)
    mat, resid = classical_monodromy(model, loop, tol=args.tol,
                                     return_residual=True,
                                     rng=np.random.default_rng(args.seed))
    doc = {"center": [cx, cy], "matrix": [list(r) for r in mat.entries],
           "residual": resid}
    path = os.path.join(out, "monodromy.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    print(f"monodromy around ({cx}, {cy}): {mat.entries} "
          f"(residual {resid:.2e}) -> {path}")
    _write_manifest(out, "monodromy", vars(args), t0, args.seed)
    return 0


def cmd_taylor(args):
    from .actions import regularized_action, taylor_invariant

    out = _out_dir(args)
    t0 = time.time()
    model = _model_from_args(args)
    fx, fy = (float(v) for v in args.focus.split(","))
    ra = regularized_action(model, MomentValue(fx, fy), radius=args.radius,
                            cut_sign=args.cut, degree=args.degree,
                            rng=np.random.default_rng(args.seed))
    coeffs = taylor_invariant(ra)
    doc = {
        "degree": args.degree,
        "focus": [fx, fy],
        "cut_sign": args.cut,
        "fit_residual": ra.fit_residual,
        "coefficients": [{"i": i, "j": j, "value": v} for i, j, v in coeffs],
    }
    path = os.path.join(out, "taylor.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    print(f"taylor invariant at ({fx}, {fy}):")
    for i, j, v in coeffs:
        if i + j <= 2:
            print(f"  C[{i},{j}] = {v:+.6f}")
    print(f"-> {path}")
    _write_manifest(out, "taylor", vars(args), t0, args.seed)
    return 0


def _polygon_doc(dp):
    return {
        "epsilons": list(dp.epsilons),
        "vertices": [[f"{v[0].numerator}/{v[0].denominator}",
                      f"{v[1].numerator}/{v[1].denominator}"]
                     for v in dp.vertices],
        "marked": [
            {"c": [float(c[0]), float(c[1])], "kappa": k} for c, k in dp.marked
        ],
        "unsnapped": [list(u) for u in dp.unsnapped],
    }


def cmd_polygon(args):
    from .cartography import CutSpec, cartographic_map, extract_polygon
    from .singularities import find_critical_points

    out = _out_dir(args)
    t0 = time.time()
    model = _model_from_args(args)
    rng = np.random.default_rng(args.seed)
    # locate focus values
    pts = model.sample(rng, 4000)
    scale = float(np.max(np.abs(pts))) * 1.2
    phase = (-scale * np.ones(model.dim), scale * np.ones(model.dim))
    crits = find_critical_points(model, phase, grid_density=args.grid_density,
                                 rng=rng)
    focus = sorted(
        tuple(model.moment(cp.point.coords))
        for cp in crits
        if cp.wtype.as_tuple() == (0, 0, 0, 1)
    )
    eps_str = args.eps.replace(" ", "")
    eps = tuple(1 if ch in "+p" else -1 for ch in eps_str)
    if len(eps) == 1 and len(focus) > 1:
        eps = eps * len(focus)
    if len(eps) != len(focus):
        raise ConfigError(
            f"{len(focus)} focus values found but {len(eps)} cut signs given"
        )
    if args.window:
        xw = tuple(float(v) for v in args.window.split(","))
    else:
        mv = np.array([model.moment(z) for z in pts])
        xw = (float(mv[:, 0].min()), float(mv[:, 0].max()))
    cm = cartographic_map(model, CutSpec(eps, tuple(focus)), xw,
                          resolution=args.resolution, rng=rng)
    dp = extract_polygon(cm)
    doc = _polygon_doc(dp)
    path = os.path.join(out, "polygon.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    vs = dp.as_floats()
    xs = [v[0] for v in vs]
    ys = [v[1] for v in vs]
    canvas = SvgCanvas((min(xs) - 0.5, max(xs) + 0.5),
                       (min(ys) - 0.5, max(ys) + 0.5))
    canvas.axes("J", "action")
    canvas.polyline(vs, color="steelblue", width=2, close=True)
    for c, k in dp.marked:
        canvas.dot(float(c[0]), float(c[1]), r=4, color="red")
        canvas.text(float(c[0]) + 0.05, float(c[1]), f"kappa={k}", size=10)
    canvas.write(os.path.join(out, "polygon.svg"))
    print(f"polygon: {len(dp.vertices)} vertices, eps={dp.epsilons} -> {path}")
    _write_manifest(out, "polygon", vars(args), t0, args.seed)
    return 0


def cmd_dh(args):
    import csv

    from .cartography import duistermaat_heckman
    from .singularities import find_critical_points

    out = _out_dir(args)
    t0 = time.time()
    model = _model_from_args(args)
    rng = np.random.default_rng(args.seed)
    lo, hi = (float(v) for v in args.range.split(","))
    pts = model.sample(rng, 4000)
    scale = float(np.max(np.abs(pts))) * 1.2
    phase = (-scale * np.ones(model.dim), scale * np.ones(model.dim))
    crits = find_critical_points(model, phase, grid_density=args.grid_density,
                                 rng=rng)
    breaks = sorted({float(model.moment(cp.point.coords)[0]) for cp in crits
                     if cp.rank == 0})
    dh = duistermaat_heckman(model, (lo, hi), resolution=args.resolution,
                             mc_samples=args.mc_samples, breakpoints=breaks,
                             rng=rng)
    path = os.path.join(out, "dh.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "rho"])
        for x, v in zip(dh.xs, dh.values):
            wr.writerow([f"{x:.12g}", f"{v:.12g}"])
    print(f"dh: {len(dh.xs)} samples, slopes {np.round(dh.slopes, 6).tolist()}, "
          f"mc-consistent: {dh.consistent} -> {path}")
    _write_manifest(out, "dh", vars(args), t0, args.seed)
    return 0


def _write_spectrum_csv(path, spec):
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["hbar", "mu", "lambda", "multiplicity"])
        for mu, lam, mult in spec.points:
            wr.writerow([f"{spec.hbar:.12g}", f"{mu:.12g}", f"{lam:.12g}",
                         int(mult)])


def cmd_spectrum(args):
    out = _out_dir(args)
    t0 = time.time()
    model = _model_from_args(args)
    window = _parse_window(args.window)
    spec = _spectrum_for(args, window)
    path = os.path.join(out, "spectrum.csv")
    _write_spectrum_csv(path, spec)
    canvas = SvgCanvas(window[0], window[1])
    canvas.axes("mu (J)", "lambda (H)")
    for mu, lam, _ in spec.points:
        canvas.dot(mu, lam, r=1.6, color="black")
    try:
        _bifurcation_overlay(canvas, model, args.seed)
    except SemitoricError:
        pass
    canvas.write(os.path.join(out, "spectrum.svg"))
    print(f"spectrum: {len(spec.points)} joint eigenvalues "
          f"({int(spec.trusted.sum())} trusted) -> {path}")
    _write_manifest(out, "spectrum", vars(args), t0, args.seed)
    return 0


def _read_spectrum_csv(path, window=None):
    import csv

    from .quantum import JointSpectrum

    rows = []
    with open(path) as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            rows.append((float(row["hbar"]), float(row["mu"]),
                         float(row["lambda"]), int(row["multiplicity"])))
    if not rows:
        raise ConfigError(f"spectrum file {path} is empty")
    hbar = rows[0][0]
    pts = np.array([(mu, lam, m) for _, mu, lam, m in rows])
    if window is None:
        window = ((pts[:, 0].min(), pts[:, 0].max()),
                  (pts[:, 1].min(), pts[:, 1].max()))
    return JointSpectrum(hbar=hbar, points=pts,
                         trusted=np.ones(len(pts), dtype=bool), window=window)


def cmd_invert(args):
    from .inverse import (InverseReport, detect_focus_focus, quantum_monodromy,
                          rect_loop, spectrum_hull, volume_invariant)

    out = _out_dir(args)
    t0 = time.time()
    window = _parse_window(args.window) if args.window else None
    spec = _read_spectrum_csv(args.spectrum, window)
    report = InverseReport()
    report.hull = spectrum_hull(spec)
    estimates, notes = detect_focus_focus(spec)
    report.focus_estimates = estimates
    report.mff_estimate = len(estimates)
    report.notes = notes[:20]
    for est in estimates:
        try:
            M = quantum_monodromy(spec, rect_loop(est, 5 * spec.hbar,
                                                  5 * spec.hbar))
            report.monodromies.append([list(r) for r in M.entries])
        except SemitoricError as exc:
            report.monodromies.append(str(exc))
        vol, warn = volume_invariant(spec, est)
        report.volume_invariants.append(vol)
        if warn:
            report.notes.append(warn)
    doc = {
        "hbar": spec.hbar,
        "m_ff": report.mff_estimate,
        "focus_estimates": report.focus_estimates,
        "monodromies": report.monodromies,
        "volume_invariants": report.volume_invariants,
        "hull_vertices": [list(v) for v in report.hull.vertices],
        "notes": report.notes,
    }
    path = os.path.join(out, "invert.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    print(f"invert: m_ff = {report.mff_estimate}, "
          f"focus estimates {np.round(report.focus_estimates, 4).tolist()} "
          f"-> {path}")
    _write_manifest(out, "invert", vars(args), t0, args.seed)
    return 0


def cmd_converge(args):
    import csv

    from .inverse import convergence_test

    out = _out_dir(args)
    t0 = time.time()
    model = _model_from_args(args)
    window = _parse_window(args.window)
    hbars = [float(v) for v in args.hbars.split(",")]
    specs = []
    for h in hbars:
        ns = argparse.Namespace(**vars(args))
        ns.hbar = h
        ns.L = max(1, int(round(args.L * (args.hbar / h)))) if args.model == "spherical_pendulum" else args.L
        ns.j = 1.0 / h - 0.5 if args.model == "spin_oscillator" else None
        ns.nmax = int(round(args.nmax * (args.hbar / h)))
        specs.append(_spectrum_for(ns, window))
    rep = convergence_test(model, specs, window, n_samples=args.mc_samples,
                           rng=np.random.default_rng(args.seed),
                           momentum_scale=args.momentum_scale)
    path = os.path.join(out, "converge.csv")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["hbar", "hausdorff"])
        for h, d in rep.hausdorff_by_hbar:
            wr.writerow([f"{h:.12g}", f"{d:.12g}"])
    print("converge:", [(round(h, 4), round(d, 5))
                        for h, d in rep.hausdorff_by_hbar], f"-> {path}")
    _write_manifest(out, "converge", vars(args), t0, args.seed)
    return 0


def cmd_reproduce_figures(args):
    """Classical bifurcation diagram, pendulum joint spectrum at
    hbar = 0.1 and the Jaynes-Cummings joint spectrum."""
    out = _out_dir(args)
    t0 = time.time()
    ns = argparse.Namespace(**vars(args))
    # figure 1 analogue: classical pendulum moment image
    ns.model = "spherical_pendulum"
    ns.params = None
    ns.resolution = 40
    ns.grid_density = 200
    cmd_bifurcation(ns)
    os.replace(os.path.join(out, "bifurcation.svg"),
               os.path.join(out, "fig1_pendulum_classical.svg"))
    # figure 2 analogue: pendulum joint spectrum, hbar = 0.1
    ns.hbar, ns.L, ns.j, ns.nmax = 0.1, 60, None, 0
    ns.window = "-2,2,-1.2,3"
    cmd_spectrum(ns)
    os.replace(os.path.join(out, "spectrum.svg"),
               os.path.join(out, "fig2_pendulum_spectrum.svg"))
    # figure 3 analogue: Jaynes-Cummings joint spectrum
    ns.model = "spin_oscillator"
    ns.hbar, ns.j, ns.nmax = 0.1, 9.5, 150
    ns.window = "-1.5,2.5,-1.5,1.5"
    cmd_spectrum(ns)
    os.replace(os.path.join(out, "spectrum.svg"),
               os.path.join(out, "fig3_jc_spectrum.svg"))
    print(f"figures written to {out}")
    _write_manifest(out, "reproduce-figures", {"out": out}, t0, args.seed)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="semitoric",
        description="Classical invariants and quantum joint spectra of "
        "two-degree-of-freedom integrable systems",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", required=True)
            sp.add_argument("--params", help="model parameters as JSON")
        sp.add_argument("--out", default="out")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--jobs", type=int, default=os.cpu_count())
        sp.add_argument("--tol", type=float, default=1e-9)

    sp = sub.add_parser("bifurcation", help="critical values with types")
    common(sp)
    sp.add_argument("--resolution", type=int, default=40)
    sp.add_argument("--grid-density", type=int, default=300)
    sp.set_defaults(func=cmd_bifurcation)

    sp = sub.add_parser("monodromy", help="period-lattice holonomy")
    common(sp)
    sp.add_argument("--center", required=True, help="a,b of the loop center")
    sp.add_argument("--half-width", type=float, default=0.5)
    sp.add_argument("--half-height", type=float, default=0.5)
    sp.set_defaults(func=cmd_monodromy)

    sp = sub.add_parser("taylor", help="regularized-action Taylor series")
    common(sp)
    sp.add_argument("--focus", required=True, help="a,b of the focus value")
    sp.add_argument("--radius", type=float, default=0.1)
    sp.add_argument("--degree", type=int, default=3)
    sp.add_argument("--cut", type=int, default=1, choices=(1, -1))
    sp.set_defaults(func=cmd_taylor)

    sp = sub.add_parser("polygon", help="decorated semi-toric polygon")
    common(sp)
    sp.add_argument("--eps", default="+", help="cut signs, e.g. '+', '+-'")
    sp.add_argument("--window", help="J-range 'lo,hi' (default: full image)")
    sp.add_argument("--resolution", type=int, default=33)
    sp.add_argument("--grid-density", type=int, default=300)
    sp.set_defaults(func=cmd_polygon)

    sp = sub.add_parser("dh", help="Duistermaat-Heckman density")
    common(sp)
    sp.add_argument("--range", required=True, help="J-range 'lo,hi'")
    sp.add_argument("--resolution", type=int, default=25)
    sp.add_argument("--mc-samples", type=int, default=200_000)
    sp.add_argument("--grid-density", type=int, default=300)
    sp.set_defaults(func=cmd_dh)

    sp = sub.add_parser("spectrum", help="quantum joint spectrum")
    common(sp)
    sp.add_argument("--hbar", type=float, default=0.1)
    sp.add_argument("--L", type=int, default=60, help="pendulum l-cutoff")
    sp.add_argument("--j", type=float, help="JC spin (overrides --hbar)")
    sp.add_argument("--nmax", type=int, default=150, help="JC oscillator cap")
    sp.add_argument("--window", required=True,
                    help="mu_lo,mu_hi,lam_lo,lam_hi")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("invert", help="recover classical data from a "
                        "spectrum CSV")
    common(sp, model=False)
    sp.add_argument("--spectrum", required=True)
    sp.add_argument("--window")
    sp.set_defaults(func=cmd_invert)

    sp = sub.add_parser("converge", help="Hausdorff sweep over hbar")
    common(sp)
    sp.add_argument("--hbars", default="0.2,0.1,0.05")
    sp.add_argument("--hbar", type=float, default=0.1)
    sp.add_argument("--L", type=int, default=60)
    sp.add_argument("--nmax", type=int, default=150)
    sp.add_argument("--window", required=True)
    sp.add_argument("--mc-samples", type=int, default=10**6)
    sp.add_argument("--momentum-scale", type=float, default=3.2)
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("reproduce-figures",
                        help="rebuild the bundled figure set")
    common(sp, model=False)
    sp.set_defaults(func=cmd_reproduce_figures)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SemitoricError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

One subcommand per experiment family, deterministic file-based I/O: every
seed is an explicit flag, outputs are `key: value` records plus CSV tables,
and rerunning a config writes byte-identical files.  Exit status 0 means the
run's verdict passed, 1 means a verdict failed, 2 means a usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import sublinear
from .coxeter import (
    BallBudgetError,
    Presentation,
    ball,
    format_word,
    normal_form,
    parse_word,
)
from .graphs import is_cfs, read_graph
from .morse import morse_gauge_probe, non_morse_witness
from .rays import (
    CayleySpace,
    GraphSpace,
    PlaneSpace,
    PointedSpace,
    closeness_constant,
    equivalent_rays,
    grid_space,
    read_ray,
    scattered_sample,
    tree_space,
    verify_ray,
    write_ray,
)
from .sbe import quasi_inverse, synthetic_sbe, verify_sbe
from .sublinear import parse_gauge
from .walks import (
    drift_and_tracking,
    simulate,
    uniform_measure,
    verify_walk_ray,
    walk_to_sbe,
)


class UsageError(Exception):
    pass


def _worker_cap(n_tasks: int) -> int:
    env = os.environ.get("COARSE_LAB_THREADS")
    cap = int(env) if env else 4
    return max(1, min(cap, n_tasks))


def _load_space(arg: str) -> PointedSpace:
    if arg == "tree":
        return tree_space()
    if arg == "grid":
        return grid_space()
    if arg == "plane":
        return PlaneSpace()
    path = Path(arg)
    if not path.exists():
        raise UsageError(f"--space: no such space or graph file: {arg}")
    return CayleySpace(Presentation(read_graph(path), "coxeter"))


def _require_file(flag: str, value: str) -> Path:
    path = Path(value)
    if not path.exists():
        raise UsageError(f"{flag}: file not found: {value}")
    return path


def _gauge(flag: str, text: str) -> sublinear.SublinearFn:
    try:
        return parse_gauge(text)
    except sublinear.GaugeError as exc:
        raise UsageError(f"{flag}: {exc}") from exc


def _parse_seeds(text: str) -> List[int]:
    if ".." in text:
        a, _, b = text.partition("..")
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in text.split(",")]


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_record(path: Path, record: Dict[str, object]) -> None:
    lines = [f"{k}: {_fmt(v)}" for k, v in record.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_cfs(args) -> int:
    g = read_graph(_require_file("--graph", args.graph))
    result = is_cfs(g)
    print(f"CFS={'true' if result.verdict else 'false'} lambda_vertices={result.n_cycles}")
    if args.out:
        _write_record(_out_dir(args) / "cfs.txt", {
            "graph": Path(args.graph).name,
            "cfs": result.verdict,
            "lambda_vertices": result.n_cycles,
            "witness_component_size": len(result.witness_component),
        })
    return 0 if result.verdict else 1


def cmd_wordlen(args) -> int:
    g = read_graph(_require_file("--graph", args.graph))
    p = Presentation(g, args.flavor)
    w = parse_word(p, args.word)
    nf = normal_form(p, w)
    print(f"wordlen={len(nf)} normal_form={format_word(p, nf) or '<empty>'}")
    return 0


def cmd_ball(args) -> int:
    g = read_graph(_require_file("--graph", args.graph))
    p = Presentation(g, args.flavor)
    try:
        layers = ball(p, args.radius)
    except BallBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    rows = sorted((d, format_word(p, w)) for w, d in layers.items())
    lines = ["distance,word"] + [f"{d},{w}" for d, w in rows]
    (out / "ball.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"ball_size={len(layers)} radius={args.radius}")
    return 0


def cmd_ray_verify(args) -> int:
    space = _load_space(args.space)
    ray1 = read_ray(_require_file("--ray1", args.ray1), space)
    ray2 = read_ray(_require_file("--ray2", args.ray2), space)
    theta = _gauge("--theta", args.theta)
    kappa = _gauge("--kappa", args.kappa)
    chk1 = verify_ray(space, ray1, args.L, theta)
    chk2 = verify_ray(space, ray2, args.L, theta)
    horizon = min(ray1.horizon(), ray2.horizon())
    eq = equivalent_rays(space, ray1, ray2, horizon)
    try:
        fellow = closeness_constant(space, ray1, ray2, kappa, "fellow")
    except ValueError:
        fellow = float("nan")
    track = closeness_constant(space, ray1, ray2, kappa, "track")
    record = {
        "ray1_ok": chk1.ok, "ray1_fitted_scale": chk1.fitted_scale,
        "ray2_ok": chk2.ok, "ray2_fitted_scale": chk2.fitted_scale,
        "dir1_slope": eq.dir1_slope, "dir2_slope": eq.dir2_slope,
        "equivalent": eq.verdict,
        "fellow_constant": fellow, "track_constant": track,
    }
    if args.out:
        _write_record(_out_dir(args) / "ray-verify.txt", record)
    print(
        f"ray1_ok={_fmt(chk1.ok)} ray2_ok={_fmt(chk2.ok)} "
        f"dir1={eq.dir1_slope:.4g} dir2={eq.dir2_slope:.4g} equivalent={_fmt(eq.verdict)}"
    )
    return 0 if (chk1.ok and chk2.ok) else 1


def cmd_sbe(args) -> int:
    space = _load_space(args.space)
    if not isinstance(space, CayleySpace):
        raise UsageError("--space: sbe needs a Cayley space (tree, grid, or graph file)")
    seed_s, L_s, theta_s = args.gen.split(",", 2)
    seed, L = int(seed_s), float(L_s)
    theta = _gauge("--gen", theta_s)
    sample = scattered_sample(space, args.sample_size, args.max_norm, seed=seed + 1)
    phi = synthetic_sbe(space, L, theta, seed=seed, sample=sample)
    out = _out_dir(args)
    record: Dict[str, object] = {
        "seed": seed, "L": L, "theta": theta.spec(),
        "sample_size": len(sample), "max_norm": args.max_norm,
    }
    status = 0
    if args.verify:
        chk = verify_sbe(phi, sample, phi.image_sample())
        record.update({
            "fitted_L": chk.fitted_L,
            "fitted_theta_scale": chk.fitted_theta_scale,
            "surjectivity_D": chk.surjectivity_D,
            "within_budget": chk.fitted_theta_scale <= args.scale_budget,
        })
        print(f"sbe_scale={chk.fitted_theta_scale:.4g} budget={args.scale_budget:g} "
              f"pass={_fmt(chk.fitted_theta_scale <= args.scale_budget)}")
        if chk.fitted_theta_scale > args.scale_budget:
            status = 1
    if args.invert:
        qi = quasi_inverse(phi, phi.image_sample())
        inv_chk = verify_sbe(qi.phi_bar, qi.phi_bar.domain_sample(),
                             qi.phi_bar.image_sample())
        record.update({
            "inverse_defect_n": qi.defect_n,
            "inverse_fitted_theta_scale": inv_chk.fitted_theta_scale,
        })
        print(f"inverse_defect={qi.defect_n:.4g} inverse_scale={inv_chk.fitted_theta_scale:.4g}")
    if args.push:
        ray = read_ray(_require_file("--push", args.push), space)
        missing = [x for x in ray.points if x not in phi.table]
        if missing:
            raise UsageError(f"--push: ray leaves the sampled domain ({len(missing)} points)")
        pushed_chk = verify_ray(space, _push(phi, ray), phi.L, theta)
        record["pushed_ray_fitted_scale"] = pushed_chk.fitted_scale
        write_ray(out / "pushed-ray.csv", space, _push(phi, ray))
        print(f"pushed_ray_scale={pushed_chk.fitted_scale:.4g}")
    _write_record(out / "sbe.txt", record)
    return status


def _push(phi, ray):
    from .sbe import push_ray

    return push_ray(phi, ray)


def cmd_morse_probe(args) -> int:
    space = _load_space(args.space)
    if not isinstance(space, CayleySpace):
        raise UsageError("--space: morse-probe needs a Cayley space")
    Z = read_ray(_require_file("--ray", args.ray), space)
    kappa = _gauge("--kappa", args.kappa)
    q_grid = [float(x) for x in args.q_grid.split(",")]
    Q_grid = [float(x) for x in args.Q_grid.split(",")]
    radii = [int(x) for x in args.radii.split(",")]
    report = morse_gauge_probe(space, Z, kappa, q_grid, Q_grid, radii,
                               seed=args.seed)
    out = _out_dir(args)
    lines = ["q,Q,r,deviation"]
    for (q, Q, r), dev in sorted(report.cells.items()):
        lines.append(f"{q:g},{Q:g},{r},{dev:.10g}")
    (out / "probe.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for (q, Q, r), wit in sorted(report.witnesses.items()):
        wlines = ["index,word"]
        for i, wpt in enumerate(wit.path):
            wlines.append(f"{i},{format_word(space.presentation, wpt)}")
        (out / f"witness_q{q:g}_Q{Q:g}_r{r}.csv").write_text(
            "\n".join(wlines) + "\n", encoding="utf-8")
    gauge_max = max(report.gauges.values())
    record = {
        "kappa": kappa.spec(),
        "radii": ",".join(str(r) for r in radii),
        "gauge_max": gauge_max,
        "flagged_non_morse": report.flagged_non_morse,
    }
    witness = None
    if args.witness_radius:
        witness = non_morse_witness(space, Z, args.witness_radius, seed=args.seed)
        record["witness_deviation"] = witness.deviation if witness else 0.0
    _write_record(out / "probe.txt", record)
    print(f"gauge_max={gauge_max:.4g} flagged_non_morse={_fmt(report.flagged_non_morse)}")
    return 1 if report.flagged_non_morse else 0


def cmd_walk(args) -> int:
    if args.graph:
        g = read_graph(_require_file("--graph", args.graph))
        p = Presentation(g, "coxeter")
    else:
        space = _load_space(args.space)
        if not isinstance(space, CayleySpace):
            raise UsageError("--space: walk needs a Cayley space")
        p = space.presentation
    if args.measure != "uniform":
        raise UsageError("--measure: only 'uniform' is built in")
    mu = uniform_measure(p)
    seeds = _parse_seeds(args.seeds)
    kappa = _gauge("--kappa", args.kappa)
    out = _out_dir(args)

    def one(seed: int):
        path = simulate(p, mu, args.steps, seed)
        rep = drift_and_tracking(path)
        A = max(rep.A_hat, 1e-9)
        if args.fit_kappa:
            gauge = sublinear.log_gauge(3 * max(1.0, rep.C_hat), 0.0)
        else:
            gauge = kappa
        chk = verify_walk_ray(path, A, gauge)
        _, sbe_chk = walk_to_sbe(path, rep.limit, A, gauge)
        return seed, path, rep, chk, sbe_chk

    with ThreadPoolExecutor(max_workers=_worker_cap(len(seeds))) as pool:
        results = sorted(pool.map(one, seeds), key=lambda t: t[0])

    for seed, path, rep, chk, sbe_chk in results:
        lines = ["n,norm,dist_to_gamma"]
        for n, d in rep.profile:
            lines.append(f"{n},{int(path.norms[n])},{d:.10g}")
        (out / f"trial_{seed}.csv").write_text("\n".join(lines) + "\n",
                                               encoding="utf-8")
    A_hats = [r[2].A_hat for r in results]
    record = {
        "steps": args.steps,
        "seeds": args.seeds,
        "drift_mean": float(np.mean(A_hats)),
        "drift_min": float(np.min(A_hats)),
        "drift_max": float(np.max(A_hats)),
        "C_hat_mean": float(np.mean([r[2].C_hat for r in results])),
        "log_fit_mean": float(np.mean([r[2].log_fit for r in results])),
        "sqrt_fit_mean": float(np.mean([r[2].sqrt_fit for r in results])),
        "pass_fraction_min": float(np.min([r[3].pass_fraction for r in results])),
        "sbe_scale_max": float(np.max([r[4].fitted_theta_scale for r in results])),
    }
    _write_record(out / "walk.txt", record)
    print(f"drift={record['drift_mean']:.4g} pass_fraction_min={record['pass_fraction_min']:.4g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coarse-lab",
        description="Word metrics, gauge functions, ray probes and random walks "
                    "on right-angled Coxeter groups.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cfs", help="decide the CFS property of a defining graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_cfs)

    p = sub.add_parser("wordlen", help="word-metric length and normal form")
    p.add_argument("--graph", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--flavor", choices=["coxeter", "artin"], default="coxeter")
    p.set_defaults(fn=cmd_wordlen)

    p = sub.add_parser("ball", help="exact metric ball via BFS")
    p.add_argument("--graph", required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--flavor", choices=["coxeter", "artin"], default="coxeter")
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_ball)

    p = sub.add_parser("ray-verify", help="check the ray inequality on two traces")
    p.add_argument("--space", required=True, help="tree | grid | plane | graph file")
    p.add_argument("--ray1", required=True)
    p.add_argument("--ray2", required=True)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--theta", default="log:1,0")
    p.add_argument("--kappa", default="log:1,0")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_ray_verify)

    p = sub.add_parser("sbe", help="synthesize and check a sampled gauge map")
    p.add_argument("--space", default="tree")
    p.add_argument("--gen", required=True, metavar="SEED,L,THETA")
    p.add_argument("--sample-size", type=int, default=200)
    p.add_argument("--max-norm", type=int, default=256)
    p.add_argument("--scale-budget", type=float, default=2.0)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--invert", action="store_true")
    p.add_argument("--push", default=None, metavar="RAY_CSV")
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_sbe)

    p = sub.add_parser("morse-probe", help="estimate Morse gauges along a ray")
    p.add_argument("--space", required=True)
    p.add_argument("--ray", required=True)
    p.add_argument("--kappa", default="const:1")
    p.add_argument("--q-grid", default="1,2")
    p.add_argument("--Q-grid", default="0,2")
    p.add_argument("--radii", default="64,128,256")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--witness-radius", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_morse_probe)

    p = sub.add_parser("walk", help="seeded random-walk drift and tracking")
    p.add_argument("--graph", default=None)
    p.add_argument("--space", default="tree")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seeds", required=True, metavar="A..B or a,b,c")
    p.add_argument("--measure", default="uniform")
    p.add_argument("--checkpoints", default="dyadic")
    p.add_argument("--kappa", default="log:1,0")
    p.add_argument("--fit-kappa", action="store_true",
                   help="inflate the gauge by 3*C_hat*log before verification")
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_walk)

    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0,) else 0
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

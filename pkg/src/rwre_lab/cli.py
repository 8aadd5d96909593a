"""Command-line orchestration of the experiments.

Subcommands: push, tilt-check, capacity, conductance, bottleneck, tube,
rate, survivors, smallprob, harnack, phase.  Each writes a CSV report plus
a JSON-lines mirror and, with --plot, a PNG figure next to the CSV.

Exit codes: 0 success, 2 vertex/population budget exceeded, 3 bad or
incomplete configuration (including a missing master seed).
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time

import numpy as np

from . import rng
from .capacity import Gauge, dimension_estimate, finite_capacity, parse_gauge, \
    spherical_capacity_series
from .config import parse_float_list, parse_int_list, parse_kv_file, section
from .criticality import (
    critical_report,
    default_min_level,
    ratio_harnack,
    second_moment_bound,
    small_prob_experiment,
    survivor_count,
)
from .distributions import (
    EnvDistribution,
    Gaussian,
    Lattice,
    parse_distribution,
    push_profile,
    tilt,
)
from .environment import EnvSample, bottleneck_and_conductance, \
    bottleneck_stat, effective_conductance
from .errors import BudgetError, ConfigError
from .report import ReportRow, write_reports
from .trees import DEFAULT_LEVEL_BUDGET, Tree, TreeSpec, parse_tree
from .tubes import TubeSpec, cuberoot_rate_experiment, theoretical_tube_rate, \
    tube_prob_exact_lattice, tube_prob_mc
from .walk import escape_probability_mc, escape_probability_network

EXIT_OK = 0
EXIT_BUDGET = 2
EXIT_CONFIG = 3


def _load_config(args) -> dict:
    if getattr(args, "config", None):
        return parse_kv_file(args.config)
    return {"": {}}


def _get_dist(args, sections) -> EnvDistribution:
    if getattr(args, "dist", None):
        return parse_distribution(section(parse_kv_file(args.dist), "distribution"))
    block = section(sections, "distribution")
    if "kind" not in block:
        raise ConfigError("no distribution: pass --dist FILE or a "
                          "[distribution] config block")
    return parse_distribution(block)


def _get_seed(args, sections) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    block = section(sections, "experiment")
    if "master_seed" in block:
        return int(block["master_seed"])
    raise ConfigError("missing required field 'master_seed' "
                      "(pass --seed or set it in [experiment])")


def _get_tree(args, sections, default_beta=None, need_depth=0) -> Tree:
    budget = int(getattr(args, "budget", None) or DEFAULT_LEVEL_BUDGET)
    if getattr(args, "bary", None):
        return Tree(TreeSpec.bary(args.bary), budget)
    if getattr(args, "growth_c", None) is not None:
        beta = args.growth_beta if getattr(args, "growth_beta", None) is not None \
            else default_beta
        if beta is None:
            raise ConfigError("growth tree needs --growth-beta or a distribution "
                              "to take beta from")
        return Tree(TreeSpec.growth(beta, args.growth_c, max(need_depth, 1)), budget)
    block = section(sections, "tree")
    if "kind" in block:
        return Tree(parse_tree(block), budget)
    raise ConfigError("no tree: pass --bary/--growth-c or a [tree] config block")


def _emit(args, rows, default_name: str) -> None:
    out = getattr(args, "out", None) or f"{default_name}.csv"
    write_reports(rows, out)
    print(f"wrote {out} ({len(rows)} rows)")
    if getattr(args, "plot", False):
        from .plots import render_report

        png = out[:-4] + ".png" if out.endswith(".csv") else out + ".png"
        if render_report(rows, png, title=default_name):
            print(f"wrote {png}")


# ---------------------------------------------------------------- subcommands


def cmd_push(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    t0 = time.perf_counter()
    prof = push_profile(dist)
    wt = time.perf_counter() - t0
    params = {"kind": dist.kind}
    rows = [
        ReportRow("push", params, "beta", prof.beta, wall_time_s=wt),
        ReportRow("push", params, "lambda0", prof.lambda0),
        ReportRow("push", params, "top_heavy", float(prof.top_heavy)),
        ReportRow("push", params, "tilted_variance", prof.tilted_variance),
        ReportRow("push", params, "mgf_min", prof.mgf_min),
        ReportRow("push", params, "degenerate", float(prof.degenerate)),
    ]
    if prof.quad_error:
        rows.append(ReportRow("push", params, "quadrature_error", prof.quad_error))
    if isinstance(dist, Gaussian):
        # The numeric classification is authoritative; the c < 2V remark
        # threshold is reported alongside for comparison, not enforced.
        rows.append(ReportRow("push", params, "remark_c_lt_2V",
                              float(-dist.mean_ < 2.0 * dist.var)))
    print(f"beta={prof.beta:.10g} lambda0={prof.lambda0:.10g} "
          f"top_heavy={prof.top_heavy} tilted_variance={prof.tilted_variance:.10g}")
    _emit(args, rows, "push")
    return EXIT_OK


def cmd_tilt_check(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    tilted = tilt(dist)
    params = {"kind": dist.kind}
    rows = [
        ReportRow("tilt-check", params, "tilted_mean", tilted.mean()),
        ReportRow("tilt-check", params, "tilted_variance", tilted.variance()),
    ]
    if isinstance(tilted, Lattice):
        rows.append(ReportRow("tilt-check", params, "tilted_mass",
                              float(sum(tilted.probs))))
        for v, p in zip(tilted.values, tilted.probs):
            rows.append(ReportRow("tilt-check", {**params, "atom": v}, "prob", p))
    elif isinstance(tilted, Gaussian):
        rows.append(ReportRow("tilt-check", params, "tilted_mean_param",
                              tilted.mean_))
    print(f"tilted mean={tilted.mean():.3e} variance={tilted.variance():.10g}")
    _emit(args, rows, "tilt-check")
    return EXIT_OK


def cmd_capacity(args) -> int:
    sections = _load_config(args)
    default_beta = None
    if getattr(args, "dist", None) or "kind" in section(sections, "distribution"):
        default_beta = push_profile(_get_dist(args, sections)).beta
    tree = _get_tree(args, sections, default_beta, need_depth=args.N)
    gblock = section(sections, "gauge")
    if args.gauge_k is not None:
        gauge = Gauge.exponential(args.gauge_k)
    elif args.gauge_beta is not None or args.gauge_c is not None:
        beta = args.gauge_beta if args.gauge_beta is not None else default_beta
        if beta is None or args.gauge_c is None:
            raise ConfigError("critical gauge needs --gauge-beta/--gauge-c")
        gauge = Gauge.critical(beta, args.gauge_c)
    elif "gauge" in gblock:
        gauge = parse_gauge(gblock)
    else:
        raise ConfigError("no gauge: pass --gauge-k or --gauge-c or a "
                          "[gauge] config block")
    params = {"gauge": gauge.kind, "N": args.N}
    t0 = time.perf_counter()
    partial, verdict = spherical_capacity_series(tree.spec, gauge, args.N)
    wt = time.perf_counter() - t0
    verdict_code = {"convergent": 1.0, "divergent": -1.0, "inconclusive": 0.0}
    rows = [
        ReportRow("capacity", params, "series_partial_sum", partial, wall_time_s=wt),
        ReportRow("capacity", {**params, "verdict": verdict}, "series_verdict",
                  verdict_code[verdict]),
        ReportRow("capacity", params, "dimension_estimate",
                  dimension_estimate(tree.spec, args.N)),
    ]
    for depth in args.depths:
        rows.append(ReportRow("capacity", {**params, "n": depth}, "finite_capacity",
                              finite_capacity(tree, gauge, depth)))
    print(f"series partial sum {partial:.6g} ({verdict})")
    _emit(args, rows, "capacity")
    return EXIT_OK


def _pmap(fn, tasks, threads: int):
    """Map over independent cells, optionally in worker processes.

    Results come back in task order, so reports are identical whatever the
    worker count.
    """
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, tasks))


def _phase_cell(task):
    spec, budget, dist, c, level, n, seed = task
    tree = Tree(spec, budget)
    env = EnvSample(tree, dist, seed)
    t0 = time.perf_counter()
    u_n, c_eff = bottleneck_and_conductance(env, n)
    cnt = survivor_count(tree, dist, c, level, n, seed)
    return u_n, c_eff, cnt, time.perf_counter() - t0


def _network_cell(task):
    spec, budget, dist, what, n, seed = task
    env = EnvSample(Tree(spec, budget), dist, seed)
    t0 = time.perf_counter()
    if what == "bottleneck":
        vals = {"bottleneck_Un": bottleneck_stat(env, n)}
    else:
        vals = {"effective_conductance": effective_conductance(env, n)}
    return vals, time.perf_counter() - t0


def _network_stats_cells(dist, tree, n_list, n_seeds, master_seed, what, threads=1):
    rows = []
    for n in n_list:
        tasks = [
            (tree.spec, tree.level_budget, dist, what, n,
             rng.derive_seed(master_seed, what, n, j))
            for j in range(n_seeds)
        ]
        results = _pmap(_network_cell, tasks, threads)
        for j, (vals, wt) in enumerate(results):
            for metric, v in vals.items():
                rows.append(ReportRow(what, {"n": n, "c": tree.spec.c}, metric, v,
                                      seed=j, wall_time_s=wt))
        for metric in results[0][0]:
            med = statistics.median(r[0][metric] for r in results)
            rows.append(ReportRow(what, {"n": n, "c": tree.spec.c},
                                  f"median_{metric}", med))
    return rows


def cmd_bottleneck(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    master = _get_seed(args, sections)
    tree = _get_tree(args, sections, push_profile(dist).beta,
                     need_depth=max(args.n_list))
    rows = _network_stats_cells(dist, tree, args.n_list, args.seeds, master,
                                "bottleneck", threads=args.threads)
    _emit(args, rows, "bottleneck")
    return EXIT_OK


def cmd_conductance(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    master = _get_seed(args, sections)
    tree = _get_tree(args, sections, push_profile(dist).beta,
                     need_depth=max(args.n_list))
    rows = _network_stats_cells(dist, tree, args.n_list, args.seeds, master,
                                "conductance", threads=args.threads)
    if args.walk_check:
        for n in args.n_list:
            seed = rng.derive_seed(master, "walkcheck", n)
            env = EnvSample(tree, dist, seed)
            est = escape_probability_mc(env, n, args.replicates,
                                        rng.substream(master, "walkmc", n))
            pred = escape_probability_network(env, n)
            rows.append(ReportRow("conductance", {"n": n}, "escape_mc",
                                  est.estimate, stderr=est.stderr, seed=0))
            rows.append(ReportRow("conductance", {"n": n}, "escape_network", pred,
                                  seed=0))
    _emit(args, rows, "conductance")
    return EXIT_OK


def _build_tube_spec(args, horizon) -> TubeSpec:
    if args.band == "constant":
        if args.a is None:
            raise ConfigError("constant band needs --a")
        return TubeSpec.constant(args.a, horizon, start=args.band_start)
    if args.band == "cuberoot":
        if args.c1 is None or args.c2 is None:
            raise ConfigError("cube-root band needs --c1 and --c2")
        return TubeSpec.cube_root(args.c1, args.c2, horizon, start=args.band_start)
    raise ConfigError(f"unknown band {args.band!r}")


def cmd_tube(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    master = _get_seed(args, sections)
    spec = _build_tube_spec(args, args.n)
    params = {"band": args.band, "n": args.n, "method": args.method}
    t0 = time.perf_counter()
    est = tube_prob_mc(dist, spec, args.n, args.effort, args.method,
                       rng.substream(master, "tube", args.n))
    wt = time.perf_counter() - t0
    rows = [
        ReportRow("tube", params, "ln_p", est.ln_p, stderr=est.stderr, seed=0,
                  wall_time_s=wt),
        ReportRow("tube", params, "predicted_rate",
                  theoretical_tube_rate(spec, dist.variance(), args.n)),
        ReportRow("tube", params, "stages", float(est.stages)),
    ]
    if isinstance(dist, Lattice) and args.dp_check:
        rows.append(ReportRow("tube", params, "ln_p_exact",
                              float(np.log(tube_prob_exact_lattice(dist, spec,
                                                                   args.n)))))
    print(f"ln P = {est.ln_p:.6g} +- {est.stderr:.3g} ({est.method}, "
          f"{est.stages} stages)")
    _emit(args, rows, "tube")
    return EXIT_OK


def cmd_rate(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    master = _get_seed(args, sections)
    if args.c1 is None or args.c2 is None:
        raise ConfigError("rate experiment needs --c1 and --c2")
    points = cuberoot_rate_experiment(
        dist, args.c1, args.c2, args.n_list, args.effort,
        lambda n: rng.substream(master, "rate", n), start=args.band_start,
    )
    rows = []
    for pt in points:
        params = {"n": pt.n, "c1": args.c1, "c2": args.c2, "method": "splitting"}
        rows.append(ReportRow("rate", params, "ln_p", pt.ln_p, stderr=pt.stderr,
                              seed=0))
        rows.append(ReportRow("rate", params, "normalized_rate",
                              pt.normalized_rate, stderr=pt.normalized_stderr,
                              seed=0))
        rows.append(ReportRow("rate", params, "predicted_rate", pt.predicted_rate))
        print(f"n={pt.n}: ln P/n^(1/3) = {pt.normalized_rate:.5f} "
              f"+- {pt.normalized_stderr:.3g} (formula {pt.predicted_rate:.5f})")
    _emit(args, rows, "rate")
    return EXIT_OK


def cmd_survivors(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    master = _get_seed(args, sections)
    prof = push_profile(dist)
    tree = _get_tree(args, sections, prof.beta, need_depth=max(args.n_list))
    if args.c is None:
        raise ConfigError("survivor experiment needs --c")
    level = args.L if args.L is not None else default_min_level(
        dist, args.c, min(max(args.n_list), 200))
    rows = [ReportRow("survivors", {"c": args.c}, "band_min_level", float(level))]
    for n in args.n_list:
        counts = []
        for j in range(args.seeds):
            seed = rng.derive_seed(master, "survivors", args.c, n, j)
            cnt = survivor_count(tree, dist, args.c, level, n, seed)
            counts.append(cnt)
            rows.append(ReportRow("survivors", {"c": args.c, "n": n, "L": level},
                                  "survivor_count", float(cnt), seed=j))
        bound, se = second_moment_bound(counts)
        rows.append(ReportRow("survivors", {"c": args.c, "n": n, "L": level},
                              "paley_zygmund_bound", bound, stderr=se))
        rows.append(ReportRow("survivors", {"c": args.c, "n": n, "L": level},
                              "nonempty_fraction",
                              float(np.mean([1.0 if x > 0 else 0.0
                                             for x in counts]))))
    _emit(args, rows, "survivors")
    return EXIT_OK


def cmd_smallprob(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    master = _get_seed(args, sections)
    prof = push_profile(dist)
    tree = _get_tree(args, sections, prof.beta, need_depth=max(args.n_list))
    if args.c is None:
        raise ConfigError("small-prob experiment needs --c")
    rows = []
    for row in small_prob_experiment(tree, dist, args.c, args.n_list, args.seeds,
                                     master):
        params = {"c": args.c, "n": row.n}
        rows.append(ReportRow("smallprob", params, "p_event", row.p_emp))
        rows.append(ReportRow("smallprob", params, "threshold", row.threshold))
    _emit(args, rows, "smallprob")
    return EXIT_OK


def cmd_harnack(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    master = _get_seed(args, sections)
    tilted = tilt(dist)
    lo = args.c * args.k ** (1 / 3) / 10.0
    hi = args.c * args.k ** (1 / 3)
    if args.y_grid:
        ys = parse_float_list(args.y_grid, "--y-grid")
    else:
        ys = list(np.linspace(lo, hi, args.y_count))
        if isinstance(tilted, Lattice):
            # Snap to reachable lattice points inside the band when possible.
            from .tubes import _lattice_integerization

            steps, base, den = _lattice_integerization(tilted, 0.0)
            reach = {0}
            for _ in range(args.k):
                reach = {s + st for s in reach for st in steps}
            pts = sorted(v / den for v in reach
                         if lo - 1e-9 <= v / den <= hi + 1e-9)
            if pts:
                ys = pts[: args.y_count]
    res = ratio_harnack(tilted, args.c, args.k, args.n, ys, effort=args.effort,
                        master_seed=master, method=args.method)
    params = {"c": args.c, "k": args.k, "n": args.n, "method": args.method}
    rows = [
        ReportRow("harnack", params, "M_emp", res.m_emp, stderr=res.m_stderr),
        ReportRow("harnack", params, "ln_sup", res.ln_sup),
        ReportRow("harnack", params, "ln_inf", res.ln_inf),
    ]
    for y, lnp, se in zip(res.y_values, res.ln_probs, res.stderrs):
        rows.append(ReportRow("harnack", {**params, "y": y}, "ln_prob", lnp,
                              stderr=se))
    print(f"M_emp = {res.m_emp:.5f} +- {res.m_stderr:.3g}")
    _emit(args, rows, "harnack")
    return EXIT_OK


def cmd_phase(args) -> int:
    sections = _load_config(args)
    dist = _get_dist(args, sections)
    master = _get_seed(args, sections)
    if not args.c_list:
        raise ConfigError("phase experiment needs a nonempty --c-list")
    if not args.n_list:
        raise ConfigError("phase experiment needs a nonempty --n-list")
    prof = push_profile(dist)
    if not prof.top_heavy:
        raise ConfigError("phase experiment needs a top-heavy distribution")
    budget = int(args.budget or DEFAULT_LEVEL_BUDGET)
    report = critical_report(dist)
    rows = [ReportRow("phase", {}, "c1", report.c1)]

    m_emp = args.harnack_M
    if m_emp is None and isinstance(dist, Lattice):
        try:
            tilted = tilt(dist)
            k0 = 8
            lo = 1.0 * k0 ** (1 / 3) / 10.0
            hi = 1.0 * k0 ** (1 / 3)
            ys = [v for v in np.arange(-k0, k0 + 1)
                  if lo - 1e-9 <= v <= hi + 1e-9]
            if ys:
                m_emp = ratio_harnack(tilted, 1.0, k0, 27, ys,
                                      master_seed=master, method="dp").m_emp
        except Exception:
            m_emp = None
    if m_emp is None:
        m_emp = 0.0
    rows.append(ReportRow("phase", {}, "harnack_M", m_emp))

    for c in args.c_list:
        tree = Tree(TreeSpec.growth(prof.beta, c, max(args.n_list)), budget)
        rows.append(ReportRow("phase", {"c": c}, "c2",
                              report.c2(c, m_emp)))
        level = default_min_level(dist, c, min(max(args.n_list), 200))
        rows.append(ReportRow("phase", {"c": c}, "band_min_level", float(level)))
        for n in args.n_list:
            tasks = [
                (tree.spec, budget, dist, c, level, n,
                 rng.derive_seed(master, "phase", c, n, j))
                for j in range(args.seeds)
            ]
            results = _pmap(_phase_cell, tasks, args.threads)
            u_vals = [r[0] for r in results]
            c_vals = [r[1] for r in results]
            s_counts = [r[2] for r in results]
            for j, (u_n, c_eff, cnt, wt) in enumerate(results):
                rows.append(ReportRow("phase", {"c": c, "n": n}, "bottleneck_Un",
                                      u_n, seed=j, wall_time_s=wt))
                rows.append(ReportRow("phase", {"c": c, "n": n},
                                      "effective_conductance", c_eff, seed=j))
                rows.append(ReportRow("phase", {"c": c, "n": n}, "survivor_count",
                                      float(cnt), seed=j))
            rows.append(ReportRow("phase", {"c": c, "n": n}, "median_bottleneck_Un",
                                  statistics.median(u_vals)))
            rows.append(ReportRow("phase", {"c": c, "n": n},
                                  "median_effective_conductance",
                                  statistics.median(c_vals)))
            rows.append(ReportRow("phase", {"c": c, "n": n},
                                  "median_survivor_count",
                                  float(statistics.median(s_counts))))
            bound, se = second_moment_bound(s_counts)
            rows.append(ReportRow("phase", {"c": c, "n": n},
                                  "paley_zygmund_bound", bound, stderr=se))
            print(f"c={c} n={n}: median Un={statistics.median(u_vals):.4g} "
                  f"median C_eff={statistics.median(c_vals):.4g} "
                  f"median |W|={statistics.median(s_counts):.4g}")
    _emit(args, rows, "phase")
    return EXIT_OK


# ------------------------------------------------------------------- parsing


def _add_common(p, stochastic: bool) -> None:
    p.add_argument("--config", help="key=value config file with [sections]")
    p.add_argument("--dist", help="distribution config file")
    p.add_argument("--out", help="CSV output path (JSONL mirror written too)")
    p.add_argument("--plot", action="store_true",
                   help="render a PNG figure next to the CSV")
    p.add_argument("--budget", type=int, default=None,
                   help="per-level vertex budget")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes for independent cells; reports "
                        "are identical for any value")
    if stochastic:
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (required unless set in config)")


def _add_tree_flags(p) -> None:
    p.add_argument("--bary", type=int, help="b-ary tree with this branching")
    p.add_argument("--growth-c", type=float,
                   help="growth-target tree with this c (beta from the "
                        "distribution unless --growth-beta)")
    p.add_argument("--growth-beta", type=float)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="rwre-lab",
        description="Numerical experiments on random walks in random "
                    "environments on trees near the recurrence/transience "
                    "boundary.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("push", help="backward push and tilt profile")
    _add_common(p, stochastic=False)
    p.set_defaults(fn=cmd_push)

    p = sub.add_parser("tilt-check", help="tilted law normalization and mean")
    _add_common(p, stochastic=False)
    p.set_defaults(fn=cmd_tilt_check)

    p = sub.add_parser("capacity", help="capacity series, finite capacity, dimension")
    _add_common(p, stochastic=False)
    _add_tree_flags(p)
    p.add_argument("--N", type=int, default=200, help="series length")
    p.add_argument("--depths", type=lambda s: parse_int_list(s, "--depths"),
                   default=[8], help="finite-capacity truncation depths")
    p.add_argument("--gauge-k", type=float, help="exponential gauge e^{-kn}")
    p.add_argument("--gauge-beta", type=float)
    p.add_argument("--gauge-c", type=float,
                   help="critical gauge e^{-beta n - c n^(1/3)}")
    p.set_defaults(fn=cmd_capacity)

    for name, fn in (("bottleneck", cmd_bottleneck), ("conductance",
                                                      cmd_conductance)):
        p = sub.add_parser(name, help=f"per-level {name} statistics")
        _add_common(p, stochastic=True)
        _add_tree_flags(p)
        p.add_argument("--n-list", type=lambda s: parse_int_list(s, "--n-list"),
                       default=[27, 64, 125])
        p.add_argument("--seeds", type=int, default=50)
        if name == "conductance":
            p.add_argument("--walk-check", action="store_true",
                           help="compare against escape Monte Carlo")
            p.add_argument("--replicates", type=int, default=100_000)
        p.set_defaults(fn=fn)

    p = sub.add_parser("tube", help="confinement probability for one horizon")
    _add_common(p, stochastic=True)
    p.add_argument("--band", choices=["constant", "cuberoot"], default="constant")
    p.add_argument("--a", type=float, help="constant band half-width")
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--band-start", type=int, default=1)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=["naive", "splitting"], default="splitting")
    p.add_argument("--effort", type=int, default=4000)
    p.add_argument("--dp-check", action="store_true",
                   help="also run the exact lattice DP")
    p.set_defaults(fn=cmd_tube)

    p = sub.add_parser("rate", help="cube-root band normalized decay rates")
    _add_common(p, stochastic=True)
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)
    p.add_argument("--band-start", type=int, default=1)
    p.add_argument("--n-list", type=lambda s: parse_int_list(s, "--n-list"),
                   default=[1000, 8000, 27000])
    p.add_argument("--effort", type=int, default=4000)
    p.set_defaults(fn=cmd_rate)

    p = sub.add_parser("survivors", help="band survivor counts and second moment")
    _add_common(p, stochastic=True)
    _add_tree_flags(p)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--L", type=int, default=None,
                   help="constraint-free levels (default: smallest workable)")
    p.add_argument("--n-list", type=lambda s: parse_int_list(s, "--n-list"),
                   default=[27, 64, 125])
    p.add_argument("--seeds", type=int, default=50)
    p.set_defaults(fn=cmd_survivors)

    p = sub.add_parser("smallprob", help="chance any path stays above the "
                                         "cube-root threshold")
    _add_common(p, stochastic=True)
    _add_tree_flags(p)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--n-list", type=lambda s: parse_int_list(s, "--n-list"),
                   default=[27, 64, 125])
    p.add_argument("--seeds", type=int, default=200)
    p.set_defaults(fn=cmd_smallprob)

    p = sub.add_parser("harnack", help="conditioned-band ratio constant")
    _add_common(p, stochastic=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--y-grid", help="explicit comma-separated start values")
    p.add_argument("--y-count", type=int, default=5)
    p.add_argument("--effort", type=int, default=2000)
    p.add_argument("--method", choices=["splitting", "dp"], default="splitting")
    p.set_defaults(fn=cmd_harnack)

    p = sub.add_parser("phase", help="recurrence/transience contrast experiment")
    _add_common(p, stochastic=True)
    p.add_argument("--c-list", type=lambda s: parse_float_list(s, "--c-list"),
                   required=True)
    p.add_argument("--n-list", type=lambda s: parse_int_list(s, "--n-list"),
                   default=[27, 64, 125])
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--harnack-M", type=float, default=None,
                   help="Harnack constant for c2 (default: cheap DP estimate)")
    p.set_defaults(fn=cmd_phase)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Experiment runner: ``hcm <command> --config cfg.json --out DIR``.

Every command reads one JSON document.  Unknown keys are errors, and all
parameters are validated (including graph construction) before the output
directory is touched.  Exit codes: 0 success, 2 config error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from hcm import netgen
from hcm.coupling import coupling_from_config
from hcm.dynamics import SimState, SystemConfig, simulate
from hcm.fluctuations import fluctuation_trace, star_fluctuation_bound, survival_experiment
from hcm.reduced import (
    EXPANDING,
    PERIODIC,
    bifurcation_scan,
    classify,
    make_reduced,
    shadow_check,
    write_bifurcation_csv,
    lyapunov_estimate,
)
from hcm.spectral import (
    EigenSolverError,
    coupling_alpha_interval,
    eig_extremes,
    laplacian,
    spectral_bounds_audit,
    sync_report,
    write_spectrum_csv,
)
from hcm.svg import PALETTE, Panel, write_svg
from hcm.torus import circle_dist

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


class NumericFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- schema
_NUM = (int, float)
_GRAPH_KEYS = {
    "star": {"n_low": int},
    "layered": {"d": int, "delta": int, "layers": list, "n_low": int, "seed": int, "hub_from_all": bool},
    "erdos_renyi": {"n": int, "p": _NUM, "seed": int},
    "chung_lu": {"weights": list, "n_hubs": int, "hub_p": _NUM, "seed": int},
    "ring": {"n": int, "k": int},
    "file": {"path": str},
}
_GRAPH_OPTIONAL = {"seed", "hub_from_all", "symmetrize"}
_DYN_KEYS = {"sigma": int, "alpha": _NUM, "coupling": (str, dict)}
_RUN_KEYS = {
    "generate": {},
    "table1": {"kappas": list},
    "figure3": {"T": int, "transient": int, "record_low": int, "xi": _NUM},
    "bifurcation": {"beta_min": _NUM, "beta_max": _NUM, "n_beta": int, "transient": int, "keep": int},
    "survival": {"eps": _NUM, "T": int, "trials": int},
    "sync-audit": {"perturb_size": _NUM, "T": int, "n_alpha": int},
    "fluctuations": {"T": int, "hubs": list},
    "heterogeneity": {"p_grid": list},
}
_RUN_DEFAULTS = {
    "figure3": {"transient": 1000, "record_low": 10, "xi": 0.05},
    "bifurcation": {"transient": 1000, "keep": 1000},
    "sync-audit": {"perturb_size": 1e-3, "T": 200, "n_alpha": 5},
    "fluctuations": {"hubs": None},
    "heterogeneity": {"p_grid": [1.25, 1.5, 2.0, 3.0, 4.0]},
}
_NEEDS = {
    "generate": ("graph",),
    "table1": ("dynamics", "run"),
    "figure3": ("graph", "dynamics", "run"),
    "bifurcation": ("dynamics", "run"),
    "survival": ("graph", "dynamics", "run"),
    "sync-audit": ("graph", "dynamics"),
    "fluctuations": ("graph", "dynamics", "run"),
    "heterogeneity": ("graph",),
}
_TOP_KEYS = {"experiment", "seed", "graph", "dynamics", "run", "output"}


def _typed(section: str, d: dict, spec: dict, optional=frozenset()) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{section}: expected an object")
    unknown = set(d) - set(spec) - set(optional)
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")
    for k, typ in spec.items():
        if k not in d:
            if k in optional:
                continue
            raise ConfigError(f"{section}: missing key {k!r}")
        v = d[k]
        if isinstance(v, bool) and typ is not bool:
            raise ConfigError(f"{section}.{k}: wrong type")
        if not isinstance(v, typ):
            raise ConfigError(f"{section}.{k}: wrong type {type(v).__name__}")
    return d


@dataclass
class Experiment:
    name: str
    seed: int
    out: str
    graph: Any = None
    config: SystemConfig | None = None
    dyn: dict | None = None
    run: dict | None = None


def build_graph(spec: dict, seed: int) -> netgen.NetworkGraph:
    if not isinstance(spec, dict) or "generator" not in spec:
        raise ConfigError("graph: missing 'generator'")
    gen = spec["generator"]
    if gen not in _GRAPH_KEYS:
        raise ConfigError(f"graph: unknown generator {gen!r}")
    body = {k: v for k, v in spec.items() if k != "generator"}
    keys = dict(_GRAPH_KEYS[gen], symmetrize=bool)
    _typed(f"graph[{gen}]", body, keys, _GRAPH_OPTIONAL)
    gseed = body.get("seed", seed)
    try:
        if gen == "star":
            g = netgen.make_star(body["n_low"])
        elif gen == "layered":
            layers = [(float(k), int(c)) for k, c in body["layers"]]
            g = netgen.make_layered(body["d"], body["delta"], layers, body["n_low"], gseed, body.get("hub_from_all", False))
        elif gen == "erdos_renyi":
            g = netgen.make_erdos_renyi(body["n"], float(body["p"]), gseed)
        elif gen == "chung_lu":
            g = netgen.make_chung_lu_hubs(np.asarray(body["weights"], float), body["n_hubs"], float(body["hub_p"]), gseed)
        elif gen == "ring":
            g = netgen.make_ring(body["n"], body["k"])
        else:
            g = netgen.read_edge_list(body["path"])
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError(f"graph: {exc}") from exc
    if body.get("symmetrize", False):
        g = netgen.symmetrized(g)
    return g


def load_experiment(command: str, raw: dict, out: str | None, seed: int | None) -> Experiment:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    if raw.get("experiment", command) != command:
        raise ConfigError(f"config is for {raw['experiment']!r}, not {command!r}")
    seed = seed if seed is not None else raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    out = out or raw.get("output")
    if not isinstance(out, str) or not out:
        raise ConfigError("no output directory (use --out or 'output')")
    for sec in _NEEDS[command]:
        if sec not in raw and not (sec == "run" and command in _RUN_DEFAULTS):
            raise ConfigError(f"missing section {sec!r}")
    ex = Experiment(command, seed, out)
    if "graph" in _NEEDS[command]:
        ex.graph = build_graph(raw["graph"], seed)
    if "dynamics" in _NEEDS[command]:
        dyn = dict(raw["dynamics"]) if isinstance(raw["dynamics"], dict) else raw["dynamics"]
        optional = {"alpha"} if command in ("bifurcation", "sync-audit") else set()
        _typed("dynamics", dyn, _DYN_KEYS, optional | {"coupling"})
        dyn.setdefault("coupling", "sine")
        try:
            dyn["coupling"] = coupling_from_config(dyn["coupling"])
        except ValueError as exc:
            raise ConfigError(f"dynamics.coupling: {exc}") from exc
        if dyn["sigma"] < 2:
            raise ConfigError("dynamics.sigma must be >= 2")
        if not math.isfinite(float(dyn.get("alpha", 0.0))):
            raise ConfigError("dynamics.alpha must be finite")
        ex.dyn = dyn
        if ex.graph is not None and "alpha" in dyn:
            try:
                ex.config = SystemConfig(dyn["sigma"], float(dyn["alpha"]), ex.graph, dyn["coupling"])
            except ValueError as exc:
                raise ConfigError(f"dynamics: {exc}") from exc
    run = dict(_RUN_DEFAULTS.get(command, {}))
    spec = _RUN_KEYS[command]
    if "run" in raw:
        _typed("run", raw["run"], spec, set(_RUN_DEFAULTS.get(command, {})))
        run.update(raw["run"])
    elif set(spec) - set(run):
        if spec:
            raise ConfigError("missing section 'run'")
    ex.run = run
    _check_run(command, ex)
    return ex


def _check_run(command: str, ex: Experiment) -> None:
    r = ex.run
    pos = lambda k: r[k] > 0 or _bad(f"run.{k} must be positive")  # noqa: E731
    nonneg = lambda k: r[k] >= 0 or _bad(f"run.{k} must be >= 0")  # noqa: E731
    if command == "table1":
        if not r["kappas"] or not all(isinstance(k, _NUM) and 0 < k <= 1 for k in r["kappas"]):
            _bad("run.kappas must be a nonempty list in (0, 1]")
    elif command == "figure3":
        pos("T"), nonneg("transient"), nonneg("record_low"), pos("xi")
        if r["transient"] >= r["T"]:
            _bad("run.transient must be < run.T")
        if ex.graph.n_hubs == 0:
            _bad("figure3 needs a graph with hubs")
    elif command == "bifurcation":
        pos("n_beta"), nonneg("transient"), pos("keep")
        if r["beta_max"] < r["beta_min"]:
            _bad("run.beta_max < run.beta_min")
    elif command == "survival":
        pos("eps"), pos("T"), pos("trials")
        if ex.graph.n_hubs == 0:
            _bad("survival needs a graph with hubs")
    elif command == "sync-audit":
        pos("perturb_size"), pos("T"), pos("n_alpha")
        if ex.graph.directed:
            _bad("sync-audit needs an undirected graph (set graph.symmetrize)")
    elif command == "fluctuations":
        pos("T")
        if r["hubs"] is not None and not all(isinstance(j, int) and 0 <= j < ex.graph.n_hubs for j in r["hubs"]):
            _bad("run.hubs must list hub indices")
    elif command == "heterogeneity":
        if not r["p_grid"] or not all(isinstance(p, _NUM) and p >= 1 for p in r["p_grid"]):
            _bad("run.p_grid must be a nonempty list of reals >= 1")


def _bad(msg: str):
    raise ConfigError(msg)


# ---------------------------------------------------------------- outputs
def _write_kv(path: str, items: dict) -> None:
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k}={_kv(v)}\n")


def _kv(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, bool):
        return str(int(v))
    return str(v)


def regime_label(report) -> str:
    if report.regime == EXPANDING:
        return "Uniformly Expanding"
    if report.regime == PERIODIC:
        return "Fixed Point" if report.period == 1 else "Periodic"
    return "Unresolved"


def _curve_segments(g, n: int = 1000):
    x = np.arange(n + 1) / n
    y = np.asarray(g(x))
    cuts = np.nonzero(np.abs(np.diff(y)) > 0.5)[0] + 1
    return list(zip(np.split(x, cuts), np.split(y, cuts)))


def cmd_generate(ex: Experiment) -> int:
    g = ex.graph
    netgen.write_edge_list(g, os.path.join(ex.out, "edges.txt"))
    prof = netgen.degree_profile(g)
    items = {
        "N": g.n_nodes, "L": g.n_low, "M": g.n_hubs, "directed": g.directed, "edges": g.n_edges,
        "Delta": prof.delta_max, "delta_low": prof.delta_low,
        "kappas": ",".join(f"{k:.6g}" for k in prof.kappas),
    }
    if g.n_hubs and prof.delta_max:
        p, rep = netgen.eta_search(prof, g.n_low, g.n_hubs, [1.25, 1.5, 2.0, 3.0, 4.0])
        items.update(p=p, eta=rep.eta)
    _write_kv(os.path.join(ex.out, "report.txt"), items)
    return EXIT_OK


def cmd_table1(ex: Experiment) -> int:
    sigma, h, alpha = ex.dyn["sigma"], ex.dyn["coupling"], float(ex.dyn["alpha"])
    status = EXIT_OK
    with open(os.path.join(ex.out, "table1.csv"), "w") as fh:
        fh.write("kappa,beta,regime,period,multiplier,min_abs_derivative\n")
        for kappa in ex.run["kappas"]:
            rep = classify(make_reduced(sigma, alpha, float(kappa), h))
            lab = regime_label(rep)
            if lab == "Unresolved":
                status = EXIT_NUMERIC
            fh.write(f"{kappa:.12g},{alpha * kappa:.12g},{lab},{rep.period},{rep.multiplier:.12g},{rep.min_abs_derivative:.12g}\n")
    return status


def cmd_figure3(ex: Experiment) -> int:
    cfg, r, g = ex.config, ex.run, ex.graph
    L = g.n_low
    prof = netgen.degree_profile(g)
    low = list(range(min(r["record_low"], L)))
    hubs = list(range(L, g.n_nodes))
    st = SimState.uniform(g.n_nodes, ex.seed)
    tr = simulate(cfg, st, r["T"], record=low + hubs)
    t0 = r["transient"]
    summary = {"T": r["T"], "transient": t0, "xi": float(r["xi"])}
    status = EXIT_OK
    panels = []
    kappas = sorted({round(float(k), 12) for k in prof.kappas}, reverse=True)
    with open(os.path.join(ex.out, "return_map.csv"), "w") as fh:
        fh.write("node,kappa,t,x,y\n")
        for ni, node in enumerate(tr.nodes.tolist()):
            kap = 0.0 if node < L else float(prof.kappas[node - L])
            vals = tr.values[ni]
            for t in range(t0, len(vals) - 1):
                fh.write(f"{node},{kap:.12g},{t},{vals[t]:.17g},{vals[t + 1]:.17g}\n")
    for kap in kappas:
        idx = [i for i, n in enumerate(tr.nodes.tolist()) if n >= L and round(float(prof.kappas[n - L]), 12) == kap]
        gmap = make_reduced(cfg.sigma, cfg.alpha, kap, cfg.coupling)
        rep = classify(gmap)
        p = Panel(f"kappa={kap:g}")
        for c, i in enumerate(idx):
            v = tr.values[i][t0:]
            p.scatter(v[:-1], v[1:], PALETTE[c % len(PALETTE)], 0.8)
            if rep.regime == PERIODIC:
                sh = shadow_check(tr.values[i], rep, float(r["xi"]), t0)
                summary[f"node{tr.nodes[i]}.shadow_holds"] = sh.holds
                summary[f"node{tr.nodes[i]}.shadow_sup"] = sh.sup_dist
            else:
                summary[f"node{tr.nodes[i]}.lyapunov"] = lyapunov_estimate(gmap, len(v), trace=v)
            dev = circle_dist(v[1:], gmap(v[:-1]))
            summary[f"node{tr.nodes[i]}.curve_dev"] = float(np.max(dev))
        for sx, sy in _curve_segments(gmap):
            p.line(sx, sy)
        summary[f"kappa{kap:g}.regime"] = regime_label(rep)
        if rep.regime not in (EXPANDING, PERIODIC):
            status = EXIT_NUMERIC
        panels.append(p)
    if low:
        p = Panel("low nodes")
        for c, n in enumerate(low):
            v = tr.trace(n)[t0:]
            p.scatter(v[:-1], v[1:], PALETTE[c % len(PALETTE)], 0.8)
        for sx, sy in _curve_segments(lambda x: (cfg.sigma * x) % 1.0):
            p.line(sx, sy)
        panels.append(p)
    write_svg(panels, os.path.join(ex.out, "figure3.svg"), cols=min(2, len(panels)))
    _write_kv(os.path.join(ex.out, "summary.txt"), summary)
    return status


def cmd_bifurcation(ex: Experiment) -> int:
    r = ex.run
    betas = np.linspace(r["beta_min"], r["beta_max"], r["n_beta"]) if r["n_beta"] > 1 else np.array([r["beta_min"]])
    table = bifurcation_scan(ex.dyn["sigma"], ex.dyn["coupling"], betas, r["transient"], r["keep"], ex.seed)
    write_bifurcation_csv(table, os.path.join(ex.out, "bifurcation.csv"))
    lo, hi = float(betas[0]), float(betas[-1])
    p = Panel("orbit samples vs beta", (lo, hi if hi > lo else lo + 1.0), (0.0, 1.0))
    for b, s in table:
        p.scatter(np.full(len(s), b), s, PALETTE[0], 0.5)
    write_svg([p], os.path.join(ex.out, "bifurcation.svg"))
    return EXIT_OK


def cmd_survival(ex: Experiment, threads: int) -> int:
    r, cfg, g = ex.run, ex.config, ex.graph
    res = survival_experiment(cfg, float(r["eps"]), r["T"], r["trials"], ex.seed, threads)
    res.write_csv(os.path.join(ex.out, "survival.csv"))
    hits = res.first_hit[np.isfinite(res.first_hit)]
    summary = {
        "trials": r["trials"], "T": r["T"], "eps": float(r["eps"]),
        "survival_fraction": res.fraction,
        "initial_exceedance_fraction": float(np.mean(np.max(np.abs(res.xi0), axis=1) > r["eps"])),
        "median_first_hit": float(np.median(res.first_hit)),
        "hits": len(hits),
    }
    if g.meta.get("generator") == "star":
        b = star_fluctuation_bound(g.n_low, float(r["eps"]), cfg.alpha)
        summary.update(hoeffding_bound=b, survival_lower_bound=float(np.clip(1 - (r["T"] + 1) * b, 0, 1)))
    _write_kv(os.path.join(ex.out, "summary.txt"), summary)
    return EXIT_OK


def cmd_sync_audit(ex: Experiment) -> int:
    from hcm.dynamics import sync_stability_probe

    g, dyn, r = ex.graph, ex.dyn, ex.run
    try:
        spec = eig_extremes(laplacian(g))
    except EigenSolverError as exc:
        raise NumericFailure(str(exc)) from exc
    write_spectrum_csv(spec.values, os.path.join(ex.out, "spectrum.csv"))
    rep = sync_report(spec, dyn["sigma"])
    delta = netgen.degree_profile(g).delta_max
    summary = {
        "lambda2": rep.lambda2, "lambdaN": rep.lambdaN, "ratio": rep.ratio,
        "threshold": rep.threshold, "synchronizable": rep.synchronizable, "connected": rep.connected,
    }
    if not rep.connected:
        summary["verdict"] = "disconnected"
        _write_kv(os.path.join(ex.out, "summary.txt"), summary)
        return EXIT_NUMERIC
    with open(os.path.join(ex.out, "audit.txt"), "w") as fh:
        fh.write(spectral_bounds_audit(g, spec).as_text())
    iv = coupling_alpha_interval(spec, dyn["sigma"], dyn["coupling"], delta)
    if "alpha" in dyn:
        alphas = [float(dyn["alpha"])]
    elif iv is not None:
        alphas = [float(a) for a in np.linspace(iv[0], iv[1], r["n_alpha"] + 2)[1:-1]]
    else:
        alphas = []
    if iv is not None:
        summary.update(alpha_lo=float(iv[0]), alpha_hi=float(iv[1]))
    for k, a in enumerate(alphas):
        cfg = SystemConfig(dyn["sigma"], a, g, dyn["coupling"])
        pr = sync_stability_probe(cfg, float(r["perturb_size"]), r["T"], ex.seed)
        summary.update({f"probe{k}.alpha": a, f"probe{k}.verdict": pr.verdict, f"probe{k}.rate": pr.rate})
    _write_kv(os.path.join(ex.out, "summary.txt"), summary)
    return EXIT_OK


def cmd_fluctuations(ex: Experiment) -> int:
    st = SimState.uniform(ex.graph.n_nodes, ex.seed)
    tr = fluctuation_trace(ex.config, st, ex.run["T"], ex.run["hubs"])
    tr.write_csv(os.path.join(ex.out, "fluctuations.csv"))
    _write_kv(os.path.join(ex.out, "summary.txt"), {
        "T": ex.run["T"], "max_abs_xi": float(np.max(np.abs(tr.values))) if tr.values.size else 0.0,
    })
    return EXIT_OK


def cmd_heterogeneity(ex: Experiment) -> int:
    g = ex.graph
    prof = netgen.degree_profile(g)
    if prof.delta_max == 0 or g.n_hubs == 0:
        raise NumericFailure("heterogeneity needs hubs and Delta > 0")
    rows = ["p,q,h1,h2,h3,h4,eta"]
    for p in ex.run["p_grid"]:
        rep = netgen.heterogeneity_eta(prof, g.n_low, g.n_hubs, float(p))
        rows.append(",".join(f"{v:.12g}" for v in (rep.p, rep.q, rep.h1, rep.h2, rep.h3, rep.h4, rep.eta)))
    with open(os.path.join(ex.out, "heterogeneity.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")
    best, rep = netgen.eta_search(prof, g.n_low, g.n_hubs, [float(p) for p in ex.run["p_grid"]])
    _write_kv(os.path.join(ex.out, "heterogeneity.txt"), {"best_p": best, "eta": rep.eta})
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "table1": cmd_table1,
    "figure3": cmd_figure3,
    "bifurcation": cmd_bifurcation,
    "survival": cmd_survival,
    "sync-audit": cmd_sync_audit,
    "fluctuations": cmd_fluctuations,
    "heterogeneity": cmd_heterogeneity,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hcm", description="Coupled circle maps on heterogeneous networks.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment file")
        p.add_argument("--out", help="output directory (overrides 'output')")
        p.add_argument("--seed", type=int, help="u64 seed (overrides 'seed')")
        p.add_argument("--threads", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        ex = load_experiment(args.command, raw, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(ex.out, exist_ok=True)
    try:
        fn = COMMANDS[args.command]
        code = fn(ex, args.threads) if args.command == "survival" else fn(ex)
    except (NumericFailure, EigenSolverError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if code == EXIT_NUMERIC:
        print("numeric failure: see summary output", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

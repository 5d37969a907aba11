"""
Command-line front end.

    splitswitch simulate experiments/fig1.toml [--N 1500] [--seed 7] [--set key=value ...]
    splitswitch analyze experiments/fig3_analyze.toml
    splitswitch quasipotential experiments/barriers.toml
    splitswitch validate experiments/dw.crn [--N 100]

Exit codes: 0 success, 2 parse/validation error, 3 runtime failure (frozen
trajectory, quadrature failure), 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, io
from .bd_analysis import build, check_fast_conditions, expected_hitting_times, hitting_probs, bias_profile
from .config import ConfigError, ExperimentConfig, apply_overrides, load_config
from .dsl import NetworkParseError, load_network
from .quasipotential import NotDoubleWell, QuadratureError, analyze_quasipotential, classify_regime, find_equilibria
from .reaction_net import BalanceError, limiting_drift, validate
from .ssa import SwitchMode, simulate_replicates

log = logging.getLogger("splitswitch")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


class RuntimeFailure(RuntimeError):
    pass


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    over = {
        "N": args.N,
        "seed": args.seed,
        "t_max": getattr(args, "t_max", None),
        "replicates": getattr(args, "replicates", None),
        "workers": getattr(args, "workers", None),
        "output": args.output,
        "x0": getattr(args, "x0", None),
    }
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        over[k.strip()] = v.strip()
    return apply_overrides(cfg, over)


def _switch_mode(cfg: ExperimentConfig, network, kernel, rate) -> SwitchMode | None:
    if cfg.switch == "none":
        return None
    if cfg.switch == "fast":
        return SwitchMode("fast")
    eq = None
    try:
        eq = find_equilibria(limiting_drift(network))
    except (NotDoubleWell, BalanceError, ValueError):
        pass
    if cfg.switch == "slow":
        if eq is None:
            raise ConfigError("switch = 'slow' needs a double-well drift")
        return SwitchMode.slow(eq.x1, eq.x3, cfg.c)
    # auto: boundary switching in the fast regime, interior wells otherwise
    if kernel is not None:
        try:
            n = cfg.N
            reg = classify_regime(network, kernel, rate, (n, 2 * n, 4 * n)).regime
        except (ValueError, ZeroDivisionError):
            reg = "indeterminate"
        if reg == "fast":
            return SwitchMode("fast")
    if eq is not None:
        return SwitchMode.slow(eq.x1, eq.x3, cfg.c)
    return SwitchMode("fast")


def run_simulate(cfg: ExperimentConfig) -> dict:
    if cfg.N is None or cfg.t_max is None:
        raise ConfigError("simulate needs N and t_max")
    network = cfg.load_network()
    kernel, rate = cfg.build_splitting()
    x0 = cfg.initial_state()
    mode = _switch_mode(cfg, network, kernel, rate)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    trajs = simulate_replicates(
        network, kernel, rate, x0, cfg.t_max, cfg.seed, cfg.replicates, workers=cfg.workers,
        N=cfg.N, switch_mode=mode, n_snapshots=cfg.n_snapshots, record_events=cfg.record_events,
    )
    wall = time.perf_counter() - start
    reps = []
    for i, tr in enumerate(trajs):
        d = out if cfg.replicates == 1 else out / f"rep_{i:03d}"
        d.mkdir(parents=True, exist_ok=True)
        io.write_trajectory(d / "trajectory.csv", tr)
        io.write_occupation(d / "occupation.csv", tr, cfg.bins)
        io.write_switches(d / "switches.csv", tr.switches)
        io.write_quantiles(d / "quantiles.csv", tr.inter_switch_times())
        reps.append({
            "replicate": i,
            "directory": str(d),
            "events": tr.n_events,
            "t_end": tr.t_end,
            "frozen": tr.frozen,
            "switches": len(tr.switches),
            "wall_time_s": tr.wall_time,
        })
    manifest = {
        "command": "simulate",
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "config": cfg.semantic_dict(),
        "seed": cfg.seed,
        "seed_rule": "numpy SeedSequence(seed).spawn(replicates); PCG64 per replicate",
        "backend": trajs[0].backend,
        "switch_mode": None if mode is None else {"kind": mode.kind, "c": mode.c, "x1": mode.x1, "x3": mode.x3},
        "event_count": int(sum(t.n_events for t in trajs)),
        "wall_time_s": wall,
        "replicates": reps,
    }
    io.write_json(out / "manifest.json", manifest)
    frozen = [r["replicate"] for r in reps if r["frozen"]]
    if frozen:
        raise RuntimeFailure(f"trajectory froze (total rate 0) in replicate(s) {frozen}; artifacts written to {out}")
    return manifest


def run_analyze(cfg: ExperimentConfig) -> dict:
    network = cfg.load_network()
    kernel, rate = cfg.build_splitting()
    Ns = cfg.ladder()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows = []
        for N in Ns:
            model = build(network, kernel, rate, N)
            pi = hitting_probs(model)
            e = expected_hitting_times(model)
            eps, sabs = bias_profile(model)
            rows.append({
                "N": N,
                "N_pi_1N": N * float(pi[1]),
                "N_pi_Nm1_0": N * float(1 - pi[N - 1]),
                "N_e_1": N * float(e[1]),
                "N_e_Nm1": N * float(e[N - 1]),
                "sum_abs_eps": sabs,
                "pi": pi,
                "e": e,
                "eps": eps,
            })
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    io.write_json(out / "bd_report.json", {"command": "analyze", "config_hash": cfg.config_hash(), "rows": rows})
    if kernel is not None:
        cond = check_fast_conditions(network, kernel, rate, Ns).to_dict()
    else:
        cond = {"rows": [], "note": "no splitting mechanism: fast-regime sums are undefined"}
    cond.pop("schema_version", None)
    io.write_json(out / "conditions.json", cond)
    return {"bd_report": rows, "conditions": cond}


def run_quasipotential(cfg: ExperimentConfig) -> dict:
    network = cfg.load_network()
    kernel, rate = cfg.build_splitting()
    Ns = cfg.ladder()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = analyze_quasipotential(network, kernel, rate, Ns, gamma_tilde=cfg.gamma_tilde, N=cfg.N)
    except ZeroDivisionError as exc:
        raise ConfigError(str(exc)) from None
    except QuadratureError as exc:
        raise RuntimeFailure(str(exc)) from None
    payload = report.to_dict()
    payload.pop("schema_version", None)
    io.write_json(out / "quasipotential.json", payload)
    return payload


def run_validate(path, N=None) -> dict:
    net = load_network(path)
    report = validate(net, N)
    part = net.partition
    return {
        "reactions": [str(r) for r in net],
        "balanced": list(part.balanced),
        "biased": list(part.biased),
        "report": report.to_dict(),
    }


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="splitswitch", description="Reaction networks with unbiased splitting: simulation and analysis.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="experiment TOML file")
        sp.add_argument("--N", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--output", "-o")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key (splitting.<key> for the splitting table)")

    s = sub.add_parser("simulate", help="exact simulation; writes trajectory/occupation/switch CSVs and manifest.json")
    common(s)
    s.add_argument("--t-max", dest="t_max", type=float)
    s.add_argument("--x0", type=int)
    s.add_argument("--replicates", type=int)
    s.add_argument("--workers", type=int)
    common(sub.add_parser("analyze", help="birth-death hitting analysis and fast-regime conditions"))
    common(sub.add_parser("quasipotential", help="regime label, equilibria and switching barriers"))
    v = sub.add_parser("validate", help="parse and check a reaction network file")
    v.add_argument("network")
    v.add_argument("--N", type=int)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "validate":
                res = run_validate(args.network, args.N)
                print(json.dumps(res, indent=2))
                return EXIT_OK if res["report"]["ok"] else EXIT_PARSE
            cfg = _load(args)
            runner = {"simulate": run_simulate, "analyze": run_analyze, "quasipotential": run_quasipotential}[args.command]
            res = runner(cfg)
            _summary(args.command, res, cfg)
            return EXIT_OK
    except (ConfigError, NetworkParseError, BalanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


def _summary(command, res, cfg):
    if command == "simulate":
        print(f"{res['event_count']} events in {res['wall_time_s']:.2f} s ({res['backend']}); output in {cfg.output}")
    elif command == "quasipotential":
        print(f"regime: {res['regime']}")
        if res.get("barriers"):
            b = res["barriers"]
            print(f"A(y2) = {b['A_y2']:.6g}, iota12 = {b['iota12']:.6g}, iota32 = {b['iota32']:.6g}")
    elif command == "analyze":
        for r in res["bd_report"]:
            print(f"N={r['N']}: N*pi_1N = {r['N_pi_1N']:.6g}, N*e_1 = {r['N_e_1']:.6g}")


if __name__ == "__main__":
    sys.exit(main())

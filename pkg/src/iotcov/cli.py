"""Batch front end: JSON config in, CSV rows and a reproducibility manifest out.

Commands
--------
analytic     evaluate coverage/throughput expressions over a tau list
simulate     Monte Carlo estimates with standard errors
compare      approximation-1 / approximation-2 / MC side by side with gaps
optimal-tau  throughput-optimal slot split per cluster size

Exit codes: 0 success, 1 configuration/usage error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import shlex
import sys
import time
from dataclasses import replace

from . import analysis, montecarlo
from .distributions import QuadratureError
from .model import (
    ConfigError,
    FixedEnergyThreshold,
    MaternCluster,
    RateLinkedEnergyThreshold,
    SystemConfig,
    ThomasCluster,
    validate_config,
)
from .montecarlo import EstimationError, SeedSpec

__version__ = "0.1.0"

CSV_HEADER = ("tau", "cluster_param", "lambda_total", "metric", "scenario",
              "method", "value", "stderr", "n", "seed")

_TOP_KEYS = {"alpha", "lambda_total", "lambda_bc", "lambda_b", "lambda_c",
             "n1", "n2", "cluster", "p_t", "noise", "eta", "slot_t", "beta",
             "e_rec"}
_DEFAULTS = {"noise": 1e-10}  # W; not part of the reference parameter set


def _num(obj: dict, key: str, where: str) -> float:
    if key not in obj:
        raise ConfigError(f"missing key '{key}' in {where}")
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"key '{key}' in {where} must be a number")
    return float(v)


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}' in {where}")


def parse_config(path: str) -> SystemConfig:
    """Load and validate a SystemConfig from a strict JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config")

    cl = raw.get("cluster")
    if not isinstance(cl, dict):
        raise ConfigError("missing key 'cluster' in config")
    if cl.get("type") == "thomas":
        _check_keys(cl, {"type", "sigma_c"}, "cluster")
        cluster = ThomasCluster(sigma_c=_num(cl, "sigma_c", "cluster"))
    elif cl.get("type") == "matern":
        _check_keys(cl, {"type", "r_c"}, "cluster")
        cluster = MaternCluster(r_c=_num(cl, "r_c", "cluster"))
    else:
        raise ConfigError("cluster.type must be 'thomas' or 'matern'")

    er = raw.get("e_rec")
    if not isinstance(er, dict):
        raise ConfigError("missing key 'e_rec' in config")
    if er.get("type") == "fixed":
        _check_keys(er, {"type", "e_rec"}, "e_rec")
        e_rec = FixedEnergyThreshold(e_rec=_num(er, "e_rec", "e_rec"))
    elif er.get("type") == "rate_linked":
        _check_keys(er, {"type", "a", "b", "r_prime"}, "e_rec")
        r_prime = _num(er, "r_prime", "e_rec") if "r_prime" in er else None
        e_rec = RateLinkedEnergyThreshold(a=_num(er, "a", "e_rec"),
                                          b=_num(er, "b", "e_rec"),
                                          r_prime=r_prime)
    else:
        raise ConfigError("e_rec.type must be 'fixed' or 'rate_linked'")

    kwargs = {}
    for key in ("alpha", "lambda_total", "lambda_bc", "lambda_b", "lambda_c",
                "n1", "n2", "p_t", "eta", "slot_t", "beta"):
        kwargs[key] = _num(raw, key, "config")
    kwargs["noise"] = _num(raw, "noise", "config") if "noise" in raw \
        else _DEFAULTS["noise"]
    return validate_config(SystemConfig(cluster=cluster, e_rec=e_rec, **kwargs))


def config_to_dict(cfg: SystemConfig) -> dict:
    """Serialize a SystemConfig in the same schema parse_config reads."""
    if isinstance(cfg.cluster, ThomasCluster):
        cluster = {"type": "thomas", "sigma_c": cfg.cluster.sigma_c}
    else:
        cluster = {"type": "matern", "r_c": cfg.cluster.r_c}
    if isinstance(cfg.e_rec, FixedEnergyThreshold):
        e_rec = {"type": "fixed", "e_rec": cfg.e_rec.e_rec}
    else:
        e_rec = {"type": "rate_linked", "a": cfg.e_rec.a, "b": cfg.e_rec.b}
        if cfg.e_rec.r_prime is not None:
            e_rec["r_prime"] = cfg.e_rec.r_prime
    return {"alpha": cfg.alpha, "lambda_total": cfg.lambda_total,
            "lambda_bc": cfg.lambda_bc, "lambda_b": cfg.lambda_b,
            "lambda_c": cfg.lambda_c, "n1": cfg.n1, "n2": cfg.n2,
            "cluster": cluster, "p_t": cfg.p_t, "noise": cfg.noise,
            "eta": cfg.eta, "slot_t": cfg.slot_t, "beta": cfg.beta,
            "e_rec": e_rec}


def parse_tau_list(text: str) -> list[float]:
    """Parse '0.2,0.5,0.8' or 'start:stop:step' (endpoints inclusive)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("tau range must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("tau step must be positive")
        out = []
        k = 0
        while True:
            t = start + k * step
            if t > stop + 1e-12:
                break
            out.append(t)
            k += 1
    else:
        out = [float(p) for p in text.split(",") if p]
    for t in out:
        if not 0 < t < 1:
            raise ConfigError(f"tau value {t} outside (0, 1)")
    return out


def _cluster_param(cfg: SystemConfig) -> float:
    return cfg.cluster.sigma_c if isinstance(cfg.cluster, ThomasCluster) \
        else cfg.cluster.r_c


def _row(cfg: SystemConfig, tau, metric, scenario, method, value,
         stderr="", n="", seed="") -> dict:
    return {"tau": tau, "cluster_param": _cluster_param(cfg),
            "lambda_total": cfg.lambda_total, "metric": metric,
            "scenario": scenario, "method": method, "value": value,
            "stderr": stderr, "n": n, "seed": seed}


_TIER_SCENARIOS = {"clustered_tier0": 0, "clustered_tier1": 1}


def _analytic_value(cfg: SystemConfig, metric: str, scenario: str,
                    approx: int, tau: float) -> float:
    if approx == 2 and metric != "energy":
        raise ConfigError("approximation 2 is only derived for the energy metric")
    if metric == "energy":
        if scenario == "clustered":
            return analysis.energy_coverage(cfg, tau, approx)
        if scenario == "clustered_tier0":
            return analysis.energy_cov_tier0_approx1(cfg, tau) if approx == 1 \
                else analysis.energy_cov_tier0_approx2(cfg, tau)
        if scenario == "clustered_tier1":
            return analysis.energy_cov_tier1_approx1(cfg, tau) if approx == 1 \
                else analysis.energy_cov_tier1_approx2(cfg, tau)
        if scenario == "ppp":
            return analysis.energy_cov_ppp(cfg, tau)
        return analysis.energy_cov_overall(cfg, tau, approx)
    if metric == "joint":
        if scenario == "clustered":
            return analysis.joint_coverage(cfg, tau)
        if scenario == "clustered_tier0":
            return analysis.joint_cov_tier0(cfg, tau)
        if scenario == "clustered_tier1":
            return analysis.joint_cov_tier1(cfg, tau)
        if scenario == "ppp":
            return analysis.joint_cov_ppp(cfg, tau)
        return analysis.joint_cov_overall(cfg, tau)
    # throughput
    factor = (1 - tau) * math.log2(1 + cfg.beta)
    if scenario in _TIER_SCENARIOS:
        tier = _TIER_SCENARIOS[scenario]
        p = analysis.joint_cov_tier0(cfg, tau) if tier == 0 \
            else analysis.joint_cov_tier1(cfg, tau)
        return factor * p
    name = {"clustered": "clustered", "ppp": "ppp_baseline",
            "overall": "overall"}[scenario]
    return analysis.throughput(cfg, tau, name)


def cmd_analytic(cfg: SystemConfig, metric: str, scenario: str, approx: int,
                 tau_list: list[float]) -> list[dict]:
    method = f"approx{approx}"
    return [_row(cfg, tau, metric, scenario, method,
                 _analytic_value(cfg, metric, scenario, approx, tau))
            for tau in tau_list]


def cmd_simulate(cfg: SystemConfig, metric: str, scenario: str,
                 tau_list: list[float], n: int, seed: int,
                 workers: int | None = None) -> list[dict]:
    spec = SeedSpec(master_seed=seed)
    rows = []
    for tau in tau_list:
        if scenario == "overall":
            from .model import overall_mixture, prob_gw_at_center
            p_b = prob_gw_at_center(cfg)
            r1 = montecarlo.estimate(metric, "clustered", cfg, tau, n, spec, workers)
            r2 = montecarlo.estimate(metric, "ppp_baseline", cfg, tau, n, spec, workers)
            mean = overall_mixture(r1.mean, r2.mean, p_b)
            se = math.hypot(p_b * r1.stderr, (1 - p_b) * r2.stderr)
            rows.append(_row(cfg, tau, metric, scenario, "mc", mean, se, n, seed))
            continue
        mc_scn = "ppp_baseline" if scenario == "ppp" else scenario
        res = montecarlo.estimate(metric, mc_scn, cfg, tau, n, spec, workers)
        rows.append(_row(cfg, tau, metric, scenario, "mc",
                         res.mean, res.stderr, res.n, seed))
    return rows


def cmd_compare(cfg: SystemConfig, tau_list: list[float], n: int, seed: int,
                workers: int | None = None) -> list[dict]:
    """Energy coverage: both approximations against MC, with absolute gaps."""
    spec = SeedSpec(master_seed=seed)
    rows = []
    for tau in tau_list:
        a1 = analysis.energy_coverage(cfg, tau, approx=1)
        a2 = analysis.energy_coverage(cfg, tau, approx=2)
        mc = montecarlo.estimate("energy", "clustered", cfg, tau, n, spec, workers)
        rows.append(_row(cfg, tau, "energy", "clustered", "approx1", a1))
        rows.append(_row(cfg, tau, "energy", "clustered", "approx2", a2))
        rows.append(_row(cfg, tau, "energy", "clustered", "mc",
                         mc.mean, mc.stderr, mc.n, seed))
        rows.append(_row(cfg, tau, "energy", "clustered", "gap_approx1",
                         abs(a1 - mc.mean), mc.stderr, mc.n, seed))
        rows.append(_row(cfg, tau, "energy", "clustered", "gap_approx2",
                         abs(a2 - mc.mean), mc.stderr, mc.n, seed))
    return rows


def cmd_optimal_tau(cfg: SystemConfig, scenario: str,
                    cluster_size_list: list[float], grid_step: float = 0.05,
                    refine_tol: float = 1e-3) -> list[dict]:
    name = {"clustered": "clustered", "ppp": "ppp_baseline",
            "overall": "overall"}.get(scenario)
    if name is None:
        raise ConfigError("optimal-tau supports scenarios clustered, ppp, overall")
    rows = []
    for size in cluster_size_list:
        if isinstance(cfg.cluster, ThomasCluster):
            cfg_i = replace(cfg, cluster=ThomasCluster(sigma_c=size))
        else:
            cfg_i = replace(cfg, cluster=MaternCluster(r_c=size))
        res = analysis.optimal_tau(cfg_i, name, grid_step=grid_step,
                                   refine_tol=refine_tol)
        rows.append(_row(cfg_i, res.tau_star, "throughput", scenario,
                         "optimal_tau", res.throughput_star))
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_rows(rows: list[dict], out_path: str | None) -> None:
    lines = [",".join(CSV_HEADER)]
    lines += [",".join(_fmt(r[k]) for k in CSV_HEADER) for r in rows]
    text = "\r\n".join(lines) + "\r\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def write_manifest(out_path: str, cfg: SystemConfig, argv: list[str],
                   seed: int | None, wall_time: float) -> None:
    manifest = {"config_echo": config_to_dict(cfg),
                "command": shlex.join(["iotcov"] + argv),
                "seed": seed,
                "tool_version": __version__,
                "wall_time": wall_time}
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors -> exit code 1
        raise ConfigError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="iotcov", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    scenarios = ("clustered", "clustered_tier0", "clustered_tier1", "ppp", "overall")

    def common(sp, mc: bool):
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", default=None, help="output CSV path (default stdout)")
        if mc:
            sp.add_argument("--samples", type=int, default=100_000,
                            help="Monte Carlo realizations per tau")
            sp.add_argument("--seed", type=int, default=0, help="master seed")
            sp.add_argument("--workers", type=int, default=None,
                            help="worker processes (does not affect results)")

    sp = sub.add_parser("analytic", help="evaluate analytic expressions")
    common(sp, mc=False)
    sp.add_argument("--metric", choices=("energy", "joint", "throughput"),
                    required=True)
    sp.add_argument("--scenario", choices=scenarios, default="clustered")
    sp.add_argument("--approx", type=int, choices=(1, 2), default=1)
    sp.add_argument("--tau", required=True, help="comma list or start:stop:step")

    sp = sub.add_parser("simulate", help="Monte Carlo estimates")
    common(sp, mc=True)
    sp.add_argument("--metric", choices=("energy", "joint", "throughput"),
                    required=True)
    sp.add_argument("--scenario", choices=scenarios, default="clustered")
    sp.add_argument("--tau", required=True)

    sp = sub.add_parser("compare", help="approximations vs Monte Carlo")
    common(sp, mc=True)
    sp.add_argument("--tau", required=True)

    sp = sub.add_parser("optimal-tau", help="throughput-optimal slot split")
    common(sp, mc=False)
    sp.add_argument("--scenario", choices=("clustered", "ppp", "overall"),
                    default="clustered")
    sp.add_argument("--sizes", required=True,
                    help="comma list of cluster sizes (sigma_c or r_c)")
    sp.add_argument("--grid-step", type=float, default=0.05)
    sp.add_argument("--refine-tol", type=float, default=1e-3)

    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    t0 = time.perf_counter()
    try:
        args = _build_parser().parse_args(argv)
        cfg = parse_config(args.config)
        seed = getattr(args, "seed", None)
        if args.command == "analytic":
            rows = cmd_analytic(cfg, args.metric, args.scenario, args.approx,
                                parse_tau_list(args.tau))
        elif args.command == "simulate":
            rows = cmd_simulate(cfg, args.metric, args.scenario,
                                parse_tau_list(args.tau), args.samples,
                                args.seed, args.workers)
        elif args.command == "compare":
            rows = cmd_compare(cfg, parse_tau_list(args.tau), args.samples,
                               args.seed, args.workers)
        else:
            sizes = [float(s) for s in args.sizes.split(",") if s]
            rows = cmd_optimal_tau(cfg, args.scenario, sizes,
                                   args.grid_step, args.refine_tol)
        write_rows(rows, args.out)
        if args.out is not None:
            write_manifest(args.out, cfg, argv, seed, time.perf_counter() - t0)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, EstimationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

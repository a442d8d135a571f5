"""``bpre`` command line: scenario-driven experiments writing CSV/JSON results.

Every output carries the master seed and a digest of the effective
configuration.  Floats are written with 9 significant digits so reruns diff
cleanly; nothing that depends on timing or thread count is written.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import empirical, inference, oracle
from .config import ConfigError, ScenarioConfig, parse_config
from .rng import M64
from .simulator import ResourceLimitError, replicate_trajectory, run_replications, simulate_final

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3

COMMANDS = ("simulate", "moments", "wasserstein-rate", "be-profile", "ci-coverage", "tail-check", "oracle-check")

TAIL_GRID = np.round(np.arange(0, 121) * 0.05, 10)


def fmt(x) -> str:
    return f"{x:.9g}"


def _round(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else str(obj)
    if isinstance(obj, (np.floating,)):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


class Run:
    """Output sink for one command invocation."""

    def __init__(self, command: str, cfg: ScenarioConfig, threads: int | None, allow_large: bool):
        self.command = command
        self.cfg = cfg
        self.threads = threads
        self.allow_large = allow_large
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    @property
    def provenance(self) -> dict:
        return {"command": self.command, "master_seed": self.cfg.master_seed, "config_sha256": self.cfg.digest()}

    def write_csv(self, name: str, header: str, rows) -> Path:
        p = self.provenance
        lines = [f"# bpre {p['command']} master_seed={p['master_seed']} config_sha256={p['config_sha256']}", header]
        lines += [",".join(fmt(v) if isinstance(v, float) else str(v) for v in row) for row in rows]
        return self._write(name, "\n".join(lines) + "\n")

    def write_text_csv(self, name: str, body: str) -> Path:
        p = self.provenance
        head = f"# bpre {p['command']} master_seed={p['master_seed']} config_sha256={p['config_sha256']}\n"
        return self._write(name, head + body)

    def write_json(self, name: str, payload: dict) -> Path:
        doc = {"provenance": self.provenance, **payload}
        return self._write(name, json.dumps(_round(doc), indent=2, sort_keys=True) + "\n")

    def _write(self, name, text):
        path = self.out / name
        path.write_text(text)
        self.written.append(path)
        return path

    def sample(self, n):
        return run_replications(self.cfg.model, n, self.cfg.replicates, self.cfg.master_seed,
                                self.cfg.mode, self.threads, allow_large=self.allow_large)

    def final(self, n):
        return simulate_final(self.cfg.model, n, self.cfg.replicates, self.cfg.master_seed,
                              self.cfg.mode, self.threads, allow_large=self.allow_large)


def _require_sigma(cfg: ScenarioConfig):
    if not cfg.model.x_moments().sigma_sq > 0.0:
        raise ConfigError("environment", "theorem checks need sigma^2 > 0 (environment is deterministic)")


def _boot_seed(cfg, n):
    return [cfg.master_seed & M64, n]


def cmd_simulate(run: Run):
    cfg = run.cfg
    xm = cfg.model.x_moments(cfg.delta)
    sigma = math.sqrt(xm.sigma_sq)
    horizons = []
    for n in cfg.horizons:
        final = run.final(n)
        entry = {
            "n": n,
            "mean_log_z": float(np.mean(final.log_z)),
            "mean_log_w": float(np.mean(final.log_w)),
            "mean_w": float(np.mean(np.exp(final.log_w))),
            "approximate_fraction": float(np.mean(final.approximate_from >= 0)),
        }
        if sigma > 0.0:
            stat = (final.log_z - n * xm.mu) / (sigma * math.sqrt(n))
            entry["mean_statistic"] = float(np.mean(stat))
            entry["sd_statistic"] = float(np.std(stat, ddof=1)) if len(stat) > 1 else 0.0
        horizons.append(entry)
    top = cfg.horizons[-1]
    for i in range(min(cfg.dump_trajectories, cfg.replicates)):
        traj = replicate_trajectory(cfg.model, top, cfg.master_seed, i, cfg.mode)
        run.write_text_csv(f"trajectory_{i}.csv", traj.to_csv())
    run.write_json("simulate.json", {"mu": xm.mu, "sigma_sq": xm.sigma_sq, "horizons": horizons})


def cmd_moments(run: Run):
    cfg = run.cfg
    report = cfg.model.check_conditions(cfg.delta, cfg.moment_p, cfg.lambda0)
    xm = cfg.model.x_moments(cfg.delta)
    payload = {"conditions": report.to_dict(), "mu": xm.mu, "sigma_sq": xm.sigma_sq,
               "abs_central_moment_2_plus_delta": xm.abs_central_moment_2_plus_delta}
    run.write_json("moments.json", payload)


def cmd_wasserstein_rate(run: Run, distance_fn=None):
    """``distance_fn(n) -> (d, lo, hi)`` replaces the simulation (test hook)."""
    cfg = run.cfg
    if distance_fn is None:
        _require_sigma(cfg)
    rows = []
    for n in cfg.horizons:
        if distance_fn is not None:
            d, lo, hi = distance_fn(n)
        else:
            smp = run.sample(n)
            d = empirical.wasserstein_to_normal(smp)
            lo, hi = empirical.bootstrap_wasserstein(smp, cfg.bootstrap, _boot_seed(cfg, n))
        rows.append((n, float(d), float(lo), float(hi)))
    run.write_csv("rate.csv", "n,d_w,d_w_boot_lo,d_w_boot_hi", rows)
    payload = {"delta": cfg.delta, "expected_slope": -cfg.delta / 2.0}
    if len(rows) >= 3:
        fit = empirical.fit_rate([(n, d) for n, d, _, _ in rows])
        payload.update(slope=fit.slope, intercept=fit.intercept, residual=fit.residual_rms)
    else:
        payload.update(slope=None, intercept=None, residual=None, note="fit needs at least 3 horizons")
    run.write_json("fit.json", payload)


def cmd_be_profile(run: Run):
    cfg = run.cfg
    _require_sigma(cfg)
    entries = []
    base = None
    for n in cfg.horizons:
        prof = empirical.nonuniform_profile(run.sample(n), cfg.delta_prime)
        run.write_text_csv(f"profile_n{n}.csv", prof.to_csv())
        scaled = prof.sup_weighted * n ** (cfg.delta / 2.0)
        base = scaled if base is None else base
        entries.append({"n": n, "sup_weighted": prof.sup_weighted, "scaled_sup": scaled, "ratio_to_first": scaled / base})
    run.write_json("profile.json", {"delta": cfg.delta, "delta_prime": cfg.delta_prime, "horizons": entries})


def cmd_ci_coverage(run: Run):
    cfg = run.cfg
    _require_sigma(cfg)
    xm = cfg.model.x_moments()
    sigma = math.sqrt(xm.sigma_sq)
    rows, entries = [], []
    for n in cfg.horizons:
        log_zn = run.final(n).log_z
        for kappa in cfg.kappas_for(n):
            hits_mu, hits_zn = inference.coverage_counts(log_zn, n, xm.mu, sigma, kappa)
            cov = inference._coverage(hits_mu, cfg.replicates)
            rows.append((n, float(kappa), cov.coverage, cov.std_error))
            entries.append({"n": n, "kappa": kappa, "nominal": 1.0 - kappa, "hits_mu": hits_mu, "hits_zn": hits_zn,
                            "counters_identical": hits_mu == hits_zn, "coverage": cov.coverage,
                            "std_error": cov.std_error})
    run.write_csv("coverage.csv", "n,kappa,coverage,std_error", rows)
    payload = {"replicates": cfg.replicates, "rows": entries}
    sched = cfg.schedule()
    if sched is not None:
        payload["kappa_schedule"] = sched.to_dict()
        payload["schedule_valid"] = {"B1": inference.kappa_check(sched, "B1"), "B2": inference.kappa_check(sched, "B2")}
    run.write_json("coverage.json", payload)


def cmd_tail_check(run: Run):
    cfg = run.cfg
    _require_sigma(cfg)
    entries = []
    for n in cfg.horizons:
        smp = run.sample(n)
        fit = inference.fit_bernstein_c(smp, TAIL_GRID)
        rows = []
        for r in fit.rows:
            x = r["x"]
            b = inference.bernstein_bounds(x, n, fit.c, 2.0)
            rows.append((x, r["upper"].estimate, b.upper_tail, inference.theorem22_bound(x, n, fit.c, cfg.theorem22_C)))
        run.write_csv(f"tail_n{n}.csv", "x,empirical_upper,bernstein_upper,theorem22_bound", rows)
        entries.append({"n": n, "c_upper": fit.c_upper, "c_lower": fit.c_lower, "c": fit.c,
                        "informative_points": len(fit.informative_x)})
    cs = [e["c"] for e in entries]
    payload = {"prefactor": 2.0, "horizons": entries, "c_spread": c_spread(cs)}
    run.write_json("tail_fit.json", payload)


def c_spread(cs) -> float:
    """max(c)/min(c); identical values (including all zero) give 1."""
    hi, lo = max(cs), min(cs)
    if hi == lo:
        return 1.0
    return math.inf if lo == 0.0 else hi / lo


def cmd_oracle_check(run: Run):
    cfg = run.cfg
    _require_sigma(cfg)
    xm = cfg.model.x_moments()
    sigma = math.sqrt(xm.sigma_sq)
    horizons = [n for n in cfg.horizons if n <= 3] or [1, 2, 3]
    entries = []
    for n in horizons:
        dist = oracle.exact_distribution_logZ(cfg.model, n, cfg.z_cap)
        run.write_text_csv(f"exact_n{n}.csv", dist.to_csv())
        final = run.final(n)
        ks = oracle_ks(dist, final.log_z)
        smp = run.sample(n)
        d_emp = empirical.wasserstein_to_normal(smp)
        lo, hi = empirical.bootstrap_wasserstein(smp, cfg.bootstrap, _boot_seed(cfg, n))
        d_exact = oracle.exact_wasserstein(dist, xm.mu, sigma, n)
        entries.append({"n": n, "ks": ks, "truncation_mass": dist.truncation_mass, "d_w_exact": d_exact,
                        "d_w_empirical": d_emp, "d_w_boot_lo": lo, "d_w_boot_hi": hi,
                        "exact_in_bootstrap_interval": bool(lo <= d_exact <= hi)})
    run.write_json("oracle.json", {"z_cap": cfg.z_cap, "horizons": entries})


def oracle_ks(dist, log_z) -> float:
    """KS distance between the exact law of Z_n and simulated populations (n small, all exact)."""
    ks_exact = np.rint(np.exp(dist.values)).astype(np.int64)
    ks_sim = np.sort(np.rint(np.exp(log_z)).astype(np.int64))
    emp = np.searchsorted(ks_sim, ks_exact, side="right") / len(ks_sim)
    exact = np.cumsum(dist.probs)
    # below the smallest exact atom the exact CDF is 0
    below = np.searchsorted(ks_sim, ks_exact[0], side="left") / len(ks_sim)
    return float(max(np.max(np.abs(emp - exact)), below))


HANDLERS = {
    "simulate": cmd_simulate,
    "moments": cmd_moments,
    "wasserstein-rate": cmd_wasserstein_rate,
    "be-profile": cmd_be_profile,
    "ci-coverage": cmd_ci_coverage,
    "tail-check": cmd_tail_check,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpre", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="scenario file (YAML or JSON)")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    parser.add_argument("--out", default=None, help="override output_dir")
    parser.add_argument("--allow-large", action="store_true", help="lift the horizon/replicate caps")
    return parser


def run_command(command: str, cfg: ScenarioConfig, threads=None, allow_large=False, **hooks) -> Run:
    run = Run(command, cfg, threads, allow_large)
    HANDLERS[command](run, **hooks)
    return run


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
        cfg = parse_config(text).with_overrides(args.seed, args.out)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        run = run_command(args.command, cfg, args.threads, args.allow_large)
        if args.command == "moments":
            sys.stdout.write(run.written[-1].read_text())
    except (ResourceLimitError, oracle.OracleRefusal) as exc:
        print(f"bpre: refused: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, ValueError, OSError) as exc:
        print(f"bpre: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

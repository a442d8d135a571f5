"""Quenched trajectories and seed-deterministic replication campaigns.

The hot loop lives in the compiled ``_core`` extension when it is
importable; otherwise (or with ``BPRE_PURE_PYTHON=1``) the pure-Python
kernel in ``_kernel_py`` runs the same algorithm and yields identical bits.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernel_py
from .environment import EnvironmentModel
from .rng import M64, PURPOSE_ENVIRONMENT, PURPOSE_OFFSPRING, Stream, derive_key

try:
    if os.environ.get("BPRE_PURE_PYTHON"):
        raise ImportError("pure-Python kernel forced")
    from . import _core
except ImportError:
    _core = None

BACKEND = "compiled" if _core is not None else "python"

MAX_HORIZON = 4096
MAX_REPLICATES = 10**7

ANNEALED = "annealed"
QUENCHED = "quenched"


class ResourceLimitError(RuntimeError):
    """A request exceeds the horizon/replicate caps."""


@dataclass(frozen=True)
class Trajectory:
    n: int
    log_z: np.ndarray
    s: np.ndarray
    log_w: np.ndarray
    approximate_from: int | None = None

    def to_csv(self) -> str:
        lines = ["k,log_z,s,log_w"]
        for k in range(self.n + 1):
            lines.append(f"{k},{self.log_z[k]:.9g},{self.s[k]:.9g},{self.log_w[k]:.9g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FinalStates:
    """Generation-``n`` state of every replicate, in replicate order."""

    n: int
    log_z: np.ndarray
    s: np.ndarray
    approximate_from: np.ndarray

    @property
    def log_w(self) -> np.ndarray:
        return self.log_z - self.s


@dataclass(frozen=True)
class EmpiricalSample:
    """Sorted normalized statistics (log Z_n - n mu) / (sigma sqrt n)."""

    values: np.ndarray
    n: int
    mu: float
    sigma: float
    master_seed: int
    replicate_count: int

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if len(values) != self.replicate_count:
            raise ValueError("replicate_count does not match the number of values")

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_values(cls, values, n=1, mu=0.0, sigma=1.0, master_seed=0) -> "EmpiricalSample":
        values = np.asarray(values, dtype=float)
        return cls(values, n, mu, sigma, master_seed, len(values))


def _kernel_args(model: EnvironmentModel):
    codes, p1, p2, logm, relvar = [], [], [], [], []
    for law in model.laws:
        a, b = law.params()
        m = law.mean()
        codes.append(law.code)
        p1.append(a)
        p2.append(b)
        logm.append(math.log(m))
        relvar.append(law.variance() / (m * m))
    return codes, p1, p2, list(model.cumulative), logm, relvar


def _check_limits(n, replicates, allow_large):
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    if allow_large:
        return
    if n > MAX_HORIZON:
        raise ResourceLimitError(f"horizon {n} exceeds the cap {MAX_HORIZON}; pass allow_large to override")
    if replicates > MAX_REPLICATES:
        raise ResourceLimitError(
            f"{replicates} replicates exceed the cap {MAX_REPLICATES}; pass allow_large to override"
        )


def _chunks(total, parts):
    parts = max(1, min(parts, total))
    step, extra = divmod(total, parts)
    start = 0
    for i in range(parts):
        stop = start + step + (1 if i < extra else 0)
        yield start, stop
        start = stop


def _resolve_backend(backend):
    backend = backend or BACKEND
    if backend == "compiled" and _core is None:
        raise RuntimeError("compiled core is not available")
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def simulate_final(
    model: EnvironmentModel,
    n: int,
    replicates: int,
    master_seed: int,
    mode: str = ANNEALED,
    threads: int | None = None,
    backend: str | None = None,
    allow_large: bool = False,
    record_paths: bool = False,
):
    """Run ``replicates`` independent paths to generation ``n``.

    Replicate ``i`` draws offspring from the stream keyed by
    ``(master_seed, i)``.  Its environment stream is keyed by ``i`` too in
    annealed mode; in quenched mode every replicate shares the environment
    stream of index 0.  Returns :class:`FinalStates`, plus the
    ``(replicates, n + 1)`` path matrices when ``record_paths`` is set.
    """
    _check_limits(n, replicates, allow_large)
    if mode not in (ANNEALED, QUENCHED):
        raise ValueError(f"mode must be 'annealed' or 'quenched', got {mode!r}")
    backend = _resolve_backend(backend)
    seed = master_seed & M64
    quenched = mode == QUENCHED
    codes, p1, p2, cum, logm, relvar = _kernel_args(model)
    out_logz = np.zeros(replicates)
    out_s = np.zeros(replicates)
    out_approx = np.zeros(replicates, dtype=np.int64)
    paths = (np.zeros((replicates, n + 1)), np.zeros((replicates, n + 1))) if record_paths else (None, None)

    if backend == "compiled":
        arrays = (
            np.asarray(codes, dtype=np.int32),
            np.asarray(p1, dtype=float),
            np.asarray(p2, dtype=float),
            np.asarray(cum, dtype=float),
            np.asarray(logm, dtype=float),
            np.asarray(relvar, dtype=float),
        )

        def work(bounds):
            _core.simulate_block(bounds[0], bounds[1], n, seed, quenched, *arrays,
                                 out_logz, out_s, out_approx, *paths)
    else:

        def work(bounds):
            _kernel_py.simulate_block(bounds[0], bounds[1], n, seed, quenched, codes, p1, p2, cum,
                                      logm, relvar, out_logz, out_s, out_approx, *paths)

    threads = threads or os.cpu_count() or 1
    blocks = list(_chunks(replicates, threads))
    if len(blocks) == 1:
        work(blocks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            list(pool.map(work, blocks))

    final = FinalStates(n, out_logz, out_s, out_approx)
    if record_paths:
        return final, paths
    return final


def simulate_path(model: EnvironmentModel, n: int, rng: Stream, env_rng: Stream | None = None) -> Trajectory:
    """One quenched path Z_0 = 1, ..., Z_n.

    Environment draws come from ``env_rng`` when given, otherwise from
    ``rng``, which also drives the offspring.
    """
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    codes, p1, p2, cum, logm, relvar = _kernel_args(model)
    log_z = [0.0] * (n + 1)
    s = [0.0] * (n + 1)
    _, _, approx = _kernel_py.run_path(n, env_rng or rng, rng, codes, p1, p2, cum, logm, relvar, log_z, s)
    log_z = np.array(log_z)
    s = np.array(s)
    return Trajectory(n, log_z, s, log_z - s, None if approx < 0 else int(approx))


def replicate_trajectory(model: EnvironmentModel, n: int, master_seed: int, index: int,
                         mode: str = ANNEALED) -> Trajectory:
    """The trajectory that replicate ``index`` of a campaign follows."""
    seed = master_seed & M64
    off = Stream(derive_key(seed, index, PURPOSE_OFFSPRING))
    env = Stream(derive_key(seed, 0 if mode == QUENCHED else index, PURPOSE_ENVIRONMENT))
    return simulate_path(model, n, off, env)


def normalized_statistic(traj: Trajectory, mu: float, sigma: float) -> float:
    """(log Z_n - n mu) / (sigma sqrt n)."""
    return normalize(traj.log_z[traj.n], traj.n, mu, sigma)


def normalize(log_zn, n, mu, sigma):
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return (log_zn - n * mu) / (sigma * math.sqrt(n))


def run_replications(
    model: EnvironmentModel,
    n: int,
    replicates: int,
    master_seed: int,
    mode: str = ANNEALED,
    threads: int | None = None,
    backend: str | None = None,
    allow_large: bool = False,
) -> EmpiricalSample:
    xm = model.x_moments()
    if not xm.sigma_sq > 0.0:
        raise ValueError("run_replications needs sigma^2 > 0 (deterministic environment)")
    sigma = math.sqrt(xm.sigma_sq)
    final = simulate_final(model, n, replicates, master_seed, mode, threads, backend, allow_large)
    values = normalize(final.log_z, n, xm.mu, sigma)
    return EmpiricalSample(values, n, xm.mu, sigma, master_seed, replicates)

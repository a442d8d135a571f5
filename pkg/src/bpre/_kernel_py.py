"""Pure-Python trajectory kernel; fallback for the compiled ``_core``.

Must stay operation-for-operation identical to ``_core.pyx``.
"""

import math

from . import rng as _rng

LIMIT = 2**62
LIMIT_F = float(LIMIT)


def _increment(code, p1, p2, count, stream):
    if code == 0:
        return (p1 - 1.0) * float(_rng.binomial(stream, count, p2))
    if code == 1:
        return _rng.negative_binomial(stream, count, p1)
    return _rng.poisson(stream, float(count) * p1)


def run_path(n, env_stream, off_stream, codes, p1, p2, cum, logm, relvar, path_logz=None, path_s=None):
    """Advance Z_0 = 1 through ``n`` generations.

    Returns ``(log_z, s, approximate_from)``; ``approximate_from`` is -1 while
    every population was drawn by the exact samplers.  When ``path_logz`` and
    ``path_s`` are given they receive the whole path (length n + 1).
    """
    z = 1
    log_z = 0.0
    s = 0.0
    exact = True
    approx_from = -1
    natoms = len(cum)
    if path_logz is not None:
        path_logz[0] = 0.0
        path_s[0] = 0.0
    for k in range(n):
        u = env_stream.uniform()
        j = natoms - 1
        for i in range(natoms):
            if u <= cum[i]:
                j = i
                break
        s += logm[j]
        if exact:
            inc = _increment(codes[j], p1[j], p2[j], z, off_stream)
            if inc > LIMIT_F:
                log_z = math.log(float(z) + inc)
                exact = False
            else:
                z += int(inc)
                log_z = math.log(z)
                if z > LIMIT:
                    exact = False
        else:
            sd = math.sqrt(relvar[j] / _rng.exp_inf(log_z))
            log_z = log_z + logm[j] + sd * _rng.standard_normal(off_stream)
            if approx_from < 0:
                approx_from = k + 1
        if path_logz is not None:
            path_logz[k + 1] = log_z
            path_s[k + 1] = s
    return log_z, s, approx_from


def simulate_block(start, stop, n, master_seed, quenched, codes, p1, p2, cum, logm, relvar,
                   out_logz, out_s, out_approx, path_logz=None, path_s=None):
    """Fill ``out_*[i]`` for replicates ``start <= i < stop``."""
    for i in range(start, stop):
        off = _rng.Stream(_rng.derive_key(master_seed, i, _rng.PURPOSE_OFFSPRING))
        env = _rng.Stream(_rng.derive_key(master_seed, 0 if quenched else i, _rng.PURPOSE_ENVIRONMENT))
        row_z = path_logz[i] if path_logz is not None else None
        row_s = path_s[i] if path_s is not None else None
        lz, s, ap = run_path(n, env, off, codes, p1, p2, cum, logm, relvar, row_z, row_s)
        out_logz[i] = lz
        out_s[i] = s
        out_approx[i] = ap

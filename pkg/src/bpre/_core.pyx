# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trajectory kernel.

Line-for-line port of ``rng.py`` and ``_kernel_py.py``; any change there
must be mirrored here (``tests/test_backends.py`` compares them bitwise).
"""

from libc.math cimport log, log1p, exp, sqrt, floor, fabs
from libc.stdint cimport uint64_t, int64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0
cdef uint64_t LIMIT = 1ULL << 62
cdef double LIMIT_F = <double>(1ULL << 62)
cdef uint64_t BINOMIAL_DIRECT = 32
cdef double POISSON_PTRS = 10.0
cdef double HALF_LOG_2PI = 0.91893853320467274178

cdef double[16] LOG_FACTORIAL
LOG_FACTORIAL[:] = [
    0.0,
    0.0,
    0.69314718055994530942,
    1.79175946922805500081,
    3.17805383034794561964,
    4.78749174278204599425,
    6.57925121201010099506,
    8.52516136106541430017,
    10.60460290274525022842,
    12.80182748008146961121,
    15.10441257307551529523,
    17.50230784587388583929,
    19.98721449566188614952,
    22.55216385312342288557,
    25.19122118273868150009,
    27.89927138384089156609,
]

cdef struct Xoshiro:
    uint64_t s0
    uint64_t s1
    uint64_t s2
    uint64_t s3


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t derive_key(uint64_t seed, uint64_t index, uint64_t purpose) noexcept nogil:
    cdef uint64_t x = _mix(seed + GOLDEN)
    x = _mix((x ^ (index * GOLDEN)) + GOLDEN)
    return _mix((x ^ purpose) + GOLDEN)


cdef inline void seed_stream(Xoshiro* st, uint64_t key) noexcept nogil:
    cdef uint64_t state = key
    state += GOLDEN
    st.s0 = _mix(state)
    state += GOLDEN
    st.s1 = _mix(state)
    state += GOLDEN
    st.s2 = _mix(state)
    state += GOLDEN
    st.s3 = _mix(state)
    if st.s0 == 0 and st.s1 == 0 and st.s2 == 0 and st.s3 == 0:
        st.s0 = 1


cdef inline uint64_t _rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t next_u64(Xoshiro* st) noexcept nogil:
    cdef uint64_t result = _rotl(st.s1 * 5, 7) * 9
    cdef uint64_t t = st.s1 << 17
    st.s2 ^= st.s0
    st.s3 ^= st.s1
    st.s1 ^= st.s2
    st.s0 ^= st.s3
    st.s2 ^= t
    st.s3 = _rotl(st.s3, 45)
    return result


cdef inline double uniform(Xoshiro* st) noexcept nogil:
    return <double>((next_u64(st) >> 11) + 1) * TWO_M53


cdef inline double standard_normal(Xoshiro* st) noexcept nogil:
    cdef double u, v, s
    while True:
        u = 2.0 * uniform(st) - 1.0
        v = 2.0 * uniform(st) - 1.0
        s = u * u + v * v
        if 0.0 < s < 1.0:
            return u * sqrt(-2.0 * log(s) / s)


cdef inline double log1pmx(double w) noexcept nogil:
    cdef double term, total
    cdef int j
    if fabs(w) > 0.01:
        return log1p(w) - w
    term = w * w
    total = 0.0
    for j in range(2, 11):
        if j % 2 == 0:
            total -= term / j
        else:
            total += term / j
        term *= w
    return total


cdef double standard_gamma(Xoshiro* st, double shape) noexcept nogil:
    cdef double d = shape - 1.0 / 3.0
    cdef double c = 1.0 / sqrt(9.0 * d)
    cdef double x, t, w, u
    while True:
        x = standard_normal(st)
        t = c * x
        if t <= -1.0:
            continue
        w = t * (3.0 + t * (3.0 + t))
        u = uniform(st)
        if log(u) < 0.5 * x * x + d * log1pmx(w):
            return d * (1.0 + w)


cdef inline double _stirlerr(double k) noexcept nogil:
    cdef double nn = k * k
    if k > 500.0:
        return (1.0 / 12.0 - (1.0 / 360.0) / nn) / k
    if k > 80.0:
        return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0) / nn) / nn) / k
    if k > 35.0:
        return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0) / nn) / nn) / nn) / k
    return (
        1.0 / 12.0
        - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - (1.0 / 1188.0) / nn) / nn) / nn) / nn
    ) / k


cdef inline double _bd0(double x, double mean) noexcept nogil:
    cdef double v, s, ej, s1
    cdef long j
    if fabs(x - mean) < 0.1 * (x + mean):
        v = (x - mean) / (x + mean)
        s = (x - mean) * v
        ej = 2.0 * x * v
        v = v * v
        j = 1
        while True:
            ej *= v
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * log(x / mean) + mean - x


cdef inline double poisson_log_pmf(double k, double lam) noexcept nogil:
    if k < 16.0:
        return -lam + k * log(lam) - LOG_FACTORIAL[<int>k]
    return -HALF_LOG_2PI - 0.5 * log(k) - _stirlerr(k) - _bd0(k, lam)


cdef double poisson(Xoshiro* st, double lam) noexcept nogil:
    cdef double limit, k, prod, slam, b, a, inv_alpha, vr, u, v, us
    if lam <= 0.0:
        return 0.0
    if lam < POISSON_PTRS:
        limit = exp(-lam)
        k = 0.0
        prod = uniform(st)
        while prod > limit:
            k += 1.0
            prod *= uniform(st)
        return k
    slam = sqrt(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = uniform(st) - 0.5
        v = uniform(st)
        us = 0.5 - fabs(u)
        k = floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return k
        if k < 0.0 or (us < 0.013 and v > us):
            continue
        if log(v * inv_alpha / (a / (us * us) + b)) <= poisson_log_pmf(k, lam):
            return k


cdef uint64_t binomial(Xoshiro* st, uint64_t n, double q) noexcept nogil:
    cdef uint64_t k = 0
    cdef uint64_t a, b, i
    cdef double ga, gb, y
    if n == 0 or q <= 0.0:
        return 0
    if q >= 1.0:
        return n
    while n > BINOMIAL_DIRECT:
        a = 1 + n // 2
        b = n + 1 - a
        ga = standard_gamma(st, <double>a)
        gb = standard_gamma(st, <double>b)
        y = ga / (ga + gb)
        if y >= q:
            n = a - 1
            q = q / y
        else:
            k += a
            n = b - 1
            q = (q - y) / (1.0 - y)
    for i in range(n):
        if uniform(st) <= q:
            k += 1
    return k


cdef inline double negative_binomial(Xoshiro* st, uint64_t r, double s) noexcept nogil:
    cdef double lam = standard_gamma(st, <double>r) * ((1.0 - s) / s)
    return poisson(st, lam)


cdef inline double increment(int code, double p1, double p2, uint64_t count, Xoshiro* st) noexcept nogil:
    if code == 0:
        return (p1 - 1.0) * <double>binomial(st, count, p2)
    if code == 1:
        return negative_binomial(st, count, p1)
    return poisson(st, <double>count * p1)


cdef void run_path(int n, Xoshiro* env, Xoshiro* off,
                   const int[:] codes, const double[:] p1, const double[:] p2,
                   const double[:] cum, const double[:] logm, const double[:] relvar,
                   double* out_logz, double* out_s, int64_t* out_approx,
                   double* path_z, double* path_s) noexcept nogil:
    cdef uint64_t z = 1
    cdef double log_z = 0.0
    cdef double s = 0.0
    cdef bint exact = True
    cdef int64_t approx_from = -1
    cdef int natoms = cum.shape[0]
    cdef int k, i, j
    cdef double u, inc, sd
    if path_z != NULL:
        path_z[0] = 0.0
        path_s[0] = 0.0
    for k in range(n):
        u = uniform(env)
        j = natoms - 1
        for i in range(natoms):
            if u <= cum[i]:
                j = i
                break
        s += logm[j]
        if exact:
            inc = increment(codes[j], p1[j], p2[j], z, off)
            if inc > LIMIT_F:
                log_z = log(<double>z + inc)
                exact = False
            else:
                z += <uint64_t>inc
                log_z = log(<double>z)
                if z > LIMIT:
                    exact = False
        else:
            sd = sqrt(relvar[j] / exp(log_z))
            log_z = log_z + logm[j] + sd * standard_normal(off)
            if approx_from < 0:
                approx_from = k + 1
        if path_z != NULL:
            path_z[k + 1] = log_z
            path_s[k + 1] = s
    out_logz[0] = log_z
    out_s[0] = s
    out_approx[0] = approx_from


def simulate_block(Py_ssize_t start, Py_ssize_t stop, int n, uint64_t master_seed, bint quenched,
                   const int[:] codes, const double[:] p1, const double[:] p2,
                   const double[:] cum, const double[:] logm, const double[:] relvar,
                   double[:] out_logz, double[:] out_s, int64_t[:] out_approx,
                   double[:, ::1] path_logz=None, double[:, ::1] path_s=None):
    """Fill ``out_*[i]`` for replicates ``start <= i < stop``; releases the GIL."""
    cdef Xoshiro env, off
    cdef Py_ssize_t i
    cdef bint record = path_logz is not None
    cdef double* pz = NULL
    cdef double* ps = NULL
    with nogil:
        for i in range(start, stop):
            seed_stream(&off, derive_key(master_seed, <uint64_t>i, 1))
            if quenched:
                seed_stream(&env, derive_key(master_seed, 0, 2))
            else:
                seed_stream(&env, derive_key(master_seed, <uint64_t>i, 2))
            if record:
                pz = &path_logz[i, 0]
                ps = &path_s[i, 0]
            run_path(n, &env, &off, codes, p1, p2, cum, logm, relvar,
                     &out_logz[i], &out_s[i], &out_approx[i], pz, ps)


def stream_uniforms(uint64_t master_seed, uint64_t index, uint64_t purpose, Py_ssize_t count):
    """First ``count`` uniforms of a replicate stream (cross-backend check)."""
    cdef Xoshiro st
    seed_stream(&st, derive_key(master_seed, index, purpose))
    return [uniform(&st) for _ in range(count)]


def sample_increment(int code, double p1, double p2, uint64_t count, uint64_t key):
    """One aggregate increment from a stream seeded by ``key`` (cross-backend check)."""
    cdef Xoshiro st
    seed_stream(&st, key)
    return increment(code, p1, p2, count, &st)

"""Random streams and exact samplers (pure-Python reference).

Every replicate owns a xoshiro256** stream whose 256-bit state is expanded
by SplitMix64 from a 64-bit key.  Keys are hashed from
``(master_seed, replicate_index, purpose)`` so streams never depend on how
work is split across threads.

The samplers below are mirrored operation for operation in ``_core.pyx``;
both backends must consume the stream identically and produce identical
floats.  Only ``log``, ``log1p``, ``exp``, ``sqrt`` and ``floor`` from libm
are used so that results agree bit for bit.
"""

import math

M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
TWO_M53 = 2.0 ** -53

PURPOSE_OFFSPRING = 1
PURPOSE_ENVIRONMENT = 2

BINOMIAL_DIRECT = 32
POISSON_PTRS = 10.0

HALF_LOG_2PI = 0.91893853320467274178

# log(k!) for k = 0..15
_LOG_FACTORIAL = (
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
)


def _mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


def derive_key(master_seed, index, purpose):
    """64-bit stream key for ``(master_seed, index, purpose)``."""
    x = _mix((master_seed + GOLDEN) & M64)
    x = _mix(((x ^ ((index * GOLDEN) & M64)) + GOLDEN) & M64)
    return _mix(((x ^ purpose) + GOLDEN) & M64)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M64


class Stream:
    """xoshiro256** generator seeded from a 64-bit key."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, key):
        state = key & M64
        words = []
        for _ in range(4):
            state = (state + GOLDEN) & M64
            words.append(_mix(state))
        if not any(words):
            words[0] = 1
        self.s0, self.s1, self.s2, self.s3 = words

    @classmethod
    def for_replicate(cls, master_seed, index, purpose=PURPOSE_OFFSPRING):
        return cls(derive_key(master_seed, index, purpose))

    def next_u64(self):
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        result = (_rotl((s1 * 5) & M64, 7) * 9) & M64
        t = (s1 << 17) & M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def uniform(self):
        """Uniform on (0, 1]; never returns 0, so ``log`` is always finite."""
        return ((self.next_u64() >> 11) + 1) * TWO_M53


def exp_inf(x):
    """libm exp semantics: overflow gives inf instead of raising."""
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def standard_normal(rng):
    # Marsaglia polar method, second variate discarded
    while True:
        u = 2.0 * rng.uniform() - 1.0
        v = 2.0 * rng.uniform() - 1.0
        s = u * u + v * v
        if 0.0 < s < 1.0:
            return u * math.sqrt(-2.0 * math.log(s) / s)


def log1pmx(w):
    """log(1 + w) - w without cancellation for small |w|."""
    if abs(w) > 0.01:
        return math.log1p(w) - w
    w2 = w * w
    # -w^2/2 + w^3/3 - ... ; 9 terms reach 1e-18 relative at |w| = 0.01
    term = w2
    total = 0.0
    for j in range(2, 11):
        if j % 2 == 0:
            total -= term / j
        else:
            total += term / j
        term *= w
    return total


def standard_gamma(rng, shape):
    """Gamma(shape, 1) for shape >= 1 by Marsaglia-Tsang.

    The acceptance test is written as ``d * log1pmx(v - 1)`` because the
    textbook ``d * (1 - v + log v)`` loses all precision once the shape is
    ~1e12 and beyond.
    """
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = standard_normal(rng)
        t = c * x
        if t <= -1.0:
            continue
        w = t * (3.0 + t * (3.0 + t))
        u = rng.uniform()
        if math.log(u) < 0.5 * x * x + d * log1pmx(w):
            return d * (1.0 + w)


def _stirlerr(k):
    # log k! - ((k + 1/2) log k - k + log sqrt(2 pi)), k >= 16
    nn = k * k
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


def _bd0(x, mean):
    # x log(x/mean) + mean - x, stable when x is close to mean
    if abs(x - mean) < 0.1 * (x + mean):
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
    return x * math.log(x / mean) + mean - x


def poisson_log_pmf(k, lam):
    """log P(Poisson(lam) = k) for float ``k`` >= 0, accurate for huge lam."""
    if k < 16.0:
        return -lam + k * math.log(lam) - _LOG_FACTORIAL[int(k)]
    return -HALF_LOG_2PI - 0.5 * math.log(k) - _stirlerr(k) - _bd0(k, lam)


def poisson(rng, lam):
    """Poisson(lam) as an integer-valued float.

    Multiplication method below ``POISSON_PTRS``, Hormann's transformed
    rejection (PTRS) above.
    """
    if lam <= 0.0:
        return 0.0
    if lam < POISSON_PTRS:
        limit = math.exp(-lam)
        k = 0.0
        prod = rng.uniform()
        while prod > limit:
            k += 1.0
            prod *= rng.uniform()
        return k
    slam = math.sqrt(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rng.uniform() - 0.5
        v = rng.uniform()
        us = 0.5 - abs(u)
        k = float(math.floor((2.0 * a / us + b) * u + lam + 0.43))
        if us >= 0.07 and v <= vr:
            return k
        if k < 0.0 or (us < 0.013 and v > us):
            continue
        if math.log(v * inv_alpha / (a / (us * us) + b)) <= poisson_log_pmf(k, lam):
            return k


def binomial(rng, n, q):
    """Binomial(n, q) for integer ``n`` by recursive beta splitting.

    The a-th order statistic of n uniforms is Beta(a, n + 1 - a); conditioning
    on which side of ``q`` it falls halves the problem.  Bernoulli trials
    finish the last ``BINOMIAL_DIRECT`` or fewer.
    """
    if n <= 0 or q <= 0.0:
        return 0
    if q >= 1.0:
        return n
    k = 0
    while n > BINOMIAL_DIRECT:
        a = 1 + n // 2
        b = n + 1 - a
        ga = standard_gamma(rng, float(a))
        gb = standard_gamma(rng, float(b))
        y = ga / (ga + gb)
        if y >= q:
            n = a - 1
            q = q / y
        else:
            k += a
            n = b - 1
            q = (q - y) / (1.0 - y)
    for _ in range(n):
        if rng.uniform() <= q:
            k += 1
    return k


def negative_binomial(rng, r, s):
    """Failures before the ``r``-th success, success probability ``s``."""
    lam = standard_gamma(rng, float(r)) * ((1.0 - s) / s)
    return poisson(rng, lam)

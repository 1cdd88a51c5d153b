"""Hot numeric kernels: radix-2 FFT, FIR convolution, random-number stream.

Each kernel has a scalar-loop implementation (numba ``@njit`` when the numba
backend is active) and a vectorized numpy fallback. Both paths implement the
same arithmetic element-for-element, so results agree to rounding noise; the
integer RNG stream is identical bit-for-bit. The public functions dispatch on
:mod:`hybridblocks.backend`; the ``*_loop`` / ``*_numpy`` variants stay
importable for the benchmark in ``benchmarks/bench_kernels.py``.
"""

import math

import numpy as np

from . import backend

_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# radix-2 decimation-in-time FFT (in-place, length must be a power of two)
# ---------------------------------------------------------------------------

def _fft_core_loop(a):
    n = a.shape[0]
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            tmp = a[i]
            a[i] = a[j]
            a[j] = tmp
    m = 1
    while m < n:
        tw = np.empty(m, dtype=np.complex128)
        for d in range(m):
            ang = -math.pi * d / m
            tw[d] = complex(math.cos(ang), math.sin(ang))
        for k in range(0, n, 2 * m):
            for d in range(m):
                t = tw[d] * a[k + d + m]
                u = a[k + d]
                a[k + d] = u + t
                a[k + d + m] = u - t
        m *= 2


def _bit_reverse_indices(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft_core_numpy(a):
    """Vectorized twin of the loop kernel; same butterflies, same twiddles."""
    n = a.shape[0]
    a[:] = a[_bit_reverse_indices(n)]
    m = 1
    while m < n:
        tw = np.exp(-1j * np.pi * np.arange(m) / m)
        blocks = a.reshape(-1, 2 * m)
        t = blocks[:, m:] * tw
        u = blocks[:, :m].copy()
        blocks[:, :m] = u + t
        blocks[:, m:] = u - t
        m *= 2


# ---------------------------------------------------------------------------
# FIR direct-form convolution, 'valid' alignment
# ---------------------------------------------------------------------------

def _convolve_valid_loop(x, taps, out):
    nt = taps.shape[0]
    for i in range(out.shape[0]):
        acc = 0.0
        for j in range(nt):
            acc += taps[j] * x[i + nt - 1 - j]
        out[i] = acc


def convolve_valid_numpy(x, taps):
    return np.convolve(x, taps, mode="valid")


# ---------------------------------------------------------------------------
# xoshiro256** stream + polar Box-Muller normals
#
# State layout: state = uint64[4], cache = float64[2] where cache[0] != 0
# flags a spare normal stored in cache[1]. Uniform doubles take the top 53
# bits of each 64-bit word. The polar method consumes two uniforms per
# attempt (u then v) and emits both normals (u-scaled first).
# ---------------------------------------------------------------------------

def _rng_fill_loop(state, cache, out):
    n = out.shape[0]
    i = 0
    if cache[0] != 0.0 and n > 0:
        out[0] = cache[1]
        cache[0] = 0.0
        i = 1
    while i < n:
        r = state[1] * np.uint64(5)
        r = ((r << np.uint64(7)) | (r >> np.uint64(57))) * np.uint64(9)
        t = state[1] << np.uint64(17)
        state[2] ^= state[0]
        state[3] ^= state[1]
        state[1] ^= state[2]
        state[0] ^= state[3]
        state[2] ^= t
        state[3] = (state[3] << np.uint64(45)) | (state[3] >> np.uint64(19))
        u = 2.0 * ((r >> np.uint64(11)) * 2.0 ** -53) - 1.0

        r = state[1] * np.uint64(5)
        r = ((r << np.uint64(7)) | (r >> np.uint64(57))) * np.uint64(9)
        t = state[1] << np.uint64(17)
        state[2] ^= state[0]
        state[3] ^= state[1]
        state[1] ^= state[2]
        state[0] ^= state[3]
        state[2] ^= t
        state[3] = (state[3] << np.uint64(45)) | (state[3] >> np.uint64(19))
        v = 2.0 * ((r >> np.uint64(11)) * 2.0 ** -53) - 1.0

        s = u * u + v * v
        if s >= 1.0 or s == 0.0:
            continue
        f = math.sqrt(-2.0 * math.log(s) / s)
        out[i] = u * f
        i += 1
        if i < n:
            out[i] = v * f
            i += 1
        else:
            cache[0] = 1.0
            cache[1] = v * f


def _xoshiro_next_py(state):
    s1 = int(state[1])
    r = (s1 * 5) & _MASK64
    r = (((r << 7) | (r >> 57)) & _MASK64) * 9 & _MASK64
    t = (s1 << 17) & _MASK64
    s0, s2, s3 = int(state[0]), int(state[2]), int(state[3])
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return r


def rng_fill_python(state, cache, out):
    """Pure-Python twin of the loop kernel; bit-identical stream."""
    st = [int(x) for x in state]
    n = out.shape[0]
    i = 0
    if cache[0] != 0.0 and n > 0:
        out[0] = cache[1]
        cache[0] = 0.0
        i = 1
    while i < n:
        u = 2.0 * ((_xoshiro_next_py(st) >> 11) * 2.0 ** -53) - 1.0
        v = 2.0 * ((_xoshiro_next_py(st) >> 11) * 2.0 ** -53) - 1.0
        s = u * u + v * v
        if s >= 1.0 or s == 0.0:
            continue
        f = math.sqrt(-2.0 * math.log(s) / s)
        out[i] = u * f
        i += 1
        if i < n:
            out[i] = v * f
            i += 1
        else:
            cache[0] = 1.0
            cache[1] = v * f
    state[:] = np.array(st, dtype=np.uint64)


def _uniform_fill_loop(state, out):
    for i in range(out.shape[0]):
        r = state[1] * np.uint64(5)
        r = ((r << np.uint64(7)) | (r >> np.uint64(57))) * np.uint64(9)
        t = state[1] << np.uint64(17)
        state[2] ^= state[0]
        state[3] ^= state[1]
        state[1] ^= state[2]
        state[0] ^= state[3]
        state[2] ^= t
        state[3] = (state[3] << np.uint64(45)) | (state[3] >> np.uint64(19))
        out[i] = (r >> np.uint64(11)) * 2.0 ** -53


def uniform_fill_python(state, out):
    st = [int(x) for x in state]
    for i in range(out.shape[0]):
        out[i] = (_xoshiro_next_py(st) >> 11) * 2.0 ** -53
    state[:] = np.array(st, dtype=np.uint64)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if backend.using_numba:
    from numba import njit

    fft_core_loop = njit(cache=True)(_fft_core_loop)
    convolve_valid_loop = njit(cache=True)(_convolve_valid_loop)
    rng_fill_loop = njit(cache=True)(_rng_fill_loop)
    uniform_fill_loop = njit(cache=True)(_uniform_fill_loop)
else:
    fft_core_loop = _fft_core_loop
    convolve_valid_loop = _convolve_valid_loop
    rng_fill_loop = _rng_fill_loop
    uniform_fill_loop = _uniform_fill_loop


def fft_inplace(a):
    """Forward FFT of a complex128 array whose length is a power of two."""
    if backend.using_numba:
        fft_core_loop(a)
    else:
        fft_core_numpy(a)


def convolve_valid(x, taps):
    """'valid'-mode convolution of float64 arrays, len(x) >= len(taps)."""
    if backend.using_numba:
        out = np.empty(x.shape[0] - taps.shape[0] + 1)
        convolve_valid_loop(x, taps, out)
        return out
    return convolve_valid_numpy(x, taps)


def rng_fill(state, cache, out):
    if backend.using_numba:
        rng_fill_loop(state, cache, out)
    else:
        rng_fill_python(state, cache, out)


def uniform_fill(state, out):
    if backend.using_numba:
        uniform_fill_loop(state, out)
    else:
        uniform_fill_python(state, out)


def warmup():
    """Trigger JIT compilation of all kernels (no-op on the numpy backend)."""
    a = np.ones(4, dtype=np.complex128)
    fft_inplace(a)
    convolve_valid(np.ones(4), np.ones(3))
    st = np.array([1, 2, 3, 4], dtype=np.uint64)
    cache = np.zeros(2)
    rng_fill(st, cache, np.empty(2))
    uniform_fill(st, np.empty(2))

"""Pure-numpy radix-2 FFT kernel.

Fallback for the compiled ``frets._kernels`` extension. Both perform the same
butterflies in the same order with the same twiddle table, so they agree bit
for bit.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def twiddles(n):
    """cos/sin of 2*pi*k/n for k < n/2, read-only."""
    k = np.arange(n // 2)
    ang = 2.0 * np.pi * k / n
    wr, wi = np.cos(ang), np.sin(ang)
    wr.flags.writeable = False
    wi.flags.writeable = False
    return wr, wi


@lru_cache(maxsize=None)
def bit_reverse(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.flags.writeable = False
    return rev


def fft_pow2(re, im, inverse=False):
    """Unnormalized complex FFT along the middle axis of ``(outer, n, inner)`` arrays.

    ``n`` must be a power of two. ``inverse`` flips the twiddle sign (no 1/n
    scaling). Inputs are not modified.
    """
    outer, n, inner = re.shape
    perm = bit_reverse(n)
    re = np.take(np.asarray(re, dtype=np.float64), perm, axis=1)
    im = np.take(np.asarray(im, dtype=np.float64), perm, axis=1)
    tw_re, tw_im = twiddles(n)
    sign = 1.0 if inverse else -1.0
    size = 2
    while size <= n:
        half = size // 2
        step = n // size
        wr = tw_re[::step][:half, None]
        wi = sign * tw_im[::step][:half, None]
        r = re.reshape(outer, n // size, size, inner)
        i = im.reshape(outer, n // size, size, inner)
        ar, ai = r[:, :, :half].copy(), i[:, :, :half].copy()
        br, bi = r[:, :, half:], i[:, :, half:]
        tr = br * wr - bi * wi
        ti = br * wi + bi * wr
        r[:, :, half:] = ar - tr
        i[:, :, half:] = ai - ti
        r[:, :, :half] = ar + tr
        i[:, :, :half] = ai + ti
        size *= 2
    return re, im

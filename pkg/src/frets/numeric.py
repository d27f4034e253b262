"""Dense real/complex arithmetic and the real-input DFT pair.

Real tensors are plain ``float64`` numpy arrays. Complex quantities are held
split into real and imaginary arrays (:class:`ComplexTensor`), which is the
form the frequency-domain layers compute in.

Transform conventions: forward unnormalized, inverse scaled by ``1/n``, and
``n // 2 + 1`` retained bins (DC and, for even ``n``, Nyquist included).
Power-of-two lengths run through the radix-2 kernel; other lengths use a
cached direct DFT up to ``DIRECT_MAX`` and Bluestein's chirp-z algorithm
beyond it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from frets import _kernels_py
from frets.errors import DimensionError

try:
    from frets import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

DIRECT_MAX = 128

_backend = _compiled if _compiled is not None else _kernels_py


def available_backends():
    return ["cython", "python"] if _compiled is not None else ["python"]


def get_backend():
    return "cython" if _backend is _compiled else "python"


def set_backend(name):
    """Select the radix-2 kernel: ``"cython"`` or ``"python"``."""
    global _backend
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel frets._kernels is not built")
        _backend = _compiled
    elif name == "python":
        _backend = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")


@dataclass
class ComplexTensor:
    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        self.re = np.asarray(self.re, dtype=np.float64)
        self.im = np.asarray(self.im, dtype=np.float64)
        if self.re.shape != self.im.shape:
            raise DimensionError(
                f"real part shape {self.re.shape} != imaginary part shape {self.im.shape}"
            )

    @property
    def shape(self):
        return self.re.shape

    @classmethod
    def from_complex(cls, z):
        z = np.asarray(z, dtype=np.complex128)
        return cls(z.real.copy(), z.imag.copy())

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape))

    def to_complex(self):
        return self.re + 1j * self.im

    def conj(self):
        return ComplexTensor(self.re, -self.im)

    def __add__(self, other):
        return ComplexTensor(add(self.re, other.re), add(self.im, other.im))

    def __mul__(self, other):
        return complex_mul(self, other)


# -- dense real kernels -------------------------------------------------------

def _broadcast_shape(a, b):
    try:
        return np.broadcast_shapes(np.shape(a), np.shape(b))
    except ValueError:
        raise DimensionError(
            f"shapes {np.shape(a)} and {np.shape(b)} are not broadcast-compatible"
        ) from None


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 0 or b.ndim == 0:
        raise DimensionError("matmul operands must have at least one dimension")
    inner_a = a.shape[-1]
    inner_b = b.shape[0] if b.ndim == 1 else b.shape[-2]
    if inner_a != inner_b:
        raise DimensionError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b


def add(a, b):
    _broadcast_shape(a, b)
    return np.add(a, b, dtype=np.float64)


def scale(a, alpha):
    return np.multiply(a, float(alpha), dtype=np.float64)


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def transpose(a, axes=None):
    return np.transpose(a, axes)


def flatten(a, start=0):
    """Collapse axes ``start..`` into one."""
    a = np.asarray(a)
    return a.reshape(a.shape[:start] + (-1,))


def complex_mul(a, b):
    """Elementwise ``(ac - bd) + j(ad + bc)`` with numpy broadcasting."""
    _broadcast_shape(a.re, b.re)
    return ComplexTensor(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def complex_matmul(a, b):
    """Complex matrix product in split form, contracting ``a``'s last axis."""
    return ComplexTensor(
        matmul(a.re, b.re) - matmul(a.im, b.im),
        matmul(a.re, b.im) + matmul(a.im, b.re),
    )


# -- transforms ---------------------------------------------------------------
#
# Transforms work on an (outer, n, inner) view of the input, with the
# transformed axis in the middle, so no axis ever has to be moved.

def _is_pow2(n):
    return n > 0 and n & (n - 1) == 0


def _normalize_axis(ndim, axis):
    if not -ndim <= axis < ndim:
        raise DimensionError(f"axis {axis} out of range for a {ndim}-d tensor")
    return axis % ndim


def _as3d(x, axis):
    x = np.ascontiguousarray(x, dtype=np.float64)
    outer = int(np.prod(x.shape[:axis], dtype=np.int64))
    return x.reshape(outer, x.shape[axis], -1)


def _restore(a3, shape, axis):
    return a3.reshape(shape[:axis] + (a3.shape[1],) + shape[axis + 1:])


@lru_cache(maxsize=None)
def _dft_tables(n):
    # (t*k) mod n keeps the angles small so the tables stay accurate;
    # tables are (bins, n) for left-multiplication along the middle axis
    k = np.arange(n // 2 + 1)
    phase = np.outer(k, np.arange(n)) % n
    ang = 2.0 * np.pi * phase / n
    c, s = np.cos(ang), np.sin(ang)
    c.flags.writeable = False
    s.flags.writeable = False
    return c, s


@lru_cache(maxsize=None)
def _inverse_tables(n):
    # irfft as two left-multiplications: interior bins count twice, the 1/n
    # is folded in, and the DC/Nyquist imaginary rows are exactly zero
    c, s = _dft_tables(n)
    w = _bin_weights(n, 2.0) / n
    ci = np.ascontiguousarray((c * w).T)
    si = s * w
    si[0] = 0.0
    if n % 2 == 0:
        si[-1] = 0.0
    si = np.ascontiguousarray(si.T)
    ci.flags.writeable = False
    si.flags.writeable = False
    return ci, si


@lru_cache(maxsize=None)
def _transposed_tables(n):
    c, s = _dft_tables(n)
    ct, st = np.ascontiguousarray(c.T), np.ascontiguousarray(s.T)
    ct.flags.writeable = False
    st.flags.writeable = False
    return ct, st


def _left(mat, x3):
    """``mat @ x3[o]`` for every outer index, returned as (outer, rows, inner)."""
    if x3.shape[2] == 1:
        return (x3[:, :, 0] @ mat.T)[:, :, None]
    return np.matmul(mat, x3)


@lru_cache(maxsize=None)
def _bluestein_plan(n):
    m = 1
    while m < 2 * n - 1:
        m *= 2
    k = np.arange(n)
    ang = np.pi * ((k * k) % (2 * n)) / n
    wr, wi = np.cos(ang), -np.sin(ang)  # exp(-j*pi*k^2/n)
    br = np.zeros((1, m, 1))
    bi = np.zeros((1, m, 1))
    br[0, :n, 0], bi[0, :n, 0] = wr, -wi
    br[0, m - n + 1:, 0], bi[0, m - n + 1:, 0] = wr[1:][::-1], -wi[1:][::-1]
    fbr, fbi = _backend.fft_pow2(br, bi, False)
    return m, wr[:, None], wi[:, None], fbr[0], fbi[0]


def _bluestein(re, im, inverse):
    """Complex DFT of any length along the middle axis via a power-of-two convolution."""
    if inverse:
        # ifft(x) = conj(fft(conj(x)))
        r, i = _bluestein(re, -im, False)
        return r, -i
    outer, n, inner = re.shape
    m, wr, wi, fbr, fbi = _bluestein_plan(n)
    ar = np.zeros((outer, m, inner))
    ai = np.zeros((outer, m, inner))
    ar[:, :n] = re * wr - im * wi
    ai[:, :n] = re * wi + im * wr
    far, fai = _backend.fft_pow2(ar, ai, False)
    pr = far * fbr - fai * fbi
    pi = far * fbi + fai * fbr
    cr, ci = _backend.fft_pow2(pr, pi, True)
    cr = cr[:, :n] / m
    ci = ci[:, :n] / m
    return cr * wr - ci * wi, cr * wi + ci * wr


def _complex_fft3(re, im, inverse):
    if _is_pow2(re.shape[1]):
        return _backend.fft_pow2(re, im, inverse)
    return _bluestein(re, im, inverse)


def _pick_method(n, method):
    if method is None:
        if _is_pow2(n):
            return "radix2"
        return "direct" if n <= DIRECT_MAX else "bluestein"
    if method == "radix2" and not _is_pow2(n):
        raise DimensionError(f"radix-2 transform needs a power-of-two length, got {n}")
    if method not in ("radix2", "direct", "bluestein"):
        raise ValueError(f"unknown transform method {method!r}")
    return method


def _rfft3(x3, method):
    n = x3.shape[1]
    bins = n // 2 + 1
    method = _pick_method(n, method)
    if method == "direct":
        c, s = _dft_tables(n)
        return _left(c, x3), -_left(s, x3)
    zeros = np.zeros_like(x3)
    if method == "radix2":
        re, im = _backend.fft_pow2(x3, zeros, False)
    else:
        re, im = _bluestein(x3, zeros, False)
    return re[:, :bins], im[:, :bins]


def _bin_weights(n, interior):
    w = np.full(n // 2 + 1, float(interior))
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return w[:, None]


def _irfft3(xr, xi, n, method):
    bins = n // 2 + 1
    method = _pick_method(n, method)
    if method == "direct":
        ci, si = _inverse_tables(n)
        return _left(ci, xr) - _left(si, xi)
    xi = xi.copy()
    xi[:, 0] = 0.0
    if n % 2 == 0:
        xi[:, -1] = 0.0
    outer, _, inner = xr.shape
    fr = np.empty((outer, n, inner))
    fi = np.empty((outer, n, inner))
    fr[:, :bins], fi[:, :bins] = xr, xi
    mirror = n - np.arange(bins, n)
    fr[:, bins:] = xr[:, mirror]
    fi[:, bins:] = -xi[:, mirror]
    if method == "radix2":
        re, _ = _backend.fft_pow2(fr, fi, True)
    else:
        re, _ = _bluestein(fr, fi, True)
    return re / n


def rfft(x, axis=-1, method=None):
    """Retained ``n // 2 + 1`` DFT bins of real ``x`` along ``axis``.

    ``method`` forces ``"radix2"``, ``"direct"`` or ``"bluestein"``; by
    default it is chosen from the length.
    """
    x = np.asarray(x, dtype=np.float64)
    axis = _normalize_axis(x.ndim, axis)
    if x.shape[axis] < 1:
        raise DimensionError("cannot transform an empty axis")
    re, im = _rfft3(_as3d(x, axis), method)
    return ComplexTensor(_restore(re, x.shape, axis), _restore(im, x.shape, axis))


def irfft(X, n, axis=-1, method=None):
    """Inverse of :func:`rfft`; the imaginary parts of DC and Nyquist are ignored."""
    axis = _normalize_axis(X.re.ndim, axis)
    if n < 1 or X.shape[axis] != n // 2 + 1:
        raise DimensionError(
            f"{X.shape[axis]} bins along axis {axis} do not match output length {n}"
        )
    out = _irfft3(_as3d(X.re, axis), _as3d(X.im, axis), n, method)
    return _restore(out, X.shape, axis)


def fft(z, axis=-1, inverse=False):
    """Full complex DFT of a :class:`ComplexTensor` (unnormalized both ways)."""
    axis = _normalize_axis(z.re.ndim, axis)
    if z.shape[axis] < 1:
        raise DimensionError("cannot transform an empty axis")
    re, im = _complex_fft3(_as3d(z.re, axis), _as3d(z.im, axis), inverse)
    return ComplexTensor(_restore(re, z.shape, axis), _restore(im, z.shape, axis))


def rfft_adjoint(G, n, axis=-1, interior_scaling=True):
    """Pull a gradient on the retained bins of ``rfft`` back to its real input.

    Every interior bin stands in for itself and its dropped conjugate twin,
    hence the halving before the ``n``-scaled inverse transform.
    """
    axis = _normalize_axis(G.re.ndim, axis)
    gr, gi = _as3d(G.re, axis), _as3d(G.im, axis)
    if interior_scaling and _pick_method(n, None) == "direct":
        # transpose of the forward tables; the DC/Nyquist sine rows vanish
        ct, st = _transposed_tables(n)
        return _restore(_left(ct, gr) - _left(st, gi), G.shape, axis)
    if interior_scaling:
        w = _bin_weights(n, 0.5)
        gr, gi = gr * w, gi * w
    out = _irfft3(gr, gi, n, None) * n
    return _restore(out, G.shape, axis)


def irfft_adjoint(g, n, axis=-1, interior_scaling=True):
    """Pull a gradient on ``irfft``'s real output back to its retained bins."""
    g = np.asarray(g, dtype=np.float64)
    axis = _normalize_axis(g.ndim, axis)
    re, im = _rfft3(_as3d(g, axis), None)
    w = _bin_weights(n, 2.0 if interior_scaling else 1.0) / n
    re, im = re * w, im * w
    # irfft ignores these imaginary parts, so they receive no gradient
    im[:, 0] = 0.0
    if n % 2 == 0:
        im[:, -1] = 0.0
    return ComplexTensor(_restore(re, g.shape, axis), _restore(im, g.shape, axis))


def naive_dft(x, axis=-1):
    """Direct O(n^2) evaluation of all ``n`` DFT bins. Used as a test oracle."""
    x = np.asarray(x, dtype=np.float64)
    axis = _normalize_axis(x.ndim, axis)
    n = x.shape[axis]
    if n < 1:
        raise DimensionError("cannot transform an empty axis")
    t = np.arange(n)
    kernel = np.exp(-2j * np.pi * np.outer(t, t) / n)
    out = np.tensordot(np.moveaxis(x, axis, -1), kernel, axes=([-1], [0]))
    return ComplexTensor.from_complex(np.moveaxis(out, -1, axis))


def circular_conv(h, w):
    """``y[t] = sum_s h[s] * w[(t - s) mod n]`` along the last axis."""
    h = np.asarray(h, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if h.shape[-1:] != w.shape[-1:] or h.ndim == 0:
        raise DimensionError(f"circular_conv length mismatch: {h.shape} vs {w.shape}")
    n = h.shape[-1]
    t = np.arange(n)
    idx = (t[:, None] - t[None, :]) % n
    return np.einsum("...s,...ts->...t", h, w[..., idx])

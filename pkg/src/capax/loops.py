"""Truncated Fourier model of the H^{1/2} loop space of R^{2n} = C^n.

A loop x(t) = sum_{|k| <= K} e^{2 pi i k t} x_k with x_k in C^n is stored as a
(2K+1, n) complex array, row K+k holding x_k.  The real scalar product of two
points of R^{2n} written as complex vectors u, v is Re(sum_j u_j conj(v_j)).

Conventions fixed here and inherited everywhere downstream:
  * J acts on C^n as multiplication by i;
  * the positively traversed circle t -> e^{2 pi i t} v has H^{1/2}-norm
    squared 2 pi |v|^2 (so its unperturbed action is +pi |v|^2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, DimensionMismatchError, InputError

TWO_PI = 2.0 * np.pi


def real_dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """R^{2n} scalar product of complex-vector points, batched over leading axes."""
    return np.real(np.sum(u * np.conj(v), axis=-1))


@dataclass(frozen=True)
class FourierLoop:
    """A truncated loop: modes[K + k] = x_k for -K <= k <= K."""

    n: int
    K: int
    modes: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=complex)
        if m.shape != (2 * self.K + 1, self.n):
            raise InputError(f"modes shape {m.shape} != {(2 * self.K + 1, self.n)}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "modes", m)

    @classmethod
    def zero(cls, n: int, K: int) -> "FourierLoop":
        return cls(n, K, np.zeros((2 * K + 1, n), dtype=complex))

    @classmethod
    def constant(cls, v, K: int = 0) -> "FourierLoop":
        v = np.asarray(v, dtype=complex).ravel()
        m = np.zeros((2 * K + 1, v.size), dtype=complex)
        m[K] = v
        return cls(v.size, K, m)

    @classmethod
    def single_mode(cls, n: int, K: int, k: int, v) -> "FourierLoop":
        if abs(k) > K:
            raise InputError(f"mode {k} outside truncation [{-K}, {K}]")
        m = np.zeros((2 * K + 1, n), dtype=complex)
        m[K + k] = np.asarray(v, dtype=complex)
        return cls(n, K, m)

    def mode(self, k: int) -> np.ndarray:
        """x_k, reading modes outside the truncation as zero."""
        if abs(k) > self.K:
            return np.zeros(self.n, dtype=complex)
        return self.modes[self.K + k]

    def with_truncation(self, K: int) -> "FourierLoop":
        m = np.zeros((2 * K + 1, self.n), dtype=complex)
        lo = min(K, self.K)
        m[K - lo:K + lo + 1] = self.modes[self.K - lo:self.K + lo + 1]
        return FourierLoop(self.n, K, m)

    def __add__(self, other: "FourierLoop") -> "FourierLoop":
        if other.n != self.n:
            raise DimensionMismatchError(f"n mismatch: {self.n} vs {other.n}")
        K = max(self.K, other.K)
        return FourierLoop(
            self.n, K, self.with_truncation(K).modes + other.with_truncation(K).modes
        )

    def __sub__(self, other: "FourierLoop") -> "FourierLoop":
        return self + (-1.0) * other

    def __rmul__(self, c) -> "FourierLoop":
        return FourierLoop(self.n, self.K, c * self.modes)

    def to_json(self) -> str:
        """Byte-order-free text format: modes listed k = -K .. K, each mode a
        list of [re, im] pairs, one per complex coordinate."""
        modes = [[[z.real, z.imag] for z in row] for row in self.modes]
        return json.dumps({"n": self.n, "K": self.K, "modes": modes})

    @classmethod
    def from_json(cls, text: str) -> "FourierLoop":
        obj = json.loads(text)
        rows = [[complex(re, im) for re, im in row] for row in obj["modes"]]
        return cls(obj["n"], obj["K"], np.array(rows, dtype=complex))


@dataclass(frozen=True)
class SplitVector:
    """Spectral splitting of a loop: modes k >= 1, the k = 0 point, modes k <= -1."""

    plus: FourierLoop
    zero: np.ndarray
    minus: FourierLoop

    def recombine(self) -> FourierLoop:
        return self.plus + FourierLoop.constant(self.zero, self.plus.K) + self.minus


@dataclass(frozen=True)
class ZeroModeSplit:
    """Splitting R^{2n} = E0_+ (+) E0_- used to extend the +/-1 operator L.

    Bases are (2n, d) real matrices, columns spanning each half.  A point of
    R^{2n} is ordered (Re z_1 .. Re z_n, Im z_1 .. Im z_n).
    """

    plus_basis: np.ndarray
    minus_basis: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.plus_basis, dtype=float)
        q = np.asarray(self.minus_basis, dtype=float)
        if p.shape != q.shape or p.shape[0] != 2 * p.shape[1]:
            raise InputError("plus/minus bases must each span half of R^{2n}")
        if np.linalg.matrix_rank(np.hstack([p, q])) != p.shape[0]:
            raise InputError("zero-mode split bases do not complement each other")
        object.__setattr__(self, "plus_basis", p)
        object.__setattr__(self, "minus_basis", q)

    @classmethod
    def default(cls, n: int) -> "ZeroModeSplit":
        # minus half = the real-coordinate axes; makes the relative Morse index
        # agree with the Conley-Zehnder grading.
        eye = np.eye(2 * n)
        return cls(plus_basis=eye[:, n:], minus_basis=eye[:, :n])


def h12_inner(x: FourierLoop, y: FourierLoop) -> float:
    """<x, y> = x_0 . y_0 + 2 pi sum_{k != 0} |k| x_k . y_k."""
    if x.n != y.n:
        raise DimensionMismatchError(f"n mismatch: {x.n} vs {y.n}")
    K = min(x.K, y.K)
    xm = x.modes[x.K - K:x.K + K + 1]
    ym = y.modes[y.K - K:y.K + K + 1]
    k = np.arange(-K, K + 1)
    w = TWO_PI * np.abs(k)
    w[K] = 1.0
    return float(np.sum(w * real_dot(xm, ym)))


def h12_norm(x: FourierLoop) -> float:
    return float(np.sqrt(max(h12_inner(x, x), 0.0)))


def l2_inner(x: FourierLoop, y: FourierLoop) -> float:
    """int_0^1 x(t) . y(t) dt, evaluated exactly on modes."""
    if x.n != y.n:
        raise DimensionMismatchError(f"n mismatch: {x.n} vs {y.n}")
    K = min(x.K, y.K)
    xm = x.modes[x.K - K:x.K + K + 1]
    ym = y.modes[y.K - K:y.K + K + 1]
    return float(np.sum(real_dot(xm, ym)))


def split(x: FourierLoop) -> SplitVector:
    plus = np.zeros_like(x.modes)
    minus = np.zeros_like(x.modes)
    plus[x.K + 1:] = x.modes[x.K + 1:]
    minus[:x.K] = x.modes[:x.K]
    return SplitVector(
        plus=FourierLoop(x.n, x.K, plus),
        zero=np.array(x.modes[x.K]),
        minus=FourierLoop(x.n, x.K, minus),
    )


def jstar(y: FourierLoop) -> FourierLoop:
    """Adjoint of the inclusion H^{1/2} -> L^2 on a loop of L^2 modes.

    (j* y)_0 = y_0 and (j* y)_k = y_k / (2 pi |k|), so that
    h12_inner(jstar(y), x) equals the L^2 pairing of y with x.
    """
    k = np.arange(-y.K, y.K + 1, dtype=float)
    w = TWO_PI * np.abs(k)
    w[y.K] = 1.0
    return FourierLoop(y.n, y.K, y.modes / w[:, None])


def eval_grid(x: FourierLoop, m: int) -> np.ndarray:
    """Values x(t_j) at t_j = j/m, exact for trigonometric degree <= K."""
    if m < 2 * x.K + 1:
        raise AliasingError(f"grid size {m} < 2K+1 = {2 * x.K + 1}")
    spec = np.zeros((m, x.n), dtype=complex)
    for k in range(-x.K, x.K + 1):
        spec[k % m] += x.modes[x.K + k]
    return np.fft.ifft(spec, axis=0) * m


def from_grid(values: np.ndarray, K: int) -> FourierLoop:
    """Trigonometric interpolation of grid values back to modes |k| <= K."""
    values = np.asarray(values, dtype=complex)
    m, n = values.shape
    if m < 2 * K + 1:
        raise AliasingError(f"grid size {m} < 2K+1 = {2 * K + 1}")
    spec = np.fft.fft(values, axis=0) / m
    modes = np.zeros((2 * K + 1, n), dtype=complex)
    for k in range(-K, K + 1):
        modes[K + k] = spec[k % m]
    return FourierLoop(n, K, modes)


def complex_to_real(z: np.ndarray) -> np.ndarray:
    """(..., n) complex -> (..., 2n) real, ordered (Re z, Im z)."""
    return np.concatenate([z.real, z.imag], axis=-1)


def real_to_complex(r: np.ndarray) -> np.ndarray:
    n = r.shape[-1] // 2
    return r[..., :n] + 1j * r[..., n:]

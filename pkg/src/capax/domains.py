"""Ellipsoid domains, their Reeb spectra, and radial Hamiltonian constructors.

An ellipsoid E(a_1, ..., a_n) is {z in C^n : gauge(z) <= 1} with the gauge
Q(z) = pi * sum |z_j|^2 / a_j.  Its Reeb spectrum is the multiset
{m * a_i : m >= 1}.  Points of R^{2n} are ordered (Re z, Im z) throughout.

Hamiltonians here are radial in the gauge, H(z) = f(Q(z)), with three shapes:

  * pure quadratic     f(q) = s (q - 1)                  (comparison form)
  * quadratic model    f(q) = s max(q - 1, 0)            (Step-1 model H_B)
  * admissible profile four zones: small linear core, strictly convex
    increasing collar whose period map f' sweeps (c0, beta), then the linear
    band f' = beta extending to infinity (the quadratic tail written in the
    ellipsoid gauge, which is itself a quadratic form of z).

The collar is built so that the period map hits each spectrum value T < beta
exactly once, inside a narrow window where f'' equals a prescribed moderate
value; the steep risers between windows carry no orbits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSpectrumError, InputError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class EllipsoidSpec:
    """E(a_1, ..., a_n) with 0 < a_1 <= ... <= a_n."""

    a: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if len(a) == 0 or any(v <= 0 for v in a):
            raise InputError("ellipsoid parameters must be positive")
        if any(a[i] > a[i + 1] for i in range(len(a) - 1)):
            raise InputError("ellipsoid parameters must be sorted ascending")
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return len(self.a)

    def scaled(self, factor: float) -> "EllipsoidSpec":
        """E(factor * a); a symplectic scaling z -> r z has factor = r^2."""
        return EllipsoidSpec(tuple(factor * v for v in self.a))

    def contains(self, other: "EllipsoidSpec") -> bool:
        """Inclusion other <= self, decidable componentwise for ellipsoids."""
        if other.n != self.n:
            raise InputError("cannot compare ellipsoids of different dimension")
        return all(o <= s for o, s in zip(other.a, self.a))

    def gauge(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.pi * np.sum(np.abs(z) ** 2 / np.array(self.a), axis=-1)

    def gauge_grad(self, z: np.ndarray) -> np.ndarray:
        """Gradient of the gauge in complex form (d/dRe + i d/dIm)."""
        return TWO_PI * np.asarray(z, dtype=complex) / np.array(self.a)

    def gauge_hess(self) -> np.ndarray:
        """Constant real 2n x 2n Hessian of the gauge."""
        d = TWO_PI / np.array(self.a)
        return np.diag(np.concatenate([d, d]))

    def to_json(self) -> str:
        return json.dumps({"type": "ellipsoid", "a": list(self.a)})

    @classmethod
    def from_json(cls, text: str) -> "EllipsoidSpec":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed domain file: {exc}") from exc
        if not isinstance(obj, dict) or obj.get("type") != "ellipsoid":
            raise InputError("domain file must be {\"type\": \"ellipsoid\", \"a\": [...]}")
        return cls(tuple(obj["a"]))


@dataclass(frozen=True)
class ReebSpectrum:
    """Sorted multiset {m * a_i <= cutoff}, ties kept, smaller axis first."""

    entries: tuple  # of (value, multiplier, axis) with axis 1-based
    cutoff: float

    @property
    def values(self) -> np.ndarray:
        return np.array([e[0] for e in self.entries])

    def count_below(self, c: float) -> int:
        return int(np.searchsorted(self.values, c, side="right"))

    def gap_below(self, beta: float) -> float:
        """Minimum spacing between spectrum values below beta."""
        vals = [v for v, _, _ in self.entries if v < beta]
        if len(vals) < 2:
            return math.inf
        return min(b - a for a, b in zip(vals, vals[1:]))


def reeb_spectrum(dom: EllipsoidSpec, cutoff: float) -> ReebSpectrum:
    if cutoff <= 0:
        raise InputError("cutoff must be positive")
    entries = []
    for i, ai in enumerate(dom.a, start=1):
        m = 1
        while m * ai <= cutoff:
            entries.append((m * ai, m, i))
            m += 1
    entries.sort(key=lambda e: (e[0], e[2], e[1]))
    return ReebSpectrum(tuple(entries), float(cutoff))


def spectral_gap(dom: EllipsoidSpec, beta: float) -> float:
    return reeb_spectrum(dom, beta).gap_below(beta)


def check_nondegenerate_below(dom: EllipsoidSpec, beta: float,
                              margin: float = 1e-6) -> ReebSpectrum:
    """Demand that spectrum values below the slope are pairwise separated.

    Rational resonances (for example E(1, 1)) collide here; callers that need
    nondegenerate orbit families must go through this check.
    """
    spec = reeb_spectrum(dom, beta)
    scale = dom.a[0]
    vals = [e for e in spec.entries if e[0] < beta]
    for u, v in zip(vals, vals[1:]):
        if v[0] - u[0] < margin * scale:
            raise DegenerateSpectrumError(
                f"spectrum values {u[0]:.12g} (m={u[1]}, axis={u[2]}) and "
                f"{v[0]:.12g} (m={v[1]}, axis={v[2]}) collide within margin "
                f"{margin * scale:.3g}",
                pair=(u, v),
            )
    return spec


# ---------------------------------------------------------------------------
# Radial profiles


class _Segment:
    """One piece of the period map f' on [lo, hi]: linear or cubic Hermite."""

    def __init__(self, lo, hi, coeffs):
        # coeffs of f' in the local variable s = q - lo, highest degree last
        self.lo = float(lo)
        self.hi = float(hi)
        self.coeffs = np.asarray(coeffs, dtype=float)

    def fp(self, s):
        return np.polynomial.polynomial.polyval(s, self.coeffs)

    def fpp(self, s):
        der = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(s, der)

    def integral(self, s):
        anti = np.polynomial.polynomial.polyint(self.coeffs)
        return np.polynomial.polynomial.polyval(s, anti)

    def full_integral(self):
        return self.integral(self.hi - self.lo)


def _hermite_segment(lo, hi, v0, v1, m0, m1) -> _Segment:
    """Cubic on [lo, hi] with prescribed endpoint values/slopes of f'."""
    h = hi - lo
    c0 = v0
    c1 = m0
    c2 = (3 * (v1 - v0) / h - 2 * m0 - m1) / h
    c3 = (m0 + m1 - 2 * (v1 - v0) / h) / h ** 2
    return _Segment(lo, hi, [c0, c1, c2, c3])


@dataclass(frozen=True)
class OrbitWindow:
    """Collar window where the period map passes a spectrum value."""

    value: float       # spectrum value T = m * a_i
    multiplier: int
    axis: int          # 1-based
    level: float       # gauge level q with f'(q) = T
    curvature: float   # f'' at the level


@dataclass(frozen=True)
class HamiltonianSpec:
    """A radial Hamiltonian H(z) = f(Q(z)) over an ellipsoid.

    kind is one of "pureQuadratic", "quadraticModel", "admissibleProfile".
    For profiles, windows lists the orbit windows in increasing action order
    and collar_width is the total gauge width of the collar.
    """

    kind: str
    domain: EllipsoidSpec
    slope: float
    epsilon: float = 0.0
    core_slope: float = 0.0
    collar_width: float = 0.0
    windows: tuple = ()
    segments: tuple = field(default=(), repr=False)

    # -- radial profile f ---------------------------------------------------

    def _segment_index(self, q):
        los = np.array([s.lo for s in self.segments])
        return np.clip(np.searchsorted(los, q, side="right") - 1, 0,
                       len(self.segments) - 1)

    def f(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == "pureQuadratic":
            return self.slope * (q - 1.0)
        if self.kind == "quadraticModel":
            return self.slope * np.maximum(q - 1.0, 0.0)
        out = np.empty_like(q)
        flat = q.ravel()
        res = np.empty_like(flat)
        idx = self._segment_index(flat)
        base = self._segment_bases()
        for j, seg in enumerate(self.segments):
            sel = idx == j
            if not np.any(sel):
                continue
            s = np.clip(flat[sel], seg.lo, None) - seg.lo
            res[sel] = base[j] + seg.integral(s)
            # beyond the last breakpoint the final (linear band) segment
            # continues unchanged, so no special casing is needed
        out[...] = res.reshape(q.shape)
        # core below q = 1 is linear with the small core slope
        core = q < self.segments[0].lo
        out = np.where(core, self.core_slope * (q - 1.0), out)
        return out

    def fp(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == "pureQuadratic":
            return np.full_like(q, self.slope)
        if self.kind == "quadraticModel":
            return np.where(q > 1.0, self.slope, 0.0)
        flat = q.ravel()
        res = np.empty_like(flat)
        idx = self._segment_index(flat)
        for j, seg in enumerate(self.segments):
            sel = idx == j
            if not np.any(sel):
                continue
            s = np.clip(flat[sel], seg.lo, seg.hi) - seg.lo
            res[sel] = seg.fp(s)
        out = res.reshape(q.shape)
        core = q < self.segments[0].lo
        return np.where(core, self.core_slope, out)

    def fpp(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind in ("pureQuadratic", "quadraticModel"):
            return np.zeros_like(q)
        flat = q.ravel()
        res = np.empty_like(flat)
        idx = self._segment_index(flat)
        for j, seg in enumerate(self.segments):
            sel = idx == j
            if not np.any(sel):
                continue
            s = np.clip(flat[sel], seg.lo, seg.hi) - seg.lo
            res[sel] = seg.fpp(s)
        out = res.reshape(q.shape)
        core = q < self.segments[0].lo
        return np.where(core, 0.0, out)

    def _segment_bases(self):
        bases = [0.0]
        for seg in self.segments[:-1]:
            bases.append(bases[-1] + seg.full_integral())
        return np.array(bases)

    # -- pointwise evaluation on C^n ---------------------------------------

    def value(self, z, t=None):
        return self.f(self.domain.gauge(z))

    def grad(self, z, t=None):
        """Complex-form gradient (d/dRe + i d/dIm componentwise)."""
        z = np.asarray(z, dtype=complex)
        q = self.domain.gauge(z)
        return self.fp(q)[..., None] * self.domain.gauge_grad(z)

    def hess_real(self, z, t=None):
        """Real 2n x 2n Hessian at each point, batched over leading axes."""
        z = np.asarray(z, dtype=complex)
        q = self.domain.gauge(z)
        gq = self.domain.gauge_grad(z)
        g = np.concatenate([gq.real, gq.imag], axis=-1)
        base = self.domain.gauge_hess()
        fp = np.asarray(self.fp(q))[..., None, None]
        fpp = np.asarray(self.fpp(q))[..., None, None]
        return fp * base + fpp * (g[..., :, None] * g[..., None, :])

    @property
    def time_dependent(self) -> bool:
        return False


def quadratic_model(dom: EllipsoidSpec, slope_multiplier: float,
                    eps: float) -> HamiltonianSpec:
    """The Step-1 model: 0 <= H_B < eps on B, a (Q - 1) outside.

    Realized as a max(Q - 1, 0); the interior is identically zero, which
    meets the band [0, eps) exactly, and the exterior formula is exact.  The
    C^0 kink on the boundary is unavoidable given both constraints; all
    derivative-based consumers stay off the gauge-1 locus.
    """
    if slope_multiplier <= 0:
        raise InputError("slope multiplier must be positive")
    if eps <= 0:
        raise InputError("eps must be positive")
    return HamiltonianSpec(kind="quadraticModel", domain=dom,
                           slope=float(slope_multiplier), epsilon=float(eps))


def pure_quadratic(dom: EllipsoidSpec, slope_multiplier: float) -> HamiltonianSpec:
    """The comparison form s (Q - 1), quadratic on all of C^n."""
    if slope_multiplier <= 0:
        raise InputError("slope multiplier must be positive")
    return HamiltonianSpec(kind="pureQuadratic", domain=dom,
                           slope=float(slope_multiplier))


@dataclass(frozen=True)
class ProfileParams:
    """Tunable knobs for admissible profiles; None means scale-covariant
    defaults derived from the slope and the spectral gap."""

    eps: float = None
    delta: float = None          # total gauge width of the collar
    curvature: float = None      # f'' inside each orbit window
    resonance_margin: float = 1e-6


def admissible_profile(dom: EllipsoidSpec, beta: float,
                       params: ProfileParams = ProfileParams()) -> HamiltonianSpec:
    """Four-zone radial profile with limiting slope beta.

    The period map f' is strictly increasing on the collar, equal to each
    spectrum value T < beta exactly once (inside its window), and constant
    beta on the band, so the non-constant orbit families are exactly the
    spectrum values below the slope.
    """
    if beta <= 0:
        raise InputError("slope must be positive")
    scale = dom.a[0]
    spec = check_nondegenerate_below(dom, beta, margin=params.resonance_margin)
    vals = [e for e in spec.entries if e[0] < beta]
    # slope exclusion: distance to Spec and to 2 pi Z
    if vals:
        nearest = min(spec.entries, key=lambda e: abs(e[0] - beta))
        if abs(nearest[0] - beta) < 1e-12 * scale:
            raise DegenerateSpectrumError(
                f"slope {beta} lies on the spectrum; nearest value "
                f"{nearest[0]:.12g} (m={nearest[1]}, axis={nearest[2]})",
                pair=(nearest,))
    k2pi = round(beta / TWO_PI)
    if k2pi >= 1 and abs(beta - TWO_PI * k2pi) < 1e-12 * scale:
        raise InputError(f"slope {beta} lies on 2 pi Z")

    eps = params.eps if params.eps is not None else 1e-4 * scale
    gap = spec.gap_below(beta)
    tol_action = min(1.0 / beta, gap / 3.0 if math.isfinite(gap) else 1.0 / beta)
    delta = params.delta if params.delta is not None else tol_action / (4.0 * beta)
    c0 = min(0.9 * eps, 0.1 * (vals[0][0] if vals else beta))

    N = len(vals)
    spacing = delta / (N + 1)
    w = spacing / 8.0
    segments = []
    windows = []
    prev_q, prev_v, prev_m = 1.0, c0, 0.0
    for r, (T, mult, axis) in enumerate(vals, start=1):
        gamma = params.curvature if params.curvature is not None else max(T, scale)
        qc = 1.0 + spacing * r
        # riser up to the window, then the linear window itself
        segments.append(_hermite_segment(prev_q, qc - w, prev_v, T - gamma * w,
                                         prev_m, gamma))
        segments.append(_Segment(qc - w, qc + w, [T - gamma * w, gamma]))
        windows.append(OrbitWindow(value=T, multiplier=mult, axis=axis,
                                   level=qc, curvature=gamma))
        prev_q, prev_v, prev_m = qc + w, T + gamma * w, gamma
    # final riser to the band, then the band itself (extends past 1 + delta)
    segments.append(_hermite_segment(prev_q, 1.0 + delta, prev_v, beta, prev_m, 0.0))
    segments.append(_Segment(1.0 + delta, math.inf, [beta]))

    return HamiltonianSpec(kind="admissibleProfile", domain=dom, slope=float(beta),
                           epsilon=float(eps), core_slope=float(c0),
                           collar_width=float(delta), windows=tuple(windows),
                           segments=tuple(segments))


@dataclass(frozen=True)
class PerturbedHamiltonian:
    """Base radial Hamiltonian plus a small time-dependent perturbation.

    The perturbation is given by three callables value(t, z), grad(t, z),
    hess_real(t, z) with the same batching conventions as HamiltonianSpec.
    Used to break S^1 orbit families into isolated critical loops.
    """

    base: HamiltonianSpec
    pert_value: object
    pert_grad: object
    pert_hess: object

    @property
    def domain(self):
        return self.base.domain

    @property
    def slope(self):
        return self.base.slope

    @property
    def epsilon(self):
        return self.base.epsilon

    @property
    def kind(self):
        return self.base.kind

    @property
    def windows(self):
        return self.base.windows

    @property
    def time_dependent(self) -> bool:
        return True

    def value(self, z, t=None):
        return self.base.value(z) + self.pert_value(t, z)

    def grad(self, z, t=None):
        return self.base.grad(z) + self.pert_grad(t, z)

    def hess_real(self, z, t=None):
        return self.base.hess_real(z) + self.pert_hess(t, z)

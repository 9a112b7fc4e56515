"""Pole-residue rational maps ``R(z) = sum_j a_j / (z - b_j)`` vanishing at infinity.

The module provides evaluation, critical points (via simultaneous Aberth
iteration on the cleared numerator of ``R'``), the critical radius and the
n-goodness certificate built on it.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import InvalidMap, PoleProximity, RootFindFailure

DEFAULT_MARGIN = 1e-9
POLE_TOL = 1e-13
ROOT_RESIDUAL_TOL = 1e-10


def _as_complex_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=complex).ravel()
    if arr.size == 0:
        raise InvalidMap(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidMap(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RationalMap:
    """``R_{a,b}(z) = sum_j a_j / (z - b_j)`` with distinct poles and nonzero residues."""

    residues: np.ndarray
    poles: np.ndarray

    def __post_init__(self):
        a = _as_complex_vector(self.residues, "residues")
        b = _as_complex_vector(self.poles, "poles")
        if a.shape != b.shape:
            raise InvalidMap("residues and poles must have the same length")
        if np.any(a == 0):
            raise InvalidMap("every residue must be nonzero (degree exactly n)")
        if b.size > 1:
            d = np.abs(b[:, None] - b[None, :])
            d[np.diag_indices(b.size)] = np.inf
            if d.min() <= 0:
                raise InvalidMap("poles must be pairwise distinct")
        object.__setattr__(self, "residues", a)
        object.__setattr__(self, "poles", b)

    @property
    def n(self) -> int:
        return self.residues.size

    @property
    def length_scale(self) -> float:
        """Minimum pole separation, or ``|a_1|`` for a single pole."""
        b = self.poles
        if b.size == 1:
            return float(abs(self.residues[0]))
        d = np.abs(b[:, None] - b[None, :])
        d[np.diag_indices(b.size)] = np.inf
        return float(d.min())

    def __call__(self, z):
        return evaluate(self, z)

    def deriv(self, z, order: int = 1):
        """``R^{(order)}(z)`` for order 1 or 2, no pole-proximity check."""
        z = np.asarray(z, dtype=complex)
        diff = z[..., None] - self.poles
        if order == 1:
            return -(self.residues / diff**2).sum(-1)
        if order == 2:
            return 2 * (self.residues / diff**3).sum(-1)
        raise ValueError("order must be 1 or 2")

    def raw(self, z):
        """Evaluate without pole-proximity checks (used by grid oracles and Newton)."""
        z = np.asarray(z, dtype=complex)
        return (self.residues / (z[..., None] - self.poles)).sum(-1)

    def to_json(self) -> dict:
        return {
            "residues": [[float(c.real), float(c.imag)] for c in self.residues],
            "poles": [[float(c.real), float(c.imag)] for c in self.poles],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RationalMap":
        try:
            a = [complex(float(re), float(im)) for re, im in data["residues"]]
            b = [complex(float(re), float(im)) for re, im in data["poles"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidMap(f"malformed rational map JSON: {exc}") from exc
        return cls(a, b)


def _is_infinite(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.isinf(z.real) | np.isinf(z.imag)


def evaluate(R: RationalMap, z):
    """Sum of partial fractions at ``z``; ``0`` at infinity.

    Raises
    ------
    PoleProximity
        If some ``z`` lies within ``1e-13 * length_scale`` of a pole.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    inf = _is_infinite(z)
    zf = np.where(inf, 0, z)
    dist = np.abs(zf[:, None] - R.poles).min(axis=1)
    if np.any((dist < POLE_TOL * R.length_scale) & ~inf):
        raise PoleProximity("evaluation point coincides with a pole")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = R.raw(zf)
    out = np.where(inf, 0, out)
    return complex(out[0]) if scalar else out


def derivative_at_infinity(R: RationalMap) -> complex:
    """``lim z R(z) = sum_j a_j``."""
    return complex(R.residues.sum())


def derivative_numerator(residues, poles) -> np.ndarray:
    """Coefficients (low to high) of ``-sum_j a_j prod_{k != j} (z - b_k)^2``.

    Its zeros are the finite critical points of ``R_{a,b}``.
    """
    a = np.asarray(residues, dtype=complex)
    b = np.asarray(poles, dtype=complex)
    num = np.zeros(max(2 * a.size - 1, 1), dtype=complex)
    for j in range(a.size):
        term = np.array([1.0 + 0j])
        for k in range(b.size):
            if k != j:
                term = P.polymul(term, [b[k] ** 2, -2 * b[k], 1.0])
        num[: term.size] -= a[j] * term
    return num


def aberth_roots(coeffs, *, center: complex = 0j, max_iters: int = 500) -> np.ndarray:
    """All roots of the polynomial with low-to-high ``coeffs`` by Aberth-Ehrlich iteration.

    The iteration starts on a circle about ``center`` large enough to enclose every
    root (Fujiwara bound of the shifted polynomial).
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    deg = c.size - 1
    if deg < 1:
        return np.empty(0, dtype=complex)
    shifted = _taylor_shift(c, center)
    monic = shifted / shifted[-1]
    hi = monic[::-1]  # high-to-low
    ratios = [abs(hi[k]) ** (1.0 / k) for k in range(1, deg + 1)]
    ratios[-1] = (abs(hi[deg]) / 2) ** (1.0 / deg)
    radius = 2 * max(ratios) if max(ratios) > 0 else 1.0
    z = radius * np.exp(1j * (2 * np.pi * np.arange(deg) / deg + 0.4))
    dhi = np.polyder(hi)
    scale = max(radius, 1e-300)
    for _ in range(max_iters):
        small = True
        for i in range(deg):
            pv = np.polyval(hi, z[i])
            if pv == 0:
                continue
            ratio = pv / np.polyval(dhi, z[i])
            others = z[i] - np.delete(z, i)
            corr = ratio / (1 - ratio * np.sum(1.0 / others))
            z[i] -= corr
            if abs(corr) > 4 * np.finfo(float).eps * max(abs(z[i]), scale):
                small = False
        if small:
            break
    else:
        raise RootFindFailure(f"Aberth iteration did not converge in {max_iters} iterations")
    return z + center


def _taylor_shift(c: np.ndarray, s: complex) -> np.ndarray:
    """Coefficients of ``p(w + s)`` given those of ``p(z)`` (low to high)."""
    out = np.array(c, dtype=complex)
    deg = out.size - 1
    for i in range(deg):
        for k in range(deg - 1, i - 1, -1):
            out[k] += s * out[k + 1]
    return out


def critical_points(R: RationalMap) -> np.ndarray:
    """Finite critical points of ``R`` counted with multiplicity.

    There are ``2n - 2`` of them unless ``sum_j a_j`` vanishes, in which case
    the leading coefficient of the numerator drops and the missing critical
    points sit at infinity (critical value 0).
    """
    if R.n == 1:
        return np.empty(0, dtype=complex)
    center = R.poles.mean()
    b = R.poles - center
    num = derivative_numerator(R.residues, b)
    mag = np.abs(num).max()
    while num.size > 1 and abs(num[-1]) <= 1e-14 * mag:
        num = num[:-1]
    w = aberth_roots(num)
    w = _polish(R.residues, b, w)
    hi = num[::-1]
    for root in w:
        resid = abs(np.polyval(hi, root))
        bound = np.polyval(np.abs(hi), abs(root))
        if resid > ROOT_RESIDUAL_TOL * bound:
            raise RootFindFailure(f"critical point residual {resid:.3e} exceeds tolerance")
    return w + center


def _polish(a, b, w, steps: int = 3):
    """Newton on the rational form of ``R'``; a step is kept only if it helps."""
    w = np.array(w, dtype=complex)
    for _ in range(steps):
        diff = w[:, None] - b
        d1 = -(a / diff**2).sum(-1)
        d2 = 2 * (a / diff**3).sum(-1)
        ok = d2 != 0
        trial = np.where(ok, w - np.where(ok, d1 / np.where(ok, d2, 1), 0), w)
        t1 = np.abs(-(a / (trial[:, None] - b) ** 2).sum(-1))
        better = t1 < np.abs(d1)
        w = np.where(better, trial, w)
    return w


def critical_radius(R: RationalMap) -> float:
    """Largest modulus of a critical value; 0 for ``n = 1``."""
    cp = critical_points(R)
    if cp.size == 0:
        return 0.0
    return float(np.abs(R.raw(cp)).max())


class Verdict(str, enum.Enum):
    GOOD = "Good"
    NOT_GOOD = "NotGood"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True, eq=False)
class GoodnessCertificate:
    critical_points: np.ndarray
    critical_values: np.ndarray
    critical_radius: float
    margin: float
    verdict: Verdict

    @property
    def good(self) -> bool:
        return self.verdict is Verdict.GOOD

    def to_json(self) -> dict:
        return {
            "critical_points": [[float(z.real), float(z.imag)] for z in self.critical_points],
            "critical_values": [[float(z.real), float(z.imag)] for z in self.critical_values],
            "critical_radius": float(self.critical_radius),
            "margin": float(self.margin),
            "verdict": self.verdict.value,
        }


def is_n_good(R: RationalMap, margin_threshold: float = DEFAULT_MARGIN) -> GoodnessCertificate:
    """Certify n-goodness: every critical value strictly inside the unit disk.

    Maps whose critical radius lies within ``margin_threshold`` of 1 are
    reported as indeterminate.
    """
    cp = critical_points(R)
    cv = R.raw(cp) if cp.size else np.empty(0, dtype=complex)
    rho = float(np.abs(cv).max()) if cv.size else 0.0
    margin = 1.0 - rho
    if margin > margin_threshold:
        verdict = Verdict.GOOD
    elif margin < -margin_threshold:
        verdict = Verdict.NOT_GOOD
    else:
        verdict = Verdict.INDETERMINATE
    return GoodnessCertificate(cp, cv, rho, margin, verdict)


def normalize(R: RationalMap) -> tuple[RationalMap, complex]:
    """Precompose with ``z -> z + shift`` so the poles sum to zero."""
    shift = complex(R.poles.mean())
    return RationalMap(R.residues, R.poles - shift), shift


def permute(R: RationalMap, perm: Sequence[int]) -> RationalMap:
    """Relabel: entry ``i`` of the result is entry ``perm[i]`` of ``R`` (0-based)."""
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(R.n)):
        raise ValueError("perm must be a permutation of range(n)")
    return RationalMap(R.residues[perm], R.poles[perm])


def scale_residues(R: RationalMap, lam: complex) -> RationalMap:
    return RationalMap(lam * R.residues, R.poles)


def three_pole_example() -> RationalMap:
    """``0.4/z + 0.4/(z-(1+i)) + 0.4/(z-6)``: 3-good, positive residues, not Ahlfors."""
    return RationalMap([0.4, 0.4, 0.4], [0, 1 + 1j, 6])

"""Boundary curves of ``X = R^{-1}(D)`` for n-good maps, winding numbers and a
brute-force connectivity oracle.

A curve around pole ``b_j`` is stored as samples ``z_m`` with
``R(z_m) = exp(-2*pi*i*m/M)``: the argument of ``R`` decreases uniformly, which
makes the curve run counterclockwise around ``b_j`` (winding +1).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import NotGood, OnCurve, TraceDivergence
from .ratmap import RationalMap, is_n_good

DEFAULT_SAMPLES = 256
LEVEL_RESIDUAL_TOL = 1e-11
MARKED_RESIDUAL_TOL = 1e-12
CLOSURE_TOL = 1e-9
MAX_HALVINGS = 8


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Samples of the boundary component ``F_j`` enclosing pole ``b_j``.

    ``pole_index`` is 0-based. ``samples[m]`` satisfies ``R(samples[m]) = exp(i*angles[m])``.
    """

    pole_index: int
    pole: complex
    samples: np.ndarray
    marked_point: complex

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex).ravel()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def M(self) -> int:
        return self.samples.size

    @property
    def angles(self) -> np.ndarray:
        return -2 * np.pi * np.arange(self.M) / self.M

    @property
    def diameter(self) -> float:
        s = self.samples
        return float(np.abs(s[:, None] - s[None, :]).max())

    def resample(self, M: int) -> np.ndarray:
        """Trigonometric interpolation of the samples onto ``M`` uniform parameter values."""
        return fourier_resample(self.samples, M)


def fourier_resample(samples: np.ndarray, M: int) -> np.ndarray:
    """Resample a periodic, uniformly parametrised sequence to ``M`` points via the FFT."""
    samples = np.asarray(samples, dtype=complex)
    L = samples.size
    if M == L:
        return samples.copy()
    C = np.fft.fft(samples)
    freq = np.rint(np.fft.fftfreq(L) * L).astype(int)
    out = np.zeros(M, dtype=complex)
    lim = min(L, M) / 2
    for f, c in zip(freq, C):
        if abs(f) < lim:
            out[f % M] += c
        elif abs(f) == lim:
            # Nyquist term of the shorter grid: split between +f and -f
            out[f % M] += c / 2
            out[-f % M] += c / 2
    return np.fft.ifft(out) * (M / L)


def _newton(R: RationalMap, z: complex, w: complex, scale: float, max_iter: int = 40):
    for _ in range(max_iter):
        d = R.deriv(z)
        if d == 0 or not np.isfinite(d):
            return z, False
        step = (R.raw(z) - w) / d
        z = z - step
        if not np.isfinite(z):
            return z, False
        if abs(step) <= 4e-16 * (abs(z) + scale):
            return z, True
    return z, abs(R.raw(z) - w) <= 1e-13 * abs(w)


def _continue(R: RationalMap, z: complex, w0: complex, w1: complex, scale: float, depth=0):
    """Follow the branch ``R(z) = w`` from ``(z, w0)`` to ``w1``; halves the step on trouble."""
    pred = z + (w1 - w0) / R.deriv(z)
    z1, ok = _newton(R, pred, w1, scale)
    if ok and abs(z1 - pred) <= 0.5 * abs(pred - z) + 1e-14 * scale:
        return z1
    if depth >= MAX_HALVINGS:
        raise TraceDivergence("continuation step failed after repeated halving")
    # midpoint along the circle or ray joining w0 and w1
    wm = _midpoint(w0, w1)
    zm = _continue(R, z, w0, wm, scale, depth + 1)
    return _continue(R, zm, wm, w1, scale, depth + 1)


def _midpoint(w0: complex, w1: complex) -> complex:
    r = np.sqrt(abs(w0) * abs(w1))
    ang = np.angle(w0) + 0.5 * np.angle(w1 / w0)
    return r * np.exp(1j * ang)


def trace_boundary(R: RationalMap, j: int, M: int = DEFAULT_SAMPLES, *, check: bool = True) -> BoundaryCurve:
    """Trace the boundary curve of ``R^{-1}(D)`` around pole ``j`` (0-based).

    The branch of ``R^{-1}`` near ``b_j`` is seeded from the one-term model
    ``b_j + a_j / w`` at a large ``w`` and carried radially to ``|w| = 1``
    (no critical values lie outside the disk), then continued in angle.
    """
    if check and not is_n_good(R).good:
        raise NotGood("trace_boundary requires an n-good map")
    if M < 8 * R.n:
        raise ValueError(f"M must be at least 8n = {8 * R.n}")
    a, b = R.residues[j], R.poles[j]
    scale = R.length_scale + abs(b)
    spread = float(np.abs(R.residues).sum()) / max(R.length_scale, 1e-300)
    s0 = 1e6 * max(1.0, spread)
    w = complex(s0)
    z, ok = _newton(R, b + a / s0, w, scale)
    if not ok:
        raise TraceDivergence("radial seed failed to converge")
    for s in np.geomspace(s0, 1.0, int(np.ceil(np.log2(s0))) + 1)[1:]:
        z = _continue(R, z, w, complex(s), scale)
        w = complex(s)
    start = z
    samples = np.empty(M, dtype=complex)
    samples[0] = start
    for m in range(1, M + 1):
        w1 = np.exp(-2j * np.pi * m / M)
        z = _continue(R, z, w, w1, scale)
        w = w1
        if m < M:
            samples[m] = z
    if abs(z - start) > CLOSURE_TOL * (1 + abs(start)):
        raise TraceDivergence("continuation did not close up; margin may be too small")
    # rounding in z alone perturbs R by about eps |R'(z)| |z|
    slack = 8 * np.finfo(float).eps * np.abs(R.deriv(samples)) * np.abs(samples)
    excess = np.abs(np.abs(R.raw(samples)) - 1) - slack
    if excess.max() > LEVEL_RESIDUAL_TOL:
        raise TraceDivergence(f"level residual exceeds tolerance by {excess.max():.2e}")
    curve = BoundaryCurve(j, complex(b), samples, complex(start))
    return BoundaryCurve(j, complex(b), samples, marked_point(curve, R))


def trace_all(R: RationalMap, M: int = DEFAULT_SAMPLES, *, check: bool = True) -> list[BoundaryCurve]:
    if check and not is_n_good(R).good:
        raise NotGood("trace_all requires an n-good map")
    return [trace_boundary(R, j, M, check=False) for j in range(R.n)]


def marked_point(curve: BoundaryCurve, R: RationalMap) -> complex:
    """The point of the curve where ``R = 1``, refined by Newton from the ``theta = 0`` sample."""
    scale = R.length_scale + abs(curve.pole)
    z, ok = _newton(R, curve.samples[0], 1.0 + 0j, scale)
    slack = 8 * np.finfo(float).eps * abs(complex(R.deriv(z))) * abs(z)
    if not ok or abs(R.raw(z) - 1) > MARKED_RESIDUAL_TOL + slack:
        raise TraceDivergence("marked point Newton refinement failed")
    return complex(z)


def _segment_distance(samples: np.ndarray, z: np.ndarray) -> np.ndarray:
    p0 = samples
    p1 = np.roll(samples, -1)
    d = p1 - p0
    L2 = np.abs(d) ** 2
    L2 = np.where(L2 == 0, 1, L2)
    t = ((z[:, None] - p0) * np.conj(d)).real / L2
    t = np.clip(t, 0, 1)
    return np.abs(z[:, None] - (p0 + t * d)).min(axis=1)


def winding_number(samples, z, tol: float | None = None):
    """Winding number of the closed polyline through ``samples`` around ``z``.

    Raises
    ------
    OnCurve
        If ``z`` is within ``tol`` (default ``1e-12`` times the curve extent)
        of the polyline or the rounding residual is not below 0.1.
    """
    samples = np.asarray(samples, dtype=complex).ravel()
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if tol is None:
        tol = 1e-12 * float(np.ptp(samples.real) + np.ptp(samples.imag))
    if np.any(_segment_distance(samples, z) <= tol):
        raise OnCurve("point lies on the curve")
    rel = samples[None, :] - z[:, None]
    incr = np.angle(np.roll(rel, -1, axis=1) / rel)
    turns = incr.sum(axis=1) / (2 * np.pi)
    k = np.rint(turns)
    if np.any(np.abs(turns - k) >= 0.1):
        raise OnCurve("winding number rounding residual too large")
    k = k.astype(int)
    return int(k[0]) if scalar else k


def default_window(R: RationalMap) -> tuple[float, float, float, float]:
    """Bounding box of the poles inflated by ``2 * sum|a_j| + 1``; ``|R| < 1`` outside it."""
    pad = 2 * float(np.abs(R.residues).sum()) + 1
    b = R.poles
    return (b.real.min() - pad, b.real.max() + pad, b.imag.min() - pad, b.imag.max() + pad)


def component_count_oracle(R: RationalMap, grid_n: int = 1024, window=None) -> int:
    """Count 4-connected components of ``{|R| >= 1}`` on a ``grid_n x grid_n`` grid.

    Exact only for components the grid resolves.
    """
    if grid_n < 256:
        raise ValueError("grid_n must be at least 256")
    x0, x1, y0, y1 = default_window(R) if window is None else window
    x = np.linspace(x0, x1, grid_n)
    y = np.linspace(y0, y1, grid_n)
    Z = x[None, :] + 1j * y[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        W = np.zeros(Z.shape, dtype=complex)
        for a, b in zip(R.residues, R.poles):
            W += a / (Z - b)
    mask = ~(np.abs(W) < 1)  # poles (inf/nan) count as outside the disk
    _, count = ndimage.label(mask)
    return int(count)


def write_curve_csv(curve: BoundaryCurve, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["theta", "re", "im"])
    for th, z in zip(curve.angles, curve.samples):
        w.writerow([repr(float(th)), repr(float(z.real)), repr(float(z.imag))])

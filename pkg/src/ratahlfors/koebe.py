"""Exterior Riemann maps and Koebe osculation onto circle domains.

The exterior map of a smooth Jordan curve ``Gamma`` is written as
``phi(z) = c + (z - z0) exp(h(z))`` with ``z0`` inside ``Gamma`` and ``h``
holomorphic outside, ``h(inf) = 0``. On the curve ``Re h = log r - log|z - z0|``
is known, and ``Im h`` together with ``log r`` is fixed by asking the boundary
values to extend holomorphically to the exterior (a second-kind integral
equation with a Hilbert-transform part, solved by Nystrom discretisation on
the sample grid). ``phi`` is tangent to the identity at infinity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import MapDivergence, NoConvergence, NotGood
from .levelset import BoundaryCurve, fourier_resample, trace_all, winding_number

CIRCLE_TOL = 1e-9
MAP_TOL = 1e-9
MAX_SWEEPS = 200
STALL_WINDOW = 10
MAX_UPSAMPLE = 64


def fourier_derivative(x: np.ndarray, order: int = 1) -> np.ndarray:
    """Derivative in the uniform parameter ``t in [0, 2pi)``; the Nyquist mode is dropped."""
    M = x.size
    k = np.fft.fftfreq(M, 1.0 / M)
    if M % 2 == 0:
        k[M // 2] = 0
    return np.fft.ifft(np.fft.fft(x) * (1j * k) ** order)


def hilbert_matrix(M: int) -> np.ndarray:
    """Periodic Hilbert transform on ``M`` samples (symbol ``-i sign(k)``)."""
    k = np.fft.fftfreq(M, 1.0 / M)
    sym = -1j * np.sign(k)
    if M % 2 == 0:
        sym[M // 2] = 0
    col = np.fft.ifft(sym).real
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    return col[idx]


def signed_area(z: np.ndarray) -> float:
    return 0.5 * float((z.real * np.roll(z.imag, -1) - np.roll(z.real, -1) * z.imag).sum())


def _interior_point(z: np.ndarray) -> complex:
    A = signed_area(z)
    cross = z.real * np.roll(z.imag, -1) - np.roll(z.real, -1) * z.imag
    cen = complex(((z + np.roll(z, -1)) * cross).sum() / (6 * A))
    for cand in (cen, complex(z.mean())):
        try:
            if winding_number(z, cand) != 0:
                return cand
        except Exception:
            continue
    raise MapDivergence("could not find a point inside the curve")


@dataclass(frozen=True, eq=False)
class ExteriorMap:
    """Conformal map of the exterior of a curve onto ``|w - center| > radius``.

    Stores the curve (counterclockwise), the boundary values ``f = h|_Gamma``
    and the normalisation data; evaluation off the curve uses the Cauchy
    integral of ``f``.
    """

    eta: np.ndarray
    d_eta: np.ndarray
    f: np.ndarray
    z0: complex
    center: complex
    radius: float
    residual: float
    reversed: bool

    @property
    def M(self) -> int:
        return self.eta.size

    def boundary_image(self) -> np.ndarray:
        """Images of the input samples, in the input order."""
        w = self.center + (self.eta - self.z0) * np.exp(self.f)
        return w[::-1] if self.reversed else w

    def _h(self, z: np.ndarray) -> np.ndarray:
        out = np.empty(z.shape, dtype=complex)
        spacing = float(np.abs(np.diff(np.r_[self.eta, self.eta[:1]])).max())
        cache = {}
        dist = np.abs(z[:, None] - self.eta[None, :])
        near = dist.argmin(axis=1)
        dmin = dist[np.arange(z.size), near]
        need = np.clip(np.ceil(6 * spacing / np.maximum(dmin, 1e-300)), 1, MAX_UPSAMPLE)
        factor = 2 ** np.ceil(np.log2(need)).astype(int)
        for fac in np.unique(factor):
            if fac not in cache:
                L = self.M * int(fac)
                cache[fac] = (
                    fourier_resample(self.eta, L),
                    fourier_resample(self.d_eta, L),
                    fourier_resample(self.f, L),
                )
            eta, d_eta, f = cache[fac]
            sel = factor == fac
            zs = z[sel]
            # subtracting the value at the nearest node tames the near-singular kernel;
            # the subtracted constant integrates to zero outside the curve
            f_ref = self.f[near[sel]]
            kern = d_eta[None, :] / (eta[None, :] - zs[:, None])
            out[sel] = -((f[None, :] - f_ref[:, None]) * kern).sum(axis=1) / (1j * eta.size)
        return out

    def __call__(self, z):
        """Evaluate at points outside the curve (values inside are meaningless)."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        inf = np.isinf(z.real) | np.isinf(z.imag)
        out = np.array(z, dtype=complex)
        fin = ~inf
        if fin.any():
            zf = z[fin]
            out[fin] = self.center + (zf - self.z0) * np.exp(self._h(zf))
        return complex(out[0]) if scalar else out


def exterior_riemann_map(curve) -> ExteriorMap:
    """Exterior map onto a disk exterior, tangent to the identity at infinity.

    ``curve`` is a uniformly parametrised sample array (or a ``BoundaryCurve``)
    of a smooth Jordan curve, either orientation.

    Raises
    ------
    MapDivergence
        If the discrete boundary condition or its interpolation between nodes
        is off by more than ``1e-9 * diameter``.
    """
    samples = curve.samples if isinstance(curve, BoundaryCurve) else curve
    z = np.asarray(samples, dtype=complex).ravel()
    rev = signed_area(z) < 0
    if rev:
        z = z[::-1].copy()
    M = z.size
    z0 = _interior_point(z)
    d1 = fourier_derivative(z)
    d2 = fourier_derivative(z, 2)
    if np.any(np.abs(d1) == 0):
        raise MapDivergence("degenerate parametrisation")
    t = 2 * np.pi * np.arange(M) / M
    D = z[None, :] - z[:, None]
    np.fill_diagonal(D, 1)
    dt = t[None, :] - t[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ker = d1[None, :] / D - 0.5 / np.tan(dt / 2)
    np.fill_diagonal(ker, d2 / (2 * d1))
    E = 0.5 * np.eye(M) + 0.5j * hilbert_matrix(M) + ker / (1j * M)
    u0 = -np.log(np.abs(z - z0))
    # unknowns: Im f at the nodes and log r
    cols = 1j * E
    e1 = E.sum(axis=1)
    A = np.vstack(
        [np.hstack([cols.real, e1.real[:, None]]), np.hstack([cols.imag, e1.imag[:, None]])]
    )
    Eu = E @ u0
    rhs = -np.r_[Eu.real, Eu.imag]
    sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    v, L = sol[:M], sol[M]
    f = u0 + L + 1j * v
    if not np.all(np.isfinite(f)):
        raise MapDivergence("boundary solve produced non-finite values")
    r = float(np.exp(L))
    first = (f * d1).sum() / (1j * M)
    c = complex(z0 - first)
    # discrete residual of the extension condition and interpolation error between nodes
    cond_res = float(np.abs(E @ f).max())
    zm = fourier_resample(z, 2 * M)[1::2]
    fm = fourier_resample(f, 2 * M)[1::2]
    mid_res = float(np.abs(fm.real - (L - np.log(np.abs(zm - z0)))).max())
    diam = float(np.abs(z[:, None] - z[None, :]).max())
    residual = r * max(cond_res, mid_res)
    if not residual <= MAP_TOL * diam:
        raise MapDivergence(f"boundary correspondence residual {residual:.2e} exceeds {MAP_TOL:.0e} x diameter")
    return ExteriorMap(z, d1, f, z0, c, r, residual, rev)


@dataclass(frozen=True)
class CircleDomainSignature:
    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        c = np.array(self.centers, dtype=complex).ravel()
        r = np.array(self.radii, dtype=float).ravel()
        if c.shape != r.shape or c.size == 0:
            raise ValueError("centers and radii must be non-empty and of equal length")
        c.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    def __eq__(self, other):
        if not isinstance(other, CircleDomainSignature):
            return NotImplemented
        return np.array_equal(self.centers, other.centers) and np.array_equal(self.radii, other.radii)

    @property
    def n(self) -> int:
        return self.centers.size

    @property
    def diameter(self) -> float:
        c, r = self.centers, self.radii
        return float((np.abs(c[:, None] - c[None, :]) + r[:, None] + r[None, :]).max())

    def to_json(self) -> dict:
        return {
            "centers": [[float(z.real), float(z.imag)] for z in self.centers],
            "radii": [float(x) for x in self.radii],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CircleDomainSignature":
        return cls([complex(float(a), float(b)) for a, b in data["centers"]], [float(x) for x in data["radii"]])


def fit_circle(z: np.ndarray) -> tuple[complex, float, float]:
    """Least-squares circle (algebraic fit refined by Gauss-Newton); returns
    ``(center, radius, max radial residual)``."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    A = np.column_stack([x, y, np.ones_like(x)])
    sol = np.linalg.lstsq(A, x * x + y * y, rcond=None)[0]
    c = complex(sol[0] / 2, sol[1] / 2)
    r = float(np.sqrt(max(sol[2] + abs(c) ** 2, 0.0)))
    for _ in range(5):
        d = np.abs(z - c)
        u = (z - c) / d
        J = np.column_stack([-u.real, -u.imag, -np.ones_like(d)])
        step = np.linalg.lstsq(J, -(d - r), rcond=None)[0]
        c += complex(step[0], step[1])
        r += float(step[2])
        if abs(step).max() < 1e-16 * (abs(c) + r):
            break
    return c, r, float(np.abs(np.abs(z - c) - r).max())


@dataclass(frozen=True, eq=False)
class ConformalChain:
    """Composition of exterior maps followed by a translation, applied in order."""

    maps: tuple = ()
    shift: complex = 0j

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        w = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
        for m in self.maps:
            w = m(w)
        w = w - self.shift
        return complex(w[0]) if scalar else w

    def __len__(self) -> int:
        return len(self.maps)


@dataclass(frozen=True, eq=False)
class KoebeResult:
    signature: CircleDomainSignature
    chain: ConformalChain
    sweeps: int
    deviation: float
    history: list = field(default_factory=list)
    images: tuple = ()


def _deviation(curves) -> tuple[float, list]:
    fits = [fit_circle(c) for c in curves]
    return max(f[2] for f in fits), fits


def koebe_uniformize(
    curves: Sequence, *, circle_tol: float = CIRCLE_TOL, max_sweeps: int = MAX_SWEEPS
) -> KoebeResult:
    """Map the domain outside ``curves`` onto a circle domain by round-robin osculation.

    ``circle_tol`` is relative to the configuration diameter. Disk ``j``
    corresponds to input curve ``j``; the result is tangent to the identity at
    infinity and its centres sum to zero.

    Raises
    ------
    NoConvergence
        If the circle deviation has not decreased over ``10`` sweeps or
        ``max_sweeps`` is exhausted.
    """
    cur = [np.asarray(c.samples if isinstance(c, BoundaryCurve) else c, dtype=complex).copy() for c in curves]
    n = len(cur)
    allpts = np.concatenate(cur)
    diam = float(np.abs(allpts[:, None] - allpts[None, :]).max()) if n > 1 else float(
        np.abs(cur[0][:, None] - cur[0][None, :]).max()
    )
    tol = circle_tol * diam
    maps = []
    dev, fits = _deviation(cur)
    history = [dev]
    sweeps = 0
    while dev > tol:
        if sweeps >= max_sweeps:
            raise NoConvergence(f"circle deviation {dev:.2e} after {sweeps} sweeps")
        if sweeps >= STALL_WINDOW and dev >= history[-1 - STALL_WINDOW]:
            raise NoConvergence(f"circle deviation stalled at {dev:.2e}")
        for j in range(n):
            phi = exterior_riemann_map(cur[j])
            maps.append(phi)
            for k in range(n):
                cur[k] = phi.boundary_image() if k == j else phi(cur[k])
        sweeps += 1
        dev, fits = _deviation(cur)
        history.append(dev)
    centers = np.array([f[0] for f in fits])
    radii = np.array([f[1] for f in fits])
    shift = complex(centers.mean())
    sig = CircleDomainSignature(centers - shift, radii)
    images = tuple(c - shift for c in cur)
    return KoebeResult(sig, ConformalChain(tuple(maps), shift), sweeps, dev, history, images)


def project_P(R, M: int = 256, *, circle_tol: float = CIRCLE_TOL) -> CircleDomainSignature:
    """Normalised circle-domain signature of ``R^{-1}(D)``; disk ``j`` bounds pole ``b_j``."""
    from .ratmap import is_n_good

    if not is_n_good(R).good:
        raise NotGood("project_P requires an n-good map")
    return koebe_uniformize(trace_all(R, M, check=False), circle_tol=circle_tol).signature


def kappa_chart(sig: CircleDomainSignature) -> np.ndarray:
    """``(Re c_1, Im c_1, ..., Re c_{n-1}, Im c_{n-1}, r_1, ..., r_n)``."""
    c = sig.centers[:-1]
    return np.concatenate([np.column_stack([c.real, c.imag]).ravel(), sig.radii])


def from_kappa(coords, n: int) -> CircleDomainSignature:
    coords = np.asarray(coords, dtype=float)
    if coords.size != 3 * n - 2:
        raise ValueError(f"expected {3 * n - 2} coordinates for n = {n}")
    xy = coords[: 2 * (n - 1)].reshape(-1, 2)
    c = xy[:, 0] + 1j * xy[:, 1]
    return CircleDomainSignature(np.r_[c, -c.sum()], coords[2 * (n - 1) :])

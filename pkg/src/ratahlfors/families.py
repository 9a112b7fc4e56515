"""Perturbation families of good maps and explicit paths between positive-residue maps."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NotGood, OnCurve, PathInvalid, PolePlacement
from .levelset import trace_all, winding_number
from .ratmap import RationalMap, critical_radius, is_n_good

THRESHOLD_RHO = 0.5
DEFAULT_GRID = np.geomspace(1e-6, 1e3, 181)
PATH_SAMPLES = 1001
CENTER_TOL = 1e-12


def q_epsilon(R: RationalMap, extra_poles, eps: float) -> RationalMap:
    """``R + sum_j eps / (z - p_j)`` over extra poles ``p_j`` lying in ``R^{-1}(D)``.

    Raises
    ------
    PolePlacement
        If a pole is outside the sublevel set, on a boundary curve, or within
        ``1e-8`` (relative to the pole scale) of another pole.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    p = np.atleast_1d(np.asarray(extra_poles, dtype=complex))
    if not is_n_good(R).good:
        raise NotGood("q_epsilon needs an n-good base map")
    allp = np.r_[R.poles, p]
    d = np.abs(allp[:, None] - allp[None, :])
    d[np.diag_indices(allp.size)] = np.inf
    if d.min() <= 1e-8 * R.length_scale:
        raise PolePlacement("extra poles must be distinct from each other and from the poles of R")
    if np.any(np.abs(R.raw(p)) >= 1):
        raise PolePlacement("extra pole outside the sublevel set |R| < 1")
    for curve in trace_all(R, check=False):
        try:
            w = winding_number(curve.samples, p)
        except OnCurve as exc:
            raise PolePlacement("extra pole on a boundary curve") from exc
        if np.any(w != 0):
            raise PolePlacement("extra pole enclosed by a boundary curve")
    return RationalMap(np.r_[R.residues, np.full(p.size, eps)], allp)


def epsilon_threshold(poles, search_grid=None) -> float:
    """Largest grid value ``eps`` with ``critical_radius(eps * 1, poles) <= 1/2``."""
    grid = np.sort(np.asarray(DEFAULT_GRID if search_grid is None else search_grid, dtype=float))
    poles = np.atleast_1d(np.asarray(poles, dtype=complex))
    ones = np.ones(poles.size)
    for eps in grid[::-1]:
        R = RationalMap(eps * ones, poles)
        if critical_radius(R) <= THRESHOLD_RHO and is_n_good(R).good:
            return float(eps)
    warnings.warn("no grid value meets the critical-radius bound; returning the smallest")
    return float(grid[0])


def _recenter(b: np.ndarray) -> np.ndarray:
    return b - b.mean(axis=-1, keepdims=True)


def _min_separation(samples: np.ndarray) -> float:
    d = np.abs(samples[:, :, None] - samples[:, None, :])
    n = samples.shape[1]
    d[:, np.arange(n), np.arange(n)] = np.inf
    return float(d.min())


def default_pole_path(b0, b1, samples: int = 201, offset: float = 0.5) -> np.ndarray:
    """Straight segment from ``b0`` to ``b1``; if poles collide on the way, each pole
    is pushed sideways by ``offset * j * scale * sin(pi s)``."""
    b0 = np.asarray(b0, dtype=complex)
    b1 = np.asarray(b1, dtype=complex)
    s = np.linspace(0, 1, samples)[:, None]
    path = (1 - s) * b0 + s * b1
    scale = max(float(np.abs(np.r_[b0, b1]).max()), 1.0)
    tol = 1e-6 * scale
    if b0.size < 2 or _min_separation(path) > tol:
        return path
    for k in range(1, 6):
        bump = 1j * offset * k * scale * np.arange(b0.size) * np.sin(np.pi * s)
        bump[[0, -1]] = 0  # sin(pi) is not exactly zero
        cand = path + bump
        if _min_separation(cand) > tol:
            return cand
    raise PathInvalid("could not find a detour avoiding pole collisions")


def path_epsilon(pole_samples) -> float:
    """``1 / (2 max_s rho(1, q(s)))`` over the sampled configurations (exact by homogeneity)."""
    q = np.asarray(pole_samples, dtype=complex)
    ones = np.ones(q.shape[1])
    rho = max(critical_radius(RationalMap(ones, row)) for row in q)
    return float("inf") if rho == 0 else THRESHOLD_RHO / rho


@dataclass(frozen=True, eq=False)
class PositivePath:
    """Shrink residues, move poles, grow residues; each phase occupies a third of ``[0, 1]``."""

    a0: np.ndarray
    b0: np.ndarray
    a1: np.ndarray
    b1: np.ndarray
    pole_samples: np.ndarray
    eps: float

    def mu(self, t: float) -> float:
        return 1 - 3 * (1 - self.eps / np.abs(self.a0).max()) * t

    def nu(self, t: float) -> float:
        # written so that nu(1) = 1 exactly in floating point
        return 1 - 3 * (1 - self.eps / np.abs(self.a1).max()) * (1 - t)

    def q(self, s: float) -> np.ndarray:
        """Recentered pole path, piecewise linear between samples."""
        S = self.pole_samples.shape[0]
        x = s * (S - 1)
        i = min(int(np.floor(x)), S - 2)
        w = x - i
        row = (1 - w) * self.pole_samples[i] + w * self.pole_samples[i + 1]
        return _recenter(row)


def _check_endpoint(a, b, name):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if np.any(a.imag != 0) or np.any(a.real <= 0):
        raise PathInvalid(f"{name}: residues must be real and positive")
    scale = max(1.0, float(np.abs(b).max()))
    if abs(b.sum()) > CENTER_TOL * scale * b.size:
        raise PathInvalid(f"{name}: poles must sum to zero")
    if not is_n_good(RationalMap(a, b)).good:
        raise PathInvalid(f"{name}: map is not n-good")
    return a.real.copy(), b.copy()


def positive_path(a0, b0, a1, b1, pole_path=None, eps: float | None = None) -> PositivePath:
    """Path inside the positive-residue good maps between two such maps.

    Raises
    ------
    PathInvalid
        For invalid endpoints, a pole path with coincident poles or wrong ends,
        or ``eps`` above either residue norm or the path threshold.
    """
    a0, b0 = _check_endpoint(a0, b0, "start")
    a1, b1 = _check_endpoint(a1, b1, "end")
    if a0.size != a1.size:
        raise PathInvalid("endpoints must have the same degree")
    q = np.asarray(default_pole_path(b0, b1) if pole_path is None else pole_path, dtype=complex)
    if q.ndim != 2 or q.shape[1] != a0.size or q.shape[0] < 2:
        raise PathInvalid("pole path must be an (S, n) array with S >= 2")
    scale = max(1.0, float(np.abs(q).max()))
    if np.abs(q[0] - b0).max() > CENTER_TOL * scale or np.abs(q[-1] - b1).max() > CENTER_TOL * scale:
        raise PathInvalid("pole path must start at b0 and end at b1")
    if a0.size > 1 and _min_separation(q) <= CENTER_TOL * scale:
        raise PathInvalid("pole path has coincident poles")
    q = _recenter(q)
    limit = min(np.abs(a0).max(), np.abs(a1).max())
    thr = path_epsilon(q)
    if eps is None:
        eps = min(limit, thr)
    if not 0 < eps <= limit:
        raise PathInvalid(f"eps must lie in (0, {limit}]")
    if eps > thr:
        raise PathInvalid(f"eps {eps} exceeds the path threshold {thr:.6g}")
    return PositivePath(a0, b0, a1, b1, q, float(eps))


def sample_path(path: PositivePath, t: float) -> RationalMap:
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if t < 1 / 3:
        return RationalMap(path.mu(t) * path.a0, path.b0)
    if t > 2 / 3:
        return RationalMap(path.nu(t) * path.a1, path.b1)
    a = (2 - 3 * t) * path.mu(1 / 3) * path.a0 + (3 * t - 1) * path.nu(2 / 3) * path.a1
    return RationalMap(a, path.q(3 * t - 1))


def path_report(path: PositivePath, samples: int = PATH_SAMPLES) -> list[dict]:
    rows = []
    for t in np.linspace(0, 1, samples):
        R = sample_path(path, float(t))
        cert = is_n_good(R)
        rows.append(
            {
                "t": float(t),
                "min_residue": float(R.residues.real.min()),
                "critical_radius": cert.critical_radius,
                "verdict": cert.verdict.value,
                "pole_sum": float(abs(R.poles.sum())),
            }
        )
    return rows


def write_path_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "min_residue", "critical_radius", "verdict"])
    for r in rows:
        w.writerow([repr(r["t"]), repr(r["min_residue"]), repr(r["critical_radius"]), r["verdict"]])

"""Analytic capacity and Ahlfors functions of domains bounded by sampled curves.

The extremal problem ``sup |g'(inf)|`` over holomorphic ``g : X -> closed disk``
is discretised with the basis ``(rho_j / (z - b_j))^k`` (``k = 1..K``, one pole
per complementary component) and the sup-norm constraint imposed at
collocation points, which gives a second-order cone program. The optimum is
then divided by its sup norm on a denser boundary grid, so ``gamma_lower`` is a
lower bound for the capacity up to that grid's density.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import clarabel
import numpy as np
import scipy.sparse as sp

from .errors import FlatnessFailure, IllConditioned, NotGood, SolverStall
from .levelset import BoundaryCurve, trace_all, winding_number
from .ratmap import RationalMap, is_n_good

DEFAULT_K = 16
DEFAULT_M = 256
DENSE_FACTOR = 8
FLATNESS_TOL = 1e-3
AHLFORS_TOL = 1e-4
GAP_LIMIT = 1e-6
POLISH_ITERS = 8
COND_LIMIT = 1e13


@dataclass(frozen=True, eq=False)
class CapacityProblem:
    curves: tuple
    basis_poles: np.ndarray
    K: int
    M: int
    scales: np.ndarray

    def __post_init__(self):
        n = len(self.curves)
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.M < 4 * n * self.K:
            raise ValueError(f"collocation M={self.M} must be at least 4nK = {4 * n * self.K}")
        for j, c in enumerate(self.curves):
            if winding_number(c.samples, self.basis_poles[j]) == 0:
                raise ValueError(f"basis pole {j} is not enclosed by its curve")

    @property
    def n(self) -> int:
        return len(self.curves)

    @classmethod
    def build(
        cls,
        curves: Sequence[BoundaryCurve],
        K: int = DEFAULT_K,
        M: int | None = None,
        basis_poles=None,
        scales=None,
    ) -> "CapacityProblem":
        """Assemble a problem with defaults: poles at the curves' poles and
        ``rho_j`` = distance from the basis pole to its own curve, so every basis
        function is bounded by 1 on the closed domain."""
        curves = tuple(curves)
        n = len(curves)
        if basis_poles is None:
            basis_poles = [c.pole for c in curves]
        b = np.array(basis_poles, dtype=complex)
        if scales is None:
            scales = [np.abs(c.samples - b[j]).min() for j, c in enumerate(curves)]
        if M is None:
            M = max(DEFAULT_M, 4 * n * K)
        return cls(curves, b, int(K), int(M), np.array(scales, dtype=float))

    def basis(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex).ravel()
        cols = np.empty((z.size, self.n * self.K), dtype=complex)
        for j in range(self.n):
            u = self.scales[j] / (z - self.basis_poles[j])
            p = np.ones_like(u)
            for k in range(self.K):
                p = p * u
                cols[:, j * self.K + k] = p
        return cols

    def collocation_points(self, factor: int = 1) -> np.ndarray:
        return np.concatenate([c.resample(factor * self.M) for c in self.curves])


@dataclass(frozen=True, eq=False)
class AhlforsSolution:
    """Extremal candidate ``f(z) = sum_jk c_jk (rho_j/(z-b_j))^k`` and its certificate.

    ``gamma_lower = raw_objective / max(sup_norm_measured, 1)``; ``f`` divided by
    the same factor is feasible on the dense boundary grid.
    """

    coefficients: np.ndarray
    gamma_lower: float
    raw_objective: float
    sup_norm_measured: float
    boundary_flatness: float
    basis_poles: np.ndarray
    scales: np.ndarray
    dense_points: int
    info: dict = field(default_factory=dict)

    @property
    def normalizer(self) -> float:
        return max(self.sup_norm_measured, 1.0)

    def __call__(self, z):
        """The certified function ``f / max(sup, 1)``."""
        return self.evaluate(z) / self.normalizer

    def evaluate(self, z):
        """The raw solver function ``f``."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros(z.shape, dtype=complex)
        n, K = self.coefficients.shape
        for j in range(n):
            u = self.scales[j] / (z - self.basis_poles[j])
            # Horner in u, no constant term
            acc = np.zeros_like(u)
            for k in range(K - 1, -1, -1):
                acc = (acc + self.coefficients[j, k]) * u
            out += acc
        return complex(out[0]) if scalar else out

    @property
    def derivative_at_infinity(self) -> complex:
        """``f'(inf)`` of the certified function."""
        return complex((self.coefficients[:, 0] * self.scales).sum()) / self.normalizer

    def to_json(self, verdict: str | None = None) -> dict:
        c = self.coefficients
        return {
            "gamma_lower": float(self.gamma_lower),
            "coefficients": [[[float(x.real), float(x.imag)] for x in row] for row in c],
            "sup_norm": float(self.sup_norm_measured),
            "flatness": float(self.boundary_flatness),
            "verdict": verdict,
        }


def _socp(B: np.ndarray, q: np.ndarray):
    """minimize q.x subject to |B_m (x_re + i x_im)| <= 1 for every row m."""
    m, N = B.shape
    A = np.zeros((3 * m, 2 * N))
    A[1::3, :N] = -B.real
    A[1::3, N:] = B.imag
    A[2::3, :N] = -B.imag
    A[2::3, N:] = -B.real
    rhs = np.zeros(3 * m)
    rhs[0::3] = 1.0
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = 400
    settings.tol_gap_abs = 1e-10
    settings.tol_gap_rel = 1e-10
    settings.tol_feas = 1e-10
    solver = clarabel.DefaultSolver(
        sp.csc_matrix((2 * N, 2 * N)),
        q,
        sp.csc_matrix(A),
        rhs,
        [clarabel.SecondOrderConeT(3)] * m,
        settings,
    )
    return solver.solve()


def certified_bounds(B: np.ndarray, w: np.ndarray, c: np.ndarray, y: np.ndarray):
    """Bracket the discrete optimum ``max Re(w.c) s.t. |Bc| <= 1``.

    The lower bound rescales ``c`` to exact feasibility. For the upper bound
    ``y`` is pushed onto ``B^T y = w`` by a least-norm correction; weak duality
    then gives ``Re(w.c) = Re(y.Bc) <= sum |y_m|`` for every feasible ``c``.
    """
    lower = float((w @ c).real) / max(float(np.abs(B @ c).max()), 1.0)
    r = B.T @ y - w
    dy = np.linalg.lstsq(B.T, -r, rcond=None)[0]
    upper = float(np.abs(y + dy).sum())
    return lower, upper


def _kkt_residual(B, w, c, lam):
    f = B @ c
    F1 = B.T @ (lam * np.conj(f)) - w
    return np.concatenate([F1.real, F1.imag, np.abs(f) ** 2 - 1]), f


def _polish(B, w, c, lam, iters=POLISH_ITERS):
    """Damped Gauss-Newton on stationarity ``B^T (lam conj(f)) = w`` and ``|f| = 1``
    over the rows the cone solver reports as active; multipliers stay positive."""
    N = c.size
    act = lam > 1e-6 * lam.max()
    Bs, lam = B[act], lam[act].copy()
    ns = lam.size
    F, f = _kkt_residual(Bs, w, c, lam)
    for _ in range(iters):
        J = np.zeros((2 * N + ns, 2 * N + ns))
        # stationarity depends on conj(c)
        G = Bs.T @ (lam[:, None] * np.conj(Bs))
        J[:N, :N], J[:N, N : 2 * N] = G.real, G.imag
        J[N : 2 * N, :N], J[N : 2 * N, N : 2 * N] = G.imag, -G.real
        T = Bs.T * np.conj(f)[None, :]
        J[:N, 2 * N :], J[N : 2 * N, 2 * N :] = T.real, T.imag
        H = 2 * np.conj(f)[:, None] * Bs
        J[2 * N :, :N], J[2 * N :, N : 2 * N] = H.real, -H.imag
        d = np.linalg.lstsq(J, -F, rcond=1e-12)[0]
        dc, dl = d[:N] + 1j * d[N : 2 * N], d[2 * N :]
        t = 1.0
        neg = dl < 0
        if neg.any():
            t = min(1.0, 0.99 * float(np.min(-lam[neg] / dl[neg])))
        n0 = np.linalg.norm(F)
        while t > 1e-4:
            F1, f1 = _kkt_residual(Bs, w, c + t * dc, lam + t * dl)
            if np.linalg.norm(F1) < (1 - 1e-4 * t) * n0:
                break
            t /= 2
        else:
            break
        c, lam, F, f = c + t * dc, lam + t * dl, F1, f1
        if np.abs(F).max() < 1e-14:
            break
    y = np.zeros(B.shape[0], dtype=complex)
    y[act] = lam * np.conj(f)
    return c, y


def solve_ahlfors(problem: CapacityProblem, *, dense_factor: int = DENSE_FACTOR) -> AhlforsSolution:
    """Maximise ``Re f'(inf)`` subject to ``|f| <= 1`` at the collocation points.

    Raises
    ------
    IllConditioned
        If the collocation matrix condition number exceeds ``1e13``.
    SolverStall
        If the cone solver fails or the certified relative gap exceeds ``GAP_LIMIT``.
    """
    n, K = problem.n, problem.K
    Z = problem.collocation_points()
    B = problem.basis(Z)
    sv = np.linalg.svd(B, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if cond > COND_LIMIT:
        raise IllConditioned(f"collocation condition number {cond:.2e}; lower K or adjust scales")
    N = n * K
    lead = np.arange(n) * K
    w = np.zeros(N, dtype=complex)
    w[lead] = problem.scales
    q = np.zeros(2 * N)
    q[lead] = -problem.scales
    sol = _socp(B, q)
    status = str(sol.status)
    x = np.asarray(sol.x, dtype=float)
    if status not in ("Solved", "AlmostSolved") or x.size != 2 * N or not np.all(np.isfinite(x)):
        raise SolverStall(f"cone solver stopped with status {status}")
    c = x[:N] + 1j * x[N:]
    zc = np.asarray(sol.z, dtype=float)
    lam = zc[0::3]
    y = zc[1::3] + 1j * zc[2::3]
    lower, upper = certified_bounds(B, w, c, y)
    gap = (upper - lower) / max(1.0, abs(lower))
    c2, y2 = _polish(B, w, c, lam)
    lo2, up2 = certified_bounds(B, w, c2, y2)
    gap2 = (up2 - lo2) / max(1.0, abs(lo2))
    polished = bool(gap2 < gap)
    if polished:
        c, lower, upper, gap = c2, lo2, up2, gap2
    if gap > GAP_LIMIT:
        raise SolverStall(f"certified optimality gap {gap:.2e} exceeds {GAP_LIMIT:.0e}")
    violation = float(np.abs(B @ c).max() - 1)
    if violation > 0:
        c = c / (1 + violation)
    coef = c.reshape(n, K)
    raw = float((coef[:, 0] * problem.scales).sum().real)
    mod = np.abs(problem.basis(problem.collocation_points(dense_factor)) @ c)
    sup = float(mod.max())
    return AhlforsSolution(
        coefficients=coef,
        gamma_lower=raw / max(sup, 1.0),
        raw_objective=raw,
        sup_norm_measured=sup,
        boundary_flatness=float(mod.max() - mod.min()),
        basis_poles=problem.basis_poles.copy(),
        scales=problem.scales.copy(),
        dense_points=int(mod.size),
        info={
            "status": status,
            "iterations": int(sol.iterations),
            "polished": polished,
            "discrete_upper": upper,
            "gap": gap,
            "violation": violation,
            "condition": cond,
            "imag_derivative": float((coef[:, 0] * problem.scales).sum().imag),
        },
    )


class VerdictKind(str, enum.Enum):
    NOT_AHLFORS = "CertifiedNotAhlfors"
    CONSISTENT = "ConsistentWithAhlfors"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True, eq=False)
class AhlforsVerdict:
    kind: VerdictKind
    gap: float
    residual: float
    solution: AhlforsSolution

    def to_json(self) -> dict:
        return {"verdict": self.kind.value, "gap": float(self.gap), "residual": float(self.residual)}


def ahlfors_problem(R: RationalMap, K: int = DEFAULT_K, M: int | None = None) -> CapacityProblem:
    if not is_n_good(R).good:
        raise NotGood("the Ahlfors test requires an n-good map")
    if M is None:
        M = max(DEFAULT_M, 4 * R.n * K)
    curves = trace_all(R, M, check=False)
    return CapacityProblem.build(curves, K=K, M=M, basis_poles=R.poles)


def classify(R: RationalMap, solution: AhlforsSolution, tol: float = AHLFORS_TOL) -> AhlforsVerdict:
    """Compare ``R`` with a solved extremal problem on ``R^{-1}(D)`` (basis poles ``b_j``)."""
    s = complex(R.residues.sum())
    g = solution.gamma_lower
    if abs(s.imag) > tol:
        return AhlforsVerdict(VerdictKind.NOT_AHLFORS, abs(s.imag), abs(g - s), solution)
    if g > s.real + tol:
        return AhlforsVerdict(VerdictKind.NOT_AHLFORS, g - s.real, abs(g - s), solution)
    coef = solution.coefficients / solution.normalizer
    lead = np.abs(coef[:, 0] - R.residues / solution.scales)
    higher = np.abs(coef[:, 1:]).max() if coef.shape[1] > 1 else 0.0
    residual = float(max(abs(g - s), lead.max(), higher))
    if residual <= tol:
        return AhlforsVerdict(VerdictKind.CONSISTENT, g - s.real, residual, solution)
    return AhlforsVerdict(VerdictKind.INDETERMINATE, g - s.real, residual, solution)


def is_ahlfors(
    R: RationalMap, tol: float = AHLFORS_TOL, K: int = DEFAULT_K, M: int | None = None
) -> AhlforsVerdict:
    """Decide whether ``R`` is the Ahlfors function of ``R^{-1}(D)``.

    ``R`` is always feasible, so ``Re sum a_j <= gamma``; a certified lower
    bound above it proves ``R`` is not extremal.
    """
    return classify(R, solve_ahlfors(ahlfors_problem(R, K, M)), tol)


@dataclass(frozen=True, eq=False)
class H2Result:
    values: np.ndarray
    moduli: np.ndarray
    solution: AhlforsSolution

    def to_json(self) -> dict:
        return {
            "h2": [[float(v.real), float(v.imag)] for v in self.values],
            "moduli": [float(m) for m in self.moduli],
            "flatness": float(self.solution.boundary_flatness),
        }


def h2_from_solution(curves: Sequence[BoundaryCurve], solution: AhlforsSolution, flatness_tol=FLATNESS_TOL):
    if solution.boundary_flatness > flatness_tol:
        raise FlatnessFailure(
            f"boundary flatness {solution.boundary_flatness:.2e} exceeds {flatness_tol:.1e}"
        )
    alpha = np.array([c.marked_point for c in curves])
    f = solution(alpha)
    mod = np.abs(f)
    if np.any(np.abs(mod - 1) > flatness_tol):
        raise FlatnessFailure(f"|f(alpha_j)| deviates from 1 by {np.abs(mod - 1).max():.2e}")
    return H2Result(f / mod, mod, solution)


def h2(R: RationalMap, K: int = DEFAULT_K, M: int | None = None, flatness_tol: float = FLATNESS_TOL) -> H2Result:
    """Values of the Ahlfors function of ``R^{-1}(D)`` at the marked points ``R(alpha_j) = 1``."""
    problem = ahlfors_problem(R, K, M)
    return h2_from_solution(problem.curves, solve_ahlfors(problem), flatness_tol)


def circle_curve(center: complex, radius: float, M: int, index: int = 0) -> BoundaryCurve:
    """Counterclockwise samples of an exact circle, marked at ``center + radius``."""
    z = center + radius * np.exp(2j * np.pi * np.arange(M) / M)
    return BoundaryCurve(index, complex(center), z, complex(center + radius))


def capacity_of_disks(sig, K: int = DEFAULT_K, M: int | None = None) -> AhlforsSolution:
    """``gamma`` lower bound for the complement of a circle domain.

    ``sig`` needs ``centers`` and ``radii``; basis poles sit at the centres with
    scales equal to the radii.
    """
    centers = np.asarray(sig.centers, dtype=complex)
    radii = np.asarray(sig.radii, dtype=float)
    n = centers.size
    if M is None:
        M = max(DEFAULT_M, 4 * n * K)
    curves = [circle_curve(c, r, M, j) for j, (c, r) in enumerate(zip(centers, radii))]
    return solve_ahlfors(CapacityProblem.build(curves, K=K, M=M, basis_poles=centers, scales=radii))

"""Circle-domain moduli: validation, relabelling, comparison and verification of
rational Ahlfors data against a signature."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .capacity import DEFAULT_K, AhlforsSolution, AhlforsVerdict, VerdictKind, capacity_of_disks, is_ahlfors
from .errors import Unsupported
from .koebe import CircleDomainSignature, project_P
from .ratmap import RationalMap

SUM_TOL = 1e-12
SIGNATURE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ModuliPoint:
    signature: CircleDomainSignature

    @property
    def n(self) -> int:
        return self.signature.n

    def to_json(self) -> dict:
        return self.signature.to_json()

    @classmethod
    def from_json(cls, data: dict) -> "ModuliPoint":
        return cls(CircleDomainSignature.from_json(data))


def _sig(x) -> CircleDomainSignature:
    return x.signature if isinstance(x, ModuliPoint) else x


def validate(sig) -> bool:
    """Centres sum to zero (relative to the configuration scale), radii positive,
    closed disks pairwise disjoint."""
    s = _sig(sig)
    c, r = s.centers, s.radii
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(r))):
        return False
    if np.any(r <= 0):
        return False
    scale = max(1.0, float(np.abs(c).max() + r.max()))
    if abs(c.sum()) > SUM_TOL * scale * c.size:
        return False
    for i, j in itertools.combinations(range(c.size), 2):
        if not abs(c[i] - c[j]) > r[i] + r[j]:
            return False
    return True


def act_permutation(point, perm: Sequence[int]):
    """Entry ``i`` of the result is entry ``perm[i]`` of the input (0-based)."""
    s = _sig(point)
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(s.n)):
        raise ValueError("perm must be a permutation of range(n)")
    out = CircleDomainSignature(s.centers[perm], s.radii[perm])
    return ModuliPoint(out) if isinstance(point, ModuliPoint) else out


def signature_distance(s1, s2, relabel: bool = False) -> float:
    """``max_j |dc_j| + |dr_j|``; with ``relabel`` the minimum over labelings."""
    a, b = _sig(s1), _sig(s2)
    if a.n != b.n:
        return float("inf")
    cost = np.abs(a.centers[:, None] - b.centers[None, :]) + np.abs(a.radii[:, None] - b.radii[None, :])
    if not relabel:
        return float(np.diag(cost).max())
    if a.n <= 7:
        idx = np.arange(a.n)
        return float(min(cost[idx, list(p)].max() for p in itertools.permutations(range(a.n))))
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@dataclass(frozen=True, eq=False)
class Verification:
    accepted: bool
    signature_error: float
    capacity_error: float
    verdict: AhlforsVerdict

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "signature_error": self.signature_error,
            "capacity_error": self.capacity_error,
            **self.verdict.to_json(),
        }


@dataclass(frozen=True, eq=False)
class AEvaluation:
    """Ahlfors data of a circle domain in verification mode.

    ``solution`` is the extremal function on the disk complement itself.
    ``verify`` decides whether a candidate map is the normalised rational
    Ahlfors function realising the signature.
    """

    point: ModuliPoint
    solution: AhlforsSolution
    K: int
    M: int | None

    def verify(self, R: RationalMap, tol: float = 1e-4, signature_tol: float = SIGNATURE_TOL) -> Verification:
        sig_err = signature_distance(project_P(R), self.point.signature)
        verdict = is_ahlfors(R, tol=tol, K=self.K, M=self.M)
        # capacity is invariant under the normalised uniformising map
        cap_err = abs(self.solution.gamma_lower - complex(R.residues.sum()))
        ok = sig_err <= signature_tol and verdict.kind is VerdictKind.CONSISTENT and cap_err <= tol
        return Verification(bool(ok), float(sig_err), float(cap_err), verdict)

    def synthesize(self) -> RationalMap:
        raise Unsupported("producing the rational Ahlfors map from a signature alone is not implemented")


def evaluate_A(point, K: int = DEFAULT_K, M: int | None = None) -> AEvaluation:
    """Solve the extremal problem on the circle domain and return the verification closure."""
    p = point if isinstance(point, ModuliPoint) else ModuliPoint(point)
    if not validate(p):
        raise ValueError("signature violates the circle-domain invariants")
    return AEvaluation(p, capacity_of_disks(p.signature, K=K, M=M), K, M)

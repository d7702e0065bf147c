"""
Weighted Dirichlet eigenproblem q(u, v) = lambda * int theta u v.

Eigenvalues are the positive ones only, ascending; eigenfunctions are
normalized in the stiffness (H^1_0) norm.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import eigsh

from neharilab.core.grid import GridField, StiffnessForm
from neharilab.errors import InsufficientSpectrumError, NoPositiveSpectrumError, SpectrumTooShortError
from neharilab.models.analysis import beta_range, defect_primitive_limit, sample_beta, sample_points
from neharilab.models.base import NonlinearModel
from neharilab.utils.logging import setup_logger

# Setup logger
logger = setup_logger(__name__)

DEFAULT_CLUSTER_TOL = 1e-6
DENSE_LIMIT = 3000
# Extra pairs computed past m so the last requested cluster can be closed
EXTRA_PAIRS = 4


def laplacian_eigenvalue_1d(k: int, h: float) -> float:
    """k-th eigenvalue (4/h^2) sin^2(k pi h / 2) of the 1D three-point Dirichlet Laplacian."""
    return float(4.0 / (h * h) * np.sin(k * np.pi * h / 2.0) ** 2)


@dataclass(frozen=True)
class Spectrum:
    """Ordered weighted eigenpairs with multiplicity grouping."""

    form: StiffnessForm
    weight: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    cluster_tol: float = DEFAULT_CLUSTER_TOL
    complete: bool = False
    method: str = ""

    @property
    def count(self) -> int:
        return int(self.eigenvalues.size)

    def eigenfunction(self, j: int) -> np.ndarray:
        """j-th eigenfunction, 1-based, H^1-normalized."""
        if not 1 <= j <= self.count:
            raise InsufficientSpectrumError(f"eigenfunction {j} requested, {self.count} computed")
        return self.eigenvectors[:, j - 1].copy()

    def field(self, j: int) -> GridField:
        return GridField(self.form.grid, self.eigenfunction(j))

    def clusters(self) -> List[List[int]]:
        """Groups of 0-based indices whose eigenvalues agree to cluster_tol (relative)."""
        groups: List[List[int]] = []
        for i, lam in enumerate(self.eigenvalues):
            if groups and abs(lam - self.eigenvalues[groups[-1][0]]) <= self.cluster_tol * abs(lam):
                groups[-1].append(i)
            else:
                groups.append([i])
        return groups

    def _closed_clusters(self) -> List[List[int]]:
        groups = self.clusters()
        # the last group may continue past the computed range
        return groups if self.complete else groups[:-1]

    def chi(self, m: int) -> Tuple[int, int]:
        """
        Cumulative eigenspace dimensions.

        Returns:
            (chi, s_m): chi is the dimension through the cluster holding the
            m-th eigenvalue counted with multiplicity; s_m is the dimension
            through the m-th distinct eigenvalue.
        """
        if m < 1:
            raise InsufficientSpectrumError(f"m must be >= 1, got {m}")
        closed = self._closed_clusters()
        if len(closed) < m:
            raise InsufficientSpectrumError(
                f"only {len(closed)} complete eigenvalue cluster(s) computed, {m} needed"
            )
        s_m = sum(len(g) for g in closed[:m])
        covered = 0
        for g in closed:
            covered += len(g)
            if covered >= m:
                return covered, s_m
        raise InsufficientSpectrumError(f"eigenvalue {m} lies beyond the complete clusters")

    def b_form(self, u: np.ndarray, v: np.ndarray) -> float:
        """int theta u v."""
        return float(np.sum(self.weight * u * v) * self.form.scale)

    def residuals(self) -> Dict[str, Any]:
        """Dual-norm eigen residuals and the cross-cluster weighted orthogonality defect."""
        K = self.form.matrix
        res = []
        rayleigh = []
        for j in range(self.count):
            e = self.eigenvectors[:, j]
            r = K @ e - self.eigenvalues[j] * self.form.scale * self.weight * e
            res.append(self.form.dual_norm(r) / self.eigenvalues[j])
            rayleigh.append(abs(self.form.q(e) - self.eigenvalues[j] * self.b_form(e, e)))
        orth = 0.0
        groups = self.clusters()
        for a, ga in enumerate(groups):
            for gb in groups[a + 1:]:
                for i in ga:
                    for j in gb:
                        orth = max(orth, abs(self.b_form(self.eigenvectors[:, i], self.eigenvectors[:, j])))
        return {"relative_dual_residuals": res, "max_relative_dual_residual": float(max(res)),
                "rayleigh_defects": rayleigh, "orthogonality_defect": orth}

    def summary(self) -> Dict[str, Any]:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "clusters": [[int(i) + 1 for i in g] for g in self.clusters()],
            "cluster_tol": self.cluster_tol,
            "complete": self.complete,
            "method": self.method,
        }


def _normalize(form: StiffnessForm, vectors: np.ndarray) -> np.ndarray:
    out = np.empty_like(vectors)
    for j in range(vectors.shape[1]):
        v = vectors[:, j] / form.norm(vectors[:, j])
        big = np.flatnonzero(np.abs(v) > 1e-8 * np.max(np.abs(v)))
        if big.size and v[big[0]] < 0:
            v = -v
        out[:, j] = v
    return out


def weighted_eigs(form: StiffnessForm, theta: Any, m: int, cluster_tol: float = DEFAULT_CLUSTER_TOL,
                  dense_limit: int = DENSE_LIMIT) -> Spectrum:
    """
    First m positive eigenvalues of -Laplace u = lambda theta u.

    Args:
        form: Stiffness form of the grid.
        theta: Nodal weight (GridField or array); may change sign.
        m: Number of eigenpairs requested.
        cluster_tol: Relative tolerance for multiplicity grouping.
        dense_limit: Node count under which dense LAPACK solvers are used.

    Returns:
        Spectrum holding at least m pairs (a few more when available, so the
        m-th cluster can be closed).

    Raises:
        NoPositiveSpectrumError: theta has no positive part.
        InsufficientSpectrumError: fewer than m positive eigenvalues exist.
    """
    grid = form.grid
    weight = grid.values(theta).astype(float)
    if not np.all(np.isfinite(weight)):
        raise NoPositiveSpectrumError("weight must be finite")
    if not np.any(weight > 0):
        raise NoPositiveSpectrumError("weight has no positive part; the weighted problem has no positive eigenvalue")
    scale = float(np.max(np.abs(weight)))
    w = weight / scale
    n_pos = int(np.count_nonzero(w > 0))
    if m > n_pos:
        raise InsufficientSpectrumError(f"{m} eigenvalues requested, the weight admits only {n_pos} positive ones")
    k = min(m + EXTRA_PAIRS, n_pos)
    complete = k == n_pos
    n = grid.size
    vol = form.scale
    K = form.matrix
    dense = n <= dense_limit

    if np.all(w > 0):
        if dense:
            vals, vecs = linalg.eigh(K.toarray(), np.diag(vol * w), subset_by_index=[0, k - 1])
            method = "dense-definite"
        else:
            M = sparse.diags(vol * w, format="csc")
            vals, vecs = eigsh(K, k=k, M=M, sigma=0.0, which="LM")
            method = "shift-invert"
        order = np.argsort(vals)
        lam = vals[order] / scale
        vecs = vecs[:, order]
    else:
        # reversed pencil int(theta u v) = mu q(u, v), mu = 1/lambda, stiffness on the definite side
        if dense:
            mus, vecs = linalg.eigh(np.diag(vol * w), K.toarray(), subset_by_index=[n - k, n - 1])
            method = "dense-reversed"
        else:
            M = sparse.diags(vol * w, format="csc")
            mus, vecs = eigsh(M, k=k, M=K, which="LA")
            method = "lanczos-reversed"
        keep = mus > 0
        mus, vecs = mus[keep], vecs[:, keep]
        order = np.argsort(-mus)
        lam = 1.0 / (mus[order] * scale)
        vecs = vecs[:, order]
        if lam.size < m:
            raise InsufficientSpectrumError(f"{m} eigenvalues requested, {lam.size} positive ones found")

    spectrum = Spectrum(
        form=form, weight=weight, eigenvalues=np.asarray(lam, dtype=float),
        eigenvectors=_normalize(form, np.asarray(vecs, dtype=float)),
        cluster_tol=cluster_tol, complete=complete, method=method,
    )
    logger.debug(f"Computed {spectrum.count} eigenpairs ({method}), lambda_1 = {lam[0]:.12g}")
    return spectrum


def chi(s: Spectrum, m: int) -> Tuple[int, int]:
    return s.chi(m)


class Resonance(str, Enum):
    NON_RESONANT = "NonResonant"
    RESONANT = "Resonant"
    STRONGLY_RESONANT = "StronglyResonant"


@dataclass
class ResonanceVerdict:
    kind: Resonance
    resonant_index: Optional[int]
    distance_to_one: float
    eigenvalues: List[float]
    tol: float
    beta: Dict[str, Any] = field(default_factory=dict)
    defect: Dict[str, Any] = field(default_factory=dict)


def classify_resonance(model: NonlinearModel, s_eta: Spectrum, tol: float = 1e-6,
                       coords: Optional[np.ndarray] = None, ladder=None, cap: float = 1e8) -> ResonanceVerdict:
    """
    Classify the eta-weighted spectrum against 1.

    Resonant when some lambda_j(eta) is within tol of 1; strongly resonant when
    the sampled beta is finite everywhere as well. On a hit the limit of the
    defect primitive at the first sampled point is reported next to beta.

    Raises:
        SpectrumTooShortError: every computed eigenvalue is <= 1 + tol, so an
            eigenvalue equal to 1 could lie past the computed range.
    """
    lam = s_eta.eigenvalues
    gaps = np.abs(lam - 1.0)
    hit = np.flatnonzero(gaps <= tol)
    if hit.size == 0 and not s_eta.complete and lam[-1] <= 1.0 + tol:
        raise SpectrumTooShortError(
            f"largest computed eigenvalue {lam[-1]:.6g} does not exceed 1 + tol; request more eigenvalues"
        )
    distance = float(np.min(gaps))
    if hit.size == 0:
        return ResonanceVerdict(Resonance.NON_RESONANT, None, distance, lam.tolist(), tol)

    if coords is None:
        coords = s_eta.form.grid.coordinates()
    estimates = sample_beta(model, coords, ladder, cap)
    summary = beta_range(estimates)
    strong = all(e.status == "finite" for e in estimates)
    kind = Resonance.STRONGLY_RESONANT if strong else Resonance.RESONANT
    points = sample_points(model, coords)
    x0 = None if points is None else points[0]
    defect = defect_primitive_limit(model, x0, ladder, cap, estimates[0])
    logger.info(f"Resonance at lambda_{int(hit[0]) + 1}(eta) = {lam[hit[0]]:.12g}: {kind.value}")
    return ResonanceVerdict(kind, int(hit[0]) + 1, distance, lam.tolist(), tol, summary, defect)

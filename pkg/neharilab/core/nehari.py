"""
Energy functional, admissible cone, fibering maps and the reduced functional.

    I(u)      = q(u, u)/2 - int F(x, u)
    h_u(t)    = I(t u),  h_u'(t) = t * phi_u(t)
    phi_u(t)  = q(u, u) - int_{u != 0} (f(x, t u) / (t u)) u^2
    delta(u)  = int eta u^2 - q(u, u)          (u is admissible iff delta > 0)
    Psi(v)    = I(t_v v) on the unit sphere of the admissible cone

phi_u is strictly decreasing when f/|t| is increasing, so the fiber of an
admissible u has exactly one critical point t_u, found by bracketing and
Brent's method.
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
from scipy.optimize import brentq

from neharilab.core.grid import StiffnessForm, support_measure
from neharilab.errors import BracketOverflowError, NotInAError
from neharilab.models.base import NonlinearModel
from neharilab.utils.logging import setup_logger

# Setup logger
logger = setup_logger(__name__)

EPS = np.finfo(float).eps
T_MAX = 1e12
T_MIN = 1e-12
DEFAULT_FIBER_TOL = 1e-12
# Near-boundary window on delta of a unit field, and the slack on the support bound
MEASURE_WINDOW = 1e-3
MEASURE_SLACK = 0.9


@dataclass(frozen=True)
class FiberingResult:
    t_u: float
    value: float
    slope_residual: float
    bracket: tuple
    iterations: int
    function_calls: int
    converged: bool


@dataclass(frozen=True)
class AdmissibilityMargin:
    delta: float
    in_A: bool
    energy_norm: float
    eta_mass: float


@dataclass(frozen=True)
class MeasureBound:
    """Support of a unit field near the boundary of the cone against (S/|eta|_inf)^{N/2}."""

    delta: float
    applicable: bool
    support_measure: float
    lower_bound: float
    slack: float
    holds: bool

    @property
    def ratio(self) -> float:
        return self.support_measure / self.lower_bound if self.lower_bound > 0 else float("inf")


@dataclass(frozen=True)
class Gradient:
    """I'(u) in three representations."""

    coefficients: np.ndarray  # g with g . v = I'(u) v
    field: np.ndarray  # r = g / h^N, so that r . v h^N = I'(u) v
    riesz: np.ndarray  # K^{-1} g, the H^1 gradient
    dual_norm: float
    euclidean_norm: float


@dataclass(frozen=True)
class PsiState:
    value: float
    t: float
    gradient: np.ndarray  # tangent H^1 gradient at v
    residual: float  # H^1 norm of the tangent gradient
    fiber: FiberingResult


@dataclass
class LandscapeRow:
    t: float
    h: float
    dh: float


class EnergyFunctional:
    """Energy, fibering and reduced functional for one model on one grid."""

    def __init__(self, model: NonlinearModel, form: StiffnessForm):
        self.model = model
        self.form = form
        self.grid = form.grid
        self.vol = form.scale
        self.coords = self.grid.coordinates()
        n = self.grid.size
        self.alpha_nodes = np.broadcast_to(np.asarray(model.alpha(self.coords), dtype=float), (n,)).copy()
        self.eta_nodes = np.broadcast_to(np.asarray(model.eta(self.coords), dtype=float), (n,)).copy()

    def _array(self, u: Any) -> np.ndarray:
        return self.grid.values(u)

    # -- energy and derivative -------------------------------------------------

    def energy(self, u: Any) -> float:
        u = self._array(u)
        return 0.5 * self.form.q(u) - self.vol * float(np.sum(self.model.F(self.coords, u)))

    def load(self, u: Any) -> np.ndarray:
        """Coefficient vector g = K u - h^N f(x, u), so that I'(u) v = g . v."""
        u = self._array(u)
        return self.form.apply(u) - self.vol * self.model.f(self.coords, u)

    def derivative(self, u: Any, v: Any) -> float:
        return float(self.load(u) @ self._array(v))

    def gradient(self, u: Any) -> Gradient:
        g = self.load(u)
        riesz = self.form.solve(g)
        return Gradient(
            coefficients=g,
            field=g / self.vol,
            riesz=riesz,
            dual_norm=float(np.sqrt(max(g @ riesz, 0.0))),
            euclidean_norm=float(np.linalg.norm(g)),
        )

    def nehari_residual(self, w: Any) -> float:
        """|q(w, w) - int f(x, w) w| relative to q(w, w)."""
        w = self._array(w)
        qw = self.form.q(w)
        return abs(qw - self.vol * float(np.sum(self.model.f(self.coords, w) * w))) / max(qw, EPS)

    def nehari_energy_gap(self, w: Any) -> float:
        """Relative gap between I(w) and int [f(x, w) w / 2 - F(x, w)]."""
        w = self._array(w)
        value = self.energy(w)
        alt = self.vol * float(np.sum(self.model.excess(self.coords, w)))
        return abs(value - alt) / max(abs(value), EPS)

    # -- admissible cone -------------------------------------------------------

    def admissibility(self, u: Any) -> AdmissibilityMargin:
        u = self._array(u)
        qu = self.form.q(u)
        eta_mass = self.vol * float(np.sum(self.eta_nodes * u * u))
        delta = eta_mass - qu
        return AdmissibilityMargin(delta=delta, in_A=bool(delta > 0), energy_norm=qu, eta_mass=eta_mass)

    def measure_bound(self, u: Any, sobolev: float, window: float = MEASURE_WINDOW,
                      slack: float = MEASURE_SLACK) -> MeasureBound:
        """
        Check |[u != 0]| >= slack (S/|eta|_inf)^{N/2} for u scaled to unit norm.

        The bound applies on the boundary of the admissible sphere, so it is
        only enforced when |delta| <= window; elsewhere holds is True.

        Args:
            u: Nonzero field.
            sobolev: Sobolev constant S of the domain.
        """
        u = self._array(u)
        v = u / self.form.norm(u)
        delta = self.admissibility(v).delta
        eta_sup = float(np.max(np.abs(self.eta_nodes)))
        lower = (sobolev / eta_sup) ** (self.grid.dim / 2.0) if eta_sup > 0 else float("inf")
        measure = support_measure(self.grid, v)
        applicable = bool(abs(delta) <= window)
        holds = bool(not applicable or measure >= slack * lower)
        if not holds:
            logger.warning(f"Support {measure:.6g} of a near-boundary field is below {slack} x {lower:.6g}")
        return MeasureBound(delta=delta, applicable=applicable, support_measure=measure, lower_bound=lower,
                            slack=slack, holds=holds)

    # -- fibering ---------------------------------------------------------------

    def phi(self, u: Any, t: float) -> float:
        u = self._array(u)
        return self.form.q(u) - self.vol * float(np.sum(self.model.ratio(self.coords, t * u) * u * u))

    def slope(self, u: Any, t: float) -> float:
        """h_u'(t)."""
        return t * self.phi(u, t)

    def fiber(self, u: Any, t: float) -> float:
        """h_u(t) = I(t u)."""
        return self.energy(t * self._array(u))

    def fiber_limits(self, u: Any) -> Dict[str, float]:
        """Limits of h_u(t)/t^2 as t -> 0 and t -> infinity."""
        u = self._array(u)
        qu = self.form.q(u)
        return {
            "small_t": 0.5 * (qu - self.vol * float(np.sum(self.alpha_nodes * u * u))),
            "large_t": 0.5 * (qu - self.vol * float(np.sum(self.eta_nodes * u * u))),
        }

    def project_fiber(self, u: Any, tol: float = DEFAULT_FIBER_TOL) -> FiberingResult:
        """
        Find the unique t_u > 0 with h_u'(t_u) = 0.

        Raises:
            NotInAError: u = 0 or u is outside the admissible cone (h_u' > 0 throughout).
            BracketOverflowError: no sign change of phi in [1e-12, 1e12].
        """
        u = self._array(u)
        margin = self.admissibility(u)
        if not margin.in_A:
            raise NotInAError(
                f"direction is not admissible (delta = {margin.delta:.6e}); h_u is increasing on (0, inf)"
            )

        def phi(t: float) -> float:
            return self.phi(u, t)

        t_lo = t_hi = 1.0
        p1 = phi(1.0)
        calls = 1
        if p1 == 0.0:
            return self._fiber_result(u, 1.0, (1.0, 1.0), 0, calls, tol)
        if p1 > 0:
            while True:
                t_lo, t_hi = t_hi, 2.0 * t_hi
                calls += 1
                if phi(t_hi) < 0:
                    break
                if t_hi > T_MAX:
                    raise BracketOverflowError(
                        f"no sign change of the fiber slope up to t = {T_MAX:.0e} (delta = {margin.delta:.3e})"
                    )
        else:
            while True:
                t_hi, t_lo = t_lo, 0.5 * t_lo
                calls += 1
                if phi(t_lo) > 0:
                    break
                if t_lo < T_MIN:
                    raise BracketOverflowError(
                        f"fiber slope stays negative down to t = {T_MIN:.0e}; the small-t limit is not positive"
                    )

        t_u, info = brentq(phi, t_lo, t_hi, xtol=EPS * t_lo, rtol=4 * EPS, maxiter=200, full_output=True)
        return self._fiber_result(u, float(t_u), (t_lo, t_hi), info.iterations, calls + info.function_calls, tol)

    def _fiber_result(self, u: np.ndarray, t_u: float, bracket: tuple, iterations: int, calls: int,
                      tol: float) -> FiberingResult:
        residual = abs(self.slope(u, t_u))
        scale = max(1.0, self.form.q(u))
        return FiberingResult(
            t_u=t_u,
            value=self.fiber(u, t_u),
            slope_residual=residual,
            bracket=bracket,
            iterations=int(iterations),
            function_calls=int(calls),
            converged=bool(residual <= tol * (1.0 + t_u) * scale),
        )

    def fiber_sup(self, fields: Iterable[Any], tol: float = DEFAULT_FIBER_TOL) -> float:
        """Largest t_u over a finite sample of admissible directions."""
        return max(self.project_fiber(u, tol).t_u for u in fields)

    def nehari_map(self, u: Any, tol: float = DEFAULT_FIBER_TOL) -> np.ndarray:
        """t_u u, the projection of the ray through u onto the Nehari set."""
        u = self._array(u)
        return self.project_fiber(u, tol).t_u * u

    def inverse_map(self, w: Any) -> np.ndarray:
        w = self._array(w)
        return w / self.form.norm(w)

    def landscape(self, u: Any, t_grid: Sequence[float]) -> List[LandscapeRow]:
        """Samples (t, h_u(t), h_u'(t)) for diagnosis and plotting."""
        u = self._array(u)
        rows = []
        for t in t_grid:
            t = float(t)
            if t == 0.0:
                rows.append(LandscapeRow(0.0, 0.0, 0.0))
            else:
                rows.append(LandscapeRow(t, self.fiber(u, t), self.slope(u, t)))
        return rows

    # -- reduced functional ---------------------------------------------------

    def psi_state(self, v: Any, tol: float = DEFAULT_FIBER_TOL) -> PsiState:
        """Psi(v) = I(t_v v) with its tangent H^1 gradient."""
        v = self._array(v)
        fib = self.project_fiber(v, tol)
        w = fib.t_u * v
        riesz = self.form.solve(self.load(w))
        scale = fib.t_u * self.form.norm(v)
        tangent = riesz - self.form.q(v, riesz) / self.form.q(v) * v
        grad = scale * tangent
        return PsiState(value=fib.value, t=fib.t_u, gradient=grad, residual=self.form.norm(grad), fiber=fib)

    def psi(self, v: Any, tol: float = DEFAULT_FIBER_TOL) -> float:
        return self.psi_state(v, tol).value

    def psi_grad(self, v: Any, tol: float = DEFAULT_FIBER_TOL) -> np.ndarray:
        return self.psi_state(v, tol).gradient


def energy(model: NonlinearModel, form: StiffnessForm, u: Any) -> float:
    return EnergyFunctional(model, form).energy(u)


def project_fiber(model: NonlinearModel, form: StiffnessForm, u: Any, tol: float = DEFAULT_FIBER_TOL) -> FiberingResult:
    return EnergyFunctional(model, form).project_fiber(u, tol)

"""
Certificates for the finite-beta condition and the end-to-end ledger of the
piecewise (section5) example.

The condition under test is

    essinf beta > |eta|_inf^{N/2} tau_m^2 / (2 lambda_1(eta - alpha) S^{N/2})

with S the Sobolev embedding constant of the domain. When it holds, every
level on the boundary of the admissible sphere lies above c_N.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from neharilab.core.grid import Grid, StiffnessForm, assemble_stiffness
from neharilab.core.nehari import EnergyFunctional
from neharilab.core.solve import TauResult, tau_m
from neharilab.core.spectrum import Spectrum, weighted_eigs
from neharilab.errors import (
    BetaUndecidedError,
    DimensionUnsupportedError,
    MissingIngredientError,
    PreconditionError,
    RegimeNotAttainedError,
)
from neharilab.models import section5_model
from neharilab.models.analysis import DEFAULT_CAP, beta_eval, check_fF, sample_beta
from neharilab.models.base import NonlinearModel
from neharilab.utils.logging import setup_logger

# Setup logger
logger = setup_logger(__name__)

__all__ = [
    "SobolevConstant",
    "BetaCertificate",
    "sobolev_quotient",
    "sobolev_estimate",
    "sobolev_from_config",
    "finito_rhs",
    "beta_certificate",
    "section5_pipeline",
    "check_fF",
]

EQUIVALENCE_TOL = 1e-10
ASYMPTOTIC_FACTORS = (1.0, 10.0, 100.0)


@dataclass
class SobolevConstant:
    value: float
    provenance: str  # user | discrete
    dim: int
    converged: bool = True
    iterations: int = 0
    quotient_trace: List[float] = field(default_factory=list)

    @classmethod
    def user(cls, value: float, dim: int) -> "SobolevConstant":
        if not value > 0:
            raise PreconditionError(f"Sobolev constant must be positive, got {value}")
        return cls(value=float(value), provenance="user", dim=dim)


def _critical_exponent(dim: int) -> float:
    if dim <= 2:
        raise DimensionUnsupportedError(
            f"the critical Sobolev exponent 2N/(N-2) is undefined for N={dim}; "
            "supply the constant explicitly with --sobolev <value>"
        )
    return 2.0 * dim / (dim - 2.0)


def sobolev_quotient(form: StiffnessForm, u: Any) -> float:
    """q(u, u) / |u|_{2*}^2, invariant under u -> c u."""
    grid = form.grid
    p = _critical_exponent(grid.dim)
    u = grid.values(u)
    return form.q(u) / grid.lp_norm(u, p) ** 2


def sobolev_estimate(grid_or_form: Any, tol: float = 1e-9, max_iter: int = 2000) -> SobolevConstant:
    """
    Discrete minimum of q(u, u)/|u|_{2*}^2 by normalized nonlinear inverse iteration.

    Each step solves K w = h^N |u|^{p-2} u and renormalizes |w|_p = 1; the
    quotient is nonincreasing along the iteration. On bounded domains the
    continuum infimum is not attained, so minimizers concentrate as the grid
    is refined and convergence slows down; the flag reports it.

    Raises:
        DimensionUnsupportedError: N <= 2.
    """
    form = grid_or_form if isinstance(grid_or_form, StiffnessForm) else assemble_stiffness(grid_or_form)
    grid = form.grid
    p = _critical_exponent(grid.dim)

    u = np.ones(grid.size)
    u /= grid.lp_norm(u, p)
    value = form.q(u)
    trace = [value]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = form.solve(grid.cell_volume * np.abs(u) ** (p - 2.0) * u)
        u = w / grid.lp_norm(w, p)
        new = form.q(u)
        trace.append(new)
        if abs(value - new) <= tol * new:
            value = new
            converged = True
            break
        value = new

    if not converged:
        logger.warning(f"Sobolev iteration not converged after {max_iter} steps (last change "
                       f"{abs(trace[-2] - trace[-1]) / trace[-1]:.2e})")
    logger.info(f"Discrete Sobolev constant {value:.10g} after {iterations} iterations")
    return SobolevConstant(value=float(value), provenance="discrete", dim=grid.dim, converged=converged,
                           iterations=iterations, quotient_trace=trace)


def sobolev_from_config(setting: Any, grid_or_form: Any) -> SobolevConstant:
    """Resolve a config/CLI value: a positive number or the string "discrete"."""
    grid = grid_or_form.grid if isinstance(grid_or_form, StiffnessForm) else grid_or_form
    if isinstance(setting, str):
        if setting.strip().lower() == "discrete":
            return sobolev_estimate(grid_or_form)
        try:
            setting = float(setting)
        except ValueError:
            raise PreconditionError(f"sobolev must be a positive number or 'discrete', got {setting!r}")
    return SobolevConstant.user(float(setting), grid.dim)


def finito_rhs(eta_sup: float, tau: float, lambda1_gap: float, sobolev: float, dim: int) -> float:
    """|eta|_inf^{N/2} tau^2 / (2 lambda_1(eta - alpha) S^{N/2})."""
    half = dim / 2.0
    return eta_sup**half * tau * tau / (2.0 * lambda1_gap * sobolev**half)


@dataclass
class BetaCertificate:
    essinf_beta: float
    beta_status: str
    beta_points: int
    eta_sup: float
    tau_m: float
    lambda1_gap: float
    sobolev: float
    sobolev_provenance: str
    dim: int
    lhs: float
    rhs: float
    verdict: bool
    vacuous: bool
    extrapolated: bool
    level_upper_bound: float
    support_lower_bound: float
    level_gap: Dict[str, Any] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    def recompute(self) -> Dict[str, Any]:
        """Recompute rhs and the verdict from the stored fields."""
        rhs = finito_rhs(self.eta_sup, self.tau_m, self.lambda1_gap, self.sobolev, self.dim)
        return {"lhs": self.essinf_beta, "rhs": rhs, "verdict": bool(self.essinf_beta > rhs)}


def _missing(**ingredients: Any) -> List[str]:
    return [name for name, value in ingredients.items() if value is None]


def beta_certificate(model: NonlinearModel, s_eta: Optional[Spectrum], s_gap: Optional[Spectrum],
                     tau: Optional[TauResult], sobolev: Optional[SobolevConstant], dim: Optional[int] = None,
                     coords: Optional[np.ndarray] = None, ladder: Optional[Sequence[float]] = None,
                     cap: float = DEFAULT_CAP, c_N: Optional[float] = None) -> BetaCertificate:
    """
    Evaluate the finite-beta condition and the level-gap audit.

    Args:
        model: Nonlinearity.
        s_eta: Spectrum of the eta weight (its weight gives |eta|_inf).
        s_gap: Spectrum of the eta - alpha weight.
        tau: tau_m from the solver.
        sobolev: Sobolev constant with provenance.
        dim: Space dimension; defaults to the grid dimension.
        coords: Nodes where beta is sampled; defaults to every grid node.
        c_N: Ground-state level for the level-gap audit, if available.

    Raises:
        MissingIngredientError: any ingredient is None.
        BetaUndecidedError: beta cannot be classified at some node.
    """
    missing = _missing(s_eta=s_eta, s_gap=s_gap, tau=tau, sobolev=sobolev)
    if missing:
        raise MissingIngredientError(missing)
    grid = s_eta.form.grid
    dim = grid.dim if dim is None else dim
    if coords is None:
        coords = grid.coordinates()

    estimates = sample_beta(model, coords, ladder, cap)
    undecided = [e for e in estimates if e.status == "undecided"]
    if undecided:
        raise BetaUndecidedError(f"beta undecided at {len(undecided)} of {len(estimates)} node(s): {undecided[0].note}")
    essinf = float(min(e.value for e in estimates))
    status = "finite" if math.isfinite(essinf) else "infinite"

    eta_sup = float(np.max(np.abs(s_eta.weight)))
    lambda1_gap = float(s_gap.eigenvalues[0])
    rhs = finito_rhs(eta_sup, tau.tau_m, lambda1_gap, sobolev.value, dim)
    verdict = bool(essinf > rhs)
    flags = []
    vacuous = essinf == math.inf
    if vacuous:
        flags.append("beta is +inf at every sampled node; the condition holds vacuously")
    extrapolated = dim <= 2
    if extrapolated:
        flags.append(f"N={dim}: critical exponent undefined, user-supplied S applied verbatim (extrapolated)")
    if not model.autonomous:
        flags.append(f"essinf over {len(estimates)} sampled node(s)")

    support_lower = (sobolev.value / eta_sup) ** (dim / 2.0)
    level_upper = tau.tau_m**2 / (2.0 * lambda1_gap)
    boundary_floor = support_lower * essinf
    level_gap: Dict[str, Any] = {"boundary_floor": boundary_floor, "level_upper_bound": level_upper}
    if c_N is not None:
        level_gap.update({"c_N": float(c_N), "holds": bool(c_N < boundary_floor)})
        if verdict and not c_N < boundary_floor:
            flags.append("certificate holds but c_N does not lie below the boundary floor")

    logger.info(f"Beta certificate: lhs={essinf:.10g} rhs={rhs:.10g} verdict={verdict}")
    return BetaCertificate(
        essinf_beta=essinf, beta_status=status, beta_points=len(estimates), eta_sup=eta_sup,
        tau_m=float(tau.tau_m), lambda1_gap=lambda1_gap, sobolev=sobolev.value,
        sobolev_provenance=sobolev.provenance, dim=dim, lhs=essinf, rhs=rhs, verdict=verdict,
        vacuous=vacuous, extrapolated=extrapolated, level_upper_bound=level_upper,
        support_lower_bound=support_lower, level_gap=level_gap, flags=flags,
    )


def _outer_bracket(theta: float, eta: float) -> float:
    """pi sqrt(a)/(2 eta) - sqrt(a)/eta arctan(theta^2/sqrt(a)) - 2 theta^3/(3 eta^2)."""
    sqrt_a = math.sqrt(theta**3 * (eta - theta))
    return (math.pi * sqrt_a / (2.0 * eta) - sqrt_a / eta * math.atan(theta**2 / sqrt_a)
            - 2.0 * theta**3 / (3.0 * eta**2))


def _relative_margin(lhs: float, rhs: float) -> float:
    return (lhs - rhs) / abs(rhs) if rhs != 0 else math.copysign(math.inf, lhs)


def section5_pipeline(eta: float, grid: Grid, sobolev: Optional[SobolevConstant] = None,
                      theta: Optional[float] = None, ladder: Optional[Sequence[float]] = None,
                      cap: float = DEFAULT_CAP, tau_restarts: int = 4, seed: int = 0,
                      fiber_tol: float = 1e-12) -> Dict[str, Any]:
    """
    End-to-end ledger of the piecewise example.

    u_* = e_1(eta) (H^1-normalized), theta = |u_*|_inf unless overridden, the
    model built from (theta, eta), closed-form beta against the numeric limit,
    t_* from fibering against 1/int|u_*|^3 on the quadratic branch, tau_1 from
    the solver, and every inequality of the chain with its intermediate values.

    Raises:
        PreconditionError: eta <= lambda_1 of the grid Laplacian.
        ModelParameterError: eta <= theta.
        RegimeNotAttainedError: t_* |u_*|_inf > theta, so the fiber maximum is
            not on the quadratic branch; the partial ledger is attached.
    """
    form = assemble_stiffness(grid)
    s_eta = weighted_eigs(form, np.full(grid.size, float(eta)), 1)
    lam1_eta = float(s_eta.eigenvalues[0])
    if not lam1_eta < 1.0:
        raise PreconditionError(
            f"eta={eta} does not exceed lambda_1 of the grid Laplacian ({lam1_eta * eta:.10g}); "
            "e_1 is not admissible"
        )
    u_star = s_eta.eigenfunction(1)
    sup_u = float(np.max(np.abs(u_star)))
    theta_value = sup_u if theta is None else float(theta)
    model = section5_model(theta_value, eta)
    functional = EnergyFunctional(model, form)
    measure = grid.measure
    N = grid.dim
    cube = grid.integrate(np.abs(u_star) ** 3)

    ledger: Dict[str, Any] = {
        "eta": float(eta),
        "grid": {"dim": N, "extents": [list(e) for e in grid.extents], "counts": list(grid.counts)},
        "theta": theta_value,
        "theta_source": "sup_norm" if theta is None else "override",
        "u_star_sup": sup_u,
        "u_star_energy_norm": form.norm(u_star),
        "lambda1_eta": lam1_eta,
        "lambda1_laplacian": lam1_eta * eta,
        "a": model.a,
        "continuity": {"gap": model.continuity_gap(),
                       "holds": bool(model.continuity_gap() <= 1e-12 * theta_value**2)},
    }

    estimate = beta_eval(model, None, ladder, cap)
    beta = model.beta_value()
    ledger["beta"] = {
        "closed_form": beta,
        "numeric": estimate.value,
        "numeric_status": estimate.status,
        "numeric_error": estimate.error,
        "difference": abs(estimate.value - beta),
        "fF_holds": check_fF(model, None, ladder, cap),
    }

    lower = 1.0 / (eta**1.5 * measure**0.5)
    ledger["cube_integral"] = {"value": cube, "lower_bound": lower, "holds": bool(cube > lower)}

    fiber = functional.project_fiber(u_star, fiber_tol)
    t_star = fiber.t_u
    t_inner = 1.0 / cube
    inner = bool(t_star * sup_u <= theta_value)
    ledger["fiber"] = {
        "t_star": t_star,
        "t_inner": t_inner,
        "inner_branch": inner,
        "t_times_sup": t_star * sup_u,
        "slope_residual": fiber.slope_residual,
    }
    ledger["t_star_bounds"] = {
        "printed_upper": lower,
        "printed_upper_holds": bool(t_star < lower),
        "consistent_upper": eta**1.5 * measure**0.5,
        "consistent_upper_holds": bool(t_star < eta**1.5 * measure**0.5),
    }
    if not inner:
        ledger["regime"] = "not attained"
        raise RegimeNotAttainedError(
            f"t_* |u_*|_inf = {t_star * sup_u:.6g} exceeds theta = {theta_value:.6g}: the fiber maximum is "
            f"on the asymptotically linear branch (t_* = {t_star:.10g}, quadratic-branch value {t_inner:.10g})",
            ledger,
        )
    ledger["regime"] = "attained"
    q_u = form.q(u_star)
    slopes_at = np.linspace(0.25, 1.0, 4) * t_star
    identity = [abs(functional.slope(u_star, t) - (t * q_u - t * t * cube)) for t in slopes_at]
    ledger["fiber"].update({
        "relative_difference": abs(t_star - t_inner) / t_inner,
        "slope_identity_residual": float(max(identity)),
    })

    tau = tau_m(functional, s_eta, 1, tau_restarts, seed, fiber_tol)
    ledger["tau"] = {"tau_m": tau.tau_m, "chi": tau.chi, "basis_values": tau.basis_values}

    big_q = _outer_bracket(theta_value, eta)
    ledger["asymptotics"] = {
        "limit": math.pi * theta_value**1.5 / 2.0,
        "samples": [{"eta": eta * k, "scaled_bracket": math.sqrt(eta * k) * _outer_bracket(theta_value, eta * k)}
                    for k in ASYMPTOTIC_FACTORS],
        "bracket": big_q,
        "positive": bool(big_q > 0),
    }

    if sobolev is None:
        ledger["missing"] = ["sobolev"]
        logger.warning("No Sobolev constant supplied: the inequality chain is not evaluated")
        return ledger

    half = N / 2.0
    S_half = sobolev.value**half
    bracket = theta_value**2 / eta + big_q  # 2 beta / eta^2
    # alpha = 0, so the gap weight eta - alpha is eta itself
    cert = beta_certificate(model, s_eta, s_eta, tau, sobolev, N, coords=None, ladder=ladder, cap=cap)
    printed_lhs = S_half * bracket
    printed_rhs = tau.tau_m**half
    faithful_lhs = S_half * bracket
    faithful_rhs = eta**half * tau.tau_m**2 / (eta**2 * cert.lambda1_gap)
    margin_cert = _relative_margin(cert.lhs, cert.rhs)
    margin_faithful = _relative_margin(faithful_lhs, faithful_rhs)
    ledger["sobolev"] = {"value": sobolev.value, "provenance": sobolev.provenance}
    ledger["certificate"] = cert
    ledger["inequality"] = {
        "printed": {"lhs": printed_lhs, "rhs": printed_rhs, "holds": bool(printed_lhs > printed_rhs),
                    "intermediate_rhs": eta**2 * tau.tau_m**half / (2.0 * S_half)},
        "faithful": {"lhs": faithful_lhs, "rhs": faithful_rhs, "holds": bool(faithful_lhs > faithful_rhs)},
        "equivalence": {
            "certificate_margin": margin_cert,
            "faithful_margin": margin_faithful,
            "agree": bool((margin_cert > 0) == (margin_faithful > 0)
                          and abs(margin_cert - margin_faithful) <= EQUIVALENCE_TOL * max(1.0, abs(margin_cert))),
        },
        "printed_matches_faithful": bool((printed_lhs > printed_rhs) == (faithful_lhs > faithful_rhs)),
    }
    logger.info(f"Example ledger: certificate verdict {cert.verdict}, printed form {printed_lhs > printed_rhs}")
    return ledger

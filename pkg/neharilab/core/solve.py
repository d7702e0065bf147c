"""
Minimization drivers.

Ground states come from Sobolev-gradient descent of the reduced functional
Psi on the unit sphere of the admissible cone (retraction w -> w/||w||, Armijo
backtracking). tau_m minimizes the fibering scale over the sphere of the
first eta-eigenspaces. The coercive driver minimizes I itself from a start
with negative energy.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from neharilab.config.settings import thread_cap
from neharilab.core.nehari import MEASURE_WINDOW, EnergyFunctional, MeasureBound, PsiState
from neharilab.core.spectrum import Spectrum
from neharilab.errors import (
    BoundaryEscapeError,
    BracketOverflowError,
    FailedNegativeStartError,
    HypothesisError,
    NonConvergenceError,
    NotInAError,
)
from neharilab.utils.logging import setup_logger

# Setup logger
logger = setup_logger(__name__)

EPS = np.finfo(float).eps
NOISE_FACTOR = 64.0
MIN_STEP = 1e-20
SCAN_POINTS = 61


@dataclass
class SolveOptions:
    tol: float = 1e-8
    fiber_tol: float = 1e-12
    max_iter: int = 5000
    restarts: int = 1
    seed: int = 0
    delta_min: float = 1e-10
    initial_step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    perturbation: float = 0.1
    escape_ratio: float = 1e-6
    escape_window: int = 20
    tau_restarts: int = 4
    scan_amplitude: float = 1.0
    # Sobolev constant for the support check on near-boundary iterates
    sobolev: Optional[float] = None

    @classmethod
    def from_config(cls, config: Any) -> "SolveOptions":
        data = config.model_dump() if hasattr(config, "model_dump") else dict(config)
        return cls(**data)


class SignClass(str, Enum):
    NONNEGATIVE = "nonnegative"
    NONPOSITIVE = "nonpositive"
    SIGN_CHANGING = "sign_changing"


@dataclass
class SignReport:
    kind: SignClass
    degenerate: bool
    energy_plus: Optional[float] = None
    energy_minus: Optional[float] = None


@dataclass
class GroundStateReport:
    u_star: np.ndarray
    v_star: np.ndarray
    c_N: float
    t_star: float
    dual_residual: float
    gradient_dual_norm: float
    nehari_residual: float
    nehari_energy_gap: float
    sign: SignClass
    sign_audit: Dict[str, Any]
    margin_trace: List[float]
    t_trace: List[float]
    psi_trace: List[float]
    step_trace: List[float]
    residual_trace: List[float]
    iterations: int
    converged: bool
    rejected_steps: Dict[str, int] = field(default_factory=dict)
    restart_values: List[float] = field(default_factory=list)
    restart_spread: float = 0.0
    measure_bound: Optional[MeasureBound] = None
    options: Dict[str, Any] = field(default_factory=dict)

    def trace_rows(self) -> List[Dict[str, float]]:
        return [
            {"iteration": k, "psi": p, "t": t, "delta": d, "residual": r, "step": s}
            for k, (p, t, d, r, s) in enumerate(
                zip(self.psi_trace, self.t_trace, self.margin_trace, self.residual_trace, self.step_trace)
            )
        ]


@dataclass
class TauResult:
    tau_m: float
    coefficients: np.ndarray
    restarts: int
    chi: int
    basis_values: List[float]
    field: np.ndarray

    @property
    def margin(self) -> float:
        return self.tau_m


@dataclass
class CoerciveReport:
    u_star: np.ndarray
    energy: float
    dual_residual: float
    iterations: int
    converged: bool
    small_t_slope: float
    lambda1_alpha: float
    start_amplitude: float
    scan_amplitudes: List[float]
    scan_values: List[float]
    energy_trace: List[float]
    residual_trace: List[float]
    sign: SignClass
    options: Dict[str, Any] = field(default_factory=dict)


def sign_of(u: np.ndarray, tol: float = 1e-8, functional: Optional[EnergyFunctional] = None) -> SignReport:
    """
    Classify the sign of a field up to tol * |u|_inf.

    With a functional, I(u+) and I(u-) are reported for the sign audit.
    """
    u = np.asarray(u, dtype=float)
    peak = float(np.max(np.abs(u))) if u.size else 0.0
    if peak == 0.0:
        kind, degenerate = SignClass.NONNEGATIVE, True
    elif np.min(u) >= -tol * peak:
        kind, degenerate = SignClass.NONNEGATIVE, False
    elif np.max(u) <= tol * peak:
        kind, degenerate = SignClass.NONPOSITIVE, False
    else:
        kind, degenerate = SignClass.SIGN_CHANGING, False
    report = SignReport(kind=kind, degenerate=degenerate)
    if functional is not None:
        report.energy_plus = functional.energy(np.maximum(u, 0.0))
        report.energy_minus = functional.energy(np.minimum(u, 0.0))
    return report


def random_admissible_field(spectrum: Spectrum, k: int, rng: np.random.Generator) -> np.ndarray:
    """
    Unit-norm random combination of the first k eigenfunctions.

    Such a field v has q(v, v) = 1 and int eta v^2 = sum c_j^2 / lambda_j, so
    it lies in the admissible cone whenever lambda_k(eta) < 1.
    """
    k = min(k, spectrum.count)
    c = rng.standard_normal(k)
    c /= np.linalg.norm(c)
    v = spectrum.eigenvectors[:, :k] @ c
    return v / spectrum.form.norm(v)


def _noise_level(value: float) -> float:
    return NOISE_FACTOR * EPS * max(1.0, abs(value))


def _tightest_bound(functional: EnergyFunctional, v: np.ndarray, delta: float, opts: SolveOptions,
                    current: Optional[MeasureBound]) -> Optional[MeasureBound]:
    """Keep the near-boundary support check with the smallest support-to-bound ratio."""
    if opts.sobolev is None or abs(delta) > MEASURE_WINDOW:
        return current
    check = functional.measure_bound(v, opts.sobolev)
    if current is None or check.ratio < current.ratio:
        return check
    return current


def _descend(
functional: EnergyFunctional, v0: np.ndarray, opts: SolveOptions, label: str = "") -> GroundStateReport:
    """One Riemannian descent of Psi from v0."""
    form = functional.form
    v = v0 / form.norm(v0)
    state = functional.psi_state(v, opts.fiber_tol)
    delta0 = functional.admissibility(v).delta
    near = _tightest_bound(functional, v, delta0, opts, None)
    psi_trace = [state.value]
    t_trace = [state.t]
    margin_trace = [delta0]
    residual_trace = [state.residual]
    step_trace = [0.0]
    rejected = {"armijo": 0, "a_guard": 0, "fibering": 0}
    step = opts.initial_step
    converged = state.residual <= opts.tol
    iterations = 0
    stalled = False

    while not converged and iterations < opts.max_iter:
        iterations += 1
        g = state.gradient
        g2 = state.residual**2
        s = min(2.0 * step, opts.initial_step) if iterations > 1 else opts.initial_step
        accepted: Optional[PsiState] = None
        v_new = v
        while s >= MIN_STEP:
            w = v - s * g
            v_new = w / form.norm(w)
            margin = functional.admissibility(v_new)
            if margin.delta < opts.delta_min * margin.eta_mass:
                rejected["a_guard"] += 1
                logger.debug(f"{label} iter {iterations}: A-guard rejects step {s:.3e} (delta {margin.delta:.3e})")
                s *= opts.shrink
                continue
            try:
                trial = functional.psi_state(v_new, opts.fiber_tol)
            except (NotInAError, BracketOverflowError) as e:
                rejected["fibering"] += 1
                logger.debug(f"{label} iter {iterations}: fibering failed at step {s:.3e}: {e}")
                s *= opts.shrink
                continue
            decrease = state.value - trial.value
            if decrease >= opts.armijo * s * g2:
                accepted = trial
                break
            if abs(decrease) <= _noise_level(state.value) and trial.residual < state.residual:
                accepted = trial
                break
            rejected["armijo"] += 1
            s *= opts.shrink

        if accepted is None:
            stalled = True
            logger.debug(f"{label} iter {iterations}: line search exhausted at residual {state.residual:.3e}")
            break

        v, state, step = v_new, accepted, s
        delta = functional.admissibility(v).delta
        near = _tightest_bound(functional, v, delta, opts, near)
        psi_trace.append(state.value)
        t_trace.append(state.t)
        margin_trace.append(delta)
        residual_trace.append(state.residual)
        step_trace.append(s)
        converged = state.residual <= opts.tol
        if iterations % 100 == 0:
            logger.debug(f"{label} iter {iterations}: Psi={state.value:.15g} residual={state.residual:.3e} t={state.t:.6g}")

        window = opts.escape_window
        if len(margin_trace) > window:
            recent = margin_trace[-window:]
            if max(recent) < opts.escape_ratio * delta0 and t_trace[-1] >= 2.0 * t_trace[-window]:
                report = _assemble(functional, v, state, opts, False, iterations, psi_trace, t_trace,
                                   margin_trace, residual_trace, step_trace, rejected)
                report.measure_bound = near
                raise BoundaryEscapeError(
                    f"descent drifts to the boundary of the admissible sphere at iteration {iterations}: "
                    f"delta {recent[-1]:.3e} (start {delta0:.3e}), t_v {t_trace[-1]:.3e}, Psi {state.value:.10g}; "
                    "the energy along such sequences is bounded below by the integral of beta over the support",
                    report,
                )

    report = _assemble(functional, v, state, opts, converged, iterations, psi_trace, t_trace, margin_trace,
                       residual_trace, step_trace, rejected)
    report.measure_bound = near
    if not report.converged:
        reason = "line search stalled" if stalled else f"max_iter={opts.max_iter} reached"
        raise NonConvergenceError(
            f"ground-state descent did not converge ({reason}) at iteration {iterations}: "
            f"residual {state.residual:.3e}, Nehari residual {report.nehari_residual:.3e} (tol {opts.tol:.1e})",
            report,
        )
    return report


def _assemble(functional: EnergyFunctional, v: np.ndarray, state: PsiState, opts: SolveOptions, converged: bool,
              iterations: int, psi_trace, t_trace, margin_trace, residual_trace, step_trace,
              rejected) -> GroundStateReport:
    u_star = state.t * v
    c_N = functional.energy(u_star)
    nehari_residual = functional.nehari_residual(u_star)
    sign = sign_of(u_star, 1e-8, functional)
    audit_ok = sign.kind != SignClass.SIGN_CHANGING
    audit = {
        "energy_plus": sign.energy_plus,
        "energy_minus": sign.energy_minus,
        "sum_vs_twice_level": (sign.energy_plus or 0.0) + (sign.energy_minus or 0.0) - 2.0 * c_N,
        "signed": audit_ok,
        "solver_failure": not audit_ok,
    }
    return GroundStateReport(
        u_star=u_star,
        v_star=v,
        c_N=c_N,
        t_star=state.t,
        dual_residual=state.residual,
        gradient_dual_norm=functional.gradient(u_star).dual_norm,
        nehari_residual=nehari_residual,
        nehari_energy_gap=functional.nehari_energy_gap(u_star),
        sign=sign.kind,
        sign_audit=audit,
        margin_trace=list(margin_trace),
        t_trace=list(t_trace),
        psi_trace=list(psi_trace),
        step_trace=list(step_trace),
        residual_trace=list(residual_trace),
        iterations=iterations,
        converged=bool(converged and nehari_residual <= opts.tol),
        rejected_steps=dict(rejected),
        options=asdict(opts),
    )


def _workers(restarts: int) -> int:
    cap = thread_cap()
    limit = cap if cap is not None else (os.cpu_count() or 1)
    return max(1, min(restarts, limit))


def ground_state(functional: EnergyFunctional, s_eta: Spectrum, opts: Optional[SolveOptions] = None,
                 start: Optional[np.ndarray] = None, hypotheses: Any = None, force: bool = False) -> GroundStateReport:
    """
    Minimize Psi over the admissible unit sphere.

    Args:
        functional: Energy functional of the model on the grid.
        s_eta: Spectrum of the eta weight; e_1(eta) is the default start.
        opts: Solver options.
        start: Optional start direction instead of e_1(eta).
        hypotheses: HypothesisReport gating the run (skipped when None).
        force: Run even if the hypotheses do not pass.

    Returns:
        Report of the best converged restart.

    Raises:
        HypothesisError: hypotheses fail and force is not set.
        BoundaryEscapeError, NonConvergenceError: when no restart converges.
    """
    opts = opts or SolveOptions()
    if hypotheses is not None and not hypotheses.ground_state_ready:
        if not force:
            raise HypothesisError(
                f"ground-state hypotheses not satisfied (f1={hypotheses.f1_ok.value}, f2={hypotheses.f2_ok.value}); "
                "use --force to run anyway",
                hypotheses,
            )
        logger.warning("Hypotheses fail; running the ground-state solver anyway (forced)")

    v0 = s_eta.eigenfunction(1) if start is None else np.asarray(start, dtype=float)
    seeds = np.random.SeedSequence(opts.seed).spawn(opts.restarts)
    # only eigen-directions below 1 keep the perturbed starts admissible
    k = max(1, min(4, int(np.count_nonzero(s_eta.eigenvalues < 1.0))))
    starts = [v0]
    for child in seeds[1:]:
        rng = np.random.default_rng(child)
        noise = random_admissible_field(s_eta, k, rng)
        starts.append(v0 / functional.form.norm(v0) + opts.perturbation * noise)

    logger.info(f"Ground-state descent with {len(starts)} start(s)")
    outcomes: List[Any] = []
    if len(starts) == 1:
        try:
            outcomes.append(_descend(functional, starts[0], opts, "run 0"))
        except (NonConvergenceError, BoundaryEscapeError) as e:
            outcomes.append(e)
    else:
        def run(index: int):
            try:
                return _descend(functional, starts[index], opts, f"run {index}")
            except (NonConvergenceError, BoundaryEscapeError) as e:
                return e

        with ThreadPoolExecutor(max_workers=_workers(len(starts))) as pool:
            outcomes = list(pool.map(run, range(len(starts))))

    reports = [o for o in outcomes if isinstance(o, GroundStateReport)]
    if not reports:
        raise outcomes[0]
    values = [r.c_N for r in reports]
    best = min(reports, key=lambda r: r.c_N)
    best.restart_values = values
    best.restart_spread = check_restart_agreement(values)
    if best.sign_audit["solver_failure"]:
        logger.warning("Ground state changes sign: the minimizer should be signed, flagging as a solver failure")
    logger.info(f"Ground state: c_N={best.c_N:.12g} residual={best.dual_residual:.3e} iterations={best.iterations}")
    return best


def _orthonormal_basis(s_eta: Spectrum, chi: int) -> np.ndarray:
    """First chi eigenvectors re-orthonormalized in the stiffness inner product."""
    E = s_eta.eigenvectors[:, :chi]
    gram = E.T @ (s_eta.form.matrix @ E)
    L = np.linalg.cholesky(0.5 * (gram + gram.T))
    return np.linalg.solve(L, E.T).T


def tau_m(functional: EnergyFunctional, s_eta: Spectrum, m_index: int = 1, restarts: int = 4,
          seed: int = 0, fiber_tol: float = 1e-12, max_iter: int = 200) -> TauResult:
    """
    Minimize t_u over the unit sphere of the span of the eigenspaces through lambda_m(eta).

    Candidates are the basis directions +-e_j plus projected descent from
    seeded random coefficients, with finite-difference gradients in
    coefficient space.
    """
    chi, _ = s_eta.chi(m_index)
    E = _orthonormal_basis(s_eta, chi)

    def t_of(c: np.ndarray) -> float:
        return functional.project_fiber(E @ c, fiber_tol).t_u

    best_c = None
    best_t = np.inf
    basis_values = []
    for j in range(chi):
        for sign in ((1.0,) if functional.model.odd else (1.0, -1.0)):
            c = np.zeros(chi)
            c[j] = sign
            t = t_of(c)
            if sign > 0:
                basis_values.append(t)
            if t < best_t:
                best_t, best_c = t, c

    used = 0
    if chi > 1:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        starts = [best_c.copy()] + [rng.standard_normal(chi) for _ in range(restarts)]
        for c in starts:
            used += 1
            c = c / np.linalg.norm(c)
            t = t_of(c)
            step = 0.5
            for _ in range(max_iter):
                eps = 1e-6
                grad = np.array([(t_of(c + eps * e) - t_of(c - eps * e)) / (2 * eps) for e in np.eye(chi)])
                grad -= (grad @ c) * c
                gnorm = np.linalg.norm(grad)
                if gnorm <= 1e-10 * t:
                    break
                moved = False
                while step > 1e-14:
                    c_new = c - step * grad / gnorm
                    c_new /= np.linalg.norm(c_new)
                    t_new = t_of(c_new)
                    if t_new < t:
                        c, t = c_new, t_new
                        step *= 2.0
                        moved = True
                        break
                    step *= 0.5
                if not moved:
                    break
            if t < best_t:
                best_t, best_c = t, c

    logger.info(f"tau_{m_index} = {best_t:.12g} over a sphere of dimension {chi}")
    return TauResult(tau_m=float(best_t), coefficients=best_c, restarts=used, chi=chi,
                     basis_values=basis_values, field=E @ best_c)


def coercive_min(functional: EnergyFunctional, s_alpha: Spectrum, opts: Optional[SolveOptions] = None,
                 hypotheses: Any = None, force: bool = False) -> CoerciveReport:
    """
    Global minimum of a coercive energy, started where I < 0 along e_1(alpha).

    Raises:
        FailedNegativeStartError: I(t e_1) >= 0 on the whole amplitude scan.
        NonConvergenceError: the descent does not reach the residual target.
    """
    opts = opts or SolveOptions()
    if hypotheses is not None and not hypotheses.coercive_ready:
        if not force:
            raise HypothesisError(
                f"coercive hypotheses not satisfied (f1'={hypotheses.f1p_ok.value}, "
                f"f2'={hypotheses.f2p_ok.value}); use --force to run anyway",
                hypotheses,
            )
        logger.warning("Hypotheses fail; running the coercive minimizer anyway (forced)")

    form = functional.form
    e1 = s_alpha.eigenfunction(1)
    lam1 = float(s_alpha.eigenvalues[0])
    slope = 0.5 * (1.0 - 1.0 / lam1)
    peak = float(np.max(np.abs(e1)))
    amplitudes = np.logspace(-6, np.log10(opts.scan_amplitude), SCAN_POINTS)
    values = [functional.energy((a / peak) * e1) for a in amplitudes]
    best = int(np.argmin(values))
    if not values[best] < 0:
        raise FailedNegativeStartError(
            f"I(t e_1) >= 0 for every amplitude in [1e-6, {opts.scan_amplitude:g}] "
            f"(small-t slope {slope:.6g}); no negative start exists"
        )

    u = (amplitudes[best] / peak) * e1
    value = values[best]
    grad = functional.gradient(u)
    energy_trace = [value]
    residual_trace = [grad.dual_norm]
    step = opts.initial_step
    iterations = 0
    converged = grad.dual_norm <= opts.tol
    while not converged and iterations < opts.max_iter:
        iterations += 1
        s = min(2.0 * step, opts.initial_step) if iterations > 1 else opts.initial_step
        accepted = None
        while s >= MIN_STEP:
            trial_u = u - s * grad.riesz
            trial_value = functional.energy(trial_u)
            decrease = value - trial_value
            if decrease >= opts.armijo * s * grad.dual_norm**2:
                accepted = trial_u
                break
            if abs(decrease) <= _noise_level(value):
                trial_grad = functional.gradient(trial_u)
                if trial_grad.dual_norm < grad.dual_norm:
                    accepted = trial_u
                    break
            s *= opts.shrink
        if accepted is None:
            break
        u, step = accepted, s
        value = functional.energy(u)
        grad = functional.gradient(u)
        energy_trace.append(value)
        residual_trace.append(grad.dual_norm)
        converged = grad.dual_norm <= opts.tol

    report = CoerciveReport(
        u_star=u, energy=value, dual_residual=grad.dual_norm, iterations=iterations, converged=converged,
        small_t_slope=slope, lambda1_alpha=lam1, start_amplitude=float(amplitudes[best]),
        scan_amplitudes=amplitudes.tolist(), scan_values=[float(x) for x in values],
        energy_trace=energy_trace, residual_trace=residual_trace,
        sign=sign_of(u).kind, options=asdict(opts),
    )
    if not converged:
        raise NonConvergenceError(
            f"coercive descent did not converge at iteration {iterations}: residual {grad.dual_norm:.3e}", report
        )
    logger.info(f"Coercive minimum: I={value:.12g} residual={grad.dual_norm:.3e} iterations={iterations}")
    return report


def check_restart_agreement(values: Sequence[float]) -> float:
    """Largest relative spread of c_N across restarts."""
    values = np.asarray(values, dtype=float)
    return float((values.max() - values.min()) / max(abs(values.min()), EPS))

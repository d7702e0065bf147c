"""
Hypothesis checks and limits for nonlinear models.

Everything here works by sampling: a log-spaced t-lattice on both signs
times an evenly spread node sample. Verdicts are tri-state and a failing
verdict always carries a witness.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence

import numpy as np

from neharilab.errors import BetaUndecidedError, PreconditionError
from neharilab.models.base import NonlinearModel
from neharilab.utils.logging import setup_logger

if TYPE_CHECKING:
    from neharilab.core.spectrum import Spectrum

# Setup logger
logger = setup_logger(__name__)

EPS = np.finfo(float).eps
TIE_FACTOR = 64.0
DEFAULT_LADDER = (1e3, 1e4, 1e5, 1e6)
DEFAULT_CAP = 1e8
# Increment ratio on the ladder separating growth from convergence
GROWTH_RATIO = 0.5
# Above the cap a monotone tail only counts as divergent if it decays slower than this
CAP_RATIO = 0.1


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    UNDECIDED = "undecided"


@dataclass
class BetaEstimate:
    """Limit of f(x, t) t / 2 - F(x, t) as |t| -> infinity at one point."""

    value: float
    status: str  # finite | infinite | undecided
    error: float
    ladder: List[float]
    samples_plus: List[float]
    samples_minus: List[float]
    note: str = ""

    @property
    def finite(self) -> bool:
        return self.status == "finite"


@dataclass
class LatticeSpec:
    t_min: float = 1e-6
    t_max: float = 1e6
    size: int = 64
    sample_nodes: int = 16

    def positive(self) -> np.ndarray:
        return np.logspace(np.log10(self.t_min), np.log10(self.t_max), self.size)

    def two_sided(self) -> np.ndarray:
        pos = self.positive()
        return np.concatenate([-pos[::-1], pos])


@dataclass
class HypothesisReport:
    f1_ok: Verdict
    f1_literal_ok: Verdict
    f2_ok: Verdict
    f1p_ok: Verdict
    f2p_ok: Verdict
    fF_holds: Verdict
    monotonicity_checks: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    witnesses: Dict[str, Any] = field(default_factory=dict)
    spectral_inputs: Dict[str, float] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)
    nodes_sampled: int = 0
    ties: int = 0

    @property
    def ground_state_ready(self) -> bool:
        """(f1) in its weakened reading plus (f2) both pass."""
        return self.f1_ok == Verdict.PASS and self.f2_ok == Verdict.PASS

    @property
    def coercive_ready(self) -> bool:
        return self.f1p_ok == Verdict.PASS and self.f2p_ok == Verdict.PASS


def _tail_status(ladder: np.ndarray, b: np.ndarray, cap: float,
                 noise: Optional[np.ndarray] = None) -> Dict[str, Any]:
    d = np.diff(b)
    scale = max(1.0, float(np.max(np.abs(b))))
    tiny = TIE_FACTOR * EPS * scale
    if noise is not None and np.any(noise > 0):
        floor = tiny + noise[1:] + noise[:-1]
        within = np.abs(d) <= floor
        if within[-1]:
            # trailing increments are roundoff; judge on the trusted prefix
            k = d.size
            while k > 0 and within[k - 1]:
                k -= 1
            if k >= 2:
                return _tail_status(ladder[:k + 1], b[:k + 1], cap)
            value = float(b[k])
            error = float(np.max(np.abs(b[k:] - b[k])) + noise[k] + tiny)
            return {"status": "finite", "value": value, "error": error,
                    "note": f"increments within roundoff from T = {ladder[k]:.0e}"}
    last, prev = d[-1], d[-2]
    window = d[-min(4, d.size):]
    monotone = bool(np.all(window > 0) or np.all(window < 0))

    if abs(last) <= tiny or abs(last) <= GROWTH_RATIO * abs(prev):
        # decaying tail: Richardson in 1/T^2 over the last two pairs
        t2 = ladder**2
        rich = (t2[1:] * b[1:] - t2[:-1] * b[:-1]) / (t2[1:] - t2[:-1])
        if abs(last) <= tiny:
            value = float(b[-1])
            error = float(abs(last) + tiny)
        else:
            value = float(rich[-1])
            error = float(abs(rich[-1] - rich[-2]) + tiny)
        if abs(b[-1]) > cap and monotone and abs(last) > CAP_RATIO * abs(prev):
            return {"status": "infinite", "value": float(np.sign(last) * np.inf), "error": 0.0,
                    "note": "monotone tail beyond cap"}
        return {"status": "finite", "value": value, "error": error, "note": "increments decay"}
    if np.sign(last) == np.sign(prev) and abs(last) > tiny:
        return {"status": "infinite", "value": float(np.sign(last) * np.inf), "error": 0.0,
                "note": "increments do not decay"}
    return {"status": "undecided", "value": float("nan"), "error": float("inf"),
            "note": "oscillatory or irregular tail"}


def beta_eval(model: NonlinearModel, x: Any = None, ladder: Optional[Sequence[float]] = None,
              cap: float = DEFAULT_CAP) -> BetaEstimate:
    """
    Estimate beta(x) = lim_{|t|->inf} [f(x, t) t / 2 - F(x, t)].

    Args:
        model: Nonlinearity.
        x: One point of shape (dim,), or None for autonomous models.
        ladder: Ascending positive T values, at least 3, the last >= 1e3.
        cap: Magnitude beyond which a monotone tail is declared infinite.

    Returns:
        BetaEstimate with status finite, infinite or undecided. Both t -> +inf
        and t -> -inf are evaluated; they must agree.
    """
    T = np.asarray(DEFAULT_LADDER if ladder is None else ladder, dtype=float)
    if T.size < 3 or np.any(T <= 0) or np.any(np.diff(T) <= 0) or T[-1] < 1e3:
        raise PreconditionError("beta ladder needs >= 3 ascending positive values ending at or above 1e3")

    xs = None if x is None else np.broadcast_to(np.asarray(x, dtype=float), (T.size, np.size(x)))
    b_plus = np.asarray(model.excess(xs, T), dtype=float).reshape(T.size)
    b_minus = np.asarray(model.excess(xs, -T), dtype=float).reshape(T.size)
    noise_plus = np.asarray(model.cancellation_noise(xs, T), dtype=float).reshape(T.size)
    noise_minus = np.asarray(model.cancellation_noise(xs, -T), dtype=float).reshape(T.size)
    plus = _tail_status(T, b_plus, cap, noise_plus)
    minus = _tail_status(T, b_minus, cap, noise_minus)

    status, value, error, note = plus["status"], plus["value"], plus["error"], plus["note"]
    if plus["status"] != minus["status"]:
        status, value, error = "undecided", float("nan"), float("inf")
        note = f"one-sided limits disagree ({plus['status']} vs {minus['status']})"
    elif status == "finite":
        gap = abs(plus["value"] - minus["value"])
        error = max(plus["error"], minus["error"])
        if gap > 10.0 * error + TIE_FACTOR * EPS * max(1.0, abs(value)):
            status, value, error = "undecided", float("nan"), float("inf")
            note = f"one-sided limits differ by {gap:.3e}"
        else:
            value = 0.5 * (plus["value"] + minus["value"])
            error = max(error, gap)
    elif status == "infinite" and plus["value"] != minus["value"]:
        status, value, error = "undecided", float("nan"), float("inf")
        note = "one-sided limits diverge with opposite signs"

    return BetaEstimate(
        value=value, status=status, error=error, ladder=T.tolist(),
        samples_plus=b_plus.tolist(), samples_minus=b_minus.tolist(), note=note,
    )


def sample_points(model: NonlinearModel, coords: Optional[np.ndarray]) -> Optional[np.ndarray]:
    """Points at which x-dependent quantities are sampled; one suffices for autonomous models."""
    if coords is None:
        return None
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    return coords[:1] if model.autonomous else coords


def sample_beta(model: NonlinearModel, coords: Optional[np.ndarray] = None,
                ladder: Optional[Sequence[float]] = None, cap: float = DEFAULT_CAP) -> List[BetaEstimate]:
    """beta_eval at every sampled point (one evaluation for autonomous models)."""
    points = sample_points(model, coords)
    if points is None:
        return [beta_eval(model, None, ladder, cap)]
    return [beta_eval(model, p, ladder, cap) for p in points]


def beta_range(estimates: Sequence[BetaEstimate]) -> Dict[str, Any]:
    values = [e.value for e in estimates if e.status != "undecided"]
    return {
        "min": float(min(values)) if values else float("nan"),
        "max": float(max(values)) if values else float("nan"),
        "count": len(estimates),
        "statuses": sorted({e.status for e in estimates}),
    }


def resonance_defect(model: NonlinearModel, x: Any, t: Any) -> np.ndarray:
    """g(x, t) = eta(x) t - f(x, t)."""
    return model.defect(x, t)


def defect_primitive_limit(model: NonlinearModel, x: Any = None, ladder: Optional[Sequence[float]] = None,
                           cap: float = DEFAULT_CAP, beta: Optional[BetaEstimate] = None) -> Dict[str, Any]:
    """
    Limit of G(x, T) = int_0^T g(x, s) ds on the ladder, set against beta(x).

    G - (f t / 2 - F) = t g / 2, so the two limits coincide whenever t g(x, t)
    vanishes at infinity. The report carries G on the ladder, its classified
    limit, g at the last rung and the gap to beta.

    Args:
        model: Nonlinearity.
        x: One point of shape (dim,), or None for autonomous models.
        ladder: Ascending positive T values (see beta_eval).
        cap: Magnitude beyond which a monotone tail is declared infinite.
        beta: Estimate at the same point; computed when omitted.
    """
    T = np.asarray(DEFAULT_LADDER if ladder is None else ladder, dtype=float)
    beta = beta or beta_eval(model, x, T, cap)
    xs = None if x is None else np.broadcast_to(np.asarray(x, dtype=float), (T.size, np.size(x)))
    G = np.asarray(model.defect_primitive(xs, T), dtype=float).reshape(T.size)
    noise = np.asarray(model.cancellation_noise(xs, T), dtype=float).reshape(T.size)
    tail = _tail_status(T, G, cap, noise)
    g_last = float(np.asarray(resonance_defect(model, x, T[-1]), dtype=float).reshape(-1)[0])

    if tail["status"] == "finite" and beta.status == "finite":
        gap = abs(tail["value"] - beta.value)
        agree = gap <= 10.0 * (tail["error"] + beta.error) + TIE_FACTOR * EPS * max(1.0, abs(beta.value))
    elif tail["status"] == "infinite" and beta.status == "infinite":
        gap = 0.0 if tail["value"] == beta.value else float("inf")
        agree = tail["value"] == beta.value
    else:
        gap, agree = float("inf"), False
    if not agree:
        logger.info(f"Defect primitive limit {tail['value']:.6g} ({tail['status']}) differs from beta {beta.value:.6g}")
    return {
        "x": None if x is None else [float(c) for c in np.atleast_1d(x)],
        "ladder": T.tolist(), "G": G.tolist(), "last": float(G[-1]),
        "status": tail["status"], "limit": tail["value"], "error": tail["error"],
        "defect_last": g_last, "beta": beta.value, "beta_status": beta.status,
        "gap": float(gap), "agree": bool(agree),
    }


def check_fF(model: NonlinearModel, coords: Optional[np.ndarray] = None,
             ladder: Optional[Sequence[float]] = None, cap: float = DEFAULT_CAP) -> bool:
    """
    True iff beta is +infinity at every sampled point.

    Raises:
        BetaUndecidedError: if some sampled limit cannot be classified.
    """
    estimates = sample_beta(model, coords, ladder, cap)
    undecided = [e for e in estimates if e.status == "undecided"]
    if undecided:
        raise BetaUndecidedError(f"beta limit undecided at {len(undecided)} sampled point(s): {undecided[0].note}")
    return all(e.status == "infinite" and e.value > 0 for e in estimates)


def _lattice_values(model: NonlinearModel, points: Optional[np.ndarray], t: np.ndarray):
    """Evaluate f, F, the excess and its roundoff bound on points x t, each of shape (k, len(t))."""
    if points is None:
        k = 1
        xs = None
    else:
        k = points.shape[0]
        xs = np.repeat(points, t.size, axis=0)
    ts = np.tile(t, k)
    f = np.asarray(model.f(xs, ts), dtype=float).reshape(k, t.size)
    F = np.asarray(model.F(xs, ts), dtype=float).reshape(k, t.size)
    b = np.asarray(model.excess(xs, ts), dtype=float).reshape(k, t.size)
    noise = np.asarray(model.cancellation_noise(xs, ts), dtype=float).reshape(k, t.size)
    return f, F, b, noise


def _point(points: Optional[np.ndarray], row: int) -> Optional[List[float]]:
    return None if points is None else [float(c) for c in points[row]]


def _monotone(values: np.ndarray, t: np.ndarray, points: Optional[np.ndarray],
              noise: Optional[np.ndarray] = None) -> Dict[str, Any]:
    """Nondecreasing check along each row with a relative tie band widened by any roundoff bound."""
    d = np.diff(values, axis=1)
    scale = np.maximum(np.maximum(np.abs(values[:, 1:]), np.abs(values[:, :-1])), np.finfo(float).tiny)
    band = TIE_FACTOR * EPS * scale
    if noise is not None:
        band = band + noise[:, 1:] + noise[:, :-1]
    bad = d < -band
    ties = int(np.count_nonzero(np.abs(d) <= band))
    if np.any(bad):
        row, col = np.argwhere(bad)[0]
        witness = {"x": _point(points, row), "t": [float(t[col]), float(t[col + 1])],
                   "values": [float(values[row, col]), float(values[row, col + 1])]}
        return {"verdict": Verdict.FAIL, "witness": witness, "ties": ties, "pairs": int(d.size)}
    verdict = Verdict.UNDECIDED if ties > d.size // 2 else Verdict.PASS
    return {"verdict": verdict, "witness": None, "ties": ties, "pairs": int(d.size),
            "tightest_margin": float(np.min(d / scale))}


def _bounded_quotient(F: np.ndarray, t: np.ndarray, points: Optional[np.ndarray]) -> Dict[str, Any]:
    """F/t^2 must stop growing in magnitude at both ends of the lattice."""
    q = np.abs(F / (t * t))
    n = t.size
    # compare the outermost value with the one a decade further in, on each side
    ratio = abs(t[-1] / t[-2])
    step = max(1, int(round(np.log(10.0) / np.log(ratio)))) if ratio > 1 else 1
    for row in range(q.shape[0]):
        for last, inner in ((n - 1, n - 1 - step), (0, step)):
            if not np.isfinite(q[row, last]):
                return {"verdict": Verdict.FAIL, "witness": {"x": _point(points, row), "t": float(t[last]),
                                                            "value": float(q[row, last])}}
            if q[row, last] > (1.0 + 1e-3) * q[row, inner] + TIE_FACTOR * EPS:
                return {"verdict": Verdict.FAIL, "witness": {"x": _point(points, row),
                                                            "t": [float(t[inner]), float(t[last])],
                                                            "values": [float(q[row, inner]), float(q[row, last])]}}
    return {"verdict": Verdict.PASS, "witness": None, "sup": float(np.max(q))}


def _first_eigenvalue(spec: Optional["Spectrum"]) -> float:
    return float("inf") if spec is None else float(spec.eigenvalues[0])


def _mth_eigenvalue(spec: Optional["Spectrum"], m: int) -> float:
    if spec is None:
        return float("inf")
    if m > spec.eigenvalues.size:
        raise PreconditionError(f"spectrum holds {spec.eigenvalues.size} eigenvalues, index {m} requested")
    return float(spec.eigenvalues[m - 1])


def check_hypotheses(model: NonlinearModel, s_alpha: Optional["Spectrum"], s_eta: Optional["Spectrum"],
                     lattice: Optional[LatticeSpec] = None, coords: Optional[np.ndarray] = None, m: int = 1,
                     ladder: Optional[Sequence[float]] = None, cap: float = DEFAULT_CAP) -> HypothesisReport:
    """
    Sample the structural and spectral hypotheses of a model.

    Args:
        model: Nonlinearity.
        s_alpha: Spectrum for weight alpha, or None when alpha has no positive part
            (then lambda_1(alpha) = +inf by convention, flagged in the report).
        s_eta: Spectrum for weight eta, or None when eta has no positive part.
        lattice: t-lattice and node sample size.
        coords: Grid node coordinates; a node sample is drawn from them.
        m: Index in lambda_m(eta) < 1 < lambda_1(alpha) and lambda_m(alpha) < 1 < lambda_1(eta).
    """
    lattice = lattice or LatticeSpec()
    points = None
    if coords is not None:
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        idx = np.unique(np.linspace(0, coords.shape[0] - 1, min(lattice.sample_nodes, coords.shape[0]))
                        .round().astype(int))
        points = coords[idx]
    points = sample_points(model, points)

    t2 = lattice.two_sided()
    tp = lattice.positive()
    f, F, b, noise = _lattice_values(model, points, t2)
    half = tp.size
    f_pos, F_pos, b_pos = f[:, half:], F[:, half:], b[:, half:]

    witnesses: Dict[str, Any] = {}
    flags: List[str] = []

    # (f1): f/|t| increasing over the whole two-sided lattice
    f1 = _monotone(f / np.abs(t2), t2, points)
    if f1["witness"] is not None:
        witnesses["f1"] = f1["witness"]

    alpha_vals = np.atleast_1d(model.alpha(points))
    eta_vals = np.atleast_1d(model.eta(points))
    alpha_pos = bool(np.any(alpha_vals > 0))
    eta_pos = bool(np.any(eta_vals > 0))
    if not alpha_pos:
        flags.append("alpha has no positive part: lambda_1(alpha) = +inf by convention")
    if not eta_pos:
        flags.append("eta has no positive part: lambda_1(eta) = +inf by convention")
    if f1["verdict"] == Verdict.PASS and not (alpha_pos and eta_pos):
        f1_literal = Verdict.FAIL
        witnesses["f1_literal"] = {"alpha_positive_part": alpha_pos, "eta_positive_part": eta_pos}
        flags.append("monotonicity holds but the positive-part clause fails literally")
    else:
        f1_literal = f1["verdict"]

    # (f2) and (f2')
    lam_m_eta = _mth_eigenvalue(s_eta, m)
    lam_1_alpha = _first_eigenvalue(s_alpha)
    lam_m_alpha = _mth_eigenvalue(s_alpha, m)
    lam_1_eta = _first_eigenvalue(s_eta)
    spectral = {"lambda_m_eta": lam_m_eta, "lambda_1_alpha": lam_1_alpha,
                "lambda_m_alpha": lam_m_alpha, "lambda_1_eta": lam_1_eta, "m": m}

    f2 = Verdict.PASS if lam_m_eta < 1.0 < lam_1_alpha else Verdict.FAIL
    if f2 == Verdict.FAIL:
        witnesses["f2"] = {"lambda_m_eta": lam_m_eta, "lambda_1_alpha": lam_1_alpha}
    f2p = Verdict.PASS if lam_m_alpha < 1.0 < lam_1_eta else Verdict.FAIL
    if f2p == Verdict.FAIL:
        witnesses["f2p"] = {"lambda_m_alpha": lam_m_alpha, "lambda_1_eta": lam_1_eta}

    # (f1'): F/t^2 bounded
    f1p = _bounded_quotient(F, t2, points)
    if f1p["witness"] is not None:
        witnesses["f1p"] = f1p["witness"]

    # (fF): beta = +inf at every sampled point
    estimates = sample_beta(model, points, ladder, cap)
    statuses = {e.status for e in estimates}
    if "undecided" in statuses:
        fF = Verdict.UNDECIDED
    elif all(e.status == "infinite" and e.value > 0 for e in estimates):
        fF = Verdict.PASS
    else:
        fF = Verdict.FAIL
        worst = min(estimates, key=lambda e: e.value)
        witnesses["fF"] = {"beta": worst.value, "status": worst.status, "error": worst.error}

    # consequences of the monotonicity of f/|t|, on t > 0
    excess_check = _monotone(b_pos, tp, points, noise[:, half:])
    quotient_check = _monotone(F_pos / (tp * tp), tp, points)
    margin = 2.0 * b / (t2 * t2)
    margin_min = float(np.min(margin))
    monotonicity = {
        "excess_nondecreasing": {"verdict": excess_check["verdict"], "witness": excess_check["witness"]},
        "F_over_t2_nondecreasing": {"verdict": quotient_check["verdict"], "witness": quotient_check["witness"]},
        "strict_quotient_margin": {
            "verdict": Verdict.PASS if margin_min > 0 else Verdict.FAIL,
            "min_margin": margin_min,
            "witness": None if margin_min > 0 else {"t": float(t2[np.unravel_index(np.argmin(margin), margin.shape)[1]])},
        },
        "applicable": f1["verdict"] == Verdict.PASS,
    }

    report = HypothesisReport(
        f1_ok=f1["verdict"], f1_literal_ok=f1_literal, f2_ok=f2, f1p_ok=f1p["verdict"], f2p_ok=f2p,
        fF_holds=fF, monotonicity_checks=monotonicity, witnesses=witnesses, spectral_inputs=spectral, flags=flags,
        nodes_sampled=1 if points is None else int(points.shape[0]), ties=f1["ties"],
    )
    logger.info(
        f"Hypotheses: f1={report.f1_ok.value} f2={report.f2_ok.value} f1'={report.f1p_ok.value} "
        f"f2'={report.f2p_ok.value} fF={report.fF_holds.value}"
    )
    return report

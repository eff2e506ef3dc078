"""Confidence intervals, cost model and the (alpha_e, mu) experiment planner.

The combined estimator ``V_N = T_N + E_N`` has a conservative interval of
half-width ``q(alpha_e) sigma_e / sqrt(psi_N) + q(alpha_c) sigma_c / sqrt(N)``
with ``psi_N = ceil(mu N)``. The planner picks ``alpha_e`` and ``mu`` that
minimise the evaluation cost of reaching a target interval length.

Two ways of tying ``alpha_c`` to the target risk are supported:

``SplitMode.THEOREM``
    ``alpha_c = alpha - alpha_e``; the union bound then gives coverage at
    least ``1 - alpha``.
``SplitMode.PAPER_FIGURE``
    ``alpha_c = 1 - (alpha + alpha_e)``; reproduces the published efficiency
    curve but does not give ``1 - alpha`` coverage.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DegeneratePilotWarning, DomainError, MFSobolError
from .estimators import VarianceEstimates

MU_MIN = 1e-3
MIN_RUN_SIZE = 2
GRID_POINTS = 200
REFINE_RTOL = 1e-12
# alpha_e grid starts this fraction of the way into its interval
_ALPHA_E_FLOOR = 1e-6
_GOLDEN = (math.sqrt(5) - 1) / 2


class SplitMode(str, enum.Enum):
    THEOREM = "theorem"
    PAPER_FIGURE = "paper_figure"

    @classmethod
    def parse(cls, value) -> "SplitMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise DomainError(f"unknown split mode {value!r}") from None


@dataclass(frozen=True)
class CostModel:
    """Coarse evaluation cost ``rho`` relative to a unit-cost fine evaluation."""

    rho: float
    hierarchical: bool = False

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise DomainError(f"rho must lie in (0, 1), got {self.rho}")


@dataclass(frozen=True)
class Plan:
    alpha: float
    alpha_e: float
    alpha_c: float
    mu: float
    n: int
    psi_n: int
    target_length: float
    predicted_cost: float
    classical_cost: float
    efficiency: float
    split_mode: SplitMode
    rho: float
    hierarchical: bool
    sigma_e: float
    sigma_c: float
    sigma_t_eta: float
    warning: str | None = None

    @property
    def cost_model(self) -> CostModel:
        return CostModel(self.rho, self.hierarchical)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["split_mode"] = self.split_mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Plan":
        kw = dict(d)
        kw["split_mode"] = SplitMode.parse(kw["split_mode"])
        return cls(**kw)


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    half_width: float
    nominal_level: float

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def contains(self, value: float) -> bool:
        return abs(value - self.center) <= self.half_width


def gaussian_quantile(a):
    """Two-sided standard normal quantile ``q(a) = Phi^{-1}(1 - a/2)``.

    Accepts scalars or arrays; every entry must lie in the open interval
    (0, 1).
    """
    arr = np.asarray(a, dtype=float)
    if not np.all((arr > 0) & (arr < 1)):
        raise DomainError("gaussian_quantile requires 0 < a < 1")
    # ndtri(1 - a/2) == -ndtri(a/2) but the latter keeps precision for small a
    q = -ndtri(arr / 2)
    return float(q) if q.ndim == 0 else q


def alpha_split(alpha: float, alpha_e: float, mode=SplitMode.THEOREM) -> float:
    mode = SplitMode.parse(mode)
    if mode is SplitMode.THEOREM:
        if not 0 < alpha_e < alpha < 1:
            raise DomainError(f"theorem split needs 0 < alpha_e < alpha < 1 (got {alpha_e}, {alpha})")
        return alpha - alpha_e
    if not (0 < alpha < 1 and alpha_e > 0 and alpha + alpha_e < 1):
        raise DomainError(f"figure split needs alpha_e > 0 and alpha + alpha_e < 1 (got {alpha_e}, {alpha})")
    return 1 - (alpha + alpha_e)


def alpha_e_interval(alpha: float, mode) -> tuple[float, float]:
    """Open interval of admissible ``alpha_e`` values."""
    mode = SplitMode.parse(mode)
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return (0.0, alpha) if mode is SplitMode.THEOREM else (0.0, 1.0 - alpha)


def _check_mu(mu):
    if not 0 < mu <= 1:
        raise DomainError(f"mu must lie in (0, 1], got {mu}")


def _check_sigmas(*sigmas):
    for s in sigmas:
        if not (s >= 0 and math.isfinite(s)):
            raise DomainError(f"standard deviations must be finite and >= 0, got {s}")


def half_width(n: int, psi_n: int, alpha_e: float, alpha_c: float, sigma_e: float, sigma_c: float) -> float:
    return float(
        gaussian_quantile(alpha_e) * sigma_e / math.sqrt(psi_n)
        + gaussian_quantile(alpha_c) * sigma_c / math.sqrt(n)
    )


def n_star(alpha_e, mu, target_length, sigma_e, sigma_c, alpha, mode=SplitMode.THEOREM) -> float:
    """Continuous minimal sample size ``N*`` for the target length."""
    if not target_length > 0:
        raise DomainError(f"target_length must be positive, got {target_length}")
    _check_mu(mu)
    _check_sigmas(sigma_e, sigma_c)
    alpha_c = alpha_split(alpha, alpha_e, mode)
    width = gaussian_quantile(alpha_e) * sigma_e / math.sqrt(mu) + gaussian_quantile(alpha_c) * sigma_c
    return 4.0 / target_length**2 * width**2


def psi(n: int, mu: float) -> int:
    return min(n, max(1, math.ceil(mu * n)))


def required_sample_size(alpha_e, mu, target_length, sigma_e, sigma_c, alpha, mode=SplitMode.THEOREM) -> int:
    """Smallest integer ``N`` (at least 1) whose interval at
    ``(N, ceil(mu N))`` is no longer than ``target_length``."""
    ns = n_star(alpha_e, mu, target_length, sigma_e, sigma_c, alpha, mode)
    n = max(1, math.ceil(ns))
    alpha_c = alpha_split(alpha, alpha_e, mode)
    while half_width(n, psi(n, mu), alpha_e, alpha_c, sigma_e, sigma_c) > target_length / 2:
        n += 1
    return n


def plan_cost(n_star: float, mu: float, cost_model: CostModel) -> float:
    """Predicted cost, approximating ``psi(N*)`` by ``mu N*``.

    General: ``2 N* (2 mu + rho)``; hierarchical: ``2 N* (mu + rho)``.
    """
    if not n_star > 0:
        raise DomainError(f"n_star must be positive, got {n_star}")
    _check_mu(mu)
    factor = mu + cost_model.rho if cost_model.hierarchical else 2 * mu + cost_model.rho
    return 2.0 * n_star * factor


def classical_cost(alpha: float, target_length: float, sigma_t_eta: float) -> float:
    """Cost of the fine-only estimator reaching the same length and risk."""
    if not target_length > 0:
        raise DomainError(f"target_length must be positive, got {target_length}")
    _check_sigmas(sigma_t_eta)
    return 2.0 * 4.0 / target_length**2 * (gaussian_quantile(alpha) * sigma_t_eta) ** 2


def _unit_cost(alpha_e, mu, alpha, sigma_e, sigma_c, cost_model, mode):
    """Cost at target length 2, vectorised over ``alpha_e`` and ``mu``.

    Every cost is proportional to ``1 / L**2``, so optimising this
    normalised objective makes the optimum exactly independent of ``L``.
    """
    alpha_e = np.asarray(alpha_e, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if mode is SplitMode.THEOREM:
        alpha_c = alpha - alpha_e
    else:
        alpha_c = 1.0 - (alpha + alpha_e)
    width = -ndtri(alpha_e / 2) * sigma_e / np.sqrt(mu) - ndtri(alpha_c / 2) * sigma_c
    factor = mu + cost_model.rho if cost_model.hierarchical else 2 * mu + cost_model.rho
    return 2.0 * width**2 * factor


def _golden_section(f, lo: float, hi: float, rtol: float) -> tuple[float, float]:
    """Minimise a unimodal scalar function on ``[lo, hi]``."""
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > rtol * max(abs(c), abs(d), 1e-300):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def _minimise(alpha, sigma_e, sigma_c, cost_model, mode, mu_min):
    """Grid search followed by coordinate-wise golden-section refinement.

    Returns ``(alpha_e, mu, unit_cost)``.
    """
    _, upper = alpha_e_interval(alpha, mode)
    ae_lo, ae_hi = upper * _ALPHA_E_FLOOR, upper * (1 - _ALPHA_E_FLOOR)
    ae_grid = np.geomspace(ae_lo, ae_hi, GRID_POINTS)
    mu_grid = np.linspace(mu_min, 1.0, GRID_POINTS)
    costs = _unit_cost(ae_grid[:, None], mu_grid[None, :], alpha, sigma_e, sigma_c, cost_model, mode)
    i, j = np.unravel_index(np.argmin(costs), costs.shape)
    best_ae, best_mu, best = float(ae_grid[i]), float(mu_grid[j]), float(costs[i, j])
    if best == 0.0:
        return ae_lo, mu_min, best

    def f(ae, mu):
        return float(_unit_cost(ae, mu, alpha, sigma_e, sigma_c, cost_model, mode))

    # golden section on log(alpha_e) matches the log-spaced grid
    log_lo, log_hi = math.log(ae_lo), math.log(ae_hi)
    for _ in range(500):
        previous = best
        k = int(np.searchsorted(ae_grid, best_ae))
        lo = math.log(ae_grid[max(k - 1, 0)])
        hi = math.log(ae_grid[min(k + 1, GRID_POINTS - 1)])
        lo, hi = max(lo, log_lo), min(hi, log_hi)
        x, val = _golden_section(lambda t: f(math.exp(t), best_mu), lo, hi, 1e-12)
        if val < best:
            best_ae, best = math.exp(x), val
        step = (1.0 - mu_min) / (GRID_POINTS - 1)
        lo, hi = max(mu_min, best_mu - step), min(1.0, best_mu + step)
        x, val = _golden_section(lambda m: f(best_ae, m), lo, hi, 1e-12)
        if val < best:
            best_mu, best = x, val
        # endpoints are not probed by golden section
        for cand_ae, cand_mu in ((best_ae, mu_min), (best_ae, 1.0), (ae_lo, best_mu), (ae_hi, best_mu)):
            val = f(cand_ae, cand_mu)
            if val < best:
                best_ae, best_mu, best = cand_ae, cand_mu, val
        if previous - best <= REFINE_RTOL * best:
            break
    return best_ae, best_mu, best


def optimize_plan(
    alpha: float,
    target_length: float,
    estimates: VarianceEstimates,
    cost_model: CostModel,
    mode=SplitMode.THEOREM,
    mu_min: float = MU_MIN,
) -> Plan:
    """Cost-optimal ``(alpha_e, mu)`` and the resulting sample sizes.

    ``efficiency`` is ``1 - predicted_cost / classical_cost`` and is not
    clamped: it is negative when the two-fidelity scheme costs more than
    the fine-only estimator.
    """
    mode = SplitMode.parse(mode)
    alpha_e_interval(alpha, mode)
    if not target_length > 0:
        raise DomainError(f"target_length must be positive, got {target_length}")
    if not 0 < mu_min <= 1:
        raise DomainError(f"mu_min must lie in (0, 1], got {mu_min}")
    sigma_e, sigma_c, sigma_t = estimates.sigma_e, estimates.sigma_c, estimates.sigma_t_eta
    _check_sigmas(sigma_e, sigma_c, sigma_t)

    alpha_e, mu, unit = _minimise(alpha, sigma_e, sigma_c, cost_model, mode, mu_min)
    alpha_c = alpha_split(alpha, alpha_e, mode)
    warning = None
    if unit == 0.0:
        warning = "degenerate pilot: sigma_e and sigma_c are zero, cost is flat; boundary plan returned"
        warnings.warn(warning, DegeneratePilotWarning, stacklevel=2)

    scale = 4.0 / target_length**2
    predicted = unit * scale
    classical = classical_cost(alpha, target_length, sigma_t)
    unit_classical = classical / scale
    if unit_classical > 0:
        efficiency = 1.0 - unit / unit_classical
    else:
        efficiency = float("nan")
        warning = warning or "sigma_t_eta is zero: efficiency undefined"
    # pick-freeze statistics need at least two pairs in each sample
    n = max(MIN_RUN_SIZE, required_sample_size(alpha_e, mu, target_length, sigma_e, sigma_c, alpha, mode))
    return Plan(
        alpha=alpha,
        alpha_e=alpha_e,
        alpha_c=alpha_c,
        mu=mu,
        n=n,
        psi_n=max(MIN_RUN_SIZE, psi(n, mu)),
        target_length=target_length,
        predicted_cost=predicted,
        classical_cost=classical,
        efficiency=efficiency,
        split_mode=mode,
        rho=cost_model.rho,
        hierarchical=cost_model.hierarchical,
        sigma_e=sigma_e,
        sigma_c=sigma_c,
        sigma_t_eta=sigma_t,
        warning=warning,
    )


def confidence_interval(v_n: float, plan: Plan, sigma_e: float | None = None, sigma_c: float | None = None) -> ConfidenceInterval:
    """Conservative interval around ``v_n`` at the plan's integer sizes.

    The standard deviations default to the pilot values stored in the plan.
    """
    sigma_e = plan.sigma_e if sigma_e is None else sigma_e
    sigma_c = plan.sigma_c if sigma_c is None else sigma_c
    _check_sigmas(sigma_e, sigma_c)
    hw = half_width(plan.n, plan.psi_n, plan.alpha_e, plan.alpha_c, sigma_e, sigma_c)
    if plan.split_mode is SplitMode.THEOREM:
        level = 1.0 - plan.alpha
    else:
        level = 1.0 - (plan.alpha_e + plan.alpha_c)
    return ConfidenceInterval(center=float(v_n), half_width=hw, nominal_level=level)


@dataclass(frozen=True)
class CurvePoint:
    alpha: float
    alpha_e: float
    mu: float
    efficiency: float
    error: str | None = None


def efficiency_curve(alpha_grid, estimates, cost_model, mode=SplitMode.THEOREM, mu_min=MU_MIN, workers=1):
    """Optimised efficiency for each risk level, in input order.

    Points where the optimiser fails carry NaNs and an ``error`` message.
    """
    mode = SplitMode.parse(mode)

    def one(alpha):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegeneratePilotWarning)
                p = optimize_plan(float(alpha), 1.0, estimates, cost_model, mode, mu_min)
            return CurvePoint(p.alpha, p.alpha_e, p.mu, p.efficiency)
        except MFSobolError as exc:
            nan = float("nan")
            return CurvePoint(float(alpha), nan, nan, nan, error=str(exc))

    grid = [float(a) for a in np.asarray(alpha_grid, dtype=float).ravel()]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, grid))
    return [one(a) for a in grid]

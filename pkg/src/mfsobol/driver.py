"""Pick-freeze designs, pilot studies and the two-sample estimation run."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .estimators import PairedSample, VarianceEstimates, estimate_all, pick_freeze_statistic
from .models import Model
from .planner import ConfidenceInterval, Plan, confidence_interval
from .streams import derive_seed, generator, noise_seeds, open_uniforms

PILOT_TAG = "pilot"
COARSE_TAG = "main-coarse"
CORRECTION_TAG = "main-correction"
DEFAULT_PILOT_SIZE = 100


@dataclass(frozen=True)
class Design:
    """Pick-freeze input design of size ``n``.

    ``noise_seeds[i, role]`` is the Monte-Carlo noise seed for the
    evaluation at ``(x[i], z[i])`` (role 0) or ``(x[i], z_prime[i])``
    (role 1).
    """

    x: np.ndarray
    z: np.ndarray
    z_prime: np.ndarray
    noise_seeds: np.ndarray
    master_seed: int
    stream_tag: str

    @property
    def size(self) -> int:
        return len(self.x)


def _draw(model: Model, names, master_seed, tag, block, n):
    cols = []
    for name in names:
        rng = generator(derive_seed(master_seed, tag, block, name))
        cols.append(model.distributions[name].transform(open_uniforms(rng, n)))
    return np.column_stack(cols)


def generate_design(model: Model, n: int, master_seed: int, stream_tag: str) -> Design:
    """Independent draws of ``X``, ``Z`` and ``Z'`` for ``n`` points.

    Each input coordinate of each block comes from its own substream, so
    entry ``i`` depends only on ``(master_seed, stream_tag, block,
    coordinate, i)``.
    """
    if n < 2:
        raise DomainError(f"design size must be at least 2, got {n}")
    seeds = np.column_stack(
        [noise_seeds(master_seed, stream_tag, role, n) for role in (0, 1)]
    )
    return Design(
        x=_draw(model, model.x_names, master_seed, stream_tag, "x", n),
        z=_draw(model, model.z_names, master_seed, stream_tag, "z", n),
        z_prime=_draw(model, model.z_names, master_seed, stream_tag, "z_prime", n),
        noise_seeds=seeds,
        master_seed=int(master_seed),
        stream_tag=stream_tag,
    )


def coupled_sample(model: Model, design: Design, workers: int = 1) -> PairedSample:
    """Fine and coarse outputs at identical inputs and noise seeds."""
    y, yc = model.evaluate_batch(design.x, design.z, design.noise_seeds[:, 0], "coupled", workers)
    yp, ycp = model.evaluate_batch(design.x, design.z_prime, design.noise_seeds[:, 1], "coupled", workers)
    return PairedSample(y, yp, yc, ycp)


def coarse_sample(model: Model, design: Design, workers: int = 1) -> PairedSample:
    """Coarse-only outputs, returned in the fine slots of a PairedSample."""
    yc = model.evaluate_batch(design.x, design.z, design.noise_seeds[:, 0], "coarse", workers)
    ycp = model.evaluate_batch(design.x, design.z_prime, design.noise_seeds[:, 1], "coarse", workers)
    return PairedSample(yc, ycp)


def run_pilot(
    model: Model, n_pilot: int = DEFAULT_PILOT_SIZE, master_seed: int = 0, workers: int = 1
) -> tuple[VarianceEstimates, PairedSample]:
    design = generate_design(model, n_pilot, master_seed, PILOT_TAG)
    sample = coupled_sample(model, design, workers)
    return estimate_all(sample), sample


@dataclass(frozen=True)
class RunReport:
    v_n: float
    t_n_coarse: float
    e_n: float
    interval: ConfidenceInterval
    n: int
    psi_n: int
    fine_evals: int
    coarse_evals: int
    paid_coarse_evals: int
    realized_cost: float
    master_seed: int
    plan: Plan

    def to_dict(self) -> dict:
        d = asdict(self)
        d["plan"] = self.plan.to_dict()
        d["interval"]["lower"] = self.interval.lower
        d["interval"]["upper"] = self.interval.upper
        return d


def realized_cost(n: int, psi_n: int, cost_model) -> float:
    """Cost at integer sample sizes, with the planner's conventions:
    ``2 (psi + rho N)`` hierarchical, ``2 (2 psi + rho N)`` otherwise."""
    fine_factor = 1 if cost_model.hierarchical else 2
    return 2.0 * (fine_factor * psi_n + cost_model.rho * n)


def run_estimation(
    model: Model,
    plan: Plan,
    master_seed: int,
    workers: int = 1,
) -> RunReport:
    """Compute ``V_N = T_N + E_N`` and its conservative interval.

    ``T_N`` uses ``N`` coarse-only pick-freeze pairs; ``E_N`` is the
    difference of fine and coarse statistics on an independent coupled
    sample of ``psi_N`` pairs. The interval uses the pilot standard
    deviations stored in the plan.
    """
    if abs(plan.rho - model.rho) > 1e-12 or plan.hierarchical != model.hierarchical:
        raise DomainError("plan cost model does not match the model")
    coarse = coarse_sample(model, generate_design(model, plan.n, master_seed, COARSE_TAG), workers)
    t_n = pick_freeze_statistic(*coarse.fine()).value
    coupled = coupled_sample(model, generate_design(model, plan.psi_n, master_seed, CORRECTION_TAG), workers)
    e_n = pick_freeze_statistic(*coupled.fine()).value - pick_freeze_statistic(*coupled.coarse()).value
    v_n = t_n + e_n
    paid = 2 * plan.n if model.hierarchical else 2 * (plan.n + plan.psi_n)
    return RunReport(
        v_n=v_n,
        t_n_coarse=t_n,
        e_n=e_n,
        interval=confidence_interval(v_n, plan),
        n=plan.n,
        psi_n=plan.psi_n,
        fine_evals=2 * plan.psi_n,
        coarse_evals=2 * (plan.n + plan.psi_n),
        paid_coarse_evals=paid,
        realized_cost=realized_cost(plan.n, plan.psi_n, model.cost_model),
        master_seed=int(master_seed),
        plan=plan,
    )

"""Pick-freeze statistics and plug-in asymptotic variance estimators.

Everything here is a pure function of its array arguments. Reductions use
numpy's fixed-order pairwise summation so results do not depend on the
caller's threading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, LengthMismatch, MissingCoarse


@dataclass(frozen=True)
class PairedSample:
    """Fine outputs at ``(X_i, Z_i)`` and ``(X_i, Z'_i)``, optionally with
    coarse outputs at the same inputs."""

    y: np.ndarray
    y_prime: np.ndarray
    yc: np.ndarray | None = None
    yc_prime: np.ndarray | None = None

    def __post_init__(self):
        arrays = {}
        for name in ("y", "y_prime", "yc", "yc_prime"):
            value = getattr(self, name)
            if value is None:
                continue
            arr = np.asarray(value, dtype=float)
            if arr.ndim != 1:
                raise LengthMismatch(f"{name} must be one-dimensional")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)
            arrays[name] = arr
        if (self.yc is None) != (self.yc_prime is None):
            raise MissingCoarse("yc and yc_prime must be given together")
        lengths = {len(a) for a in arrays.values()}
        if len(lengths) != 1:
            raise LengthMismatch(f"array lengths differ: {sorted(lengths)}")
        if self.n < 2:
            raise DegenerateSample("at least two realizations are required")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def has_coarse(self) -> bool:
        return self.yc is not None

    def fine(self) -> tuple[np.ndarray, np.ndarray]:
        return self.y, self.y_prime

    def coarse(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.has_coarse:
            raise MissingCoarse("sample has no coarse arrays")
        return self.yc, self.yc_prime


@dataclass(frozen=True)
class PickFreezeStat:
    value: float
    numerator: float
    denominator: float
    pooled_mean: float


@dataclass(frozen=True)
class ABRealizations:
    a: np.ndarray
    b: np.ndarray
    s_hat: float
    var_hat: float


@dataclass(frozen=True)
class VarianceEstimates:
    """Pilot estimates of the asymptotic standard deviations.

    ``sigma_t_eta`` belongs to the fine-only estimator, ``sigma_c`` to the
    coarse estimator and ``sigma_e`` to the fine-minus-coarse correction.
    """

    sigma_t_eta: float
    sigma_c: float
    sigma_e: float
    s_hat: float
    s_c_hat: float
    var_y: float
    var_yc: float
    pilot_size: int

    def to_dict(self) -> dict:
        return {
            "sigma_t_eta": self.sigma_t_eta,
            "sigma_c": self.sigma_c,
            "sigma_e": self.sigma_e,
            "s_hat": self.s_hat,
            "s_c_hat": self.s_c_hat,
            "var_y": self.var_y,
            "var_yc": self.var_yc,
            "pilot_size": self.pilot_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VarianceEstimates":
        return cls(
            sigma_t_eta=float(d["sigma_t_eta"]),
            sigma_c=float(d["sigma_c"]),
            sigma_e=float(d["sigma_e"]),
            s_hat=float(d.get("s_hat", float("nan"))),
            s_c_hat=float(d.get("s_c_hat", float("nan"))),
            var_y=float(d.get("var_y", float("nan"))),
            var_yc=float(d.get("var_yc", float("nan"))),
            pilot_size=int(d["pilot_size"]),
        )


def _as_pair(y, y_prime) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    y_prime = np.asarray(y_prime, dtype=float)
    if y.ndim != 1 or y.shape != y_prime.shape:
        raise LengthMismatch(f"shapes differ: {y.shape} vs {y_prime.shape}")
    if len(y) < 2:
        raise DegenerateSample("at least two realizations are required")
    return y, y_prime


def _pooled_moments(y: np.ndarray, y_prime: np.ndarray) -> tuple[float, float, float]:
    """Pooled mean, pooled (1/n) variance and the 1/n cross moment.

    The moments are taken about a provisional pooled mean; the formula is
    shift invariant, and shifting first avoids cancellation when the mean
    is large compared with the spread.
    """
    shift = float(np.mean((y + y_prime) / 2))
    dy = y - shift
    dyp = y_prime - shift
    m = float(np.mean((dy + dyp) / 2))
    var = float(np.mean((dy * dy + dyp * dyp) / 2)) - m * m
    cross = float(np.mean(dy * dyp)) - m * m
    lo = min(y.min(), y_prime.min())
    hi = max(y.max(), y_prime.max())
    if var <= 0 or lo == hi:
        raise DegenerateSample("pooled sample variance is zero")
    return shift + m, var, cross


def pick_freeze_statistic(sample_y, sample_y_prime) -> PickFreezeStat:
    """Pick-freeze estimate of the closed Sobol index.

    Uses 1/n empirical moments pooled over both arrays::

        T = (mean(Y Y') - m^2) / (mean((Y^2 + Y'^2) / 2) - m^2),
        m = mean((Y + Y') / 2)

    Raises
    ------
    DegenerateSample
        If the pooled sample is constant.
    LengthMismatch
        If the arrays differ in length.
    """
    y, yp = _as_pair(sample_y, sample_y_prime)
    mean, denom, numer = _pooled_moments(y, yp)
    value = min(1.0, max(-1.0, numer / denom))
    return PickFreezeStat(value=value, numerator=numer, denominator=denom, pooled_mean=mean)


def ab_realizations(sample_y, sample_y_prime, s_hat: float) -> ABRealizations:
    """Per-sample realizations of the A and B variables, centered at the
    pooled empirical mean."""
    y, yp = _as_pair(sample_y, sample_y_prime)
    mean, var, _ = _pooled_moments(y, yp)
    dy = y - mean
    dyp = yp - mean
    return ABRealizations(
        a=dy * dyp, b=s_hat * (dy * dy + dyp * dyp), s_hat=float(s_hat), var_hat=var
    )


def _residuals(y: np.ndarray, y_prime: np.ndarray) -> tuple[np.ndarray, float, float]:
    stat = pick_freeze_statistic(y, y_prime)
    ab = ab_realizations(y, y_prime, stat.value)
    return (ab.a - ab.b / 2) / ab.var_hat, stat.value, ab.var_hat


def _arrays(sample: PairedSample, use_coarse: bool):
    return sample.coarse() if use_coarse else sample.fine()


def estimate_sigma_single(sample: PairedSample, use_coarse: bool = False) -> tuple[float, float, float]:
    """Plug-in asymptotic standard deviation of one pick-freeze estimator.

    Returns ``(sigma, s_hat, var_hat)`` where ``sigma`` is the sample
    standard deviation (ddof=1) of the normalized residuals
    ``(a_i - b_i / 2) / var_hat``.
    """
    d, s_hat, var_hat = _residuals(*_arrays(sample, use_coarse))
    return float(np.std(d, ddof=1)), s_hat, var_hat


def estimate_sigma_e(sample: PairedSample) -> float:
    """Plug-in standard deviation of the fine-minus-coarse correction term."""
    if not sample.has_coarse:
        raise MissingCoarse("sigma_e needs coarse arrays")
    d_fine, _, _ = _residuals(*sample.fine())
    d_coarse, _, _ = _residuals(*sample.coarse())
    return float(np.std(d_fine - d_coarse, ddof=1))


def sigma_e_decomposition(sample: PairedSample) -> dict:
    """Term-by-term covariance expansion of ``sigma_e**2``.

    Debugging aid: the ``total`` entry must agree with
    ``estimate_sigma_e(sample) ** 2`` up to rounding.
    """
    if not sample.has_coarse:
        raise MissingCoarse("sigma_e needs coarse arrays")
    s = pick_freeze_statistic(*sample.fine()).value
    sc = pick_freeze_statistic(*sample.coarse()).value
    f = ab_realizations(*sample.fine(), s)
    c = ab_realizations(*sample.coarse(), sc)

    def cov(u, v):
        return float(np.cov(u, v, ddof=1)[0, 1])

    terms = {
        "sigma_c2": cov(c.a - c.b / 2, c.a - c.b / 2) / c.var_hat**2,
        "var_fine": cov(f.a - f.b / 2, f.a - f.b / 2) / f.var_hat**2,
        "cov_a_ac": cov(f.a, c.a),
        "cov_a_bc": cov(f.a, c.b),
        "cov_b_ac": cov(f.b, c.a),
        "cov_b_bc": cov(f.b, c.b),
    }
    cross = 2 * terms["cov_a_ac"] - (terms["cov_a_bc"] + terms["cov_b_ac"]) + terms["cov_b_bc"] / 2
    terms["total"] = terms["sigma_c2"] + terms["var_fine"] - cross / (f.var_hat * c.var_hat)
    return terms


def estimate_all(sample: PairedSample) -> VarianceEstimates:
    """All pilot quantities needed by the planner from one coupled sample."""
    if not sample.has_coarse:
        raise MissingCoarse("pilot samples need coarse arrays")
    d_fine, s_hat, var_y = _residuals(*sample.fine())
    d_coarse, s_c_hat, var_yc = _residuals(*sample.coarse())
    return VarianceEstimates(
        sigma_t_eta=float(np.std(d_fine, ddof=1)),
        sigma_c=float(np.std(d_coarse, ddof=1)),
        sigma_e=float(np.std(d_fine - d_coarse, ddof=1)),
        s_hat=s_hat,
        s_c_hat=s_c_hat,
        var_y=var_y,
        var_yc=var_yc,
        pilot_size=sample.n,
    )

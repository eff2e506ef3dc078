"""Fine/coarse model pairs used by the estimators.

A model maps frozen inputs ``x`` and resampled inputs ``z`` (plus a noise
seed for Monte-Carlo models) to a fine output and a cheaper coarse output.
Three built-ins are provided:

``linear-gaussian``
    ``Y = X + Z``, coarse ``Y + delta (X**2 - 1)``; closed-form indices.
``ishigami``
    ``sin X1 + a sin(X2)**2 + b X3**4 sin X1`` with ``X = X1``; the coarse
    model drops the ``b`` term.
``heston``
    Monte-Carlo price of a European call under an Euler-Maruyama Heston
    scheme; the coarse model averages the first ``m_coarse`` of the same
    ``m_fine`` simulated payoffs.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, InvalidParams, OutOfSupport, Unsupported
from .planner import CostModel
from .streams import generator, open_uniforms


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high) and self.low <= self.high):
            raise InvalidParams(f"invalid uniform bounds [{self.low}, {self.high}]")

    def transform(self, u: np.ndarray) -> np.ndarray:
        return self.low + (self.high - self.low) * u

    def contains(self, v: np.ndarray) -> np.ndarray:
        return (v >= self.low) & (v <= self.high)

    def to_dict(self) -> dict:
        return {"kind": "uniform", "low": self.low, "high": self.high}


@dataclass(frozen=True)
class StandardNormal:
    def transform(self, u: np.ndarray) -> np.ndarray:
        return ndtri(u)

    def contains(self, v: np.ndarray) -> np.ndarray:
        return np.isfinite(v)

    def to_dict(self) -> dict:
        return {"kind": "normal"}


class Model:
    """Base class for fine/coarse model pairs.

    Subclasses set the class attributes and implement ``_fine``,
    ``_coarse`` and ``_coupled`` for a single input point. Analytic models
    may override the ``_batch_*`` hooks with vectorised versions.
    """

    name: str = ""
    x_names: tuple[str, ...] = ()
    z_names: tuple[str, ...] = ()
    default_params: dict = {}
    monte_carlo = False

    def __init__(self, **params):
        overrides = {}
        plain = {}
        for key, value in params.items():
            base, _, end = key.rpartition("_")
            if end in ("min", "max") and base in self.x_names + self.z_names:
                overrides[key] = float(value)
            elif key in self.default_params:
                plain[key] = type(self.default_params[key])(value)
            else:
                raise ConfigError(f"unknown parameter {key!r} for model {self.name!r}")
        self.params = {**self.default_params, **plain}
        self.distributions = self._distributions()
        for key, value in overrides.items():
            base, _, end = key.rpartition("_")
            dist = self.distributions[base]
            if not isinstance(dist, Uniform):
                raise ConfigError(f"{base} is not uniformly distributed")
            lo, hi = (value, dist.high) if end == "min" else (dist.low, value)
            self.distributions[base] = Uniform(lo, hi)
        self.overrides = overrides
        self._validate()

    # subclass hooks -------------------------------------------------------
    def _distributions(self) -> dict:
        raise NotImplementedError

    def _validate(self):
        pass

    def _fine(self, x, z, seed):
        raise NotImplementedError

    def _coarse(self, x, z, seed):
        raise NotImplementedError

    def _coupled(self, x, z, seed):
        return self._fine(x, z, seed), self._coarse(x, z, seed)

    @property
    def rho(self) -> float:
        return float(self.params["rho"])

    @property
    def hierarchical(self) -> bool:
        return False

    # public surface -------------------------------------------------------
    @property
    def p1(self) -> int:
        return len(self.x_names)

    @property
    def p2(self) -> int:
        return len(self.z_names)

    @property
    def cost_model(self) -> CostModel:
        return CostModel(self.rho, self.hierarchical)

    def descriptor(self) -> dict:
        return {
            "name": self.name,
            "params": {**self.params, **self.overrides},
            "input_dims": [self.p1, self.p2],
            "x": {n: self.distributions[n].to_dict() for n in self.x_names},
            "z": {n: self.distributions[n].to_dict() for n in self.z_names},
            "rho": self.rho,
            "hierarchical": self.hierarchical,
        }

    def fingerprint(self) -> str:
        text = json.dumps(self.descriptor(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def check_support(self, x, z):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if x.shape[1] != self.p1 or z.shape[1] != self.p2:
            raise OutOfSupport(f"expected input dims ({self.p1}, {self.p2}), got ({x.shape[1]}, {z.shape[1]})")
        for names, arr in ((self.x_names, x), (self.z_names, z)):
            for k, name in enumerate(names):
                if not np.all(self.distributions[name].contains(arr[:, k])):
                    raise OutOfSupport(f"{name} outside its declared support")
        return x, z

    def evaluate_fine(self, x, z, noise_seed: int = 0) -> float:
        x, z = self.check_support(x, z)
        return float(self._fine(x[0], z[0], noise_seed))

    def evaluate_coarse(self, x, z, noise_seed: int = 0) -> float:
        x, z = self.check_support(x, z)
        return float(self._coarse(x[0], z[0], noise_seed))

    def evaluate_coupled(self, x, z, noise_seed: int = 0) -> tuple[float, float]:
        x, z = self.check_support(x, z)
        fine, coarse = self._coupled(x[0], z[0], noise_seed)
        return float(fine), float(coarse)

    def evaluate_batch(self, x, z, seeds, kind: str = "fine", workers: int = 1):
        """Evaluate many points; results are placed by index.

        ``kind`` is ``"fine"``, ``"coarse"`` or ``"coupled"``; the latter
        returns a ``(fine, coarse)`` pair of arrays.
        """
        x, z = self.check_support(x, z)
        seeds = np.asarray(seeds, dtype=np.uint64)
        if kind not in ("fine", "coarse", "coupled"):
            raise ValueError(f"unknown evaluation kind {kind!r}")
        return getattr(self, f"_batch_{kind}")(x, z, seeds, workers)

    def _pointwise(self, fn, x, z, seeds, workers, width):
        out = np.empty((len(x), width))

        def run(i):
            out[i] = fn(x[i], z[i], int(seeds[i]))

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                list(pool.map(run, range(len(x))))
        else:
            for i in range(len(x)):
                run(i)
        return out

    def _batch_fine(self, x, z, seeds, workers):
        return self._pointwise(self._fine, x, z, seeds, workers, 1)[:, 0]

    def _batch_coarse(self, x, z, seeds, workers):
        return self._pointwise(self._coarse, x, z, seeds, workers, 1)[:, 0]

    def _batch_coupled(self, x, z, seeds, workers):
        out = self._pointwise(self._coupled, x, z, seeds, workers, 2)
        return out[:, 0].copy(), out[:, 1].copy()

    def reference_index(self) -> tuple[float, float]:
        """Exact closed Sobol indices ``(S, S_c)`` of the fine and coarse models."""
        raise Unsupported(f"no reference index for model {self.name!r}")


class _Analytic(Model):
    """Deterministic models, vectorised over points; the noise seed is unused."""

    def _fine_vec(self, x, z):
        raise NotImplementedError

    def _coarse_vec(self, x, z):
        raise NotImplementedError

    # pointwise calls go through the vectorised kernels so batch and
    # single-point results agree bit for bit
    def _fine(self, x, z, seed):
        return self._fine_vec(x[None, :], z[None, :])[0]

    def _coarse(self, x, z, seed):
        return self._coarse_vec(x[None, :], z[None, :])[0]

    def _batch_fine(self, x, z, seeds, workers):
        return self._fine_vec(x, z)

    def _batch_coarse(self, x, z, seeds, workers):
        return self._coarse_vec(x, z)

    def _batch_coupled(self, x, z, seeds, workers):
        return self._fine_vec(x, z), self._coarse_vec(x, z)


class LinearGaussian(_Analytic):
    name = "linear-gaussian"
    x_names = ("x",)
    z_names = ("z",)
    default_params = {"delta": 0.3, "rho": 0.5}

    @property
    def hierarchical(self) -> bool:
        return True

    def _distributions(self):
        return {"x": StandardNormal(), "z": StandardNormal()}

    def _validate(self):
        if not 0 < self.rho < 1:
            raise InvalidParams("rho must lie in (0, 1)")

    def _fine_vec(self, x, z):
        return x[:, 0] + z[:, 0]

    def _coarse_vec(self, x, z):
        delta = self.params["delta"]
        return x[:, 0] + z[:, 0] + delta * (x[:, 0] ** 2 - 1)

    def reference_index(self):
        d2 = self.params["delta"] ** 2
        return 0.5, (1 + 2 * d2) / (2 + 2 * d2)


class Ishigami(_Analytic):
    name = "ishigami"
    x_names = ("x1",)
    z_names = ("x2", "x3")
    default_params = {"a": 7.0, "b": 0.1, "rho": 0.5}

    def _distributions(self):
        return {n: Uniform(-math.pi, math.pi) for n in ("x1", "x2", "x3")}

    def _validate(self):
        if not 0 < self.rho < 1:
            raise InvalidParams("rho must lie in (0, 1)")
        for d in self.distributions.values():
            if (d.low, d.high) != (-math.pi, math.pi):
                self._custom_bounds = True
                break
        else:
            self._custom_bounds = False

    def _fine_vec(self, x, z):
        a, b = self.params["a"], self.params["b"]
        s1 = np.sin(x[:, 0])
        return s1 + a * np.sin(z[:, 0]) ** 2 + b * z[:, 1] ** 4 * s1

    def _coarse_vec(self, x, z):
        return np.sin(x[:, 0]) + self.params["a"] * np.sin(z[:, 0]) ** 2

    def reference_index(self):
        if self._custom_bounds:
            raise Unsupported("closed-form Ishigami indices need inputs on [-pi, pi]")
        a, b = self.params["a"], self.params["b"]
        pi4 = math.pi**4
        v1 = 0.5 * (1 + b * pi4 / 5) ** 2
        var = a**2 / 8 + b * pi4 / 5 + b**2 * pi4**2 / 18 + 0.5
        var_c = a**2 / 8 + 0.5
        return v1 / var, 0.5 / var_c


@dataclass(frozen=True)
class HestonParams:
    """Inputs of one Heston call-price evaluation.

    The six uncertain inputs are ``nu0`` (frozen) and ``kappa, theta, r,
    xi, R`` (resampled); the rest are fixed contract and discretisation
    settings.
    """

    nu0: float
    kappa: float
    theta: float
    r: float
    xi: float
    R: float
    s0: float = 60.0
    maturity: float = 0.25
    strike: float = 30.0
    h: float = 0.001
    m_fine: int = 10000
    m_coarse: int = 5000
    variance_update: str = "multiplicative"

    def __post_init__(self):
        if not -1 <= self.r <= 1:
            raise InvalidParams(f"correlation r must lie in [-1, 1], got {self.r}")
        if not self.h > 0 or not self.maturity > 0:
            raise InvalidParams("h and maturity must be positive")
        steps = round(self.maturity / self.h)
        if steps < 1 or abs(steps * self.h - self.maturity) > 1e-9 * self.maturity:
            raise InvalidParams("maturity / h must be a positive integer")
        if not 1 <= self.m_coarse <= self.m_fine:
            raise InvalidParams("need 1 <= m_coarse <= m_fine")
        if self.variance_update not in ("multiplicative", "additive"):
            raise InvalidParams(f"unknown variance_update {self.variance_update!r}")

    @property
    def n_steps(self) -> int:
        return round(self.maturity / self.h)


def heston_increments(n_paths: int, n_steps: int, noise_seed: int) -> np.ndarray:
    """Standard normal increments of shape ``(n_paths, n_steps, 2)``.

    Drawn path-major, step-minor, so the first ``m`` paths do not depend on
    ``n_paths``.
    """
    u = open_uniforms(generator(noise_seed), (n_paths, n_steps, 2))
    return ndtri(u)


def heston_terminal_prices(params: HestonParams, n_paths: int, noise_seed: int) -> np.ndarray:
    """Terminal asset prices of ``n_paths`` Euler-Maruyama Heston paths.

    The variance recursion is, by default, the multiplicative form
    ``nu <- nu (1 + kappa (theta - nu) h + xi sqrt(nu) sqrt(h) dW)``; set
    ``variance_update="additive"`` for the standard Euler step. Square roots
    use ``max(nu, 0)``.
    """
    if n_paths < 1:
        raise InvalidParams("n_paths must be at least 1")
    p = params
    dw = heston_increments(n_paths, p.n_steps, noise_seed)
    sqrt_h = math.sqrt(p.h)
    rbar = math.sqrt(1 - p.r * p.r)
    s = np.full(n_paths, float(p.s0))
    nu = np.full(n_paths, float(p.nu0))
    multiplicative = p.variance_update == "multiplicative"
    for t in range(p.n_steps):
        dw1 = dw[:, t, 0]
        dw2 = dw[:, t, 1]
        vol = np.sqrt(np.maximum(nu, 0.0))
        s_next = s * (1 + p.R * p.h + vol * sqrt_h * dw1)
        step = p.kappa * (p.theta - nu) * p.h + p.xi * vol * sqrt_h * (p.r * dw1 + rbar * dw2)
        nu = nu * (1 + step) if multiplicative else nu + step
        s = s_next
    return s


def heston_discounted_payoffs(params: HestonParams, n_paths: int, noise_seed: int) -> np.ndarray:
    s_t = heston_terminal_prices(params, n_paths, noise_seed)
    return math.exp(-params.R * params.maturity) * np.maximum(s_t - params.strike, 0.0)


class Heston(Model):
    """Monte-Carlo European call price with uncertain Heston parameters."""

    name = "heston"
    monte_carlo = True
    x_names = ("nu0",)
    z_names = ("kappa", "theta", "r", "xi", "R")
    default_params = {
        "s0": 60.0,
        "maturity": 0.25,
        "strike": 30.0,
        "h": 0.001,
        "m_fine": 10000,
        "m_coarse": 5000,
        "variance_update": "multiplicative",
    }

    @property
    def rho(self) -> float:
        return self.params["m_coarse"] / self.params["m_fine"]

    @property
    def hierarchical(self) -> bool:
        return True

    def _distributions(self):
        return {
            "nu0": Uniform(0.2, 0.25),
            "kappa": Uniform(0.0, 3.0),
            "theta": Uniform(0.2, 0.22),
            "r": Uniform(-1.0, 1.0),
            "xi": Uniform(0.0, 0.4),
            "R": Uniform(0.08, 1.1),
        }

    def _validate(self):
        r = self.distributions["r"]
        if r.low < -1 or r.high > 1:
            raise InvalidParams("correlation bounds must lie within [-1, 1]")
        self.heston_params(np.array([0.2]), np.array([0.0, 0.2, 0.0, 0.0, 0.1]))

    def heston_params(self, x, z) -> HestonParams:
        fixed = {k: self.params[k] for k in self.default_params}
        values = dict(zip(self.x_names + self.z_names, map(float, (*x, *z))))
        return HestonParams(**values, **fixed)

    def _fine(self, x, z, seed):
        p = self.heston_params(x, z)
        return float(np.mean(heston_discounted_payoffs(p, p.m_fine, seed)))

    def _coarse(self, x, z, seed):
        p = self.heston_params(x, z)
        return float(np.mean(heston_discounted_payoffs(p, p.m_coarse, seed)))

    def _coupled(self, x, z, seed):
        p = self.heston_params(x, z)
        payoffs = heston_discounted_payoffs(p, p.m_fine, seed)
        return float(np.mean(payoffs)), float(np.mean(payoffs[: p.m_coarse]))


MODELS = {cls.name: cls for cls in (LinearGaussian, Ishigami, Heston)}


def make_model(name: str, **params) -> Model:
    try:
        cls = MODELS[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return cls(**params)


def reference_index(model: Model) -> tuple[float, float]:
    return model.reference_index()

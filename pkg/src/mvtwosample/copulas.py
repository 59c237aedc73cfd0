"""Copula samplers and inverse-CDF marginal transforms.

Archimedean copulas are drawn with the frailty construction: a latent
variable V whose Laplace transform is the generator inverse psi, then
``U_k = psi(E_k / V)`` for independent unit exponentials ``E_k``. The same
code serves any dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .core import InputError, SeededRng

FAMILIES = ("frank", "clayton", "gumbel", "joe")
# numpy's logarithmic-series sampler needs 1 - exp(-theta) < 1 in float64
FRANK_MAX_THETA = 35.0
LOG_K_MAX = 700.0


class ParameterError(InputError):
    """A distribution parameter is outside its valid range."""


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def positive_stable(alpha: float, size: int, gen: np.random.Generator) -> np.ndarray:
    """Kanter's representation; Laplace transform ``exp(-t**alpha)``, 0 < alpha <= 1."""
    if alpha == 1.0:
        return np.ones(size)
    theta = gen.uniform(0.0, np.pi, size)
    w = gen.exponential(1.0, size)
    a = np.sin(alpha * theta) / np.sin(theta) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * theta) / w) ** ((1.0 - alpha) / alpha)
    return a * b


def sibuya(alpha: float, size: int, gen: np.random.Generator) -> np.ndarray:
    """Sibuya(alpha) variates by inverting the survival function.

    ``P(V > k) = Gamma(k + 1 - alpha) / (Gamma(k + 1) Gamma(1 - alpha))``
    is continuous and decreasing in k, so the real root k* of
    ``P(V > k*) = W`` is found by bisection in ``log(1 + k)`` and
    ``V = floor(k*) + 1``.
    """
    if alpha == 1.0:
        return np.ones(size)
    w = gen.uniform(0.0, 1.0, size)
    w = np.maximum(w, np.finfo(float).tiny)
    log_w = np.log(w)
    lg = special.gammaln(1.0 - alpha)

    def log_surv(k):
        return special.gammaln(k + 1.0 - alpha) - special.gammaln(k + 1.0) - lg

    lo = np.zeros(size)
    hi = np.full(size, 1.0)
    # grow the bracket until P(V > k) < W at its upper end; log(1 + k) stays
    # below LOG_K_MAX so k is finite (the tail beyond is far under 1e-300 mass)
    while True:
        bad = (log_surv(np.expm1(hi)) >= log_w) & (hi < LOG_K_MAX)
        if not bad.any():
            break
        hi[bad] = np.minimum(hi[bad] * 2.0, LOG_K_MAX)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        above = log_surv(np.expm1(mid)) >= log_w
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.floor(np.expm1(hi)) + 1.0


def _check_theta(family: str, theta: float, dim: int) -> None:
    if family not in FAMILIES:
        raise ParameterError(f"unknown Archimedean family {family!r}")
    if not np.isfinite(theta):
        raise ParameterError(f"{family}: theta must be finite")
    if family == "clayton" and theta < 0:
        raise ParameterError("clayton: theta must be > 0")
    if family in ("gumbel", "joe") and theta < 1:
        raise ParameterError(f"{family}: theta must be >= 1")
    if family == "frank":
        if theta < 0 and dim != 2:
            raise ParameterError("frank: negative theta is only valid in two dimensions")
        if abs(theta) > FRANK_MAX_THETA:
            raise ParameterError(f"frank: |theta| above {FRANK_MAX_THETA} is not supported")


def archimedean_sample(family: str, theta: float, dim: int, size: int, rng) -> np.ndarray:
    """``size`` draws from a ``dim``-variate Archimedean copula.

    The independence limit of each family (clayton 0, frank 0, gumbel 1,
    joe 1) returns independent uniforms.
    """
    _check_theta(family, theta, dim)
    if dim < 2:
        raise ParameterError("a copula needs at least two dimensions")
    gen = _gen(rng)
    indep = (family in ("clayton", "frank") and theta == 0) or (family in ("gumbel", "joe") and theta == 1)
    if indep:
        return gen.uniform(0.0, 1.0, (size, dim))
    if family == "frank" and theta < 0:
        return _frank_conditional(theta, size, gen)
    if family == "clayton":
        v = gen.gamma(1.0 / theta, 1.0, size)
    elif family == "gumbel":
        v = positive_stable(1.0 / theta, size, gen)
    elif family == "frank":
        v = gen.logseries(-np.expm1(-theta), size).astype(float)
    else:
        v = sibuya(1.0 / theta, size, gen)
    t = gen.exponential(1.0, (size, dim)) / v[:, None]
    if family == "clayton":
        u = (1.0 + t) ** (-1.0 / theta)
    elif family == "gumbel":
        u = np.exp(-(t ** (1.0 / theta)))
    elif family == "frank":
        u = -np.log1p(np.expm1(-theta) * np.exp(-t)) / theta
    else:
        u = 1.0 - (-np.expm1(-t)) ** (1.0 / theta)
    return np.clip(u, 0.0, 1.0)


def _frank_conditional(theta: float, size: int, gen: np.random.Generator) -> np.ndarray:
    u = gen.uniform(0.0, 1.0, size)
    w = gen.uniform(0.0, 1.0, size)
    a = np.expm1(-theta)
    v = -np.log1p(w * a / (w + (1.0 - w) * np.exp(-theta * u))) / theta
    return np.column_stack([u, np.clip(v, 0.0, 1.0)])


def gaussian_copula(rho: float, dim: int, size: int, rng) -> np.ndarray:
    """Equicorrelated Gaussian copula."""
    if not -1.0 / (dim - 1) < rho < 1.0:
        raise ParameterError(f"correlation {rho} is not valid in {dim} dimensions")
    gen = _gen(rng)
    cov = np.full((dim, dim), rho)
    np.fill_diagonal(cov, 1.0)
    z = gen.multivariate_normal(np.zeros(dim), cov, size, method="cholesky")
    return special.ndtr(z)


def kendall_tau(family: str, theta: float) -> float:
    """Population Kendall tau of a bivariate Archimedean copula."""
    if family == "clayton":
        return theta / (theta + 2.0)
    if family == "gumbel":
        return 1.0 - 1.0 / theta
    if family == "frank":
        if theta == 0:
            return 0.0
        from scipy.integrate import quad

        debye, _ = quad(lambda t: t / np.expm1(t) if t != 0 else 1.0, 0.0, theta)
        d1 = debye / theta
        return 1.0 - 4.0 / theta * (1.0 - d1)
    if family == "joe":
        if theta == 1:
            return 0.0
        if theta == 2:
            return 1.0 - special.polygamma(1, 2.0)
        return 1.0 + 2.0 / (2.0 - theta) * (special.digamma(2.0) - special.digamma(2.0 / theta + 1.0))
    raise ParameterError(f"unknown family {family!r}")


@dataclass(frozen=True)
class Marginal:
    """A target marginal distribution applied through its quantile function.

    kinds: ``identity``; ``exponential`` (``a`` = rate, ``upper`` optional
    truncation point); ``linear`` (density ``1 + a (x - 1/2)`` on [0, 1],
    slope ``|a| <= 2``); ``normal_tail`` (half-normal with scale ``a``);
    ``beta`` (shape parameters ``a``, ``b``).
    """

    kind: str = "identity"
    a: float = 1.0
    b: float = 1.0
    upper: float | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "exponential", "linear", "normal_tail", "beta"):
            raise ParameterError(f"unknown marginal {self.kind!r}")
        if self.kind == "exponential" and not self.a > 0:
            raise ParameterError("exponential rate must be positive")
        if self.kind == "linear" and not abs(self.a) <= 2:
            raise ParameterError("linear density slope must lie in [-2, 2]")
        if self.kind == "normal_tail" and not self.a > 0:
            raise ParameterError("normal-tail scale must be positive")
        if self.kind == "beta" and not (self.a > 0 and self.b > 0):
            raise ParameterError("beta shape parameters must be positive")
        if self.upper is not None and not self.upper > 0:
            raise ParameterError("truncation point must be positive")

    def ppf(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "identity":
            return u.copy()
        if self.kind == "exponential":
            mass = 1.0 if self.upper is None else -np.expm1(-self.a * self.upper)
            return -np.log1p(-u * mass) / self.a
        if self.kind == "linear":
            c = 1.0 - self.a / 2.0
            return 2.0 * u / (c + np.sqrt(c * c + 2.0 * self.a * u))
        if self.kind == "normal_tail":
            return self.a * special.ndtri((1.0 + u) / 2.0)
        return stats.beta.ppf(u, self.a, self.b)

    def cdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return np.clip(x, 0.0, 1.0)
        if self.kind == "exponential":
            mass = 1.0 if self.upper is None else -np.expm1(-self.a * self.upper)
            return np.clip(-np.expm1(-self.a * np.maximum(x, 0.0)) / mass, 0.0, 1.0)
        if self.kind == "linear":
            xc = np.clip(x, 0.0, 1.0)
            return xc + self.a / 2.0 * (xc * xc - xc)
        if self.kind == "normal_tail":
            return np.clip(2.0 * special.ndtr(np.maximum(x, 0.0) / self.a) - 1.0, 0.0, 1.0)
        return stats.beta.cdf(x, self.a, self.b)


def apply_marginals(u, transform: Marginal) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any((u < 0.0) | (u > 1.0)) or not np.all(np.isfinite(u)):
        raise InputError("copula coordinates must lie in [0, 1]")
    return transform.ppf(u)

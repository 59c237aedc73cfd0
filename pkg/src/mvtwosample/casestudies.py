"""Generators for the simulation case studies.

Each case has an x-distribution (the fixed reference) and a y-distribution
indexed by ``theta``; at ``null_theta`` the two coincide. Names ending in
D2/D5 keep the marginals of x and y equal, names ending in M/M5 do not.

Parameters the case descriptions leave open (copula strength inside
mixtures and marginal cases, reference slopes, default alternatives) are
fixed by the module constants below and by ``fixtures/case_defaults.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from typing import Callable

import numpy as np

from . import copulas
from .copulas import Marginal, ParameterError, apply_marginals, archimedean_sample, gaussian_copula
from .core import InputError, Sample, SeededRng

T_DF = 5
# dependence of the copula components inside mixtures and marginal cases
CLAYTON_THETA = 2.0
GUMBEL_THETA = 2.0
FRANK_THETA = 5.0
JOE_THETA = 2.0
GAUSS_RHO = 0.5
LINEAR_REF_SLOPE = 1.0
TRUNC_UPPER = 2.0


class CatalogError(InputError):
    """Unknown case-study name."""


@dataclass(frozen=True)
class CaseStudy:
    name: str
    dimension: int
    theta: float
    null_theta: float | None
    marginals_equal: bool
    description: str = ""

    def with_theta(self, theta: float) -> "CaseStudy":
        return replace(self, theta=float(theta))


# sampler(theta or None for the x reference, size, dim, Generator) -> array
Sampler = Callable[[float | None, int, int, np.random.Generator], np.ndarray]


def _normal(theta, size, dim, gen):
    s = 0.0 if theta is None else theta
    cov = np.full((dim, dim), s)
    np.fill_diagonal(cov, 1.0)
    if np.linalg.eigvalsh(cov).min() <= 0:
        raise ParameterError(f"covariance {s} is not positive definite in {dim} dimensions")
    return gen.multivariate_normal(np.zeros(dim), cov, size, method="cholesky")


def _student(theta, size, dim, gen):
    # identity / equicorrelated scale matrix; marginals are t5 either way
    z = _normal(theta, size, dim, gen)
    w = gen.chisquare(T_DF, size)
    return z * np.sqrt(T_DF / w)[:, None]


def _uniform_mixture(theta, size, dim, gen):
    p = 0.0 if theta is None else theta
    if not 0.0 <= p <= 1.0:
        raise ParameterError("mixture probability must lie in [0, 1]")
    u = gen.uniform(0.0, 1.0, (size, dim))
    diag = gen.uniform(0.0, 1.0, size) < p
    u[diag, 1] = u[diag, 0]
    return u


def _archimedean(family, null):
    def sampler(theta, size, dim, gen):
        return archimedean_sample(family, null if theta is None else theta, dim, size, gen)

    return sampler


def _copula(kind: str, dim: int, size: int, gen) -> np.ndarray:
    if kind == "uniform":
        return gen.uniform(0.0, 1.0, (size, dim))
    if kind == "normal":
        return gaussian_copula(GAUSS_RHO, dim, size, gen)
    param = {"clayton": CLAYTON_THETA, "gumbel": GUMBEL_THETA, "frank": FRANK_THETA, "joe": JOE_THETA}[kind]
    return archimedean_sample(kind, param, dim, size, gen)


def _mixture(first: str, second: str):
    """theta = probability of the first component; x uses 1/2."""

    def sampler(theta, size, dim, gen):
        w = 0.5 if theta is None else theta
        if not 0.0 <= w <= 1.0:
            raise ParameterError("mixture weight must lie in [0, 1]")
        pick = gen.uniform(0.0, 1.0, size) < w
        a = _copula(first, dim, size, gen)
        b = _copula(second, dim, size, gen)
        return np.where(pick[:, None], a, b)

    return sampler


def _with_marginals(copula_kind: str, marginal: Callable[[float], Marginal], ref: float):
    def sampler(theta, size, dim, gen):
        u = _copula(copula_kind, dim, size, gen)
        return apply_marginals(u, marginal(ref if theta is None else theta))

    return sampler


def _shift(theta, size, dim, gen):
    mu = 0.0 if theta is None else theta
    z = gen.standard_normal((size, dim))
    z[:, 1] += mu
    return z


def _stretch(theta, size, dim, gen):
    if theta is None:
        return gen.standard_normal((size, dim))
    if not theta > 1.0:
        raise ParameterError("NormalStretchM needs s > 1 for [[1, 1], [1, s]] to be positive definite")
    cov = np.array([[1.0, 1.0], [1.0, theta]])
    return gen.multivariate_normal(np.zeros(2), cov, size, method="cholesky")


def _rotate(theta, size, dim, gen):
    a = 0.0 if theta is None else theta
    u = gen.uniform(0.0, 1.0, (size, 2)) - 0.5
    c, s = np.cos(a), np.sin(a)
    return np.column_stack([c * u[:, 0] - s * u[:, 1], s * u[:, 0] + c * u[:, 1]]) + 0.5


def _beta(theta, size, dim, gen):
    a = 1.0 if theta is None else theta
    return apply_marginals(gen.uniform(0.0, 1.0, (size, dim)), Marginal("beta", a, a))


def _trunc_exp(theta, size, dim, gen):
    rate = 1.0 if theta is None else theta
    return apply_marginals(gen.uniform(0.0, 1.0, (size, dim)), Marginal("exponential", rate, upper=TRUNC_UPPER))


def _exp(rate):
    return Marginal("exponential", rate)


def _lin(slope):
    return Marginal("linear", slope)


def _ntail(sigma):
    return Marginal("normal_tail", sigma)


# name -> (dimension, null_theta, marginals_equal, sampler, description)
_CATALOG: dict[str, tuple[int, float | None, bool, Sampler, str]] = {}


def _add(name, dim, null, sampler, desc):
    equal = name.endswith(("D2", "D5"))
    _CATALOG[name] = (dim, null, equal, sampler, desc)


for _d in (2, 5):
    _s = f"D{_d}"
    _add(f"Normal{_s}", _d, 0.0, _normal, "normal, y equicorrelated with correlation theta")
    _add(f"t{_s}", _d, 0.0, _student, "multivariate t(5), y scale matrix equicorrelated theta")
    _add(f"Frank{_s}", _d, 0.0, _archimedean("frank", 0.0), "independence vs Frank(theta)")
    _add(f"Clayton{_s}", _d, 0.0, _archimedean("clayton", 0.0), "independence vs Clayton(theta)")
    _add(f"Gumbel{_s}", _d, 1.0, _archimedean("gumbel", 1.0), "independence vs Gumbel(theta)")
    _add(f"Joe{_s}", _d, 1.0, _archimedean("joe", 1.0), "Joe(1) vs Joe(theta)")
    _add(f"UniformFrank{_s}", _d, 0.5, _mixture("uniform", "frank"), "uniform/Frank mixture, y weight theta")

_add("UniformMixtureD2", 2, 0.0, _uniform_mixture, "uniform, y adds diagonal points with probability theta")
_add("ClaytonGumbelD2", 2, 0.5, _mixture("clayton", "gumbel"), "Clayton/Gumbel mixture, y weight theta")
_add("NormalUniformD2", 2, 0.5, _mixture("normal", "uniform"), "Gaussian/uniform copula mixture, y weight theta")
_add("FrankClaytonD5", 5, 0.5, _mixture("frank", "clayton"), "Frank/Clayton mixture, y weight theta")
_add("FrankJoeD5", 5, 0.5, _mixture("frank", "joe"), "Frank/Joe mixture, y weight theta")

_add("NormalShiftM", 2, 0.0, _shift, "normal, y mean (0, theta)")
_add("NormalStretchM", 2, None, _stretch, "normal, y covariance [[1, 1], [1, theta]], theta > 1")
_add("UniformRotateM", 2, 0.0, _rotate, "uniform square, y rotated by theta radians about its center")
_add("UniformBetaM", 2, 1.0, _beta, "uniform vs independent Beta(theta, theta)")
_add("TruncExponentialM", 2, 1.0, _trunc_exp, "exponential rate 1 vs rate theta, truncated to [0, 2]")

for _d, _suffix in ((2, "M"), (5, "M5")):
    for _fam in ("Frank", "Clayton"):
        kind = _fam.lower()
        _add(f"{_fam}Exponential{_suffix}", _d, 1.0, _with_marginals(kind, _exp, 1.0),
             f"{_fam} copula, exponential marginals rate 1 vs theta")
        _add(f"{_fam}Linear{_suffix}", _d, LINEAR_REF_SLOPE, _with_marginals(kind, _lin, LINEAR_REF_SLOPE),
             f"{_fam} copula, linear marginals slope {LINEAR_REF_SLOPE} vs theta")
        _add(f"{_fam}Normal{_suffix}", _d, 1.0, _with_marginals(kind, _ntail, 1.0),
             f"{_fam} copula, normal-tail marginals scale 1 vs theta")
_add("UniformExponentialM5", 5, 1.0, _with_marginals("uniform", _exp, 1.0),
     "independent exponentials, rate 1 vs theta")


def _defaults() -> dict[str, float]:
    text = resources.files(__package__).joinpath("fixtures/case_defaults.json").read_text()
    return {k: float(v) for k, v in json.loads(text)["theta"].items()}


_DEFAULT_THETA = _defaults()


def case_names() -> list[str]:
    return list(_CATALOG)


def get_case(name: str, theta: float | None = None) -> CaseStudy:
    if name not in _CATALOG:
        raise CatalogError(f"unknown case study {name!r}")
    dim, null, equal, _, desc = _CATALOG[name]
    th = _DEFAULT_THETA[name] if theta is None else float(theta)
    return CaseStudy(name, dim, th, null, equal, desc)


def catalog() -> list[CaseStudy]:
    return [get_case(nm) for nm in _CATALOG]


def sample_case(cs: CaseStudy, which: str, size: int, rng) -> Sample:
    """Draw ``size`` observations of the case's x (reference) or y (theta) law."""
    if cs.name not in _CATALOG:
        raise CatalogError(f"unknown case study {cs.name!r}")
    if which not in ("x", "y"):
        raise InputError("which must be 'x' or 'y'")
    if size < 1:
        raise InputError("size must be positive")
    dim, _, _, sampler, _ = _CATALOG[cs.name]
    gen = copulas._gen(rng)
    pts = sampler(None if which == "x" else cs.theta, size, dim, gen)
    return Sample(pts)


def structured_alternatives(name: str, theta: float, size: int, rng) -> Sample:
    if name not in ("UniformMixtureD2", "NormalShiftM", "NormalStretchM", "UniformRotateM"):
        raise CatalogError(f"{name!r} is not a structured alternative")
    return sample_case(get_case(name, theta), "y", size, rng)


def draw_pair(cs: CaseStudy, n: int, m: int, seed: int, replication: int,
              null: bool = False) -> tuple[Sample, Sample]:
    """x and y samples of one simulated dataset from independent streams.

    With ``null=True`` y is drawn at ``null_theta`` (or from the x law when
    the case has no null parameter value).
    """
    xr = SeededRng(seed, 2 * replication)
    yr = SeededRng(seed, 2 * replication + 1)
    x = sample_case(cs, "x", n, xr)
    if null:
        if cs.null_theta is None:
            y = sample_case(cs, "x", m, yr)
        else:
            y = sample_case(cs.with_theta(cs.null_theta), "y", m, yr)
    else:
        y = sample_case(cs, "y", m, yr)
    return x, y

"""Replicated Monte-Carlo experiments: spectral convergence, fluctuation
statistics, resolvent-trace covariance, and moment checks.

Seeding contract: replicate r of a run with base seed s draws from the
stream seeded by SeedSequence([s, r]).  Replicates are therefore
independent of the degree of parallelism, and outputs are bit-identical
across reruns.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import mp_limit, variance as var_mod
from .ensemble import (
    SigmaMeasure,
    SpectralSample,
    TestFunction,
    assemble,
    g_diag,
    make_taus,
)
from .mp_limit import limit_cdf, solve_f
from .variance import cov_kernel, variance_limit
from .vectors import VectorLaw, estimate_moments, moment_profile, sample_matrix


@dataclass(frozen=True)
class ExperimentConfig:
    law: VectorLaw
    sigma: SigmaMeasure
    n: int
    R: int
    seed: int = 42
    m: int | None = None          # default round(c * n)
    phi: TestFunction | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.R < 2:
            raise ValueError("R must be >= 2")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        m = self.m if self.m is not None else max(1, round(self.sigma.c * self.n))
        if m < 1:
            raise ValueError("m must be >= 1")
        if self.sigma.c > 0 and abs(m / self.n - self.sigma.c) > 0.2 * self.sigma.c:
            raise ValueError(f"m/n = {m / self.n:g} inconsistent with c = {self.sigma.c:g}")
        object.__setattr__(self, "m", m)


def replicate_rng(base_seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([base_seed, r]))


def _map_replicates(fn: Callable[[int], object], R: int, jobs: int) -> list:
    if jobs <= 1:
        return [fn(r) for r in range(R)]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, range(R)))


def draw_sample(config: ExperimentConfig, r: int) -> SpectralSample:
    """One realization: deterministic taus, fresh vectors, full spectrum."""
    rng = replicate_rng(config.seed, r)
    taus = make_taus(config.sigma, config.m)
    Y = sample_matrix(config.law, config.n, config.m, rng)
    M = assemble(taus, Y)
    ev = np.linalg.eigvalsh(M)
    return SpectralSample(
        eigenvalues=ev,
        n=config.n,
        m=config.m,
        seed=config.seed,
        law_tag=config.law.tag,
        tau_tag=config.sigma.tag,
        replicate=r,
    )


def replicate_spectra(config: ExperimentConfig) -> list[SpectralSample]:
    """All R replicates, in replicate order regardless of parallelism."""
    return _map_replicates(lambda r: draw_sample(config, r), config.R, config.jobs)


# ---------------------------------------------------------------------------
# empirical spectral distribution
# ---------------------------------------------------------------------------

_CDF_CACHE: dict = {}


@dataclass(frozen=True)
class EsdReport:
    ks: float
    atom_mass: float
    grid: np.ndarray
    limit_cdf: np.ndarray
    hist_edges: np.ndarray
    hist_mass: np.ndarray

    def to_dict(self) -> dict:
        return {
            "ks": self.ks,
            "atom_mass": self.atom_mass,
            "grid": self.grid.tolist(),
            "limit_cdf": self.limit_cdf.tolist(),
            "hist_edges": self.hist_edges.tolist(),
            "hist_mass": self.hist_mass.tolist(),
        }


def run_esd(config: ExperimentConfig, bins: int = 60,
            spectra: Sequence[SpectralSample] | None = None) -> EsdReport:
    """Pool eigenvalues across replicates and compare their empirical CDF
    with the numerically integrated limit CDF (sup distance)."""
    if spectra is None:
        spectra = replicate_spectra(config)
    pooled = np.sort(np.concatenate([s.eigenvalues for s in spectra]))
    tau_max = float(config.sigma.taus.max())
    _, a_plus, _ = mp_limit.support_edges_mp(config.sigma.c)
    lam_hi = max(tau_max * a_plus + 1.0, 1.0)
    key = (config.sigma.tag, config.sigma.c, lam_hi)
    if key not in _CDF_CACHE:
        _CDF_CACHE[key] = limit_cdf(config.sigma, lam_hi)
    grid, cdf, atom = _CDF_CACHE[key]
    F = np.interp(pooled, grid, cdf)
    N = len(pooled)
    i = np.arange(1, N + 1)
    ks = float(np.max(np.maximum(np.abs(i / N - F), np.abs((i - 1) / N - F))))
    counts, edges = np.histogram(pooled, bins=bins)
    return EsdReport(
        ks=ks,
        atom_mass=atom,
        grid=grid,
        limit_cdf=cdf,
        hist_edges=edges,
        hist_mass=counts / N,
    )


# ---------------------------------------------------------------------------
# CLT for linear statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CltReport:
    sample_mean: float
    sample_variance: float
    variance_se: float
    predicted_variance: float
    skewness: float
    excess_kurtosis: float
    ks_stat: float
    ks_pvalue: float
    replicates: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = {
            "sample_mean": self.sample_mean,
            "sample_variance": self.sample_variance,
            "variance_se": self.variance_se,
            "predicted_variance": self.predicted_variance,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "ks_stat": self.ks_stat,
            "ks_pvalue": self.ks_pvalue,
        }
        if self.replicates is not None:
            d["replicates"] = self.replicates.tolist()
        return d


def clt_statistics(values: np.ndarray, predicted_variance: float,
                   keep_replicates: bool = False) -> CltReport:
    """Distributional diagnostics of replicate values of a linear statistic,
    centered by the replicate mean."""
    values = np.asarray(values, dtype=float)
    R = len(values)
    mean = values.mean()
    centered = values - mean
    s2 = float(centered @ centered / (R - 1))
    m4 = float(np.mean(centered**4))
    var_se = float(np.sqrt(max(m4 - s2 * s2, 0.0) / R))
    if s2 > 0:
        std = np.sqrt(s2)
        skew = float(np.mean(centered**3) / std**3)
        kurt = float(m4 / std**4 - 3.0)
        ks_stat, ks_p = stats.kstest(centered / std, "norm")
    else:
        skew, kurt, ks_stat, ks_p = 0.0, 0.0, 0.0, 1.0
    return CltReport(
        sample_mean=float(mean),
        sample_variance=s2,
        variance_se=var_se,
        predicted_variance=float(predicted_variance),
        skewness=skew,
        excess_kurtosis=kurt,
        ks_stat=float(ks_stat),
        ks_pvalue=float(ks_p),
        replicates=values if keep_replicates else None,
    )


def run_clt(config: ExperimentConfig, keep_replicates: bool = False,
            spectra: Sequence[SpectralSample] | None = None,
            predicted_variance: float | None = None) -> CltReport:
    """Replicate the linear statistic N[phi] and compare its fluctuations
    with the predicted Gaussian limit."""
    if config.phi is None:
        raise ValueError("config.phi is required for run_clt")
    if spectra is None:
        spectra = replicate_spectra(config)
    values = np.array([np.sum(config.phi(s.eigenvalues)) for s in spectra])
    if predicted_variance is None:
        prof = moment_profile(config.law)
        predicted_variance = variance_limit(config.phi, config.sigma, prof.a, prof.b).V
    return clt_statistics(values, predicted_variance, keep_replicates)


# ---------------------------------------------------------------------------
# resolvent-trace covariance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovReport:
    z1: complex
    z2: complex
    empirical: complex
    predicted: complex
    re_diff: float
    re_se: float
    im_diff: float
    im_se: float

    def to_dict(self) -> dict:
        return {
            "z1": [self.z1.real, self.z1.imag],
            "z2": [self.z2.real, self.z2.imag],
            "empirical": [self.empirical.real, self.empirical.imag],
            "predicted": [self.predicted.real, self.predicted.imag],
            "re_diff": self.re_diff,
            "re_se": self.re_se,
            "im_diff": self.im_diff,
            "im_se": self.im_se,
        }


def run_cov(config: ExperimentConfig, z1: complex, z2: complex,
            spectra: Sequence[SpectralSample] | None = None) -> CovReport:
    """Empirical E{gamma°(z1) gamma(z2)} across replicates against the
    kernel prediction."""
    if z1.imag == 0 or z2.imag == 0:
        raise ValueError("z1, z2 must be non-real")
    if spectra is None:
        spectra = replicate_spectra(config)
    g1 = np.array([np.sum(1.0 / (s.eigenvalues - z1)) for s in spectra])
    g2 = np.array([np.sum(1.0 / (s.eigenvalues - z2)) for s in spectra])
    R = len(g1)
    prods = (g1 - g1.mean()) * (g2 - g2.mean())
    emp = complex(np.sum(prods) / (R - 1))
    prof = moment_profile(config.law)
    pred = cov_kernel(z1, z2, config.sigma, prof.a, prof.b)
    re_se = float(prods.real.std(ddof=1) / np.sqrt(R))
    im_se = float(prods.imag.std(ddof=1) / np.sqrt(R))
    return CovReport(
        z1=z1,
        z2=z2,
        empirical=emp,
        predicted=pred,
        re_diff=float(emp.real - pred.real),
        re_se=re_se,
        im_diff=float(emp.imag - pred.imag),
        im_se=im_se,
    )


# ---------------------------------------------------------------------------
# moment ladder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentCheckRow:
    n: int
    a22_hat: float
    a22_se: float
    kappa4_hat: float
    kappa4_se: float
    a_hat: float
    a_se: float
    b_hat: float
    b_se: float
    a22_exact: float
    kappa4_exact: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def run_moment_check(law: VectorLaw, ns: Sequence[int] = (16, 64, 256),
                     R: int = 20_000, seed: int = 42) -> list[MomentCheckRow]:
    """Estimated vs exact a22 and kappa4 on an n-ladder, with the implied
    second-order coefficients n^3 (a22 - n^-2) and n^2 kappa4."""
    if R < 2:
        raise ValueError("R must be >= 2")
    prof = moment_profile(law)
    rows = []
    for i, n in enumerate(ns):
        rng = replicate_rng(seed, i)
        est = estimate_moments(law, n, R, rng)
        rows.append(
            MomentCheckRow(
                n=n,
                a22_hat=est.a22,
                a22_se=est.a22_se,
                kappa4_hat=est.kappa4,
                kappa4_se=est.kappa4_se,
                a_hat=n**3 * (est.a22 - 1.0 / n**2),
                a_se=n**3 * est.a22_se,
                b_hat=n**2 * est.kappa4,
                b_se=n**2 * est.kappa4_se,
                a22_exact=prof.a22_exact(n),
                kappa4_exact=prof.kappa4_exact(n),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# diagonal-resolvent product
# ---------------------------------------------------------------------------


def run_g_diag(config: ExperimentConfig, z1: complex, z2: complex) -> complex:
    """Average of n^-1 sum_j G_jj(z1) G_jj(z2) over replicates (needs the
    eigenvectors, so it rebuilds each matrix)."""
    def one(r: int) -> complex:
        rng = replicate_rng(config.seed, r)
        taus = make_taus(config.sigma, config.m)
        Y = sample_matrix(config.law, config.n, config.m, rng)
        return g_diag(assemble(taus, Y), z1, z2)

    vals = _map_replicates(one, config.R, config.jobs)
    return complex(np.mean(vals))

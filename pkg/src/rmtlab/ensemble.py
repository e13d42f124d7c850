"""Assembly of the rank-one-sum ensemble and its spectral observables.

The matrix under study is M = sum_a tau_a y_a y_a^T with i.i.d. isotropic
vectors y_a and deterministic nonnegative weights tau_a drawn from a
discrete measure by a midpoint-quantile rule.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class SigmaMeasure:
    """Discrete weight measure: atoms tau_i >= 0 with probabilities w_i,
    plus the limiting ratio c = lim m/n."""

    taus: np.ndarray
    weights: np.ndarray
    c: float

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if taus.size == 0:
            raise ValueError("empty measure")
        if taus.shape != weights.shape or taus.ndim != 1:
            raise ValueError("atoms and weights must be matching 1-d arrays")
        if np.any(taus < 0):
            raise ValueError("atoms must be nonnegative")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        if self.c < 0:
            raise ValueError("c must be >= 0")
        order = np.argsort(taus, kind="stable")
        object.__setattr__(self, "taus", taus[order])
        object.__setattr__(self, "weights", weights[order])

    @property
    def m4(self) -> float:
        return float(np.sum(self.weights * self.taus**4))

    @property
    def tag(self) -> str:
        return ",".join(f"{t:g}:{w:g}" for t, w in zip(self.taus, self.weights))

    def quantile(self, q: float) -> float:
        """Left-closed quantile: smallest atom whose cumulative weight >= q."""
        cum = np.cumsum(self.weights)
        idx = int(np.searchsorted(cum, q, side="left"))
        return float(self.taus[min(idx, len(self.taus) - 1)])

    @staticmethod
    def point_mass(tau: float, c: float) -> "SigmaMeasure":
        return SigmaMeasure(np.array([tau]), np.array([1.0]), c)

    @staticmethod
    def parse(spec: str, c: float) -> "SigmaMeasure":
        """Parse "tau:weight,tau:weight,..."; weights are normalized."""
        taus, ws = [], []
        for part in spec.split(","):
            t, _, w = part.partition(":")
            taus.append(float(t))
            ws.append(float(w) if w else 1.0)
        ws = np.asarray(ws, dtype=float)
        return SigmaMeasure(np.asarray(taus, dtype=float), ws / ws.sum(), c)


def make_taus(sigma: SigmaMeasure, m: int) -> np.ndarray:
    """Deterministic tau list: sigma-quantiles at (alpha - 1/2)/m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    qs = (np.arange(m) + 0.5) / m
    cum = np.cumsum(sigma.weights)
    idx = np.minimum(np.searchsorted(cum, qs, side="left"), len(sigma.taus) - 1)
    return sigma.taus[idx]


def assemble(taus: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """M = sum_a tau_a y_a y_a^T, exactly symmetric.

    vectors holds one vector per row, shape (m, n).
    """
    taus = np.asarray(taus, dtype=float)
    Y = np.asarray(vectors, dtype=float)
    if Y.ndim != 2:
        raise ValueError("vectors must be an (m, n) array")
    if taus.shape[0] != Y.shape[0]:
        raise ValueError("length mismatch between taus and vectors")
    M = (taus[:, None] * Y).T @ Y
    return 0.5 * (M + M.T)


def eigenvalues(M: np.ndarray, want_vectors: bool = False):
    """Ascending eigenvalues of a symmetric matrix (and optionally the
    orthonormal eigenvector matrix, eigenvectors as columns)."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if want_vectors:
        w, v = np.linalg.eigh(M)
        return w, v
    return np.linalg.eigvalsh(M)


@dataclass(frozen=True)
class SpectralSample:
    """Eigenvalues of one realization plus its provenance."""

    eigenvalues: np.ndarray
    n: int
    m: int
    seed: int
    law_tag: str
    tau_tag: str
    replicate: int = 0

    def __post_init__(self):
        ev = np.sort(np.asarray(self.eigenvalues, dtype=float))
        object.__setattr__(self, "eigenvalues", ev)

    def to_csv(self, path_or_buf) -> None:
        """One eigenvalue per row; metadata in comment header lines."""
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            fh = open(path_or_buf, "w", newline="")
            close = True
        else:
            fh = path_or_buf
        try:
            fh.write(f"# n={self.n} m={self.m} seed={self.seed} "
                     f"replicate={self.replicate} law={self.law_tag} tau={self.tau_tag}\n")
            fh.write("eigenvalue\n")
            for lam in self.eigenvalues:
                fh.write(f"{float(lam)!r}\n")
        finally:
            if close:
                fh.close()

    @staticmethod
    def from_csv(path_or_buf) -> "SpectralSample":
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            fh = open(path_or_buf)
            close = True
        else:
            fh = path_or_buf
        try:
            header = fh.readline().lstrip("# ").split()
            meta = dict(kv.split("=", 1) for kv in header)
            fh.readline()  # column label
            ev = np.array([float(line) for line in fh if line.strip()])
        finally:
            if close:
                fh.close()
        return SpectralSample(
            eigenvalues=ev,
            n=int(meta["n"]),
            m=int(meta["m"]),
            seed=int(meta["seed"]),
            law_tag=meta["law"],
            tau_tag=meta["tau"],
            replicate=int(meta.get("replicate", 0)),
        )


@dataclass(frozen=True)
class TestFunction:
    """Test function phi with the grid parameters used by Fourier-side
    operations (grid on [-extent, extent) with spacing step)."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str
    extent: float = 16.0
    step: float = 1.0 / 256.0

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def poly_phi(coeffs: Sequence[float]) -> TestFunction:
    """Polynomial c0 + c1 x + ... (degree <= 4)."""
    coeffs = list(coeffs)
    if len(coeffs) > 5:
        raise ValueError("polynomial degree above 4 is not supported")
    label = "poly:" + ",".join(f"{c:g}" for c in coeffs)
    return TestFunction(fn=lambda x, c=coeffs: np.polynomial.polynomial.polyval(x, c),
                        label=label)


def exp_phi(t: float) -> TestFunction:
    """phi(x) = exp(-t x)."""
    return TestFunction(fn=lambda x, t=t: np.exp(-t * x), label=f"exp:{t:g}")


def bump_phi(center: float, width: float) -> TestFunction:
    """Gaussian bump exp(-(x - center)^2 / (2 width^2))."""
    return TestFunction(
        fn=lambda x, c=center, w=width: np.exp(-((x - c) ** 2) / (2.0 * w**2)),
        label=f"bump:{center:g},{width:g}",
    )


def parse_phi(spec: str) -> TestFunction:
    """Parse "poly:c0,c1,..." | "exp:t" | "bump:center,width"."""
    kind, _, args = spec.partition(":")
    if kind == "poly":
        return poly_phi([float(c) for c in args.split(",")])
    if kind == "exp":
        return exp_phi(float(args))
    if kind == "bump":
        c, w = (float(v) for v in args.split(","))
        return bump_phi(c, w)
    raise ValueError(f"unknown test-function spec {spec!r}")


def linear_statistic(sample: SpectralSample, phi: TestFunction) -> float:
    """N[phi] = sum_j phi(lambda_j), unnormalized."""
    vals = phi(sample.eigenvalues)
    if not np.all(np.isfinite(vals)):
        raise ValueError("test function not finite on the spectrum")
    return float(np.sum(vals))


def empirical_cdf(sample: SpectralSample) -> Callable[[np.ndarray], np.ndarray]:
    """Right-continuous CDF of the normalized counting measure."""
    ev = sample.eigenvalues
    n = len(ev)

    def cdf(x):
        return np.searchsorted(ev, np.asarray(x, dtype=float), side="right") / n

    return cdf


def histogram(sample: SpectralSample, bins: int):
    """Histogram of the counting measure normalized to mass 1/n per
    eigenvalue; returns (edges, mass per bin)."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    counts, edges = np.histogram(sample.eigenvalues, bins=bins)
    return edges, counts / len(sample.eigenvalues)


def resolvent_trace(sample: SpectralSample, z: complex) -> complex:
    """Tr (M - z)^-1 = sum_j 1/(lambda_j - z)."""
    if z.imag == 0:
        raise ValueError("z must be non-real")
    return complex(np.sum(1.0 / (sample.eigenvalues - z)))


@dataclass(frozen=True)
class RankOneCheck:
    lhs: complex       # trace difference from the two spectra
    rhs: complex       # -B/A from the removed-vector formula
    A: complex
    B: complex

    @property
    def ratio(self) -> float:
        return abs(self.B / self.A)


def rank_one_resolvent_check(M: np.ndarray, tau: float, y: np.ndarray, z: complex) -> RankOneCheck:
    """Trace change under removal of one summand tau * y y^T, two ways.

    Directly: Tr G - Tr G_removed from the two spectra.  Via the removal
    formula: -B/A with A = 1 + tau (G_r y, y), B = tau (G_r^2 y, y), where
    G_r is the resolvent without the summand and ( , ) is the bilinear
    extension of the real scalar product.
    """
    if z.imag == 0:
        raise ValueError("z must be non-real")
    M = np.asarray(M, dtype=float)
    y = np.asarray(y, dtype=float)
    n = M.shape[0]
    Mr = M - tau * np.outer(y, y)
    lhs = complex(
        np.sum(1.0 / (np.linalg.eigvalsh(M) - z))
        - np.sum(1.0 / (np.linalg.eigvalsh(Mr) - z))
    )
    shifted = Mr - z * np.eye(n)
    u = np.linalg.solve(shifted, y.astype(complex))     # G_r y
    v = np.linalg.solve(shifted, u)                     # G_r^2 y
    A = 1.0 + tau * complex(y @ u)
    B = tau * complex(y @ v)
    return RankOneCheck(lhs=lhs, rhs=-B / A, A=A, B=B)


def g_diag(M: np.ndarray, z1: complex, z2: complex) -> complex:
    """n^-1 sum_j G_jj(z1) G_jj(z2) from the eigendecomposition."""
    if z1.imag == 0 or z2.imag == 0:
        raise ValueError("z1, z2 must be non-real")
    w, v = np.linalg.eigh(np.asarray(M, dtype=float))
    v2 = v * v
    d1 = v2 @ (1.0 / (w - z1))
    d2 = v2 @ (1.0 / (w - z2))
    return complex(np.mean(d1 * d2))

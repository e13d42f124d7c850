"""Samplers for isotropic random vectors and their exact mixed-moment structure.

Supported laws (all isotropic: E{y_j} = 0, E{y_j y_k} = delta_jk / n, and
unconditional, i.e. invariant under coordinate sign flips):

  - iid:<base>   y = x / sqrt(n) with i.i.d. symmetric unit-variance x_j
                 (base one of gaussian, rademacher, uniform)
  - sphere       uniform on the unit Euclidean sphere
  - lpball:<p>   uniform on the unit l_p ball, rescaled to isotropy

Each law carries an exact finite-n moment profile: a22(n) = E{y_j^2 y_k^2}
for j != k, kappa4(n) = E{y_j^4} - 3*a22(n), and the second-order
coefficients (a, b) defined by

    a22(n)    = n^-2 + a n^-3 + o(n^-3),
    kappa4(n) = b n^-2 + o(n^-2).

For the l_p ball the exact moments follow from the representation
y = s(n,p) * g / (sum_i |g_i|^p + e)^(1/p), where the g_i have density
proportional to exp(-|t|^p), e is a standard exponential, and the vector
g / (...)^(1/p) is uniform on the ball and independent of the normalizer
(whose p-th power is Gamma(n/p + 1) distributed).  Mixed moments therefore
factor into generalized-Gaussian moments divided by Gamma-function ratios.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import betaln, gammaln

_IID_BASES = ("gaussian", "rademacher", "uniform")
# fourth moment of the unit-variance base variable
_BASE_M4 = {"gaussian": 3.0, "rademacher": 1.0, "uniform": 9.0 / 5.0}
_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class VectorLaw:
    """Specification of one isotropic vector distribution.

    kind is one of "iid", "sphere", "lpball"; "iid" carries a base name and
    "lpball" a positive exponent p.
    """

    kind: str
    base: str | None = None
    p: float | None = None

    def __post_init__(self):
        if self.kind == "iid":
            if self.base not in _IID_BASES:
                raise ValueError(f"unknown iid base {self.base!r}")
        elif self.kind == "sphere":
            pass
        elif self.kind == "lpball":
            if self.p is None or not np.isfinite(self.p) or self.p <= 0:
                raise ValueError("lpball requires finite p > 0")
        else:
            raise ValueError(f"unknown law kind {self.kind!r}")

    @property
    def tag(self) -> str:
        if self.kind == "iid":
            return f"iid:{self.base}"
        if self.kind == "lpball":
            return f"lpball:{self.p:g}"
        return "sphere"

    @staticmethod
    def parse(spec: str) -> "VectorLaw":
        """Parse a law string: iid:gaussian | iid:rademacher | iid:uniform
        | sphere | lpball:<p>."""
        spec = spec.strip()
        if spec == "sphere":
            return VectorLaw("sphere")
        if spec.startswith("iid:"):
            return VectorLaw("iid", base=spec[4:])
        if spec.startswith("lpball:"):
            try:
                p = float(spec[7:])
            except ValueError as exc:
                raise ValueError(f"bad lpball exponent in {spec!r}") from exc
            return VectorLaw("lpball", p=p)
        raise ValueError(f"unknown law spec {spec!r}")


@dataclass(frozen=True)
class MomentProfile:
    """Exact finite-n moment data for one law."""

    a22_exact: Callable[[int], float]
    kappa4_exact: Callable[[int], float]
    a: float
    b: float


def isotropy_scale_lp(n: int, p: float) -> float:
    """Scale making the uniform l_p-ball vector isotropic.

    Returns (B(1/p, 2/p) / (n * B(n/p + 1, 2/p)))^(1/2), evaluated through
    log-gamma so that large n/p does not overflow.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not np.isfinite(p) or p <= 0:
        raise ValueError("p must be finite and > 0")
    log_s2 = betaln(1.0 / p, 2.0 / p) - np.log(n) - betaln(n / p + 1.0, 2.0 / p)
    s = np.exp(0.5 * log_s2)
    if not np.isfinite(s):
        raise FloatingPointError("isotropy scale overflowed")
    return float(s)


def sample_matrix(law: VectorLaw, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw m independent vectors as the rows of an (m, n) array."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    if law.kind == "iid":
        if law.base == "gaussian":
            x = rng.standard_normal((m, n))
        elif law.base == "rademacher":
            x = rng.integers(0, 2, size=(m, n)).astype(float) * 2.0 - 1.0
        else:  # uniform on [-sqrt(3), sqrt(3)], unit variance
            x = rng.uniform(-_SQRT3, _SQRT3, size=(m, n))
        return x / np.sqrt(n)
    if law.kind == "sphere":
        g = rng.standard_normal((m, n))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    # lpball: |g_i| = W^(1/p) with W ~ Gamma(1/p) gives density prop. to
    # exp(-|t|^p); sum |g_i|^p is then the already-drawn W row sum.
    p = law.p
    w = rng.gamma(1.0 / p, size=(m, n))
    sign = rng.integers(0, 2, size=(m, n)) * 2 - 1
    g = sign * w ** (1.0 / p)
    e = rng.standard_exponential((m, 1))
    x = g / (w.sum(axis=1, keepdims=True) + e) ** (1.0 / p)
    return isotropy_scale_lp(n, p) * x


def sample_vector(law: VectorLaw, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one isotropic vector of dimension n."""
    return sample_matrix(law, n, 1, rng)[0]


def _lp_gamma_ratio(n: int, p: float) -> float:
    # Gamma(t+1+2/p)^2 / (Gamma(t+1) Gamma(t+1+4/p)),  t = n/p;
    # equals n^2 * a22(n) for the isotropic l_p-ball law.
    t = n / p
    return float(np.exp(2 * gammaln(t + 1 + 2 / p) - gammaln(t + 1) - gammaln(t + 1 + 4 / p)))


def _lp_kurtosis_const(p: float) -> float:
    # Gamma(1/p) Gamma(5/p) / Gamma(3/p)^2
    return float(np.exp(gammaln(1 / p) + gammaln(5 / p) - 2 * gammaln(3 / p)))


def moment_profile(law: VectorLaw) -> MomentProfile:
    """Exact moment profile (a22, kappa4 as functions of n, and (a, b))."""
    if law.kind == "iid":
        m4 = _BASE_M4[law.base]
        return MomentProfile(
            a22_exact=lambda n: 1.0 / n**2,
            kappa4_exact=lambda n, m4=m4: (m4 - 3.0) / n**2,
            a=0.0,
            b=m4 - 3.0,
        )
    if law.kind == "sphere":
        # E{y_j^4} = 3 / (n (n + 2)) = 3 a22, so kappa4 vanishes exactly.
        return MomentProfile(
            a22_exact=lambda n: 1.0 / (n * (n + 2)),
            kappa4_exact=lambda n: 0.0,
            a=-2.0,
            b=0.0,
        )
    p = law.p
    kconst = _lp_kurtosis_const(p)
    # The gamma-ratio expansion gives a22 = n^-2 (1 - 4/(p n) + O(n^-2)),
    # hence a = -4/p.  (Checked against closed-form ball moments at p = 2
    # and brute-force integration at p = 1.)
    return MomentProfile(
        a22_exact=lambda n, p=p: _lp_gamma_ratio(n, p) / n**2,
        kappa4_exact=lambda n, p=p, k=kconst: (k - 3.0) * _lp_gamma_ratio(n, p) / n**2,
        a=-4.0 / p,
        b=kconst - 3.0,
    )


@dataclass(frozen=True)
class MomentEstimate:
    a22: float
    a22_se: float
    kappa4: float
    kappa4_se: float


def estimate_moments(law: VectorLaw, n: int, R: int, rng: np.random.Generator) -> MomentEstimate:
    """Monte-Carlo estimates of a22 and kappa4 with standard errors.

    Pools y_j^2 y_k^2 over all j != k pairs of each draw through the identity
    sum_{j!=k} y_j^2 y_k^2 = (sum y^2)^2 - sum y^4.
    """
    if R < 2:
        raise ValueError("R must be >= 2")
    # draw in blocks to bound memory
    block = max(1, min(R, 4_000_000 // max(n, 1)))
    us = np.empty(R)
    vs = np.empty(R)
    done = 0
    while done < R:
        k = min(block, R - done)
        y = sample_matrix(law, n, k, rng)
        y2 = y * y
        s2 = y2.sum(axis=1)
        s4 = (y2 * y2).sum(axis=1)
        us[done : done + k] = (s2 * s2 - s4) / (n * (n - 1)) if n > 1 else np.nan
        vs[done : done + k] = s4 / n
        done += k
    a22 = us.mean()
    m4 = vs.mean()
    kap = vs - 3.0 * us
    return MomentEstimate(
        a22=float(a22),
        a22_se=float(us.std(ddof=1) / np.sqrt(R)),
        kappa4=float(m4 - 3.0 * a22),
        kappa4_se=float(kap.std(ddof=1) / np.sqrt(R)),
    )


def quadratic_form_variance(A: np.ndarray, profile: MomentProfile, n: int) -> float:
    """Exact Var{(A y, y)} for a symmetric matrix A under the given profile.

    Equals (a22 - n^-2) |Tr A|^2 + 2 a22 Tr(A A*) + kappa4 sum_j |A_jj|^2.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if A.shape[0] != n:
        raise ValueError("A must be n x n")
    if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("A must be symmetric")
    a22 = profile.a22_exact(n)
    kap = profile.kappa4_exact(n)
    tr = np.trace(A)
    frob2 = float(np.sum(np.abs(A) ** 2))  # Tr(A A*)
    diag2 = float(np.sum(np.abs(np.diag(A)) ** 2))
    return float((a22 - 1.0 / n**2) * abs(tr) ** 2 + 2.0 * a22 * frob2 + kap * diag2)

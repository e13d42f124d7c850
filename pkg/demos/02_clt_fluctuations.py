"""
Gaussian fluctuations of linear eigenvalue statistics
=====================================================

The centered statistic N[phi] - E{N[phi]} does not need any n-dependent
normalization: its variance stays O(1).  This script replicates the
statistic, compares the replicate histogram with the predicted normal law,
and prints the usual shape diagnostics.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rmtlab import (
    ExperimentConfig,
    SigmaMeasure,
    VectorLaw,
    exp_phi,
    moment_profile,
    run_clt,
    variance_limit,
)

law = VectorLaw.parse("iid:gaussian")
sigma = SigmaMeasure.point_mass(1.0, 1.0)
phi = exp_phi(1.0)

prof = moment_profile(law)
predicted = variance_limit(phi, sigma, prof.a, prof.b).V

cfg = ExperimentConfig(law=law, sigma=sigma, n=256, R=400, seed=11, phi=phi)
rep = run_clt(cfg, keep_replicates=True, predicted_variance=predicted)

print(f"predicted variance  {rep.predicted_variance:.5f}")
print(f"sample variance     {rep.sample_variance:.5f} (SE {rep.variance_se:.5f})")
print(f"skewness            {rep.skewness:+.3f}")
print(f"excess kurtosis     {rep.excess_kurtosis:+.3f}")
print(f"KS normality p      {rep.ks_pvalue:.3f}")

centered = rep.replicates - rep.sample_mean
x = np.linspace(centered.min(), centered.max(), 300)
pdf = np.exp(-x * x / (2 * predicted)) / np.sqrt(2 * np.pi * predicted)

plt.figure(figsize=(6, 4))
plt.hist(centered, bins=40, density=True, alpha=0.5, label="replicates")
plt.plot(x, pdf, "k", label="predicted normal")
plt.xlabel(r"$N[\varphi] - \overline{N[\varphi]}$")
plt.legend()
plt.tight_layout()
plt.savefig("clt_histogram.png", dpi=130)
print("wrote clt_histogram.png")

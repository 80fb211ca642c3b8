"""
Choosing the delay and the embedding dimension
==============================================

The delay tau is taken at the first local minimum of the average mutual
information; the dimension k at the first value where the fraction of
false nearest neighbours drops below 1%.
"""

import warnings

import numpy as np

from crpsync.embedding import ami_curve, estimate_delay_ami, estimate_dimension_fnn, fnn_fractions

rng = np.random.default_rng(1)
t = np.arange(4000) * 0.1
x = np.sin(2 * np.pi * t / 8) + 0.1 * rng.standard_normal(t.size)

curve = ami_curve(x, 30)  # lags 1..30
for lag, mi in enumerate(curve, 1):
    print(f"lag {lag:2d}  MI {mi:.3f}  " + "#" * int(mi * 20))

# period 8 at dt = 0.1 puts the quarter period at 20 samples
tau = estimate_delay_ami(x, max_lag=60)
print("tau from AMI:", tau)

frac = fnn_fractions(x, tau=tau, max_k=6)
for k, f in enumerate(frac, 1):
    print(f"k={k}  false neighbours {f:.3f}")

print("k from FNN:", estimate_dimension_fnn(x, tau=tau, max_k=6))

# pure noise keeps producing false neighbours, so the estimator falls back to max_k
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    print("noise k:", estimate_dimension_fnn(rng.standard_normal(1000), tau=1, max_k=4))
    print("warning:", caught[0].message if caught else None)

# a random walk has monotone MI, so no minimum exists inside the search range
walk = np.cumsum(rng.standard_normal(2000))
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    print("random walk tau:", estimate_delay_ami(walk, max_lag=8))
    print("warning:", caught[0].message if caught else None)

# %% [markdown]
# # Sizing Bloom filters and predicting query noise
#
# Each document gets a Bloom filter. How wide must it be, and how often
# will an unrelated query still report a document?

# %%
import math

import numpy as np

from cobsindex import fpr_approx, fpr_exact, optimal_parameters, query_fpr, size_filter
from cobsindex.bloom_math import query_fpr_chernoff

# %% one hash function, target 30% false positives
v, p = 1000, 0.3
w = size_filter(v, p, k=1)
print(f"{v} terms at p={p}: w={w} bits ({w / v:.2f} bits per term)")
print(f"  approx rate {fpr_approx(w, 1, v):.6f}, exact rate {fpr_exact(w, 1, v):.6f}")

# %% the textbook optimum for a tight target uses several hash functions
w, k = optimal_parameters(v, 0.01)
print(f"p=0.01: w={w}, k={k}, rate {fpr_approx(w, k, v):.5f}")

# %% a loose single filter, many q-grams per query
# a 100 bp DNA pattern has 70 distinct 31-grams; require half of them
for ell in (10, 30, 70, 150):
    print(f"ell={ell:4d} K=0.5 p=0.3  exact {query_fpr(ell, 0.5, p):.3e}  "
          f"Chernoff bound {query_fpr_chernoff(ell, 0.5, p):.3e}")

# %% simulate: 200000 random queries of 70 terms against one filter with p=0.3
rng = np.random.default_rng(0)
hits = rng.random((200_000, 70)) < 0.3
observed = np.mean(hits.sum(axis=1) > math.floor(0.5 * 70))
print(f"simulated {observed:.2e} vs closed form {query_fpr(70, 0.5, 0.3):.2e}")

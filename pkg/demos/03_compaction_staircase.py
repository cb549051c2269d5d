# %% [markdown]
# # Why blocks of similar-sized documents save space
#
# A single bit matrix must be as tall as the largest document needs.
# Sorting documents by size and giving every block of B its own height
# turns that rectangle into a staircase.

# %%
import numpy as np

from cobsindex import IndexParams, build_classic, build_compact, extract_terms, index_footprint

rng = np.random.default_rng(2)
sizes = np.geomspace(500, 60_000, 96).astype(int)
docs = [
    extract_terms(["".join(np.array(list("ACGT"))[rng.integers(0, 4, n)])], 21, True, f"d{i:03d}")
    for i, n in enumerate(rng.permutation(sizes))
]

# %%
classic_bytes = index_footprint(build_classic(docs, IndexParams(q=21, canonical=True)))
print(f"classic: {classic_bytes:,} bytes")
for B in (96, 32, 16, 8, 4):
    ix = build_compact(docs, IndexParams(q=21, canonical=True, block_size=B))
    fp = index_footprint(ix)
    print(f"B={B:3d}: {fp:10,} bytes  ({fp / classic_bytes:.2f} of classic)")

# %% the staircase itself
ix = build_compact(docs, IndexParams(q=21, canonical=True, block_size=16))
for i, block in enumerate(ix.blocks):
    bar = "#" * int(60 * block.w / ix.blocks[-1].w)
    print(f"block {i}: w={block.w:7d} {bar}")

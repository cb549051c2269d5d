# %% [markdown]
# # Building an index over DNA documents and querying it

# %%
import numpy as np

from cobsindex import IndexParams, QueryOptions, build_compact, extract_terms, query, revcomp

rng = np.random.default_rng(1)


def dna(n):
    return "".join(np.array(list("ACGT"))[rng.integers(0, 4, n)])


# 40 "genomes" between 2 and 20 kb
genomes = {f"g{i:02d}": dna(int(n)) for i, n in enumerate(rng.integers(2000, 20_000, 40))}

# %% canonical 31-mers, so either strand finds a match
params = IndexParams(q=31, k=1, p=0.3, canonical=True, block_size=8)
docs = [extract_terms([seq], params.q, params.canonical, name) for name, seq in genomes.items()]
index = build_compact(docs, params)
print(f"{index.num_docs} documents in {len(index.blocks)} blocks, widths {index.widths}")

# %% a read copied from g07, then its reverse complement
read = genomes["g07"][5000:5150]
for label, pattern in (("forward", read), ("reverse", revcomp(read))):
    print(label, query(index, pattern, QueryOptions(K=0.9)))

# %% introduce sequencing errors; a lower threshold still recovers the source
noisy = list(read)
for pos in rng.choice(len(noisy), 3, replace=False):
    noisy[pos] = "ACGT"[(("ACGT".index(noisy[pos])) + 1) % 4]
noisy = "".join(noisy)
print("3 errors, K=0.9:", query(index, noisy, QueryOptions(K=0.9)))
print("3 errors, K=0.3:", query(index, noisy, QueryOptions(K=0.3, top_t=3)))

# %% a short 31 bp query is noisy: about p of all documents report it
print("random 31-mer hits:", len(query(index, dna(31), QueryOptions(K=1.0))), "of", index.num_docs)

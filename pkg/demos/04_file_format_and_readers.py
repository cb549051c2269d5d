# %% [markdown]
# # Saving an index and reading only what a query touches

# %%
import tempfile
from pathlib import Path

import numpy as np

from cobsindex import (
    IndexParams, QueryOptions, build_compact, extract_terms, open_random_access, open_resident,
    query, write_index,
)

rng = np.random.default_rng(3)
seqs = {f"s{i:03d}": "".join(np.array(list("ACGT"))[rng.integers(0, 4, int(n))])
        for i, n in enumerate(rng.integers(1000, 30_000, 120))}
params = IndexParams(q=31, canonical=True, block_size=16)
index = build_compact([extract_terms([s], 31, True, n) for n, s in seqs.items()], params)

path = Path(tempfile.mkdtemp()) / "demo.cobs"
write_index(index, path)
size = path.stat().st_size
print(f"{path.name}: {size:,} bytes")

# %% the first bytes: magic, version, kind, scheme, flags, q, k, p, B, blocks
print(path.read_bytes()[:36].hex(" "))

# %% both readers answer identically; random access copies a few rows per block
pattern = seqs["s042"][1000:1100]
with open_resident(path) as resident, open_random_access(path) as mapped:
    a = query(resident, pattern, QueryOptions(K=0.8))
    b = query(mapped, pattern, QueryOptions(K=0.8))
    assert a == b
    print(a)
    print(f"random access read {mapped.bytes_read:,} payload bytes of {size:,}")

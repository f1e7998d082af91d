"""Log evidence of disk_poisson over lengthscales, with the jitter each needed.

    python3 scripts/disk_lengthscale_profile.py [N_I]

Shows where the evidence peaks for the sunflower layout and how far below
the peak a lengthscale of 3.5 sits.
"""
import sys

import numpy as np

from gpcolloc import casebook
from gpcolloc.gp import assemble, log_marginal_likelihood

n_i = int(sys.argv[1]) if len(sys.argv) > 1 else 16
spec = casebook.build_case("disk_poisson", n_i=n_i, ell=1.0)
ells = np.concatenate([np.geomspace(0.1, 6.0, 25), [3.5]])
rows = []
for ell in np.unique(ells):
    s = spec.with_lengthscale(float(ell))
    sys_ = assemble(s)
    rows.append((ell, log_marginal_likelihood(s, sys_), sys_.jitter_used))
best = max(rows, key=lambda r: r[1])
print(f"{'ell':>8} {'log evidence':>14} {'jitter':>9}")
for ell, lml, jit in rows:
    mark = " <- max" if ell == best[0] else ""
    print(f"{ell:8.4f} {lml:14.4f} {jit:9.1e}{mark}")

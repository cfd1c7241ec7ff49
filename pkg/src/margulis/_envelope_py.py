"""Pure-Python (numpy) lower-envelope scan; same contract as the compiled kernel."""

import numpy as np


def envelope_many(c, radii, out_w2, out_k):
    """Fill out_w2/out_k; return 0, or the first k past the end of ``c`` still needed."""
    n = c.shape[0]
    kk = np.arange(n, dtype=np.float64)
    kk *= kk
    for i in range(radii.shape[0]):
        r2 = radii[i] * radii[i]
        best = np.inf
        best_k = 0
        lo = 1
        while lo * lo < best:
            if lo >= n:
                return lo
            # doubling chunks: total work stays within twice the final cutoff
            hi = min(n, 2 * lo)
            w2 = c[lo:hi] * r2 + kk[lo:hi]
            j = int(np.argmin(w2))
            if w2[j] < best:
                best = float(w2[j])
                best_k = lo + j
            lo = hi
        out_w2[i] = best
        out_k[i] = best_k
    return 0

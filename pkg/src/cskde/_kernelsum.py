"""Direct evaluation of kernel sums ``sum_i K((x - v_i) / h)`` over sorted data."""

from __future__ import annotations

import numpy as np

# max number of (x, v) pairs materialised at once
_BLOCK = 1 << 21


def kernel_sums(x, data_sorted, h, funcs, weights=None):
    """Return one array per function in ``funcs`` with ``sum_i f((x - v_i)/h)``.

    ``data_sorted`` must be ascending.  Only data within ``h`` of each ``x``
    can contribute (kernels vanish outside [-1, 1]), so evaluation points are
    processed in sorted blocks touching a contiguous slice of the data.
    Results depend only on the inputs, never on how blocks are formed at
    run time.
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    out = [np.zeros(x.size) for _ in funcs]
    if x.size == 0 or data_sorted.size == 0:
        return [o.reshape(shape) for o in out]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    lo = np.searchsorted(data_sorted, xs - h, side="left")
    hi = np.searchsorted(data_sorted, xs + h, side="right")
    i = 0
    m = xs.size
    while i < m:
        j = i + 1
        # grow the block while the materialised matrix stays small
        while j < m and (j + 1 - i) * (hi[j] - lo[i]) <= _BLOCK:
            j += 1
        a, b = lo[i], hi[j - 1]
        if b > a:
            u = (xs[i:j, None] - data_sorted[None, a:b]) / h
            for k, f in enumerate(funcs):
                vals = f(u)
                if weights is not None:
                    vals = vals * weights[None, a:b]
                out[k][order[i:j]] = vals.sum(axis=1)
        i = j
    return [o.reshape(shape) for o in out]

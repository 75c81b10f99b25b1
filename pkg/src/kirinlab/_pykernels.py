"""Python/numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_kernels`` module; used when the
extension is unavailable or ``KIRINLAB_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import numpy as np

_CHUNK_BITS = 16


def brute_force_max(c, At, b):
    """Maximise ``c @ x`` over x in {0,1}^n subject to ``At.T @ x <= b``.

    Bit ``n-1-j`` of the returned mask holds variable ``j`` so integer order
    equals lexicographic order of the assignment; ties go to the smaller mask.
    Returns ``(found, mask, value)``.
    """
    c = np.asarray(c, dtype=np.int64)
    At = np.asarray(At, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = c.shape[0]
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best_mask, best_val, found = 0, 0, False
    chunk = 1 << min(n, _CHUNK_BITS)
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        X = (masks[:, None] >> shifts[None, :]) & 1
        if At.shape[1]:
            ok = np.all(X @ At <= b, axis=1)
        else:
            ok = np.ones(masks.shape[0], dtype=bool)
        if not ok.any():
            continue
        vals = X[ok] @ c
        k = int(np.argmax(vals))  # first maximum -> smallest mask in chunk
        v = int(vals[k])
        if not found or v > best_val:
            best_val, best_mask, found = v, int(masks[ok][k]), True
    return found, best_mask, best_val


def propagate(x, indptr, indices, data, rhs, colptr, colrows):
    """Fix binary variables forced by ``A x <= rhs`` rows; ``x`` holds -1 for free.

    Mutates ``x`` in place and returns False as soon as a row cannot be met.
    """
    m = len(rhs)
    xs = x.tolist()
    ip = indptr.tolist()
    ix = indices.tolist()
    dv = data.tolist()
    rv = rhs.tolist()
    cp = colptr.tolist()
    cr = colrows.tolist()
    queue = list(range(m))
    queued = [True] * m
    while queue:
        i = queue.pop()
        queued[i] = False
        lo, hi = ip[i], ip[i + 1]
        minact = 0
        for k in range(lo, hi):
            v = xs[ix[k]]
            a = dv[k]
            if v == 1:
                minact += a
            elif v == -1 and a < 0:
                minact += a
        if minact > rv[i]:
            x[:] = xs
            return False
        slack = rv[i] - minact
        for k in range(lo, hi):
            j = ix[k]
            if xs[j] != -1:
                continue
            a = dv[k]
            if a > slack:
                xs[j] = 0
            elif -a > slack:
                xs[j] = 1
            else:
                continue
            for kk in range(cp[j], cp[j + 1]):
                r = cr[kk]
                if not queued[r]:
                    queued[r] = True
                    queue.append(r)
    x[:] = xs
    return True


def greedy_assign(depth, limits, longest_first=True):
    """Round-robin placement of heap-indexed sub-prefixes onto sessions.

    Node ``h`` (1-based heap order) is a sub-prefix at depth ``bit_length(h)-1``
    below the parent; its parent is ``h >> 1`` and its sibling ``h ^ 1``. A
    session accepts ``h`` unless it already owns the sibling, an ancestor or a
    descendant. ``longest_first`` visits the deepest level first, otherwise
    levels go shallow to deep; addresses ascend within a level. Returns the
    owner array indexed by ``h`` (-1 = not placed).
    """
    limits = [int(v) for v in limits]
    n_nodes = (1 << (depth + 1)) - 1
    ring = [s for s, lim in enumerate(limits) if lim > 0]
    counts = [0] * len(limits)
    owner = [-1] * (n_nodes + 1)
    ptr = 0
    levels = range(depth, -1, -1) if longest_first else range(depth + 1)
    for d in levels:
        below = depth - d
        for h in range(1 << d, 1 << (d + 1)):
            if not ring:
                return np.asarray(owner, dtype=np.int32)
            rl = len(ring)
            pos = ptr
            for _ in range(rl):
                s = ring[pos]
                ok = not (h & 1 and h > 1 and owner[h - 1] == s)
                if ok and not longest_first:
                    g = h >> 1
                    while g:
                        if owner[g] == s:
                            ok = False
                            break
                        g >>= 1
                elif ok:
                    for k in range(1, below + 1):
                        lo = h << k
                        if s in owner[lo:lo + (1 << k)]:
                            ok = False
                            break
                if ok:
                    owner[h] = s
                    counts[s] += 1
                    if counts[s] >= limits[s]:
                        del ring[pos]
                        ptr = pos if pos < len(ring) else 0
                    else:
                        ptr = pos + 1 if pos + 1 < rl else 0
                    break
                pos = pos + 1 if pos + 1 < rl else 0
    return np.asarray(owner, dtype=np.int32)

"""Independent brute-force references the tests check the real code against.

Everything here applies definitions directly (nested loops, exhaustive
enumeration) and deliberately shares no code with the package.
"""

import numpy as np

_STEP_CACHE: dict[int, np.ndarray] = {}


def _relative_offsets(length: int) -> np.ndarray:
    """Cumulative offsets of every step sequence in {-1,0,+1}^(length-1)."""
    cached = _STEP_CACHE.get(length)
    if cached is not None:
        return cached
    if length == 1:
        rel = np.zeros((1, 1), dtype=np.int64)
    else:
        grids = np.meshgrid(*([np.array([-1, 0, 1])] * (length - 1)), indexing="ij")
        steps = np.stack([g.ravel() for g in grids], axis=1)
        rel = np.concatenate(
            [np.zeros((steps.shape[0], 1), dtype=np.int64), np.cumsum(steps, axis=1)],
            axis=1,
        )
    _STEP_CACHE[length] = rel
    return rel


def exhaustive_min_seam_energy(vals: np.ndarray) -> float:
    """Minimum total energy over ALL 8-connected vertical seams."""
    vals = np.asarray(vals, dtype=np.float64)
    h, w = vals.shape
    rel = _relative_offsets(h)
    offs = np.arange(w)[:, None, None] + rel[None, :, :]  # (w, paths, h)
    valid = ((offs >= 0) & (offs < w)).all(axis=2)
    energies = vals[np.arange(h)[None, None, :], np.clip(offs, 0, w - 1)].sum(axis=2)
    energies[~valid] = np.inf
    return float(energies.min())


def exhaustive_best_seam(vals: np.ndarray) -> np.ndarray:
    """One minimal-energy vertical seam found by full enumeration."""
    vals = np.asarray(vals, dtype=np.float64)
    h, w = vals.shape
    rel = _relative_offsets(h)
    offs = np.arange(w)[:, None, None] + rel[None, :, :]
    valid = ((offs >= 0) & (offs < w)).all(axis=2)
    energies = vals[np.arange(h)[None, None, :], np.clip(offs, 0, w - 1)].sum(axis=2)
    energies[~valid] = np.inf
    start, path = np.unravel_index(np.argmin(energies), energies.shape)
    return offs[start, path]


def brute_gradient_energy(gray: np.ndarray) -> np.ndarray:
    """Pixel-by-pixel forward-difference energy with replicate boundary."""
    gray = np.asarray(gray, dtype=np.float64)
    h, w = gray.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            right = gray[y, x + 1] if x + 1 < w else gray[y, x]
            down = gray[y + 1, x] if y + 1 < h else gray[y, x]
            out[y, x] = abs(right - gray[y, x]) + abs(down - gray[y, x])
    return out


def brute_cumulative(vals: np.ndarray) -> np.ndarray:
    """Direct evaluation of the vertical DP recurrence, cell by cell."""
    vals = np.asarray(vals, dtype=np.float64)
    h, w = vals.shape
    m = np.zeros((h, w))
    m[0] = vals[0]
    for y in range(1, h):
        for x in range(w):
            lo, hi = max(x - 1, 0), min(x + 2, w)
            m[y, x] = vals[y, x] + m[y - 1, lo:hi].min()
    return m


def central_difference(fn, eps: float = 1e-5) -> float:
    """d fn / d x at 0 for a callable fn(delta)."""
    return (fn(eps) - fn(-eps)) / (2.0 * eps)


def sample_param_gradient_errors(
    run_loss,
    params: dict,
    grads: dict,
    rng: np.random.Generator,
    n_samples: int,
    eps: float = 1e-5,
):
    """Relative errors between analytic gradients and central differences.

    Samples parameter entries across all tensors.  Central differences are
    only valid on locally smooth segments, so probes whose estimate is
    inconsistent across two step sizes (a relu/max-pool kink inside the probe
    interval) are discarded and resampled; the relative errors of the
    accepted probes are returned.
    """
    names = sorted(params)
    sizes = np.array([params[n].size for n in names], dtype=np.float64)
    errors = []
    attempts = 0
    while len(errors) < n_samples and attempts < 4 * n_samples:
        attempts += 1
        name = names[int(rng.choice(len(names), p=sizes / sizes.sum()))]
        arr = params[name]
        idx = np.unravel_index(int(rng.integers(arr.size)), arr.shape)
        old = arr[idx]

        def probe(step):
            arr[idx] = old + step
            lp = run_loss()
            arr[idx] = old - step
            lm = run_loss()
            arr[idx] = old
            return (lp - lm) / (2.0 * step)

        fd = probe(eps)
        fd_small = probe(eps / 5.0)
        scale = max(abs(fd), abs(fd_small), 1e-8)
        if abs(fd - fd_small) > 1e-3 * scale:
            continue  # probe interval not smooth; resample
        analytic = grads[name][idx]
        denom = max(abs(analytic), abs(fd), 1e-8)
        errors.append(abs(analytic - fd) / denom)
    return np.array(errors)


def _pad_geometry(size: int, k: int, stride: int, padding: str):
    if padding == "valid":
        return (size - k) // stride + 1, 0
    out = (size + stride - 1) // stride
    total = max((out - 1) * stride + k - size, 0)
    return out, total // 2


def dense_separable_conv(x, dw, pw, stride=1, padding="same"):
    """Depthwise-then-pointwise convolution by literal nested loops."""
    x = np.asarray(x, dtype=np.float64)
    dw = np.asarray(dw, dtype=np.float64)
    pw = np.asarray(pw, dtype=np.float64)
    n, h, w, c = x.shape
    kh, kw, _ = dw.shape
    cout = pw.shape[1]
    ho, pt = _pad_geometry(h, kh, stride, padding)
    wo, pl = _pad_geometry(w, kw, stride, padding)
    mid = np.zeros((n, ho, wo, c))
    for b in range(n):
        for oy in range(ho):
            for ox in range(wo):
                for ch in range(c):
                    acc = 0.0
                    for i in range(kh):
                        for j in range(kw):
                            yy = oy * stride + i - pt
                            xx = ox * stride + j - pl
                            if 0 <= yy < h and 0 <= xx < w:
                                acc += x[b, yy, xx, ch] * dw[i, j, ch]
                    mid[b, oy, ox, ch] = acc
    out = np.zeros((n, ho, wo, cout))
    for b in range(n):
        for oy in range(ho):
            for ox in range(wo):
                for o in range(cout):
                    out[b, oy, ox, o] = sum(
                        mid[b, oy, ox, ch] * pw[ch, o] for ch in range(c)
                    )
    return out


def dense_max_pool(x, k, stride, padding="same"):
    """Max pooling by literal nested loops with -inf padding."""
    x = np.asarray(x, dtype=np.float64)
    n, h, w, c = x.shape
    ho, pt = _pad_geometry(h, k, stride, padding)
    wo, pl = _pad_geometry(w, k, stride, padding)
    out = np.full((n, ho, wo, c), -np.inf)
    for b in range(n):
        for oy in range(ho):
            for ox in range(wo):
                for ch in range(c):
                    for i in range(k):
                        for j in range(k):
                            yy = oy * stride + i - pt
                            xx = ox * stride + j - pl
                            if 0 <= yy < h and 0 <= xx < w:
                                out[b, oy, ox, ch] = max(
                                    out[b, oy, ox, ch], x[b, yy, xx, ch]
                                )
    return out

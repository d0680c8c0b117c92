"""Pure numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Arrays are float64; per-row camera parameters broadcast over the pixel axis.
"""

import numpy as np

LN2_HALF = 0.5 * np.log(2.0)


def camera_forward(r, factor, beta, gamma):
    """l[b, i] = CRF(min(factor[b] * r[b, i], 1); beta[b], gamma[b])."""
    x = np.minimum(r * factor[:, None], 1.0)
    xg = x ** gamma[:, None]
    b = beta[:, None]
    return (1.0 + b) * xg / (b + xg)


def camera_vjp(r, factor, beta, gamma, grad_out):
    """Gradients of sum(grad_out * l) w.r.t. r and the log exposure e.

    ``factor = 2**(e/2)``; the clip uses subgradient 1 at exactly 1 and 0 above.
    The CRF slope at x = 0 is taken as 0 (generator radiance is never 0).
    """
    f = factor[:, None]
    b = beta[:, None]
    g = gamma[:, None]
    x = r * f
    live = x <= 1.0
    x = np.minimum(x, 1.0)
    safe = np.where(x > 0, x, 1.0)
    xg = safe ** g
    slope = (1.0 + b) * g * (xg / safe) * b / (b + xg) ** 2
    slope = np.where(live & (x > 0), slope, 0.0)
    gx = grad_out * slope
    grad_r = gx * f
    grad_e = np.sum(gx * x, axis=1) * LN2_HALF
    return grad_r, grad_e


def soft_mask(ldr, tau):
    peak = ldr.max(axis=2)
    return np.maximum(0.0, peak - tau) / (1.0 - tau)


def merge_stack(ldr, factor, beta, gamma, sat_level):
    """Hat-weighted radiance estimate from K exposures of N values.

    ``ldr`` is (K, N). Values at or above ``sat_level`` are excluded; values
    saturated in every exposure fall back to the shortest exposure's estimate.
    """
    lin = (ldr * beta / (beta + (1.0 - ldr))) ** (1.0 / gamma)
    est = lin / factor[:, None]
    ok = ldr < sat_level
    w = np.maximum(1.0 - np.abs(2.0 * ldr - 1.0), 0.01) * ok
    wsum = w.sum(axis=0)
    merged = (w * est).sum(axis=0) / np.where(wsum > 0, wsum, 1.0)
    fallback = est[int(np.argmin(factor))]
    return np.where(wsum > 0, merged, fallback)

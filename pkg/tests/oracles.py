"""Independent reference implementations used to derive frozen test values.

None of these import from ``ccfoe``; they are written for clarity, not speed.
"""

import math

import numpy as np


def reference_lfsr(order, tap, seed, n_bits):
    """Bit-by-bit shift register for the trinomial ``x**order + x**tap + 1``.

    The register holds the next ``order`` output bits, oldest first; each new
    bit is the xor of the oldest bit and the one ``order - tap`` places later.
    """
    reg = [(seed >> i) & 1 for i in range(order)]
    out = []
    for _ in range(n_bits):
        out.append(reg[0])
        new = reg[0] ^ reg[order - tap]
        reg = reg[1:] + [new]
    return np.array(out, dtype=np.uint8)


def reference_period(bits):
    """Smallest p such that ``bits[i] == bits[i + p]`` everywhere."""
    n = len(bits)
    for p in range(1, n):
        if np.array_equal(bits[: n - p], bits[p:]):
            return p
    return n


def gray_table():
    """Explicit constellation: bit pair -> symbol."""
    s = 1 / math.sqrt(2)
    return {(0, 0): complex(s, s), (0, 1): complex(-s, s), (1, 1): complex(-s, -s), (1, 0): complex(s, -s)}


def rc_at_symbol_instants(taps, sps):
    """Matched-pair cascade sampled at integer symbol offsets, normalized to the main tap."""
    c = np.convolve(taps, taps)
    mid = (len(c) - 1) // 2
    k = np.arange(-(mid // sps), mid // sps + 1)
    vals = c[mid + k * sps]
    return k, vals / vals[k == 0][0]


def isi_bound(taps, sps):
    """Worst-case ISI amplitude of the matched-pair cascade for unit-modulus symbols."""
    k, v = rc_at_symbol_instants(taps, sps)
    return float(np.sum(np.abs(v[k != 0])))


def trapezoid_prefix(x, y):
    """Running trapezoid integral via an explicit Python loop."""
    out = [0.0]
    for i in range(1, len(x)):
        out.append(out[-1] + 0.5 * (y[i - 1] + y[i]) * (x[i] - x[i - 1]))
    return np.array(out)


def three_segment(x, psi, slopes, q1):
    """Continuous piecewise-linear curve built from hinge terms."""
    x = np.asarray(x, dtype=float)
    p1, p2, p3 = slopes
    return q1 + p1 * x + (p2 - p1) * np.maximum(x - psi[0], 0) + (p3 - p2) * np.maximum(x - psi[1], 0)


def exhaustive_breakpoints(x, y, min_gap=2):
    """Global SSE minimizer over all ordered pairs of sample-point breakpoints.

    For each pair ``(x[i], x[j])`` the continuous hinge model
    ``[1, x, (x - x_i)+, (x - x_j)+]`` is fitted by least squares and the pair
    with the smallest residual wins. For a fixed ``i`` the first three
    columns are projected out once; each candidate ``j`` then adds a single
    orthogonalized column whose SSE reduction is closed form.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    best = (np.inf, None, None)
    for i in range(1, n - 1 - min_gap):
        js = np.arange(i + min_gap, n - 1)
        q, _ = np.linalg.qr(np.column_stack((np.ones(n), x, np.maximum(x - x[i], 0))))
        ry = y - q @ (q.T @ y)
        h2 = np.maximum(x[:, None] - x[js][None, :], 0)
        rh = h2 - q @ (q.T @ h2)
        norm = np.einsum("np,np->p", rh, rh)
        sse = ry @ ry - (rh.T @ ry) ** 2 / norm
        k = int(np.argmin(sse))
        if sse[k] < best[0]:
            best = (float(sse[k]), float(x[i]), float(x[js[k]]))
    return best[1], best[2], best[0]


def instantaneous_frequency(phase_fn, t, h=1e-12):
    """Central finite difference of ``phase / (2 pi)``."""
    return (phase_fn(t + h) - phase_fn(t - h)) / (2 * h) / (2 * math.pi)


def ewma_weighted_mean(values, xi):
    """Explicit normalized sum ``sum xi**(k-i) v_i / sum xi**(k-i)`` at every k."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    for k in range(values.shape[0]):
        w = xi ** np.arange(k, -1, -1, dtype=float)
        out[k] = np.tensordot(w, values[: k + 1], axes=1) / w.sum()
    return out


def ewma_variance_factor(xi):
    """Steady-state variance ratio of an EWMA over i.i.d. inputs."""
    return (1 - xi) / (1 + xi)


def dft_matrix_periodogram(z):
    """Periodogram by explicit DFT matrix, DC-centered."""
    n = len(z)
    k = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(k, k) / n)
    spec = w @ np.asarray(z)
    return np.abs(np.roll(spec, n // 2)) ** 2


def reference_downsample(fs, rs, rolloff, df_max):
    """Largest power of two n with ``fs / n >= 2 * max(rs(1+a)/2 + df, rs)``."""
    need = 2 * max(rs * (1 + rolloff) / 2 + df_max, rs)
    n = 1
    while fs / (2 * n) >= need:
        n *= 2
    return n

"""Hot numeric kernels.

Every kernel exists twice: a plain numpy implementation and a loop
implementation compiled with numba. The public names resolve to the numba
variant when numba imports and ``CCFOE_DISABLE_NUMBA`` is unset (or ``0``);
otherwise they resolve to numpy. Both variants are always importable through
``IMPLEMENTATIONS`` so they can be cross-checked and benchmarked.
"""

import os

import numpy as np

_FLAG = os.environ.get("CCFOE_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG not in {"", "0", "false", "no", "off"}

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

HAVE_NUMBA = njit is not None


# ---------------------------------------------------------------------------
# LFSR (Fibonacci form, s[n] = s[n - order] ^ s[n - tap])
# ---------------------------------------------------------------------------


def _lfsr_loop(order, tap, seed, n_bits):
    out = np.empty(n_bits, dtype=np.uint8)
    state = seed
    shift = order - tap
    top = order - 1
    for n in range(n_bits):
        out[n] = state & 1
        fb = (state ^ (state >> shift)) & 1
        state = (state >> 1) | (fb << top)
    return out


def _lfsr_numpy(order, tap, seed, n_bits):
    # s[n] only depends on bits at least `tap` positions back, so chunks of
    # `tap` bits can be produced with one vectorized xor each.
    total = max(n_bits, order)
    s = np.empty(total, dtype=np.uint8)
    s[:order] = (seed >> np.arange(order)) & 1
    n = order
    while n < total:
        stop = min(n + tap, total)
        s[n:stop] = s[n - order : stop - order] ^ s[n - tap : stop - tap]
        n = stop
    return s[:n_bits].copy()


# ---------------------------------------------------------------------------
# Trapezoidal primitives S_y and S_xy
# ---------------------------------------------------------------------------


def _primitives_loop(x, y):
    n = x.shape[0]
    sy = np.zeros(n)
    sxy = np.zeros(n)
    for i in range(1, n):
        dx = x[i] - x[i - 1]
        sy[i] = sy[i - 1] + 0.5 * (y[i - 1] + y[i]) * dx
        sxy[i] = sxy[i - 1] + 0.5 * (x[i - 1] * y[i - 1] + x[i] * y[i]) * dx
    return sy, sxy


def _primitives_numpy(x, y):
    dx = np.diff(x)
    xy = x * y
    sy = np.zeros(x.shape[0])
    sxy = np.zeros(x.shape[0])
    np.cumsum(0.5 * (y[:-1] + y[1:]) * dx, out=sy[1:])
    np.cumsum(0.5 * (xy[:-1] + xy[1:]) * dx, out=sxy[1:])
    return sy, sxy


# ---------------------------------------------------------------------------
# Normal equations of the breakpoint regression (regressors F1..F4 on F0 = y)
# ---------------------------------------------------------------------------


def _breakpoint_normal_eq_loop(x, y):
    m = np.zeros((4, 4))
    b = np.zeros(4)
    f = np.empty(4)
    sy = 0.0
    sxy = 0.0
    n = x.shape[0]
    for i in range(n):
        xi = x[i]
        yi = y[i]
        if i > 0:
            dx = xi - x[i - 1]
            sy += 0.5 * (y[i - 1] + yi) * dx
            sxy += 0.5 * (x[i - 1] * y[i - 1] + xi * yi) * dx
        f[0] = 6.0 * sxy - 2.0 * xi * sy - xi * xi * yi
        f[1] = xi * yi - 2.0 * sy
        f[2] = xi
        f[3] = 1.0
        for r in range(4):
            b[r] += f[r] * yi
            for c in range(r, 4):
                m[r, c] += f[r] * f[c]
    for r in range(4):
        for c in range(r):
            m[r, c] = m[c, r]
    return m, b


def _breakpoint_normal_eq_numpy(x, y):
    sy, sxy = _primitives_numpy(x, y)
    f = np.empty((x.shape[0], 4))
    f[:, 0] = 6.0 * sxy - 2.0 * x * sy - x * x * y
    f[:, 1] = x * y - 2.0 * sy
    f[:, 2] = x
    f[:, 3] = 1.0
    return f.T @ f, f.T @ y


# ---------------------------------------------------------------------------
# Normal equations of the slope regression (hinge regressors G1..G4)
# ---------------------------------------------------------------------------


def _slope_normal_eq_loop(x, y, psi1, psi2):
    m = np.zeros((4, 4))
    b = np.zeros(4)
    g = np.empty(4)
    for i in range(x.shape[0]):
        xi = x[i]
        h1 = xi - psi1 if xi >= psi1 else 0.0
        h2 = xi - psi2 if xi >= psi2 else 0.0
        g[0] = xi - h1
        g[1] = h1 - h2
        g[2] = h2
        g[3] = 1.0
        for r in range(4):
            b[r] += g[r] * y[i]
            for c in range(r, 4):
                m[r, c] += g[r] * g[c]
    for r in range(4):
        for c in range(r):
            m[r, c] = m[c, r]
    return m, b


def _slope_normal_eq_numpy(x, y, psi1, psi2):
    h1 = np.where(x >= psi1, x - psi1, 0.0)
    h2 = np.where(x >= psi2, x - psi2, 0.0)
    g = np.column_stack((x - h1, h1 - h2, h2, np.ones_like(x)))
    return g.T @ g, g.T @ y


# ---------------------------------------------------------------------------
# 4x4 solve: Gaussian elimination with partial pivoting
# ---------------------------------------------------------------------------


def _solve4_loop(m, b):
    """Return ``(solution, pivot_ratio)``; the ratio is ``inf`` on a zero pivot."""
    a = m.copy()
    v = b.copy()
    n = a.shape[0]
    pmax = 0.0
    pmin = np.inf
    for k in range(n):
        p = k
        for r in range(k + 1, n):
            if abs(a[r, k]) > abs(a[p, k]):
                p = r
        if p != k:
            for c in range(n):
                tmp = a[k, c]
                a[k, c] = a[p, c]
                a[p, c] = tmp
            tmp = v[k]
            v[k] = v[p]
            v[p] = tmp
        piv = abs(a[k, k])
        pmax = max(pmax, piv)
        pmin = min(pmin, piv)
        if piv == 0.0:
            return np.full(n, np.nan), np.inf
        for r in range(k + 1, n):
            f = a[r, k] / a[k, k]
            for c in range(k, n):
                a[r, c] -= f * a[k, c]
            v[r] -= f * v[k]
    sol = np.empty(n)
    for k in range(n - 1, -1, -1):
        acc = v[k]
        for c in range(k + 1, n):
            acc -= a[k, c] * sol[c]
        sol[k] = acc / a[k, k]
    return sol, pmax / pmin


_NUMPY = {
    "lfsr": _lfsr_numpy,
    "primitives": _primitives_numpy,
    "breakpoint_normal_eq": _breakpoint_normal_eq_numpy,
    "slope_normal_eq": _slope_normal_eq_numpy,
    "solve4": _solve4_loop,
}

IMPLEMENTATIONS = {"numpy": _NUMPY}

if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {
        "lfsr": njit(cache=True)(_lfsr_loop),
        "primitives": njit(cache=True)(_primitives_loop),
        "breakpoint_normal_eq": njit(cache=True)(_breakpoint_normal_eq_loop),
        "slope_normal_eq": njit(cache=True)(_slope_normal_eq_loop),
        "solve4": njit(cache=True)(_solve4_loop),
    }

BACKEND = "numba" if HAVE_NUMBA and not NUMBA_DISABLED else "numpy"
_active = IMPLEMENTATIONS[BACKEND]

lfsr = _active["lfsr"]
primitives = _active["primitives"]
breakpoint_normal_eq = _active["breakpoint_normal_eq"]
slope_normal_eq = _active["slope_normal_eq"]
solve4 = _active["solve4"]

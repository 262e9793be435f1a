"""Adaptive panel quadrature used across the package.

Gauss-Kronrod 7/15 on each panel, worst-panel bisection, explicit breakpoint
splitting so discontinuities and kinks always land on panel edges.  Integrands
must accept numpy arrays (they are called once per panel on all 15 nodes).
"""

import heapq
import math

import numpy as np

# 15-point Kronrod nodes on [-1, 1] and weights, with the embedded 7-point
# Gauss rule on the odd-indexed nodes.
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])
_GAUSS_IDX = np.arange(1, 15, 2)


def _panel(f, a, b):
    """One GK15 panel: returns (integral, error_estimate)."""
    h = 0.5 * (b - a)
    c = 0.5 * (a + b)
    fx = np.asarray(f(c + h * _XK), dtype=float)
    ik = h * float(np.dot(_WK, fx))
    ig = h * float(np.dot(_WG, fx[_GAUSS_IDX]))
    # QUADPACK-style scaled error estimate.
    mean = ik / (b - a) if b != a else 0.0
    resasc = abs(h) * float(np.dot(_WK, np.abs(fx - mean)))
    diff = abs(ik - ig)
    if resasc > 0.0 and diff > 0.0:
        err = resasc * min(1.0, (200.0 * diff / resasc) ** 1.5)
    else:
        err = diff
    return ik, err


def adaptive_quad(f, a, b, rel_tol=1e-10, abs_tol=0.0, breakpoints=(),
                  limit=4000):
    """Integrate f over [a, b], splitting at the given breakpoints.

    Returns (value, error_estimate).  Bisects the panel with the largest
    error until sum(err) <= max(abs_tol, rel_tol * |sum(value)|).
    """
    if b <= a:
        return 0.0, 0.0
    pts = [a]
    for p in sorted(set(float(x) for x in breakpoints)):
        if a < p < b:
            pts.append(p)
    pts.append(b)

    heap = []
    total = 0.0
    total_err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, err = _panel(f, lo, hi)
        total += val
        total_err += err
        # heapq is a min-heap: negate the error to pop the worst panel first.
        heapq.heappush(heap, (-err, lo, hi, val))

    n_panels = len(heap)
    while heap and n_panels < limit:
        if total_err <= max(abs_tol, rel_tol * abs(total)):
            break
        neg_err, lo, hi, val = heapq.heappop(heap)
        err = -neg_err
        if err <= 0.0 or hi - lo <= 16 * np.spacing(max(abs(lo), abs(hi), 1.0)):
            # Panel can no longer be improved; keep its contribution as-is.
            continue
        mid = 0.5 * (lo + hi)
        v1, e1 = _panel(f, lo, mid)
        v2, e2 = _panel(f, mid, hi)
        total += (v1 + v2) - val
        total_err += (e1 + e2) - err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        n_panels += 1
    return total, total_err


def _panels_eval(f, los, his):
    """GK15 on a batch of panels with one call to f; returns (vals, errs)."""
    h = 0.5 * (his - los)
    c = 0.5 * (his + los)
    xs = c[:, None] + h[:, None] * _XK[None, :]
    fx = np.asarray(f(xs.ravel()), dtype=float).reshape(xs.shape)
    ik = h * (fx @ _WK)
    ig = h * (fx[:, _GAUSS_IDX] @ _WG)
    width = his - los
    safe = np.where(width > 0.0, width, 1.0)
    mean = np.where(width > 0.0, ik / safe, 0.0)
    resasc = np.abs(h) * (np.abs(fx - mean[:, None]) @ _WK)
    diff = np.abs(ik - ig)
    safe_asc = np.where(resasc > 0.0, resasc, 1.0)
    err = np.where((resasc > 0.0) & (diff > 0.0),
                   resasc * np.minimum(1.0, (200.0 * diff / safe_asc) ** 1.5),
                   diff)
    return ik, err


def batched_quad(f, a, b, rel_tol=1e-10, abs_tol=0.0, breakpoints=(),
                 limit=4000):
    """Same contract as adaptive_quad, refined in vectorized rounds.

    Each round bisects every panel holding a meaningful share of the error
    and evaluates all children with a single call to f.  Preferable when
    one call to f on a large array is much cheaper than many small calls.
    """
    if b <= a:
        return 0.0, 0.0
    pts = [a]
    for p in sorted(set(float(x) for x in breakpoints)):
        if a < p < b:
            pts.append(p)
    pts.append(b)
    los = np.asarray(pts[:-1], dtype=float)
    his = np.asarray(pts[1:], dtype=float)
    vals, errs = _panels_eval(f, los, his)

    while True:
        total = float(vals.sum())
        total_err = float(errs.sum())
        tol = max(abs_tol, rel_tol * abs(total))
        if total_err <= tol or los.size >= limit:
            break
        floor = 16.0 * np.spacing(np.maximum(np.maximum(np.abs(los),
                                                        np.abs(his)), 1.0))
        can = (his - los) > floor
        if not can.any():
            break
        emax = errs[can].max()
        if emax <= 0.0:
            break
        split = can & ((errs >= 0.25 * emax) | (errs > tol / los.size))
        if not split.any():
            break
        mids = 0.5 * (los[split] + his[split])
        child_lo = np.concatenate([los[split], mids])
        child_hi = np.concatenate([mids, his[split]])
        cv, ce = _panels_eval(f, child_lo, child_hi)
        keep = ~split
        los = np.concatenate([los[keep], child_lo])
        his = np.concatenate([his[keep], child_hi])
        vals = np.concatenate([vals[keep], cv])
        errs = np.concatenate([errs[keep], ce])
    return float(vals.sum()), float(errs.sum())


def doubling_tail_quad(f, start, rel_tol=1e-10, max_doublings=60,
                       panel_rel_tol=1e-12):
    """Integrate f over [start, inf) by geometric [R, 2R] panels.

    Stops once a panel contributes less than rel_tol times the running
    total.  Raises ArithmeticError if the panel sequence fails to decay
    within max_doublings intervals (non-integrable tail).

    Returns (value, error_estimate, panel_values) where panel_values lets
    callers reconstruct how much tail lies beyond each doubling point.
    """
    total = 0.0
    err = 0.0
    panels = []
    lo = float(start)
    first = None
    for _ in range(max_doublings):
        hi = 2.0 * lo
        val, e = adaptive_quad(f, lo, hi, rel_tol=panel_rel_tol, limit=200)
        total += val
        err += e
        panels.append((lo, val))
        if first is None:
            first = abs(val)
        if abs(val) <= rel_tol * max(abs(total), 1e-300):
            return total, err, panels
        lo = hi
    raise ArithmeticError(
        "tail contributions failed to decay over %d doubling intervals"
        % max_doublings)


def fixed_tensor_quad(f2, ax, bx, ay, by, rel_tol=1e-9, n0=16, max_n=256,
                      xbreaks=(), ybreaks=()):
    """Tensor Gauss-Legendre quadrature of f2(x, y) over a rectangle.

    Doubles the per-axis node count until two successive refinements agree
    to rel_tol.  Axis breakpoints split the rectangle into sub-cells so the
    integrand is smooth inside each cell.  f2 must broadcast over arrays.
    """
    def cells(lo, hi, brks):
        pts = [lo] + [p for p in sorted(set(brks)) if lo < p < hi] + [hi]
        return list(zip(pts[:-1], pts[1:]))

    xcells = cells(ax, bx, xbreaks)
    ycells = cells(ay, by, ybreaks)

    prev = None
    n = n0
    while True:
        xg, wg = np.polynomial.legendre.leggauss(n)
        total = 0.0
        for (x0, x1) in xcells:
            hx = 0.5 * (x1 - x0)
            xs = 0.5 * (x0 + x1) + hx * xg
            for (y0, y1) in ycells:
                hy = 0.5 * (y1 - y0)
                ys = 0.5 * (y0 + y1) + hy * xg
                vals = f2(xs[:, None], ys[None, :])
                total += hx * hy * float(wg @ vals @ wg)
        if prev is not None and abs(total - prev) <= rel_tol * max(abs(total), 1e-300):
            return total, abs(total - prev)
        if n >= max_n:
            return total, abs(total - prev) if prev is not None else math.inf
        prev = total
        n *= 2

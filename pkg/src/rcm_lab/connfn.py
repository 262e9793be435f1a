"""Connection functions and their tail analysis.

A connection function g maps a separation distance to a link probability.
It must be non-increasing with 0 < integral of g over the plane < infinity;
that integral (the spatial constant C) normalizes every model density.

Built-in families:

  unit_disk(r0)            hard geometric connection, support [0, r0]
  lognormal(sigma, eta, r0)  erfc-shadowing fade: 1/2 erfc(k log10(x/r0)),
                           k = 10 eta / (sigma sqrt(2))
  theta_tail(a, x0, g0)    g = min(g0, a / (x^2 ln^2 x)) past x0, so
                           x^2 ln^2(x) g(x) stabilizes at a
  omega_tail(p, x0, g0)    continuous 1/(x^2 ln^p x) tail with 1 < p < 2,
                           so x^2 ln^2(x) g(x) grows without bound

Custom functions come from tabulated (x, g) samples with an explicit tail
rule, or from a user callable.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from ._quadcore import adaptive_quad, doubling_tail_quad


class NonConvergentError(ArithmeticError):
    """Tail contributions failed to decay; g looks non-integrable."""


class InconclusiveTailError(ValueError):
    """The tail diagnostic oscillates without a trend."""


@dataclass(frozen=True)
class TailClass:
    kind: str              # "little_o", "theta", or "omega"
    limit_estimate: float  # limit of x^2 ln^2(x) g(x): 0, a, or inf
    confidence: str        # qualitative flag from the diagnostic


@dataclass(frozen=True)
class ConnectionFunction:
    name: str
    kind: str
    params: dict = field(compare=False)
    support_radius: float = math.inf
    discontinuities: tuple = ()
    # ("zero", R): no mass past R. ("power_log", a, p, x_from): the exact
    # tail a/(x^2 ln^p x) holds for x >= x_from.  None: numeric tail only.
    tail: tuple | None = None

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0.0):
            raise ValueError("distances must be non-negative")
        out = self._eval(arr)
        return float(out) if out.shape == () else out

    def _eval(self, x):
        k = self.kind
        p = self.params
        if k == "unit_disk":
            return np.where(x <= p["r0"], 1.0, 0.0)
        if k == "lognormal":
            kslope = 10.0 * p["eta"] / (p["sigma"] * math.sqrt(2.0))
            with np.errstate(divide="ignore"):
                t = np.log10(np.where(x > 0.0, x, np.nan) / p["r0"])
            t = np.where(x > 0.0, t, -np.inf)
            return 0.5 * erfc(kslope * t)
        if k == "theta_tail":
            a, x0, g0 = p["a"], p["x0"], p["g0"]
            with np.errstate(divide="ignore", invalid="ignore"):
                lx = np.log(np.where(x > 1.0, x, 2.0))
                tail = a / (x * x * lx * lx)
            return np.where(x <= x0, g0, np.minimum(g0, tail))
        if k == "omega_tail":
            pexp, x0, g0 = p["p"], p["x0"], p["g0"]
            acont = g0 * x0 * x0 * math.log(x0) ** pexp
            with np.errstate(divide="ignore", invalid="ignore"):
                lx = np.log(np.where(x > 1.0, x, 2.0))
                tail = acont / (x * x * lx ** pexp)
            return np.where(x <= x0, g0, np.minimum(g0, tail))
        if k == "tabulated":
            xs, gs = p["x"], p["g"]
            out = np.interp(x, xs, gs, left=gs[0], right=0.0)
            rule = p["tail_rule"]
            beyond = x > xs[-1]
            if rule[0] == "power_log" and np.any(beyond):
                a, pw = rule[1], rule[2]
                with np.errstate(divide="ignore", invalid="ignore"):
                    lx = np.log(np.where(beyond, x, 2.0))
                    t = a / (x * x * lx ** pw)
                out = np.where(beyond, np.minimum(t, 1.0), out)
            return out
        if k == "scaled":
            return self.params["base"]._eval(x / p["factor"])
        if k == "zero":
            return np.zeros_like(x)
        if k == "custom":
            return np.asarray(p["fn"](x), dtype=float)
        raise ValueError("unknown connection function kind %r" % k)

    def scaled(self, factor):
        """The function x -> g(x / factor); stretches all length scales."""
        if not (factor > 0.0 and math.isfinite(factor)):
            raise ValueError("scale factor must be positive and finite")
        if factor == 1.0:
            return self
        tail = None
        if self.tail is not None:
            if self.tail[0] == "zero":
                tail = ("zero", self.tail[1] * factor)
            # power_log tails do not stay power_log under scaling (the log
            # shifts); analytic_tail_integral delegates to the base instead.
        return ConnectionFunction(
            name="%s*%g" % (self.name, factor),
            kind="scaled",
            params={"base": self, "factor": factor},
            support_radius=self.support_radius * factor,
            discontinuities=tuple(d * factor for d in self.discontinuities),
            tail=tail,
        )

    def analytic_tail_integral(self, R):
        """2 pi * integral_R^inf x g(x) dx when known in closed form, else None."""
        if self.support_radius <= R:
            return 0.0
        if self.kind == "scaled":
            base = self.params["base"]
            f = self.params["factor"]
            inner = base.analytic_tail_integral(R / f)
            return None if inner is None else f * f * inner
        if self.tail is None:
            return None
        if self.tail[0] == "zero":
            return 0.0 if R >= self.tail[1] else None
        _, a, p, x_from = self.tail
        if R < x_from:
            return None
        # 2 pi * int_R^inf a / (x ln^p x) dx = 2 pi a (ln R)^(1-p) / (p-1)
        return 2.0 * math.pi * a * math.log(R) ** (1.0 - p) / (p - 1.0)

    def signature(self):
        """Hashable identity used to decide whether two specs share one g."""
        items = []
        for key in sorted(self.params):
            v = self.params[key]
            if isinstance(v, np.ndarray):
                items.append((key, v.tobytes()))
            elif isinstance(v, ConnectionFunction):
                items.append((key, v.signature()))
            elif callable(v):
                items.append((key, id(v)))
            else:
                items.append((key, v))
        return (self.kind, tuple(items))


def unit_disk(r0=1.0):
    if not r0 > 0.0:
        raise ValueError("r0 must be positive")
    return ConnectionFunction(
        name="unit_disk(%g)" % r0, kind="unit_disk", params={"r0": float(r0)},
        support_radius=float(r0), discontinuities=(float(r0),),
        tail=("zero", float(r0)))


def lognormal(sigma, eta, r0=1.0):
    """Shadowing-style fade: probability 1/2 at x = r0, erfc roll-off."""
    if sigma <= 0.0 or eta <= 0.0 or r0 <= 0.0:
        raise ValueError("sigma, eta, r0 must be positive")
    return ConnectionFunction(
        name="lognormal(%g,%g,%g)" % (sigma, eta, r0), kind="lognormal",
        params={"sigma": float(sigma), "eta": float(eta), "r0": float(r0)})


def _power_log_start(a, p, x0, g0):
    """Smallest x >= x0 from which g equals a/(x^2 ln^p x) exactly."""
    def tail(x):
        return a / (x * x * math.log(x) ** p)
    if tail(x0) <= g0:
        return float(x0)
    lo, hi = x0, x0
    while tail(hi) > g0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tail(mid) > g0:
            lo = mid
        else:
            hi = mid
    return hi


def theta_tail(a, x0=3.0, g0=1.0):
    if a <= 0.0 or x0 <= 1.0 or not 0.0 < g0 <= 1.0:
        raise ValueError("need a > 0, x0 > 1, 0 < g0 <= 1")
    xf = _power_log_start(a, 2.0, x0, g0)
    return ConnectionFunction(
        name="theta_tail(%g,%g,%g)" % (a, x0, g0), kind="theta_tail",
        params={"a": float(a), "x0": float(x0), "g0": float(g0)},
        tail=("power_log", float(a), 2.0, xf))


def omega_tail(p, x0=3.0, g0=1.0):
    if not 1.0 < p < 2.0:
        raise ValueError("need 1 < p < 2")
    if x0 <= 1.0 or not 0.0 < g0 <= 1.0:
        raise ValueError("need x0 > 1, 0 < g0 <= 1")
    acont = g0 * x0 * x0 * math.log(x0) ** p
    return ConnectionFunction(
        name="omega_tail(%g,%g,%g)" % (p, x0, g0), kind="omega_tail",
        params={"p": float(p), "x0": float(x0), "g0": float(g0)},
        tail=("power_log", acont, float(p), float(x0)))


def zero_function():
    """Degenerate g = 0; valid for graph building, not for model densities."""
    return ConnectionFunction(name="zero", kind="zero", params={},
                              support_radius=0.0, tail=("zero", 0.0))


def from_callable(fn, name="custom", support_radius=math.inf,
                  discontinuities=()):
    return ConnectionFunction(name=name, kind="custom", params={"fn": fn},
                              support_radius=float(support_radius),
                              discontinuities=tuple(discontinuities))


def tabulated(x, g, tail_rule=("zero",), name="tabulated"):
    """Piecewise-linear g from samples; constant g[0] below x[0].

    tail_rule is ("zero",) or ("power_log", a, p) and applies past x[-1].
    """
    xs = np.asarray(x, dtype=float)
    gs = np.asarray(g, dtype=float)
    if xs.ndim != 1 or xs.shape != gs.shape or xs.size < 2:
        raise ValueError("need matching 1-D x and g arrays with >= 2 rows")
    if np.any(np.diff(xs) <= 0.0):
        raise ValueError("x samples must be strictly increasing")
    if np.any(gs < 0.0) or np.any(gs > 1.0):
        raise ValueError("g samples must lie in [0, 1]")
    if np.any(np.diff(gs) > 0.0):
        raise ValueError("g samples must be non-increasing")
    if tail_rule[0] not in ("zero", "power_log"):
        raise ValueError("tail rule must be 'zero' or 'power_log'")

    discs = []
    support = math.inf
    tail = None
    if tail_rule[0] == "zero":
        support = float(xs[-1])
        tail = ("zero", support)
        if gs[-1] > 0.0:
            discs.append(float(xs[-1]))
    else:
        a, p = float(tail_rule[1]), float(tail_rule[2])
        if a <= 0.0 or p <= 1.0:
            raise ValueError("power_log tail needs a > 0 and p > 1")
        if xs[-1] <= 1.0:
            raise ValueError("power_log tail needs the table to end past x = 1")
        join = a / (xs[-1] ** 2 * math.log(xs[-1]) ** p)
        if join > gs[-1] + 1e-12:
            raise ValueError("power_log tail would increase g at the join")
        if abs(join - gs[-1]) > 1e-12 * max(gs[-1], 1e-300):
            discs.append(float(xs[-1]))
        tail = ("power_log", a, p, float(xs[-1]))
    return ConnectionFunction(
        name=name, kind="tabulated",
        params={"x": xs, "g": gs, "tail_rule": tuple(tail_rule)},
        support_radius=support, discontinuities=tuple(discs), tail=tail)


def load_tabulated_csv(path, tail_rule=("zero",)):
    """Read (x, g(x)) rows from a CSV file; '#' lines and a header are skipped."""
    xs, gs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                xv, gv = float(row[0]), float(row[1])
            except ValueError:
                continue  # header row
            xs.append(xv)
            gs.append(gv)
    return tabulated(xs, gs, tail_rule=tail_rule, name="tabulated:%s" % path)


def from_config(cfg):
    """Build a connection function from a config mapping.

    {"family": "unit_disk", "params": {"r0": 1.0}} and similarly for
    lognormal / theta_tail / omega_tail; tabulated takes {"path": ...,
    "tail": {"kind": "zero"} | {"kind": "power_log", "a": ..., "p": ...}}.
    """
    try:
        family = cfg["family"]
        params = dict(cfg.get("params", {}))
    except (TypeError, KeyError) as exc:
        raise ValueError("connection config needs a 'family' entry") from exc
    stray = set(cfg) - {"family", "params"}
    if stray:
        raise ValueError(
            "unexpected connection config keys %s; function parameters "
            "belong under 'params'" % sorted(stray))
    if family == "unit_disk":
        return unit_disk(**params)
    if family == "lognormal":
        return lognormal(**params)
    if family == "theta_tail":
        return theta_tail(**params)
    if family == "omega_tail":
        return omega_tail(**params)
    if family == "tabulated":
        tail_cfg = params.pop("tail", {"kind": "zero"})
        if tail_cfg["kind"] == "zero":
            rule = ("zero",)
        else:
            rule = ("power_log", tail_cfg["a"], tail_cfg["p"])
        return load_tabulated_csv(params["path"], tail_rule=rule)
    raise ValueError("unknown connection function family %r" % family)


def _head_breakpoints(g, upto):
    brks = [d for d in g.discontinuities if 0.0 < d < upto]
    if g.tail is not None and g.tail[0] == "power_log" and g.tail[3] < upto:
        brks.append(g.tail[3])
    if g.kind in ("theta_tail", "omega_tail"):
        brks.append(min(g.params["x0"], upto))
    if g.kind == "tabulated":
        brks.extend(float(t) for t in g.params["x"] if 0.0 < t < upto)
    if g.kind == "scaled":
        f = g.params["factor"]
        brks.extend(b * f for b in _head_breakpoints(g.params["base"], upto / f))
    return brks


def integral_constant(g, rel_tol=1e-10):
    """The plane integral of g: C = 2 pi * integral_0^inf x g(x) dx.

    Splits at declared discontinuities; an infinite tail is summed over
    geometric [R, 2R] panels unless the function carries an exact tail
    formula.  Raises NonConvergentError when tail panels fail to decay
    (non-integrable g) and ValueError when the integral is not positive.
    """
    if not 1e-14 < rel_tol < 1e-2:
        raise ValueError("rel_tol must lie in (1e-14, 1e-2)")

    def xg(x):
        return x * g._eval(np.asarray(x, dtype=float))

    if math.isfinite(g.support_radius):
        R = g.support_radius
        head, _ = adaptive_quad(xg, 0.0, R, rel_tol=rel_tol * 0.5,
                                breakpoints=_head_breakpoints(g, R))
        total = 2.0 * math.pi * head
        if not total > 0.0:
            raise ValueError("connection function must have positive mass")
        return total

    # Analytic tail: quadrature head + closed-form remainder.
    tail_from = None
    if g.tail is not None and g.tail[0] == "power_log":
        tail_from = g.tail[3]
    elif g.kind == "scaled":
        base = g.params["base"]
        if base.tail is not None and base.tail[0] == "power_log":
            tail_from = base.tail[3] * g.params["factor"]
    if tail_from is not None:
        head, _ = adaptive_quad(xg, 0.0, tail_from, rel_tol=rel_tol * 0.5,
                                breakpoints=_head_breakpoints(g, tail_from))
        total = 2.0 * math.pi * head + g.analytic_tail_integral(tail_from)
        if not total > 0.0:
            raise ValueError("connection function must have positive mass")
        return total

    # Numeric tail via doubling panels.
    R0 = max([1.0] + [2.0 * d for d in g.discontinuities])
    head, _ = adaptive_quad(xg, 0.0, R0, rel_tol=rel_tol * 0.5,
                            breakpoints=_head_breakpoints(g, R0))
    try:
        tail, _, _ = doubling_tail_quad(xg, R0, rel_tol=rel_tol * 0.5)
    except ArithmeticError as exc:
        raise NonConvergentError(str(exc)) from exc
    total = 2.0 * math.pi * (head + tail)
    if not total > 0.0:
        raise ValueError("connection function must have positive mass")
    return total


def check_monotonicity(g, grid=4096):
    """True when g is non-increasing on a geometric grid spanning 1e-6..1e6."""
    xs = np.geomspace(1e-6, 1e6, int(grid))
    vals = np.asarray(g._eval(xs), dtype=float)
    return bool(np.all(np.diff(vals) <= 1e-12))


def classify_tail(g):
    """Classify lim x^2 ln^2(x) g(x) by sampling octaves x = 2^10 .. 2^60.

    Returns TailClass: little_o (limit 0), theta (finite positive limit,
    last 10 octaves agree within 1%), or omega (unbounded growth).
    Raises InconclusiveTailError when the samples oscillate without trend.
    """
    ks = np.arange(10, 61)
    xs = np.power(2.0, ks)
    fs = np.asarray(g._eval(xs), dtype=float) * xs * xs * np.log(xs) ** 2
    tail = fs[-10:]

    if np.all(tail == 0.0):
        return TailClass("little_o", 0.0, "exact-zero")
    mean = float(np.mean(tail))
    if mean > 0.0 and (tail.max() - tail.min()) <= 0.01 * mean:
        return TailClass("theta", mean, "stable-window")
    diffs = np.diff(fs[-20:])
    if np.all(diffs >= 0.0) and fs[-1] > fs[-20]:
        return TailClass("omega", math.inf, "trend")
    if np.all(diffs <= 0.0) and fs[-1] < fs[-20]:
        return TailClass("little_o", 0.0, "trend")
    raise InconclusiveTailError(
        "tail diagnostic oscillates; no stable limit over sampled octaves")


def effective_cutoff(g, tail_mass):
    """Smallest doubling-grid radius R with 2 pi int_R^inf x g dx <= tail_mass * C.

    Compact support returns the support radius.  Power-log tails are solved
    in log space; if the required radius overflows floats the cutoff is
    reported as inf (callers fall back to exact all-pairs behaviour).
    """
    if not 0.0 < tail_mass < 1.0:
        raise ValueError("tail_mass must lie in (0, 1)")
    if math.isfinite(g.support_radius):
        return float(g.support_radius)

    C = integral_constant(g)
    target = tail_mass * C

    tail_from = None
    a = p = None
    if g.tail is not None and g.tail[0] == "power_log":
        _, a, p, tail_from = g.tail
        scale = 1.0
    elif g.kind == "scaled":
        base = g.params["base"]
        if base.tail is not None and base.tail[0] == "power_log":
            _, a, p, tail_from = base.tail
            scale = g.params["factor"]
    if tail_from is not None:
        # Solve 2 pi a (ln u)^(1-p) / (p-1) = target / scale^2 for u = R/scale.
        t = target / (scale * scale)
        ln_u = (2.0 * math.pi * a / ((p - 1.0) * t)) ** (1.0 / (p - 1.0))
        if ln_u > 700.0:
            return math.inf
        return max(math.exp(ln_u), tail_from) * scale

    def xg(x):
        return x * g._eval(np.asarray(x, dtype=float))

    R0 = max([1.0] + [2.0 * d for d in g.discontinuities])
    try:
        _, _, panels = doubling_tail_quad(xg, R0, rel_tol=1e-14)
    except ArithmeticError as exc:
        raise NonConvergentError(str(exc)) from exc
    vals = [v for (_, v) in panels]
    suffix = np.cumsum(vals[::-1])[::-1]
    # tail beyond panel k's left edge ~ suffix sum from k on.
    for (lo, _), rest in zip(panels, suffix):
        if 2.0 * math.pi * rest <= target:
            return float(lo)
    return float(2.0 * panels[-1][0])

"""Network model frames and their parameter algebra.

All frames describe the same random graph at different length scales.  With
C the plane integral of g and r = sqrt((ln rho + b) / (C rho)):

  dense     unit square, intensity rho, connection g(x / r)
  extended  square of side sqrt(rho), intensity 1, connection
            g(x / sqrt((ln rho + b) / C))
  square    square of side 1/r, intensity (ln rho + b) / C, connection g
  torus     same numbers as square, periodic metric
  window    square frame padded on all sides; emulates the plane

Every frame has expected node count rho (window: rho plus the pad) and the
same expected edge-probability structure, which is what the shared-seed
coupling tests rely on.
"""

import math
from dataclasses import dataclass, replace

from . import simulate
from .connfn import ConnectionFunction, effective_cutoff, integral_constant
from .geometry import Region

MODELS = ("dense", "extended", "square", "torus", "window")
_RESCALABLE = ("dense", "extended", "square")


class InvalidParamsError(ValueError):
    """Model parameters outside the admissible range (e.g. ln rho + b <= 0)."""


class FrameMismatchError(ValueError):
    """Instance rescaling attempted across incompatible specs."""


@dataclass(frozen=True)
class ModelSpec:
    model: str
    rho: float
    b: float
    g: ConnectionFunction
    C: float | None = None          # cached integral constant
    margin: float | None = None     # window frame only

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidParamsError("model must be one of %s" % (MODELS,))
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise InvalidParamsError("rho must be positive and finite")
        if not math.isfinite(self.b):
            raise InvalidParamsError("b must be finite")

    def with_constant(self):
        """Same spec with C filled in (computed once, then cached)."""
        if self.C is not None:
            return self
        return replace(self, C=integral_constant(self.g))


@dataclass(frozen=True)
class DerivedParams:
    r_rho: float
    lam: float            # intensity of the square/torus frame
    side: float
    density: float        # intensity in this frame
    expected_nodes: float
    conn_scale: float     # this frame uses g(distance / conn_scale)
    metric: str
    core_side: float      # observation core (differs from side for window)
    margin: float


def derive(spec):
    """Frame parameters for a spec; raises InvalidParamsError off-domain."""
    spec = spec.with_constant()
    C = spec.C
    logterm = math.log(spec.rho) + spec.b
    if logterm <= 0.0:
        raise InvalidParamsError(
            "need ln(rho) + b > 0 (got %g)" % logterm)
    lam = logterm / C
    r_rho = math.sqrt(logterm / (C * spec.rho))

    m = spec.model
    if m == "dense":
        side, density, scale = 1.0, spec.rho, r_rho
    elif m == "extended":
        side, density, scale = math.sqrt(spec.rho), 1.0, math.sqrt(logterm / C)
    elif m in ("square", "torus"):
        side, density, scale = 1.0 / r_rho, lam, 1.0
    else:  # window
        margin = spec.margin
        if margin is None:
            cut = effective_cutoff(spec.g, 1e-6)
            margin = max(cut if math.isfinite(cut) else 0.0,
                         5.0 / (2.0 * math.sqrt(lam)))
        if not margin >= 0.0:
            raise InvalidParamsError("window margin must be >= 0")
        core = 1.0 / r_rho
        side, density, scale = core + 2.0 * margin, lam, 1.0
        return DerivedParams(
            r_rho=r_rho, lam=lam, side=side, density=density,
            expected_nodes=lam * side * side, conn_scale=scale,
            metric="euclidean", core_side=core, margin=margin)

    metric = "toroidal" if m == "torus" else "euclidean"
    # expected_nodes = density * side^2 = rho exactly, by construction.
    return DerivedParams(
        r_rho=r_rho, lam=lam, side=side, density=density,
        expected_nodes=spec.rho, conn_scale=scale, metric=metric,
        core_side=side, margin=0.0)


def frame_connection(spec):
    """The connection function evaluated on this frame's coordinates."""
    d = derive(spec)
    return spec.g if d.conn_scale == 1.0 else spec.g.scaled(d.conn_scale)


def frame_region(spec):
    d = derive(spec)
    kind = "torus" if spec.model == "torus" else "square"
    return Region(kind, d.side)


def realize(spec, seed, mode="exact", tail_mass=1e-6):
    """Sample one instance of the model: points plus edge set.

    Shared-seed realizations of the dense/extended/square frames give the
    same node count, the same unit-square positions (scaled), and identical
    edge index sets, because the node draw is keyed by (seed, expected rho)
    and edge decisions are keyed by (seed, i, j) alone.
    """
    d = derive(spec)
    region = frame_region(spec)
    pts = simulate.sample_poisson(region, d.density, seed,
                                  expected_count=d.expected_nodes)
    g_frame = frame_connection(spec)
    graph = simulate.build_graph(pts, g_frame, metric=d.metric, mode=mode,
                                 tail_mass=tail_mass)
    return graph


def rescale_instance(points, edges, from_spec, to_spec):
    """Map a sampled instance between the dense/extended/square frames.

    Coordinates scale by the side ratio; the edge index set is untouched
    (connection decisions are scale-free).  Raises FrameMismatchError when
    (rho, b, g) differ or either frame is not rescalable.
    """
    if from_spec.model not in _RESCALABLE or to_spec.model not in _RESCALABLE:
        raise FrameMismatchError(
            "rescaling is defined between the dense/extended/square frames")
    if (from_spec.rho, from_spec.b) != (to_spec.rho, to_spec.b):
        raise FrameMismatchError("rho and b must match to rescale")
    if from_spec.g.signature() != to_spec.g.signature():
        raise FrameMismatchError("connection functions differ")
    d_from = derive(from_spec)
    d_to = derive(to_spec)
    factor = d_to.side / d_from.side
    new_points = simulate.PointSet(
        positions=points.positions * factor,
        region=frame_region(to_spec),
        density=d_to.density,
        seed=points.seed)
    return new_points, edges

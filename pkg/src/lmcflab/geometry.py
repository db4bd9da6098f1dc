"""Discrete Lagrangian geometry: polyline immersions in C, products in C^2,
analytic plane pairs, and the pointwise quantities built on them (tangent
angle, mean curvature, Liouville primitive, normal projection).

Conventions fixed here and used everywhere else:

* the complex structure J acts per complex factor as J(a, b) = (-b, a);
* the Liouville form is lambda = sum_i (x_i dy_i - y_i dx_i), so that
  lambda/2 is a primitive of the Kaehler form sum_i dx_i ^ dy_i;
* angles are unwrapped continuously along each component, with the branch
  offset of the first vertex recorded.

All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BadFrame, DegenerateEdge, NotExact

# Closed components keep holonomy below this fraction of total length to
# count as exact; separates quadrature noise from genuine holonomy.
HOLONOMY_RTOL = 1e-8

MIN_CLOSED_VERTICES = 8
MIN_OPEN_VERTICES = 3


def apply_J(v: np.ndarray) -> np.ndarray:
    """Standard complex structure on R^{2n}, coordinates (x1,y1,x2,y2,...)."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0::2] = -v[..., 1::2]
    out[..., 1::2] = v[..., 0::2]
    return out


# ---------------------------------------------------------------------------
# curves


class DiscreteCurve:
    """Oriented polyline immersion in R^2, open or closed.

    Closed curves store each vertex once; the wrap-around edge is implicit.
    ``end_lines`` optionally pins the two endpoints of an open curve to
    asymptotic lines (point, unit direction), used by the flow engine.
    """

    def __init__(self, vertices, closed=False, component_id=0, end_lines=None):
        v = np.ascontiguousarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must have shape (N, 2)")
        n_min = MIN_CLOSED_VERTICES if closed else MIN_OPEN_VERTICES
        if v.shape[0] < n_min:
            raise ValueError(
                f"{'closed' if closed else 'open'} curve needs >= {n_min} vertices"
            )
        if closed and np.allclose(v[0], v[-1]):
            # first/last must be identified exactly once: drop the duplicate
            v = v[:-1]
            if v.shape[0] < n_min:
                raise ValueError("closed curve needs >= 8 distinct vertices")
        d = np.diff(v, axis=0)
        lens = np.hypot(d[:, 0], d[:, 1])
        if closed:
            lens = np.append(lens, np.hypot(*(v[0] - v[-1])))
        if np.any(lens <= 0.0):
            raise DegenerateEdge("consecutive vertices coincide")
        self.vertices = v
        self.closed = bool(closed)
        self.component_id = int(component_id)
        self.end_lines = end_lines
        self.vertices.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def with_vertices(self, vertices) -> "DiscreteCurve":
        return DiscreteCurve(vertices, closed=self.closed,
                             component_id=self.component_id,
                             end_lines=self.end_lines)

    def edges(self) -> np.ndarray:
        """Edge vectors; closed curves include the wrap-around edge."""
        v = self.vertices
        if self.closed:
            return np.roll(v, -1, axis=0) - v
        return v[1:] - v[:-1]

    def edge_lengths(self) -> np.ndarray:
        e = self.edges()
        return np.hypot(e[:, 0], e[:, 1])

    def length(self) -> float:
        return float(self.edge_lengths().sum())

    def dual_lengths(self) -> np.ndarray:
        """Mass-lumped vertex weights (half the two adjacent edge lengths)."""
        h = self.edge_lengths()
        if self.closed:
            return 0.5 * (h + np.roll(h, 1))
        m = np.empty(self.n_vertices)
        m[0] = 0.5 * h[0]
        m[-1] = 0.5 * h[-1]
        m[1:-1] = 0.5 * (h[:-1] + h[1:])
        return m

    def tangents(self) -> np.ndarray:
        """Unit vertex tangents: central differences, one-sided at open ends."""
        v = self.vertices
        if self.closed:
            d = np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)
        else:
            d = np.empty_like(v)
            d[1:-1] = v[2:] - v[:-2]
            d[0] = v[1] - v[0]
            d[-1] = v[-1] - v[-2]
        norms = np.hypot(d[:, 0], d[:, 1])
        if np.any(norms <= 0.0):
            raise DegenerateEdge("degenerate tangent (coincident neighbours)")
        return d / norms[:, None]

    def interior_mask(self, collar: int = 2) -> np.ndarray:
        """True away from open ends; diagnostics exclude a 2-vertex collar."""
        mask = np.ones(self.n_vertices, dtype=bool)
        if not self.closed and collar > 0:
            mask[:collar] = False
            mask[-collar:] = False
        return mask


def as_components(state) -> list:
    """Normalize a state (single curve/product or list of them) to a list."""
    if isinstance(state, (list, tuple)):
        return list(state)
    return [state]


@dataclass
class ScalarField:
    """Per-vertex scalar data on one state, with growth metadata."""

    values: np.ndarray
    name: str = ""
    growth_degree: int = 0
    branch_offset: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


def growth_certificate(values: np.ndarray, positions: np.ndarray, degree: int) -> float:
    """Smallest C with |f| <= C (1 + R^degree) over the samples."""
    r = np.linalg.norm(np.atleast_2d(positions), axis=-1)
    return float(np.max(np.abs(values) / (1.0 + r ** degree)))


# ---------------------------------------------------------------------------
# pointwise operations


def lagrangian_angle(curve: DiscreteCurve) -> ScalarField:
    """Tangent angle per vertex, unwrapped continuously along the component.

    For the n=1 Lagrangian the angle is the argument of the unit tangent;
    the returned field is free of 2*pi jumps between adjacent vertices and
    records the branch offset of the first vertex.
    """
    t = curve.tangents()
    raw = np.arctan2(t[:, 1], t[:, 0])
    theta = np.unwrap(raw)
    return ScalarField(theta, name="theta", growth_degree=0,
                       branch_offset=float(theta[0] - raw[0]))


def angle_increments(curve: DiscreteCurve) -> np.ndarray:
    """Turning angle per edge (principal branch), seam-free on closed curves."""
    t = curve.tangents()
    if curve.closed:
        t_next = np.roll(t, -1, axis=0)
    else:
        t_next = t[1:]
        t = t[:-1]
    cross = t[:, 0] * t_next[:, 1] - t[:, 1] * t_next[:, 0]
    dot = np.einsum("ij,ij->i", t, t_next)
    return np.arctan2(cross, dot)


def laplacian(curve: DiscreteCurve, values: np.ndarray) -> np.ndarray:
    """Arclength-weighted second difference of a vertex field.

    Interior rows only for open curves (endpoint entries are zero; the
    boundary collar is excluded from diagnostics anyway).
    """
    values = np.asarray(values, dtype=float)
    h = curve.edge_lengths()
    out = np.zeros_like(values)
    if curve.closed:
        h_prev = np.roll(h, 1)
        f_next = np.roll(values, -1, axis=0)
        f_prev = np.roll(values, 1, axis=0)
        flux = (f_next - values) / _col(h, values) - (values - f_prev) / _col(h_prev, values)
        out = 2.0 * flux / _col(h + h_prev, values)
    else:
        flux = (values[2:] - values[1:-1]) / _col(h[1:], values[1:-1]) \
            - (values[1:-1] - values[:-2]) / _col(h[:-1], values[1:-1])
        out[1:-1] = 2.0 * flux / _col(h[1:] + h[:-1], values[1:-1])
    return out


def _col(h, ref):
    return h[:, None] if np.ndim(ref) == 2 else h


def arc_gradient(curve: DiscreteCurve, values: np.ndarray) -> np.ndarray:
    """Arclength derivative of a vertex field (central, one-sided at ends)."""
    values = np.asarray(values, dtype=float)
    h = curve.edge_lengths()
    if curve.closed:
        return (np.roll(values, -1) - np.roll(values, 1)) / (h + np.roll(h, 1))
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (h[1:] + h[:-1])
    out[0] = (values[1] - values[0]) / h[0]
    out[-1] = (values[-1] - values[-2]) / h[-1]
    return out


def mean_curvature(curve: DiscreteCurve) -> np.ndarray:
    """Mean curvature vector per vertex: arclength Laplacian of position.

    Satisfies H = J grad(theta) up to discretization error; exact on uniform
    circles by the chord-weighted second difference.
    """
    return laplacian(curve, curve.vertices)


def angle_slope(curve: DiscreteCurve) -> np.ndarray:
    """d(theta)/ds per vertex from turning increments (seam-free)."""
    dtheta = angle_increments(curve)
    h = curve.edge_lengths()
    if curve.closed:
        return (dtheta + np.roll(dtheta, 1)) / (h + np.roll(h, 1))
    slope = np.empty(curve.n_vertices)
    slope[1:-1] = (dtheta[1:] + dtheta[:-1]) / (h[1:] + h[:-1])
    slope[0] = dtheta[0] / h[0]
    slope[-1] = dtheta[-1] / h[-1]
    return slope


def angle_laplacian(curve: DiscreteCurve) -> np.ndarray:
    """Laplacian of the angle field built from seam-free turning increments.

    Matches :func:`laplacian` applied to the unwrapped angle away from the
    branch seam, but stays valid on closed curves with winding.
    """
    dtheta = angle_increments(curve)
    h = curve.edge_lengths()
    out = np.zeros(curve.n_vertices)
    if curve.closed:
        h_prev = np.roll(h, 1)
        flux = dtheta / h - np.roll(dtheta, 1) / h_prev
        return 2.0 * flux / (h + h_prev)
    flux = dtheta[1:] / h[1:] - dtheta[:-1] / h[:-1]
    out[1:-1] = 2.0 * flux / (h[1:] + h[:-1])
    return out


def angle_gradient_vector(curve: DiscreteCurve) -> np.ndarray:
    """grad(theta) as a tangent vector field, from seam-free turning angles."""
    return angle_slope(curve)[:, None] * curve.tangents()


def normal_projection(curve: DiscreteCurve, index: Optional[int] = None) -> np.ndarray:
    """Normal part x^perp of the position vector (per vertex, or one vertex)."""
    t = curve.tangents()
    v = curve.vertices
    xperp = v - np.einsum("ij,ij->i", v, t)[:, None] * t
    if index is not None:
        return xperp[index]
    return xperp


def liouville_edge_integrals(curve: DiscreteCurve) -> np.ndarray:
    """Integral of lambda = x dy - y dx over each straight edge.

    The trapezoid rule is exact for this linear form on straight segments
    and reduces to the cross product of the endpoints.
    """
    v = curve.vertices
    if curve.closed:
        q = np.roll(v, -1, axis=0)
    else:
        q = v[1:]
        v = v[:-1]
    return v[:, 0] * q[:, 1] - v[:, 1] * q[:, 0]


def exactness_primitive(curve: DiscreteCurve, anchor_value: float = 0.0) -> ScalarField:
    """Primitive beta with d(beta) = lambda|_curve along the component.

    beta is fixed to ``anchor_value`` at the first vertex. Closed components
    with holonomy |oint lambda| > 1e-8 * length raise NotExact carrying the
    holonomy (twice the enclosed area for embedded loops).
    """
    inc = liouville_edge_integrals(curve)
    if curve.closed:
        holonomy = float(inc.sum())
        if abs(holonomy) > HOLONOMY_RTOL * curve.length():
            raise NotExact(holonomy, component_id=curve.component_id)
        beta = anchor_value + np.concatenate([[0.0], np.cumsum(inc[:-1])])
    else:
        beta = anchor_value + np.concatenate([[0.0], np.cumsum(inc)])
    return ScalarField(beta, name="beta", growth_degree=2)


def product_angle(theta1: np.ndarray, theta2: np.ndarray) -> np.ndarray:
    """Lagrangian angle of a product on the (i, j) parameter grid."""
    return np.asarray(theta1)[:, None] + np.asarray(theta2)[None, :]


# ---------------------------------------------------------------------------
# lines, products


class AffineLine:
    """Straight line p0 + s*d in R^2 with sampling support."""

    def __init__(self, point, direction):
        d = np.asarray(direction, dtype=float)
        nrm = np.hypot(*d)
        if nrm <= 0:
            raise DegenerateEdge("line direction must be nonzero")
        self.point = np.asarray(point, dtype=float)
        self.direction = d / nrm

    @property
    def angle(self) -> float:
        return float(np.arctan2(self.direction[1], self.direction[0]))

    def sample(self, extent: float, n: int) -> DiscreteCurve:
        s = np.linspace(-extent, extent, n)
        return DiscreteCurve(self.point + s[:, None] * self.direction)


class ProductLagrangian:
    """Product gamma1 x gamma2 in C x C = C^2.

    ``factor2`` may be a DiscreteCurve or an AffineLine (sampled on demand).
    The Lagrangian angle of the product is the sum of factor tangent angles.
    """

    def __init__(self, factor1: DiscreteCurve, factor2, component_id=0,
                 line_extent: float = 12.0, line_samples: int = 97):
        self.factor1 = factor1
        self.component_id = int(component_id)
        if isinstance(factor2, AffineLine):
            self.factor2_line = factor2
            self.factor2 = factor2.sample(line_extent, line_samples)
        else:
            self.factor2_line = None
            self.factor2 = factor2

    def angle_grid(self) -> np.ndarray:
        th1 = lagrangian_angle(self.factor1).values
        if self.factor2_line is not None:
            th2 = np.full(self.factor2.n_vertices, self.factor2_line.angle)
        else:
            th2 = lagrangian_angle(self.factor2).values
        return product_angle(th1, th2)

    def position_grid(self) -> np.ndarray:
        """(N1, N2, 4) array of product points (x1, y1, x2, y2)."""
        p = self.factor1.vertices
        q = self.factor2.vertices
        out = np.empty((p.shape[0], q.shape[0], 4))
        out[:, :, 0:2] = p[:, None, :]
        out[:, :, 2:4] = q[None, :, :]
        return out

    def weight_grid(self) -> np.ndarray:
        """Mass-lumped area weights on the parameter grid."""
        return np.outer(self.factor1.dual_lengths(), self.factor2.dual_lengths())

    def tangent_grids(self):
        """Orthonormal tangent pair (T1, T2) per grid point, embedded in R^4."""
        t1 = self.factor1.tangents()
        t2 = self.factor2.tangents()
        n1, n2 = t1.shape[0], t2.shape[0]
        T1 = np.zeros((n1, n2, 4))
        T2 = np.zeros((n1, n2, 4))
        T1[:, :, 0:2] = t1[:, None, :]
        T2[:, :, 2:4] = t2[None, :, :]
        return T1, T2

    def mean_curvature_grid(self) -> np.ndarray:
        """(N1, N2, 4) mean curvature (H1, H2) of the product."""
        H1 = mean_curvature(self.factor1)
        if self.factor2_line is not None:
            H2 = np.zeros_like(self.factor2.vertices)
        else:
            H2 = mean_curvature(self.factor2)
        out = np.empty((H1.shape[0], H2.shape[0], 4))
        out[:, :, 0:2] = H1[:, None, :]
        out[:, :, 2:4] = H2[None, :, :]
        return out

    def normal_position_grid(self) -> np.ndarray:
        """x^perp of the product position per grid point."""
        X = self.position_grid()
        T1, T2 = self.tangent_grids()
        for T in (T1, T2):
            X = X - np.einsum("ijk,ijk->ij", X, T)[:, :, None] * T
        return X

    def quad_mesh(self):
        """Vertices (N1*N2, 4) and quad index array for the mesh in R^4."""
        X = self.position_grid()
        n1, n2 = X.shape[0], X.shape[1]
        verts = X.reshape(-1, 4)
        ii, jj = np.meshgrid(np.arange(n1 - 1), np.arange(n2 - 1), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        quads = np.stack([ii * n2 + jj, (ii + 1) * n2 + jj,
                          (ii + 1) * n2 + jj + 1, ii * n2 + jj + 1], axis=1)
        return verts, quads


# ---------------------------------------------------------------------------
# frames and plane pairs


@dataclass(frozen=True)
class CoordinateFrame:
    """Adapted orthonormal frame (e_z, e_w = J e_z, transverse axes) of R^{2n}."""

    e_z: np.ndarray
    e_w: np.ndarray
    transverse: np.ndarray  # (2n-2, 2n), rows orthonormal

    def __post_init__(self):
        for name in ("e_z", "e_w", "transverse"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        rows = np.vstack([self.e_z, self.e_w, self.transverse])
        gram = rows @ rows.T
        if not np.allclose(gram, np.eye(rows.shape[0]), atol=1e-12):
            raise BadFrame("frame rows are not orthonormal within 1e-12")
        if np.max(np.abs(apply_J(self.e_z) - self.e_w)) != 0.0:
            raise BadFrame("e_w must equal J e_z exactly")

    @property
    def dim(self) -> int:
        return self.e_z.shape[0]

    def z_of(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.e_z

    def w_of(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.e_w


def standard_frame(dim: int = 4, z_axis: int = 0) -> CoordinateFrame:
    """Frame with e_z along a coordinate axis (axis index into R^{2n})."""
    e_z = np.zeros(dim)
    e_z[z_axis] = 1.0
    e_w = apply_J(e_z)
    # transverse rows: Gram-Schmidt of the coordinate axes against e_z, e_w
    basis = np.eye(dim)
    rows = []
    for k in range(dim):
        v = basis[k] - (basis[k] @ e_z) * e_z - (basis[k] @ e_w) * e_w
        for r in rows:
            v = v - (v @ r) * r
        nrm = np.linalg.norm(v)
        if nrm > 1e-9:
            rows.append(v / nrm)
    return CoordinateFrame(e_z, e_w, np.array(rows))


@dataclass
class LagrangianPlane:
    """Oriented Lagrangian n-plane through 0, spanned by orthonormal rows."""

    basis: np.ndarray  # (n, 2n)
    angle: float

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=float)
        gram = self.basis @ self.basis.T
        if not np.allclose(gram, np.eye(self.basis.shape[0]), atol=1e-12):
            raise BadFrame("plane basis not orthonormal within 1e-12")

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    def project(self, points: np.ndarray) -> np.ndarray:
        """Orthogonal projection of ambient points onto the plane."""
        coords = np.asarray(points) @ self.basis.T
        return coords @ self.basis

    def distance(self, points: np.ndarray) -> np.ndarray:
        diff = np.asarray(points) - self.project(points)
        return np.linalg.norm(np.atleast_2d(diff), axis=-1)

    def point_at(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords) @ self.basis

    def as_product(self, extent: float = 12.0, samples: int = 97) -> ProductLagrangian:
        """Sample the plane as a product of two lines (n = 2 only)."""
        if self.n != 2:
            raise ValueError("product sampling only for n = 2 planes")
        b = self.basis
        if np.max(np.abs(b[0][2:])) > 1e-12 or np.max(np.abs(b[1][:2])) > 1e-12:
            raise ValueError("plane basis is not factor-aligned")
        l1 = AffineLine((0.0, 0.0), b[0][:2]).sample(extent, samples)
        l2 = AffineLine((0.0, 0.0), b[1][2:])
        return ProductLagrangian(l1, l2, line_extent=extent, line_samples=samples)


@dataclass
class PlanePairConfig:
    """Two oriented Lagrangian planes with angles theta1 = -theta2.

    The m = 1 configuration follows the standard blow-down frame: both
    planes contain e_z, the height w = <x, e_w> vanishes on the union, and
    the transverse directions live in the second complex factor.
    """

    n: int
    planes: Sequence[LagrangianPlane]
    angles: tuple
    intersection_dim: int
    frame: CoordinateFrame

    @property
    def angle_gap(self) -> float:
        return float(self.angles[0] - self.angles[1])


def make_plane_pair(angles, intersection_dim: int, frame: Optional[CoordinateFrame] = None,
                    n: int = 2) -> PlanePairConfig:
    """Construct the analytic plane pair used as the blow-down model.

    For m = 1 (the main configuration) the pair is R e_z x l_1 and
    R e_z x l_2 with l_j lines at the requested angles in the second
    complex factor.  For m = 0 both planes are products of lines meeting
    only at the origin.  m must be < n.
    """
    theta1, theta2 = float(angles[0]), float(angles[1])
    if intersection_dim >= n or intersection_dim < 0:
        raise ValueError("intersection_dim must lie in {0, ..., n-1}")
    if n != 2:
        raise ValueError("only n = 2 plane pairs are instantiated")
    if frame is None:
        frame = standard_frame(4, z_axis=0)
    if intersection_dim == 1:
        # the angle lines live in the complex factor not containing e_z
        if np.max(np.abs(frame.e_z[2:4])) < 1e-12:
            line_axes = (2, 3)
        elif np.max(np.abs(frame.e_z[0:2])) < 1e-12:
            line_axes = (0, 1)
        else:
            raise BadFrame("m = 1 pair needs e_z aligned with one factor")
        planes = []
        for th in (theta1, theta2):
            second = np.zeros(4)
            second[line_axes[0]] = np.cos(th)
            second[line_axes[1]] = np.sin(th)
            planes.append(LagrangianPlane(np.vstack([frame.e_z, second]), th))
    else:
        planes = []
        for th in (theta1, theta2):
            a = np.zeros(4)
            a[0], a[1] = np.cos(th / 2), np.sin(th / 2)
            b = np.zeros(4)
            b[2], b[3] = np.cos(th / 2), np.sin(th / 2)
            planes.append(LagrangianPlane(np.vstack([a, b]), th))
        if abs((theta1 - theta2) % np.pi) < 1e-12:
            raise ValueError("m = 0 pair must be transverse (angle gap not 0 mod pi)")
    return PlanePairConfig(n=n, planes=planes, angles=(theta1, theta2),
                           intersection_dim=intersection_dim, frame=frame)


# ---------------------------------------------------------------------------
# curve set serialization (structured text, one record per vertex)


def save_curves(path, curves) -> None:
    """Write curve components as structured text.

    Format: a version header, then per component a header line
    ``component <id> closed=<0|1> n=<N>`` followed by N ``x y`` records.
    """
    curves = as_components(curves)
    with open(path, "w") as fh:
        fh.write("# lmcflab curveset v1\n")
        fh.write(f"# components: {len(curves)}\n")
        for c in curves:
            fh.write(f"component {c.component_id} closed={int(c.closed)} n={c.n_vertices}\n")
            for x, y in c.vertices:
                fh.write(f"{float(x)!r} {float(y)!r}\n")


def save_plane_pair(path, pair: PlanePairConfig) -> None:
    """Serialize a plane pair as frame matrices plus angles (JSON)."""
    import json as _json

    payload = {
        "n": pair.n,
        "intersection_dim": pair.intersection_dim,
        "angles": [float(a) for a in pair.angles],
        "planes": [[[float(x) for x in row] for row in p.basis]
                   for p in pair.planes],
        "frame": {"e_z": [float(x) for x in pair.frame.e_z],
                  "e_w": [float(x) for x in pair.frame.e_w],
                  "transverse": [[float(x) for x in row]
                                 for row in pair.frame.transverse]},
    }
    with open(path, "w") as fh:
        _json.dump(payload, fh, sort_keys=True, indent=1)


def load_plane_pair(path) -> PlanePairConfig:
    """Read a plane pair written by :func:`save_plane_pair`."""
    import json as _json

    with open(path) as fh:
        payload = _json.load(fh)
    frame = CoordinateFrame(np.asarray(payload["frame"]["e_z"]),
                            np.asarray(payload["frame"]["e_w"]),
                            np.asarray(payload["frame"]["transverse"]))
    planes = [LagrangianPlane(np.asarray(basis), angle)
              for basis, angle in zip(payload["planes"], payload["angles"])]
    return PlanePairConfig(n=payload["n"], planes=planes,
                           angles=tuple(payload["angles"]),
                           intersection_dim=payload["intersection_dim"],
                           frame=frame)


def load_curves(path) -> list:
    """Read a curve set written by :func:`save_curves`."""
    curves = []
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if head[0] != "component":
            raise ValueError(f"malformed curve file near: {lines[i]!r}")
        cid = int(head[1])
        closed = bool(int(head[2].split("=")[1]))
        n = int(head[3].split("=")[1])
        block = lines[i + 1: i + 1 + n]
        verts = np.array([[float(t) for t in ln.split()] for ln in block])
        curves.append(DiscreteCurve(verts, closed=closed, component_id=cid))
        i += 1 + n
    return curves

"""Topological machinery near a plane pair in C^2 = R^4: component
extraction, sphere slicing, Gauss linking numbers of curves in the
3-sphere, and the half-space separation audit.

Linking is computed by stereographic projection from a pole far from both
curves followed by the exact polygonal Gauss integral (solid angles of
spherical quadrilaterals); the result must round to an integer within 0.1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import (ComponentAmbiguity, CurvesTooClose, NoTransverseRadius,
                     RoundingAmbiguity)
from .geometry import PlanePairConfig, ProductLagrangian, as_components

SMALL_COMPONENT_FRACTION = 0.01  # discard below this share of the B_2 mass


def mesh_of(obj):
    """(vertices (N,4), quads (Q,4 int)) from a product or a mesh tuple."""
    if isinstance(obj, ProductLagrangian):
        return obj.quad_mesh()
    verts, quads = obj
    return np.asarray(verts, dtype=float), np.asarray(quads, dtype=int)


def _quad_areas(verts, quads):
    """Areas of quads in R^4 (two triangles per quad)."""
    p0, p1, p2, p3 = (verts[quads[:, k]] for k in range(4))
    return _tri_area(p0, p1, p2) + _tri_area(p0, p2, p3)


def _tri_area(a, b, c):
    u = b - a
    v = c - a
    uu = np.einsum("ij,ij->i", u, u)
    vv = np.einsum("ij,ij->i", v, v)
    uv = np.einsum("ij,ij->i", u, v)
    return 0.5 * np.sqrt(np.maximum(uu * vv - uv * uv, 0.0))


def _quad_angles(verts, quads):
    """Lagrangian angle of each quad's tangent plane: arg det_C(u, v)."""
    p0, p1, p2, p3 = (verts[quads[:, k]] for k in range(4))
    u = p1 - p0
    v = p3 - p0
    u1 = u[:, 0] + 1j * u[:, 1]
    u2 = u[:, 2] + 1j * u[:, 3]
    v1 = v[:, 0] + 1j * v[:, 1]
    v2 = v[:, 2] + 1j * v[:, 3]
    det = u1 * v2 - u2 * v1
    return np.angle(det)


@dataclass
class ComponentSlice:
    """One labeled connected piece of the state inside the extraction ball."""

    label: int                 # 1 or 2: index of the assigned limit plane
    vertices: np.ndarray
    quads: np.ndarray
    mass_b2: float
    mean_angle: float
    vertex_ids: np.ndarray     # indices into the parent mesh


@dataclass
class ExtractionResult:
    components: list
    leftovers: list
    assignment_margin: float


def extract_components(state, radii=(2.0, 3.0), pair: Optional[PlanePairConfig] = None,
                       delta: float = 0.1) -> ExtractionResult:
    """Connected components of state inside B_{radii[1]} intersecting
    B_{radii[0]}, the two largest labeled by their limit plane.

    Labeling cost combines the RMS distance to the plane with the angle
    mismatch of the tangent planes (oriented-plane identity, which stays
    meaningful for multiplicity-two blow-downs). Components below 1% of
    the inner-ball mass are returned as leftovers. ComponentAmbiguity is
    raised when fewer than two candidate components exist or the labeling
    margin falls below 2*delta.
    """
    r_in, r_out = radii
    meshes = [mesh_of(c) for c in as_components(state)]
    pieces = []
    for verts, quads in meshes:
        inside = np.linalg.norm(verts, axis=1) <= r_out
        if not inside.any():
            continue
        idx = np.flatnonzero(inside)
        remap = -np.ones(verts.shape[0], dtype=int)
        remap[idx] = np.arange(idx.size)
        edges = np.concatenate([quads[:, [0, 1]], quads[:, [1, 2]],
                                quads[:, [2, 3]], quads[:, [3, 0]]])
        keep = inside[edges[:, 0]] & inside[edges[:, 1]]
        e = remap[edges[keep]]
        adj = sp.coo_matrix((np.ones(e.shape[0]), (e[:, 0], e[:, 1])),
                            shape=(idx.size, idx.size))
        n_comp, labels = _cc(adj, directed=False)
        quad_ok = inside[quads].all(axis=1)
        q_lab = np.full(quads.shape[0], -1)
        q_lab[quad_ok] = labels[remap[quads[quad_ok, 0]]]
        areas = _quad_areas(verts, quads)
        centroids = 0.25 * (verts[quads[:, 0]] + verts[quads[:, 1]]
                            + verts[quads[:, 2]] + verts[quads[:, 3]])
        cent_in = np.linalg.norm(centroids, axis=1) <= r_in
        angles = _quad_angles(verts, quads)
        for comp in range(n_comp):
            vid = idx[labels == comp]
            qsel = q_lab == comp
            touches_inner = np.linalg.norm(verts[vid], axis=1).min() <= r_in
            mass = float(np.sum(areas[qsel & cent_in]))
            if not touches_inner:
                continue
            ang_w = areas[qsel & cent_in]
            ang = angles[qsel & cent_in]
            if ang.size:
                mean_ang = float(np.angle(np.sum(ang_w * np.exp(1j * ang))
                                          / max(np.sum(ang_w), 1e-300)))
            else:
                mean_ang = float("nan")
            pieces.append(ComponentSlice(0, verts[vid],
                                         _requad(quads[qsel], remap_full(vid, verts)),
                                         mass, mean_ang, vid))
    pieces.sort(key=lambda p: -p.mass_b2)
    total_mass = sum(p.mass_b2 for p in pieces)
    main = [p for p in pieces if p.mass_b2 >= SMALL_COMPONENT_FRACTION * total_mass]
    leftovers = [p for p in pieces if all(p is not q for q in main)]
    if len(main) < 2:
        raise ComponentAmbiguity(
            f"found {len(main)} candidate component(s) inside B_{r_out}")
    leftovers.extend(main[2:])
    main = main[:2]
    margin = float("inf")
    if pair is not None:
        cost = np.zeros((2, 2))
        for i, p in enumerate(main):
            pts = p.vertices[np.linalg.norm(p.vertices, axis=1) <= r_in]
            if pts.size == 0:
                pts = p.vertices
            for j, plane in enumerate(pair.planes):
                d = plane.distance(pts)
                geom = float(np.sqrt(np.mean(d * d)))
                dth = np.angle(np.exp(1j * (p.mean_angle - pair.angles[j])))
                cost[i, j] = geom + abs(dth)
        direct = cost[0, 0] + cost[1, 1]
        swapped = cost[0, 1] + cost[1, 0]
        margin = abs(direct - swapped)
        if margin < 2.0 * delta:
            raise ComponentAmbiguity(
                f"labeling margin {margin:.3g} below 2*delta = {2 * delta:.3g}")
        order = (0, 1) if direct <= swapped else (1, 0)
        main[order[0]].label = 1
        main[order[1]].label = 2
        main.sort(key=lambda p: p.label)
    else:
        main[0].label = 1
        main[1].label = 2
    return ExtractionResult(main, leftovers, margin)


def remap_full(vid, verts):
    remap = -np.ones(verts.shape[0], dtype=int)
    remap[vid] = np.arange(vid.size)
    return remap


def _requad(quads, remap):
    out = remap[quads]
    return out[(out >= 0).all(axis=1)]


# ---------------------------------------------------------------------------
# sphere slicing


@dataclass
class SphereSliceCurve:
    """Closed polygonal curve(s) on the sphere of radius R in R^4."""

    loops: list           # list of (M, 4) arrays, ordered, closed
    radius: float
    parent_label: int = 0

    def length(self) -> float:
        """Geodesic length: great-circle arcs between consecutive points."""
        total = 0.0
        for loop in self.loops:
            chords = np.linalg.norm(np.roll(loop, -1, axis=0) - loop, axis=1)
            total += float(np.sum(2.0 * self.radius *
                                  np.arcsin(np.clip(chords / (2.0 * self.radius),
                                                    0.0, 1.0))))
        return total

    def all_points(self) -> np.ndarray:
        return np.concatenate(self.loops, axis=0)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("loop,x1,y1,x2,y2\n")
            for li, loop in enumerate(self.loops):
                for p in loop:
                    fh.write(f"{li},{p[0]!r},{p[1]!r},{p[2]!r},{p[3]!r}\n")


def sphere_slice(component, R: float, tangency_tol: float = 1e-9,
                 max_retries: int = 10) -> SphereSliceCurve:
    """Transverse intersection of a discrete surface with the sphere |x| = R.

    Marching triangles on the quad mesh; if any mesh vertex is tangent to
    the sphere within tolerance the radius is nudged by +0.003 (up to 10
    times). Segment orientations follow the surface orientation, with the
    outward radial direction first.
    """
    if isinstance(component, ComponentSlice):
        verts, quads = component.vertices, component.quads
        label = component.label
    else:
        verts, quads = mesh_of(component)
        label = 0
    tris = np.concatenate([quads[:, [0, 1, 2]], quads[:, [0, 2, 3]]])
    radii_v = np.linalg.norm(verts, axis=1)
    R_try = float(R)
    for _ in range(max_retries + 1):
        f = radii_v - R_try
        if np.min(np.abs(f)) > tangency_tol * max(R_try, 1.0):
            segs = _march_triangles(verts, tris, f)
            if segs is not None:
                loops = _chain_segments(segs)
                loops = [R_try * (lp / np.linalg.norm(lp, axis=1)[:, None])
                         for lp in loops]
                return SphereSliceCurve(loops, R_try, label)
        R_try += 0.003
    raise NoTransverseRadius(f"no transverse radius near {R} after retries")


def _march_triangles(verts, tris, f):
    """Oriented crossing segments of the level set f = 0 per triangle."""
    fv = f[tris]
    sign = fv > 0
    crossing = ~(sign.all(axis=1) | (~sign).all(axis=1))
    segs = []
    for tri in tris[crossing]:
        p = verts[tri]
        fv3 = f[tri]
        pts = []
        for a, b in ((0, 1), (1, 2), (2, 0)):
            if (fv3[a] > 0) != (fv3[b] > 0):
                lam = fv3[a] / (fv3[a] - fv3[b])
                pts.append(p[a] + lam * (p[b] - p[a]))
        if len(pts) != 2:
            return None  # degenerate crossing; caller retries with new R
        seg = _orient_segment(p, pts[0], pts[1])
        segs.append(seg)
    return segs


def _orient_segment(tri_pts, q0, q1):
    """Orient q0 -> q1 so (radial direction, segment) is positively oriented
    in the triangle's oriented tangent basis."""
    e1 = tri_pts[1] - tri_pts[0]
    e2 = tri_pts[2] - tri_pts[0]
    gram = np.array([[e1 @ e1, e1 @ e2], [e1 @ e2, e2 @ e2]])
    centre = tri_pts.mean(axis=0)

    def coords(v):
        return np.linalg.solve(gram, np.array([e1 @ v, e2 @ v]))

    g = coords(centre)          # radial direction projected into the plane
    d = coords(q1 - q0)
    if g[0] * d[1] - g[1] * d[0] < 0:
        return (q1, q0)
    return (q0, q1)


def _chain_segments(segs, tol=1e-9):
    """Chain oriented segments into closed loops by endpoint matching."""
    if not segs:
        return []
    starts = np.array([s[0] for s in segs])
    ends = np.array([s[1] for s in segs])
    scale = max(np.max(np.abs(starts)), 1.0)
    key = lambda p: tuple(np.round(p / (tol * scale)).astype(np.int64))
    by_start = {}
    for i, s in enumerate(segs):
        by_start.setdefault(key(s[0]), []).append(i)
    used = np.zeros(len(segs), dtype=bool)
    loops = []
    for i0 in range(len(segs)):
        if used[i0]:
            continue
        loop = [segs[i0][0]]
        cur = i0
        used[i0] = True
        guard = 0
        while guard < 4 * len(segs):
            guard += 1
            end = segs[cur][1]
            nxts = [j for j in by_start.get(key(end), []) if not used[j]]
            if not nxts:
                break
            cur = nxts[0]
            used[cur] = True
            loop.append(segs[cur][0])
        if len(loop) >= 3:
            loops.append(np.asarray(loop))
    return loops


# ---------------------------------------------------------------------------
# linking number


@dataclass
class LinkingReport:
    raw: float
    value: int
    margin: float
    pole: np.ndarray
    per_pole: list = field(default_factory=list)

    def to_dict(self):
        return {"raw": float(self.raw), "value": int(self.value),
                "margin": float(self.margin),
                "pole": [float(x) for x in self.pole],
                "per_pole": [float(x) for x in self.per_pole]}


def _as_loops(obj):
    if isinstance(obj, SphereSliceCurve):
        return obj.loops
    if isinstance(obj, np.ndarray):
        return [obj]
    return list(obj)


def _stereographic(points, pole, R):
    """Stereographic projection of sphere points from the pole into R^3."""
    pole = pole / np.linalg.norm(pole)
    basis = []
    for k in range(4):
        v = np.zeros(4)
        v[k] = 1.0
        v = v - (v @ pole) * pole
        for b in basis:
            v = v - (v @ b) * b
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            basis.append(v / nrm)
        if len(basis) == 3:
            break
    # fix the handedness so different poles give the same linking sign
    if np.linalg.det(np.vstack([basis[0], basis[1], basis[2], pole])) < 0:
        basis[2] = -basis[2]
    E = np.array(basis)
    denom = R - points @ pole
    return R * (points @ E.T) / denom[:, None]


def _gauss_linking_r3(loop_a, loop_b):
    """Exact polygonal Gauss linking number in R^3 via solid angles."""
    a = np.asarray(loop_a, dtype=float)
    b = np.asarray(loop_b, dtype=float)
    diff = b[None, :, :] - a[:, None, :]
    nrm = np.linalg.norm(diff, axis=2)
    U = diff / nrm[:, :, None]
    n1 = U
    n2 = np.roll(U, -1, axis=1)
    n3 = np.roll(np.roll(U, -1, axis=1), -1, axis=0)
    n4 = np.roll(U, -1, axis=0)
    total = _solid_angle(n1, n2, n3) + _solid_angle(n1, n3, n4)
    return float(np.sum(total)) / (4.0 * np.pi)


def _solid_angle(a, b, c):
    """Signed solid angle of the spherical triangle (a, b, c)."""
    triple = np.einsum("...i,...i->...", a, np.cross(b, c))
    denom = (1.0 + np.einsum("...i,...i->...", a, b)
             + np.einsum("...i,...i->...", b, c)
             + np.einsum("...i,...i->...", c, a))
    return 2.0 * np.arctan2(triple, denom)


def linking_number(c1, c2, R: Optional[float] = None, seed: int = 0,
                   n_poles: int = 1) -> LinkingReport:
    """Gauss linking number of two disjoint closed curves on a 3-sphere.

    A pole at maximal distance from both curves is drawn from a seeded
    candidate set; with n_poles > 1 the integer must agree across poles.
    Raises CurvesTooClose when the curves approach within 10 edge lengths,
    and RoundingAmbiguity when the raw value strays from an integer.
    """
    loops1 = _as_loops(c1)
    loops2 = _as_loops(c2)
    if R is None:
        R = float(np.mean(np.linalg.norm(np.concatenate(loops1), axis=1)))
    pts1 = np.concatenate(loops1)
    pts2 = np.concatenate(loops2)
    edge = 0.0
    for lp in loops1 + loops2:
        edge = max(edge, float(np.max(np.linalg.norm(np.roll(lp, -1, axis=0) - lp,
                                                     axis=1))))
    dmin = _min_distance(pts1, pts2)
    if dmin <= 10.0 * edge:
        raise CurvesTooClose(
            f"min distance {dmin:.3g} not above 10 x edge length {edge:.3g}")
    rng = np.random.default_rng(seed)
    cands = rng.normal(size=(max(64, 8 * n_poles), 4))
    cands /= np.linalg.norm(cands, axis=1)[:, None]
    allpts = np.concatenate([pts1, pts2]) / R
    dists = np.arccos(np.clip(cands @ allpts.T, -1.0, 1.0)).min(axis=1)
    order = np.argsort(-dists)
    per_pole = []
    poles = []
    for k in order[:n_poles]:
        pole = cands[k] * R
        if dists[k] < 0.15:
            continue
        proj1 = [_stereographic(lp, cands[k], R) for lp in loops1]
        proj2 = [_stereographic(lp, cands[k], R) for lp in loops2]
        raw = sum(_gauss_linking_r3(la, lb) for la in proj1 for lb in proj2)
        per_pole.append(raw)
        poles.append(pole)
    if not per_pole:
        raise CurvesTooClose("no admissible projection pole found")
    raw = per_pole[0]
    val = int(np.round(raw))
    margin = abs(raw - val)
    if margin >= 0.1:
        raise RoundingAmbiguity(f"raw linking {raw:.4f} is {margin:.3f} from integer")
    for other in per_pole[1:]:
        if int(np.round(other)) != val or abs(other - np.round(other)) >= 0.1:
            raise RoundingAmbiguity(
                f"poles disagree: {per_pole}")
    return LinkingReport(raw, val, margin, poles[0], per_pole)


def _min_distance(pts1, pts2, chunk=2048):
    best = np.inf
    for i in range(0, pts1.shape[0], chunk):
        d = np.linalg.norm(pts1[i:i + chunk, None, :] - pts2[None, :, :], axis=2)
        best = min(best, float(d.min()))
    return best


# ---------------------------------------------------------------------------
# half-space separation


@dataclass
class SeparationReport:
    holds: bool
    margins: dict

    def to_dict(self):
        return {"holds": bool(self.holds),
                "margins": {k: float(v) for k, v in self.margins.items()}}


def halfspace_separation(comp1, comp2, frame, phi: np.ndarray, lam: float,
                         b0: float, z_cut: float = 0.5) -> SeparationReport:
    """Check the switched half-space inclusions of the two components.

    H_+/- are the sides of w = phi(x) + lam * b0 * z. Component 1 must lie
    in H_+ over {z > z_cut} and in H_- over {z < -z_cut}; component 2 the
    other way round. Margins are the worst signed clearances.
    """
    phi = np.asarray(phi, dtype=float)
    margins = {}
    checks = []
    for name, comp, sign_hi in (("comp1", comp1, +1.0), ("comp2", comp2, -1.0)):
        verts = comp.vertices if isinstance(comp, ComponentSlice) else mesh_of(comp)[0]
        z = verts @ frame.e_z
        w = verts @ frame.e_w
        g = w - (verts @ phi + lam * b0 * z)
        hi = z > z_cut
        lo = z < -z_cut
        m_hi = float(np.min(sign_hi * g[hi])) if hi.any() else np.inf
        m_lo = float(np.min(-sign_hi * g[lo])) if lo.any() else np.inf
        margins[f"{name}_z>{z_cut}"] = m_hi
        margins[f"{name}_z<-{z_cut}"] = m_lo
        checks.extend([m_hi > 0, m_lo > 0])
    return SeparationReport(all(checks), margins)


# ---------------------------------------------------------------------------
# surface-surface intersection scan


def surfaces_intersect(mesh_a, mesh_b, tol: float = 1e-9):
    """First intersection point of two quad meshes in R^4, or None.

    Two 2-surfaces in R^4 meet generically in points: each triangle pair
    yields a 4x4 linear system for the barycentric parameters.
    """
    va, qa = mesh_of(mesh_a)
    vb, qb = mesh_of(mesh_b)
    tris_a = np.concatenate([qa[:, [0, 1, 2]], qa[:, [0, 2, 3]]])
    tris_b = np.concatenate([qb[:, [0, 1, 2]], qb[:, [0, 2, 3]]])
    ca = va[tris_a].mean(axis=1)
    cb = vb[tris_b].mean(axis=1)
    ra = np.max(np.linalg.norm(va[tris_a] - ca[:, None, :], axis=2), axis=1)
    rb = np.max(np.linalg.norm(vb[tris_b] - cb[:, None, :], axis=2), axis=1)
    from scipy.spatial import cKDTree
    tree = cKDTree(cb)
    r_query = float(np.max(ra) + np.max(rb))
    for ia, centre in enumerate(ca):
        for ib in tree.query_ball_point(centre, r_query):
            if np.linalg.norm(centre - cb[ib]) > ra[ia] + rb[ib]:
                continue
            pa = va[tris_a[ia]]
            pb = vb[tris_b[ib]]
            A = np.stack([pa[1] - pa[0], pa[2] - pa[0],
                          -(pb[1] - pb[0]), -(pb[2] - pb[0])], axis=1)
            rhs = pb[0] - pa[0]
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            u, v, s, t = sol
            eps = tol
            if (u >= -eps and v >= -eps and u + v <= 1 + eps
                    and s >= -eps and t >= -eps and s + t <= 1 + eps):
                return pa[0] + u * (pa[1] - pa[0]) + v * (pa[2] - pa[0])
    return None

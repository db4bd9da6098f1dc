"""Time evolution: curve shortening flow for n=1, product flows for n=2,
parabolic rescaling, and the shrinker-scale rescaled flow.

The semi-implicit scheme (I - dt*Laplacian) x_new = x_old is the default
(unconditionally stable; long backward horizons need large steps); the
explicit scheme is kept for cross-validation. Open-curve endpoints are
clamped to their asymptotic lines (Dirichlet); the induced boundary lag
decays like erfc(ds / sqrt(4t)) into the interior, so fixtures pad their
arms and diagnostics exclude a boundary collar.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .errors import (RangeError, SingularCollapse, SolverFailure,
                     StabilityViolation, TimeGridMismatch)
from .geometry import (AffineLine, DiscreteCurve, ProductLagrangian,
                       as_components, mean_curvature)

EXPLICIT_CFL = 0.4
COLLAPSE_FRACTION = 1e-3


class FlowTrajectory:
    """Time-indexed geometry states with persistent vertex identity."""

    def __init__(self, times, states, mode="unrescaled", metadata=None):
        self.times = np.asarray(times, dtype=float)
        self.states = list(states)
        if len(self.states) != self.times.shape[0]:
            raise ValueError("one state per time required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        self.mode = mode
        self.metadata = dict(metadata or {})

    def __len__(self):
        return len(self.states)

    def component_counts(self):
        return [len(as_components(s)) for s in self.states]

    def state_at(self, t):
        """State at time t by vertex-wise linear interpolation."""
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise RangeError(f"t={t} outside trajectory range [{times[0]}, {times[-1]}]")
        k = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 2))
        t0, t1 = times[k], times[k + 1]
        lam = float(np.clip((t - t0) / (t1 - t0), 0.0, 1.0))
        return _blend_states(self.states[k], self.states[k + 1], lam)

    def restricted(self, t_min, t_max):
        keep = (self.times >= t_min - 1e-12) & (self.times <= t_max + 1e-12)
        return FlowTrajectory(self.times[keep],
                              [s for s, k in zip(self.states, keep) if k],
                              mode=self.mode, metadata=self.metadata)


class AnalyticTrajectory(FlowTrajectory):
    """Trajectory backed by an exact state generator; state_at is exact."""

    def __init__(self, times, generator, mode="unrescaled", metadata=None):
        self.generator = generator
        states = [generator(t) for t in np.asarray(times, dtype=float)]
        super().__init__(times, states, mode=mode, metadata=metadata)

    def state_at(self, t):
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise RangeError(f"t={t} outside trajectory range")
        return self.generator(float(t))


def _blend_states(sa, sb, lam):
    comps_a, comps_b = as_components(sa), as_components(sb)
    out = []
    for a, b in zip(comps_a, comps_b):
        if isinstance(a, ProductLagrangian):
            f1 = a.factor1.with_vertices((1 - lam) * a.factor1.vertices
                                         + lam * b.factor1.vertices)
            if a.factor2_line is not None:
                out.append(_product_with_factor1(a, f1))
            else:
                f2 = a.factor2.with_vertices((1 - lam) * a.factor2.vertices
                                             + lam * b.factor2.vertices)
                out.append(ProductLagrangian(f1, f2, component_id=a.component_id))
        else:
            out.append(a.with_vertices((1 - lam) * a.vertices + lam * b.vertices))
    return out if isinstance(sa, (list, tuple)) else out[0]


def _product_with_factor1(prod, f1):
    new = ProductLagrangian.__new__(ProductLagrangian)
    new.factor1 = f1
    new.factor2 = prod.factor2
    new.factor2_line = prod.factor2_line
    new.component_id = prod.component_id
    return new


# ---------------------------------------------------------------------------
# single curve steps


def _check_collapse(curve, min_edge):
    if min_edge is not None and curve.edge_lengths().min() < min_edge:
        raise SingularCollapse(
            f"min edge {curve.edge_lengths().min():.3g} below threshold {min_edge:.3g}")


def step_flow_explicit(curve: DiscreteCurve, dt: float, min_edge=None) -> DiscreteCurve:
    """Forward Euler step: every vertex moves by dt * H."""
    h_min = curve.edge_lengths().min()
    if dt > EXPLICIT_CFL * h_min ** 2:
        raise StabilityViolation(
            f"dt={dt:.3g} exceeds {EXPLICIT_CFL} * h_min^2 = {EXPLICIT_CFL * h_min**2:.3g}")
    H = mean_curvature(curve)
    v = curve.vertices + dt * H
    if not curve.closed:
        # Dirichlet: endpoints pinned to their asymptotic lines
        v[0] = curve.vertices[0]
        v[-1] = curve.vertices[-1]
    out = curve.with_vertices(v)
    _check_collapse(out, min_edge)
    return out


def step_flow_semi_implicit(curve: DiscreteCurve, dt: float, min_edge=None) -> DiscreteCurve:
    """Backward-Euler step (I - dt*Laplacian) x_new = x_old.

    The Laplacian uses the arclength weights of the current state; closed
    curves solve a cyclic tridiagonal system, open curves a Dirichlet one
    with endpoints slid along their asymptotic lines first.
    """
    n = curve.n_vertices
    h = curve.edge_lengths()
    v = curve.vertices
    if curve.closed:
        h_prev = np.roll(h, 1)
        a = 2.0 / ((h + h_prev) * h_prev)   # coupling to i-1
        b = 2.0 / ((h + h_prev) * h)        # coupling to i+1
        diag = 1.0 + dt * (a + b)
        idx = np.arange(n)
        A = sp.csc_matrix((np.concatenate([diag, -dt * a, -dt * b]),
                           (np.concatenate([idx, idx, idx]),
                            np.concatenate([idx, (idx - 1) % n, (idx + 1) % n]))),
                          shape=(n, n))
        try:
            v_new = spla.splu(A).solve(v)
        except RuntimeError as exc:  # pragma: no cover
            raise SolverFailure(str(exc))
    else:
        # Dirichlet ends: endpoints pinned to their asymptotic lines
        v0_new, v1_new = v[0], v[-1]
        hm, hp = h[:-1], h[1:]
        a = 2.0 / ((hm + hp) * hm)
        b = 2.0 / ((hm + hp) * hp)
        m = n - 2
        band = np.zeros((3, m))
        band[1] = 1.0 + dt * (a + b)
        band[0, 1:] = -dt * b[:-1]
        band[2, :-1] = -dt * a[1:]
        rhs = v[1:-1].copy()
        rhs[0] += dt * a[0] * v0_new
        rhs[-1] += dt * b[-1] * v1_new
        interior = solve_banded((1, 1), band, rhs)
        v_new = np.vstack([v0_new, interior, v1_new])
    out = curve.with_vertices(v_new)
    _check_collapse(out, min_edge)
    return out


def step_flow(state, dt, scheme="semi_implicit", min_edge=None):
    """One flow step of a state (curve or list of curves)."""
    stepper = step_flow_semi_implicit if scheme == "semi_implicit" else step_flow_explicit
    comps = as_components(state)
    out = [stepper(c, dt, min_edge=min_edge) for c in comps]
    return out if isinstance(state, (list, tuple)) else out[0]


def redistribute(curve: DiscreteCurve) -> DiscreteCurve:
    """Resample at uniform arclength with the same vertex count.

    Changes material identity; callers record the cadence in metadata.
    """
    v = curve.vertices
    if curve.closed:
        pts = np.vstack([v, v[0]])
    else:
        pts = v
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    n = curve.n_vertices
    s_new = np.linspace(0.0, s[-1], n, endpoint=not curve.closed) if not curve.closed \
        else np.linspace(0.0, s[-1], n, endpoint=False)
    v_new = np.stack([np.interp(s_new, s, pts[:, k]) for k in range(2)], axis=1)
    return curve.with_vertices(v_new)


def evolve(state, dt, n_steps, scheme="semi_implicit", t0=0.0,
           redistribute_every=0, record_every=1) -> FlowTrajectory:
    """March the flow, recording states every ``record_every`` steps."""
    comps = as_components(state)
    mean_edge = np.mean(np.concatenate([c.edge_lengths() for c in comps]))
    min_edge = COLLAPSE_FRACTION * mean_edge
    times = [t0]
    states = [comps]
    cur = comps
    for k in range(1, n_steps + 1):
        cur = [step_flow(c, dt, scheme=scheme, min_edge=min_edge) for c in cur]
        if redistribute_every and k % redistribute_every == 0:
            cur = [redistribute(c) for c in cur]
        if k % record_every == 0 or k == n_steps:
            times.append(t0 + k * dt)
            states.append(cur)
    meta = {"scheme": scheme, "dt": dt,
            "h_mean": float(mean_edge),
            "redistribute_every": int(redistribute_every),
            "record_every": int(record_every)}
    return FlowTrajectory(times, states, metadata=meta)


# ---------------------------------------------------------------------------
# rescalings


def _scale_component(comp, lam):
    if isinstance(comp, ProductLagrangian):
        f1 = _scale_curve(comp.factor1, lam)
        if comp.factor2_line is not None:
            prod = ProductLagrangian.__new__(ProductLagrangian)
            prod.factor1 = f1
            prod.factor2 = _scale_curve(comp.factor2, lam)
            prod.factor2_line = AffineLine(lam * comp.factor2_line.point,
                                           comp.factor2_line.direction)
            prod.component_id = comp.component_id
            return prod
        return ProductLagrangian(f1, _scale_curve(comp.factor2, lam),
                                 component_id=comp.component_id)
    return _scale_curve(comp, lam)


def _scale_curve(curve, lam):
    end_lines = curve.end_lines
    if end_lines is not None:
        end_lines = tuple((lam * np.asarray(p), np.asarray(d)) for p, d in end_lines)
    return DiscreteCurve(lam * curve.vertices, closed=curve.closed,
                         component_id=curve.component_id, end_lines=end_lines)


def scale_state(state, lam):
    comps = [_scale_component(c, lam) for c in as_components(state)]
    return comps if isinstance(state, (list, tuple)) else comps[0]


def parabolic_rescale(traj: FlowTrajectory, lam: float) -> FlowTrajectory:
    """Parabolic rescaling (x, t) -> (lam*x, lam^2*t) of a trajectory."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if isinstance(traj, AnalyticTrajectory):
        gen = traj.generator
        return AnalyticTrajectory(lam * lam * traj.times,
                                  lambda t: scale_state(gen(t / (lam * lam)), lam),
                                  mode=traj.mode, metadata=traj.metadata)
    states = [scale_state(s, lam) for s in traj.states]
    return FlowTrajectory(lam * lam * traj.times, states, mode=traj.mode,
                          metadata=dict(traj.metadata, rescaled_by=lam))


def to_rescaled(traj: FlowTrajectory, tau_min=None, tau_max=None, dtau=0.01) -> FlowTrajectory:
    """Shrinker-scale reparametrization tau = -log(-t), state -> e^{tau/2} state.

    The source trajectory must cover t < 0 over the requested tau window.
    Records the residual of |normal velocity - (H + x^perp/2)| in metadata.
    """
    if traj.mode != "unrescaled":
        raise ValueError("trajectory is already rescaled")
    t_lo, t_hi = traj.times[0], traj.times[-1]
    if t_hi >= 0:
        t_hi = min(t_hi, -1e-300)
    if t_lo >= 0:
        raise RangeError("trajectory does not cover t < 0")
    lo = -np.log(-t_lo)
    hi = -np.log(-t_hi)
    tau_min = lo if tau_min is None else tau_min
    tau_max = hi if tau_max is None else tau_max
    if tau_min < lo - 1e-9 or tau_max > hi + 1e-9:
        raise RangeError(
            f"tau window [{tau_min}, {tau_max}] not covered by [{lo:.4g}, {hi:.4g}]")
    taus = np.arange(tau_min, tau_max + 0.5 * dtau, dtau)
    states = []
    for tau in taus:
        t = -np.exp(-tau)
        states.append(scale_state(traj.state_at(t), np.exp(tau / 2.0)))
    out = FlowTrajectory(taus, states, mode="rescaled",
                         metadata=dict(traj.metadata, dtau=dtau))
    out.metadata["rescaled_velocity_residual"] = _rescaled_velocity_residual(out)
    return out


def _rescaled_velocity_residual(traj):
    """Max residual of the rescaled normal speed against H + x^perp/2."""
    worst = 0.0
    for k in range(1, len(traj) - 1):
        dtau = traj.times[k + 1] - traj.times[k - 1]
        for c_prev, c, c_next in zip(as_components(traj.states[k - 1]),
                                     as_components(traj.states[k]),
                                     as_components(traj.states[k + 1])):
            if isinstance(c, ProductLagrangian):
                c_prev, c, c_next = c_prev.factor1, c.factor1, c_next.factor1
            vel = (c_next.vertices - c_prev.vertices) / dtau
            t = c.tangents()
            nu = np.stack([-t[:, 1], t[:, 0]], axis=1)
            v_n = np.einsum("ij,ij->i", vel, nu)
            H = mean_curvature(c)
            xperp = c.vertices - np.einsum("ij,ij->i", c.vertices, t)[:, None] * t
            target = np.einsum("ij,ij->i", H + 0.5 * xperp, nu)
            mask = c.interior_mask()
            worst = max(worst, float(np.max(np.abs((v_n - target)[mask]))))
    return worst


def product_evolve(traj1: FlowTrajectory, traj2_or_line) -> FlowTrajectory:
    """Product trajectory from a curve trajectory and a curve trajectory/line.

    A curve x static-line product evolves each time slice identically; with
    two trajectories the time grids must agree.
    """
    if isinstance(traj2_or_line, AffineLine):
        line = traj2_or_line
        states = [[ProductLagrangian(c, line, component_id=c.component_id)
                   for c in as_components(s)] for s in traj1.states]
        return FlowTrajectory(traj1.times, states, mode=traj1.mode,
                              metadata=traj1.metadata)
    traj2 = traj2_or_line
    if len(traj1.times) != len(traj2.times) or \
            np.max(np.abs(traj1.times - traj2.times)) > 1e-12:
        raise TimeGridMismatch("factor trajectories live on different time grids")
    states = []
    for s1, s2 in zip(traj1.states, traj2.states):
        c1 = as_components(s1)[0]
        c2 = as_components(s2)[0]
        states.append([ProductLagrangian(c1, c2)])
    return FlowTrajectory(traj1.times, states, mode=traj1.mode,
                          metadata=traj1.metadata)


# ---------------------------------------------------------------------------
# embeddedness audit


def segments_intersect(p1, p2, q1, q2):
    """Vectorized proper-intersection test between segment batches in R^2."""
    d1 = p2 - p1
    d2 = q2 - q1
    denom = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    dp = q1 - p1
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (dp[:, 0] * d2[:, 1] - dp[:, 1] * d2[:, 0]) / denom
        u = (dp[:, 0] * d1[:, 1] - dp[:, 1] * d1[:, 0]) / denom
    ok = np.abs(denom) > 1e-15
    eps = 1e-12
    return ok & (t > eps) & (t < 1 - eps) & (u > eps) & (u < 1 - eps)


def state_self_intersects(state) -> bool:
    """Segment-segment scan over all curve components of a state."""
    comps = as_components(state)
    P1s, P2s, cids, sids, closed_len = [], [], [], [], {}
    for k, c in enumerate(comps):
        v = c.vertices
        if c.closed:
            p1, p2 = v, np.roll(v, -1, axis=0)
        else:
            p1, p2 = v[:-1], v[1:]
        m = p1.shape[0]
        P1s.append(p1)
        P2s.append(p2)
        cids.append(np.full(m, k))
        sids.append(np.arange(m))
        closed_len[k] = m if c.closed else None
    P1 = np.concatenate(P1s)
    P2 = np.concatenate(P2s)
    cid = np.concatenate(cids)
    sid = np.concatenate(sids)
    ii, jj = np.triu_indices(P1.shape[0], k=1)
    same = cid[ii] == cid[jj]
    diff = np.abs(sid[ii] - sid[jj])
    adjacent = same & (diff <= 1)
    for k, m in closed_len.items():
        if m is not None:
            adjacent |= same & (cid[ii] == k) & (diff == m - 1)
    keep = ~adjacent
    hits = segments_intersect(P1[ii[keep]], P2[ii[keep]], P1[jj[keep]], P2[jj[keep]])
    return bool(np.any(hits))


def first_crossing_time(traj: FlowTrajectory):
    """First recorded time at which any state self-intersects, else None."""
    for t, s in zip(traj.times, traj.states):
        if state_self_intersects(s):
            return float(t)
    return None


# ---------------------------------------------------------------------------
# trajectory serialization (time-indexed vertex blocks + metadata header)


def save_trajectory(path, traj: FlowTrajectory) -> None:
    """Write a curve trajectory: JSON metadata header, then per-time blocks
    ``time <t>`` followed by one ``component_id x y`` record per vertex."""
    import json as _json

    with open(path, "w") as fh:
        fh.write("# lmcflab trajectory v1\n")
        meta = dict(traj.metadata, mode=traj.mode)
        fh.write("# meta " + _json.dumps(meta, sort_keys=True) + "\n")
        for t, state in zip(traj.times, traj.states):
            comps = as_components(state)
            if any(isinstance(c, ProductLagrangian) for c in comps):
                raise NotImplementedError("trajectory files store curve states")
            fh.write(f"time {float(t)!r}\n")
            for c in comps:
                closed = int(c.closed)
                for x, y in c.vertices:
                    fh.write(f"{c.component_id} {closed} {float(x)!r} {float(y)!r}\n")


def load_trajectory(path) -> FlowTrajectory:
    """Read a trajectory written by :func:`save_trajectory`."""
    import json as _json

    meta = {}
    times = []
    states = []
    block = []

    def flush():
        if not block:
            return
        comps = []
        arr = np.asarray(block, dtype=float)
        for cid in np.unique(arr[:, 0]).astype(int):
            rows = arr[arr[:, 0] == cid]
            comps.append(DiscreteCurve(rows[:, 2:4], closed=bool(rows[0, 1]),
                                       component_id=int(cid)))
        states.append(comps)
        block.clear()

    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# meta"):
                meta = _json.loads(line[len("# meta"):])
                continue
            if line.startswith("#"):
                continue
            if line.startswith("time "):
                flush()
                times.append(float(line.split()[1]))
                continue
            block.append([float(x) for x in line.split()])
    flush()
    mode = meta.pop("mode", "unrescaled")
    return FlowTrajectory(times, states, mode=mode, metadata=meta)

"""Zero loci of sampled sections as weighted oriented integer 1-chains.

The zero locus is never located by thresholding magnitudes: it is defined
by plaquette vorticity, the integer winding of the covariant phase around
each plaquette.  That makes the extracted chain integer-exact and gauge
invariant, and conservation (closedness of the dual chain) is an exact
integer statement checked on construction.

Also here: winding numbers of sampled loops, the surface crossing test,
the boundary pairing of a chain against scalar functions, conversion of a
chain to an embedded graph with a flow, tangent cones from shell
crossings, and the explicit collapse maps (tube and ball) used to flatten
graph-like sets onto embedded graphs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .bundle import TWO_PI, covariant_deltas, wrap_angle
from .errors import (ChainBoundaryError, InputError,
                     InternalConsistencyError, UndersampledError)
from .flows import EmbeddedGraphFlow, Flow, Graph
from .homology import SPAN, CubicalTorus

DEFAULT_MAX_STEP = np.pi / 2  # half-Nyquist guard for sampled loops
WINDING_RESIDUAL_TOL = 1e-6
CONE_ANGLE_DEG = 15.0


def winding_number(samples, max_step=DEFAULT_MAX_STEP):
    """Topological degree of a closed loop of nonzero complex samples.

    Sums wrapped phase differences (the last sample connects back to the
    first) and divides by ``2 pi``.  Any single step of magnitude at least
    ``max_step`` raises :class:`UndersampledError`: past the default
    half-Nyquist guard an aliased loop (say eight samples of ``z^5``)
    would silently report a wrong degree instead of erroring.
    """
    vals = np.asarray(samples, dtype=complex).ravel()
    if vals.size < 3:
        raise InputError("need at least three samples around a loop")
    if np.any(np.abs(vals) == 0):
        raise InputError("loop samples must be nonzero")
    args = np.angle(vals)
    steps = wrap_angle(np.roll(args, -1) - args)
    worst = int(np.argmax(np.abs(steps)))
    if abs(steps[worst]) >= max_step:
        raise UndersampledError(
            f"undersampled loop: step {worst} -> {worst + 1} has phase jump "
            f"{steps[worst]:+.4f} rad (limit {max_step:.4f})")
    total = float(steps.sum()) / TWO_PI
    n = int(round(total))
    if abs(total - n) > WINDING_RESIDUAL_TOL:
        raise InternalConsistencyError(
            f"winding sum {total} is not an integer")
    return n


class WeightedChain1:
    """Closed integer 1-chain on dual edges, one per plaquette.

    ``coefficients`` maps plaquette ``(normal, (x, y, z))`` to a nonzero
    integer.  The dual edge of plaquette ``(c, v)`` runs from cube
    ``v - e_c`` to cube ``v`` (orientation ``+e_c``), and closedness is
    integer conservation at every cube.
    """

    def __init__(self, manifold, coefficients, require_closed=True):
        if not isinstance(manifold, CubicalTorus):
            raise InputError("chains require a cubical torus manifold")
        self.manifold = manifold
        clean = {}
        for key, n in coefficients.items():
            c, v = key
            if c not in (0, 1, 2):
                raise InputError(f"bad plaquette normal in {key}")
            v = tuple(int(q) % nn for q, nn in zip(v, manifold.dims))
            n = int(n)
            if n:
                clean[(c, v)] = clean.get((c, v), 0) + n
        self.coefficients = {k: v for k, v in sorted(clean.items()) if v}
        if require_closed:
            bad = self.boundary_defects()
            if bad:
                names = ", ".join(str(u) for u in sorted(bad)[:8])
                raise ChainBoundaryError(
                    f"dual chain has boundary at cubes {names}")

    def boundary_defects(self):
        """Cubes where integer conservation fails (empty when closed)."""
        net = {}
        for (c, v), n in self.coefficients.items():
            head = v
            tail = self.manifold.shift(v, c, -1)
            net[head] = net.get(head, 0) + n
            net[tail] = net.get(tail, 0) - n
        return {u: s for u, s in net.items() if s}

    def support(self):
        return set(self.coefficients)

    def total_weight(self):
        """Total weighted length (unit spacing): sum of |coefficients|."""
        return sum(abs(n) for n in self.coefficients.values())

    def is_empty(self):
        return not self.coefficients

    def dual_edge(self, key):
        """(tail cube, head cube) of the dual edge for plaquette ``key``."""
        c, v = key
        return self.manifold.shift(v, c, -1), v

    def as_dual_edge_chain(self):
        """The chain as 1-cells of the (combinatorially equal) dual torus."""
        m = self.manifold
        return {(c, m.shift(v, c, -1)): n
                for (c, v), n in self.coefficients.items()}

    def cycle_class(self):
        """Homology class via the chain-complex machinery (no flux sums)."""
        return self.manifold.edge_chain_class(self.as_dual_edge_chain())

    def __eq__(self, other):
        return isinstance(other, WeightedChain1) and \
            self.manifold == other.manifold and \
            self.coefficients == other.coefficients

    def __repr__(self):
        return (f"WeightedChain1({self.manifold.dims}, "
                f"{len(self.coefficients)} dual edges, "
                f"weight {self.total_weight()})")


def extract_vortex_chain(section, bundle, step_tol=1e-3,
                         residual_tol=WINDING_RESIDUAL_TOL):
    """Vorticity chain of a sampled section: the discrete zero locus.

    Per plaquette the coefficient is the integer
    ``(sum of covariant steps around the boundary + charge x curvature) / 2 pi``.
    Preconditions (nonzero samples, steps clear of ``+-pi``) are enforced
    by :func:`zloch.bundle.covariant_deltas`; non-integral winding is an
    internal-consistency failure, not a tolerance to be absorbed.
    """
    deltas = covariant_deltas(section, bundle, step_tol=step_tol)
    curv = bundle.curvature()
    q = section.charge
    coeffs = {}
    for c in range(3):
        a, b = SPAN[c]
        total = (deltas[a] + np.roll(deltas[b], -1, axis=a)
                 - np.roll(deltas[a], -1, axis=b) - deltas[b]
                 + q * curv[c]) / TWO_PI
        rounded = np.round(total)
        resid = np.max(np.abs(total - rounded)) if total.size else 0.0
        if resid > residual_tol:
            where = np.unravel_index(
                int(np.argmax(np.abs(total - rounded))), total.shape)
            raise InternalConsistencyError(
                f"non-integral plaquette winding at (normal {c}, corner "
                f"{tuple(int(i) for i in where)}): residual {resid:.3e}")
        for idx in np.argwhere(rounded):
            v = tuple(int(i) for i in idx)
            coeffs[(c, v)] = int(rounded[v])
    return WeightedChain1(bundle.manifold, coeffs)


def surface_flow_test(chain, surface):
    """Signed crossings of a chain through a bounding closed surface.

    ``surface`` maps plaquettes to integer coefficients; it must be a
    closed 2-cycle with vanishing homology class (for example a cube
    cluster boundary).  Closed chains always return 0.
    """
    m = chain.manifold
    cls = m.surface_class_coordinates(surface)  # checks closedness too
    if any(cls):
        raise InputError(
            f"surface is closed but not bounding (class {cls}); "
            "use intersection_number for homological pairing")
    return sum(n * surface.get(key, 0)
               for key, n in chain.coefficients.items())


def boundary_pairing(chain, func):
    """Pair the chain boundary against a scalar function on dual vertices.

    Computes ``sum_e Theta(e) (f(head) - f(tail))`` by accumulating exact
    integer net coefficients per cube first, so the result is exactly 0.0
    for closed chains, for any ``func``.  ``func`` is a callable on cube
    coordinates or a mapping.
    """
    f = func if callable(func) else (lambda u: func[u])
    net = {}
    for (c, v), n in chain.coefficients.items():
        head, tail = v, chain.manifold.shift(v, c, -1)
        net[head] = net.get(head, 0) + n
        net[tail] = net.get(tail, 0) - n
    return float(sum(s * float(f(u)) for u, s in net.items() if s))


# ---------------------------------------------------------------------------
# chain -> embedded graph


def chain_to_graph(chain):
    """Collapse a closed chain to an embedded graph carrying a flow.

    Branch vertices are cubes with three or more incident support edges
    (or where the through-weight changes, which closed chains only admit
    at branch points); maximal uniform-weight paths become single edges
    with the common signed weight, embedded as dual-lattice polylines
    (half-integer coordinates).  Class and total weighted length are
    preserved.
    """
    m = chain.manifold
    edges = []  # (key, tail, head, coeff)
    incident = {}
    for key, n in chain.coefficients.items():
        tail, head = chain.dual_edge(key)
        idx = len(edges)
        edges.append((key, tail, head, n))
        incident.setdefault(tail, []).append(idx)
        incident.setdefault(head, []).append(idx)
    for u in incident:
        incident[u].sort()

    def is_branch(u):
        inc = incident[u]
        if len(inc) != 2:
            return True
        w1, w2 = (abs(edges[i][3]) for i in inc)
        return w1 != w2

    branch_set = {u for u in incident if is_branch(u)}
    visited = [False] * len(edges)
    graph_vertices = []
    graph_edges = []
    embedding = {}
    theta = {}

    def vertex_id(u):
        name = f"{u[0]},{u[1]},{u[2]}"
        if name not in graph_vertices:
            graph_vertices.append(name)
        return name

    def step(idx, at):
        _, tail, head, n = edges[idx]
        visited[idx] = True
        forward = (at == tail)
        return (head if forward else tail), (n if forward else -n)

    def walk(start_idx, start_vertex):
        """Follow the uniform-weight path through ``start_idx`` until the
        next branch vertex, or back to the start on a pure cycle."""
        at, flow = step(start_idx, start_vertex)
        pts = [start_vertex, at]
        while at not in branch_set and at != start_vertex:
            nxt = [i for i in incident[at] if not visited[i]]
            if not nxt:
                raise InternalConsistencyError(
                    f"chain walk stranded at cube {at}")
            at, _ = step(nxt[0], at)
            pts.append(at)
        return pts, flow

    def polyline(points):
        return tuple(tuple(q + 0.5 for q in p) for p in points)

    def emit(pts, flow):
        eid = f"e{len(graph_edges)}"
        graph_edges.append((eid, vertex_id(pts[0]), vertex_id(pts[-1])))
        embedding[eid] = polyline(pts)
        theta[eid] = flow

    # paths between branch vertices first
    for b in sorted(branch_set):
        for idx in incident[b]:
            if not visited[idx]:
                emit(*walk(idx, b))
    # leftover pure cycles, based at their smallest cube
    while True:
        remaining = [i for i in range(len(edges)) if not visited[i]]
        if not remaining:
            break
        comp = _edge_component(edges, incident, visited, remaining[0])
        base = min(min(edges[i][1], edges[i][2]) for i in comp)
        start = min(i for i in incident[base] if not visited[i])
        emit(*walk(start, base))

    graph = Graph(tuple(graph_vertices), tuple(graph_edges))
    return EmbeddedGraphFlow(graph, embedding, Flow(graph, theta))


def _edge_component(edges, incident, visited, seed):
    """Unvisited support edges connected to ``seed``."""
    seen = {seed}
    stack = [seed]
    while stack:
        i = stack.pop()
        for u in edges[i][1:3]:
            for j in incident[u]:
                if not visited[j] and j not in seen:
                    seen.add(j)
                    stack.append(j)
    return seen


# ---------------------------------------------------------------------------
# tangent cones


@dataclass(frozen=True)
class Ray:
    direction: tuple  # unit vector
    multiplicity: int  # >= 1
    orientation: int  # +1 outward flow, -1 inward


@dataclass(frozen=True)
class TangentCone:
    base_point: tuple
    rays: tuple  # of Ray
    radii: tuple
    stable: bool

    def net_flux(self):
        return sum(r.orientation * r.multiplicity for r in self.rays)


def _torus_delta(u, p, dims):
    return tuple(((a - b + n // 2) % n) - n // 2 for a, b, n in zip(u, p, dims))


def _shell_crossings(chain, point, radius):
    """(unit direction, outward flux) for chain edges crossing the L-inf
    sphere of the given radius around ``point``."""
    m = chain.manifold
    out = []
    for key, n in sorted(chain.coefficients.items()):
        tail, head = chain.dual_edge(key)
        dt = _torus_delta(tail, point, m.dims)
        dh = _torus_delta(head, point, m.dims)
        inside_t = max(abs(q) for q in dt) < radius
        inside_h = max(abs(q) for q in dh) < radius
        if inside_t == inside_h:
            continue
        mid = tuple((a + b) / 2.0 for a, b in zip(dt, dh))
        norm = math.sqrt(sum(q * q for q in mid))
        if norm == 0:
            continue
        direction = tuple(q / norm for q in mid)
        out.append((direction, n if inside_t else -n))
    return out


def _cluster_rays(crossings, angle_threshold_deg=CONE_ANGLE_DEG):
    """Union-find clustering of crossings by angular proximity."""
    cos_thr = math.cos(math.radians(angle_threshold_deg))
    n = len(crossings)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            di, dj = crossings[i][0], crossings[j][0]
            if sum(a * b for a, b in zip(di, dj)) >= cos_thr:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    rays = []
    for members in groups.values():
        net = sum(crossings[i][1] for i in members)
        if net == 0:
            continue
        mean = [sum(crossings[i][0][k] for i in members) for k in range(3)]
        norm = math.sqrt(sum(q * q for q in mean))
        direction = tuple(q / norm for q in mean)
        rays.append(Ray(direction, abs(net), 1 if net > 0 else -1))
    rays.sort(key=lambda r: r.direction)
    return tuple(rays)


def _rays_match(r1, r2, angle_threshold_deg=CONE_ANGLE_DEG):
    if len(r1) != len(r2):
        return False
    cos_thr = math.cos(math.radians(angle_threshold_deg))
    used = set()
    for a in r1:
        hit = None
        for i, b in enumerate(r2):
            if i in used or a.multiplicity != b.multiplicity \
                    or a.orientation != b.orientation:
                continue
            if sum(x * y for x, y in zip(a.direction, b.direction)) >= cos_thr:
                hit = i
                break
        if hit is None:
            return False
        used.add(hit)
    return True


def tangent_cone(chain, point, radii, angle_threshold_deg=CONE_ANGLE_DEG):
    """Rescaling-limit cone of a chain at a point of its support.

    Chain crossings of concentric cube shells are clustered into rays with
    multiplicities and orientations; the cone counts as stable only when
    at least three radii produce matching clusterings, otherwise it is
    returned flagged unstable (the smallest radius wins) rather than
    guessed.
    """
    m = chain.manifold
    point = tuple(int(q) % n for q, n in zip(point, m.dims))
    on_support = any(point in chain.dual_edge(k) for k in chain.coefficients)
    if not on_support:
        raise InputError(f"point {point} is not on the chain support")
    radii = tuple(sorted({int(r) for r in radii}, reverse=True))
    if not radii or radii[-1] < 1:
        raise InputError("radii must be positive lattice distances")
    if 2 * radii[0] >= min(m.dims):
        raise InputError("largest radius exceeds lattice bounds")
    cones = [_cluster_rays(_shell_crossings(chain, point, r),
                           angle_threshold_deg) for r in radii]
    stable = len(radii) >= 3 and all(
        _rays_match(cones[0], c, angle_threshold_deg) for c in cones[1:])
    return TangentCone(point, cones[-1], radii, stable)


# ---------------------------------------------------------------------------
# winding-based cone for analytically sampled sections


def circle_winding(sample_fn, center, radius, samples=64, normal=2,
                   max_step=DEFAULT_MAX_STEP):
    """Winding of a sampled scalar around a circle normal to an axis."""
    a, b = SPAN[normal]
    ts = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    pts = np.zeros((samples, 3))
    pts[:, a] = center[a] + radius * np.cos(ts)
    pts[:, b] = center[b] + radius * np.sin(ts)
    pts[:, normal] = center[normal]
    return winding_number(sample_fn(pts), max_step=max_step)


def _cell_loop(face_normal, sign, center, half, samples_per_edge):
    """Sample points around one shell-cell boundary, oriented so the loop
    is counterclockwise as seen from outside the shell."""
    a, b = SPAN[face_normal]
    if sign < 0:
        a, b = b, a  # reverse orientation for the -normal face
    ts = np.linspace(-half, half, samples_per_edge, endpoint=False)
    pts = []
    for ua, ub in ((ts, -half), (half, ts), (-ts, half), (-half, -ts)):
        block = np.zeros((samples_per_edge, 3))
        block[:, a] = ua
        block[:, b] = ub
        pts.append(block)
    loop = np.concatenate(pts)
    loop[:, face_normal] += 0.0
    return loop + np.asarray(center)


def section_tangent_cone(sample_fn, point, radii, samples_per_edge=8,
                         angle_threshold_deg=CONE_ANGLE_DEG,
                         max_step=DEFAULT_MAX_STEP):
    """Tangent cone of the zero set of an analytically sampled section.

    For each radius the cube shell around ``point`` is tiled by unit
    cells; the winding of the section around each cell boundary (oriented
    outward) is an outward crossing flux.  Nonzero cells become rays and
    are clustered and stability-checked exactly like chain crossings.
    """
    point = np.asarray(point, dtype=float)
    radii = tuple(sorted({int(r) for r in radii}, reverse=True))
    if not radii or radii[-1] < 1:
        raise InputError("radii must be positive")
    cones = []
    for r in radii:
        crossings = []
        cells = np.arange(-r, r)  # unit cells per face axis
        for c in range(3):
            a, b = SPAN[c]
            for sign in (1, -1):
                for ia in cells:
                    for ib in cells:
                        center = np.zeros(3)
                        center[c] = sign * r
                        center[a] = ia + 0.5
                        center[b] = ib + 0.5
                        loop = _cell_loop(c, sign, point + center, 0.5,
                                          samples_per_edge)
                        w = winding_number(sample_fn(loop), max_step=max_step)
                        if w:
                            norm = math.sqrt(float(center @ center))
                            direction = tuple(float(q) / norm for q in center)
                            crossings.append((direction, w))
        cones.append(_cluster_rays(crossings, angle_threshold_deg))
    stable = len(radii) >= 3 and all(
        _rays_match(cones[0], c, angle_threshold_deg) for c in cones[1:])
    return TangentCone(tuple(point), cones[-1], radii, stable)


# ---------------------------------------------------------------------------
# collapse maps


def _smooth_step(t):
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)

    def h(u):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)

    return h(t) / (h(t) + h(1.0 - t))


def _ramp(u, lo, hi):
    return _smooth_step((np.asarray(u, dtype=float) - lo) / (hi - lo))


def collapse_tube(x, axis_point, axis_direction, scale,
                  profile=(2.0, 1.0)):
    """Squash a tube around an axis onto the axis, identity far away.

    In axis-adapted coordinates ``(t, rho)`` the map is
    ``(t, chi * x_perp)`` with ``chi = 0`` exactly on the closed tube
    ``|t| <= scale, rho <= scale / 2`` and ``chi = 1`` outside the box
    ``|t| <= axial * scale, rho <= radial * scale``.  ``profile`` is
    ``(axial, radial)`` with ``axial > 1`` and ``radial > 1/2`` (otherwise
    the transition region is empty and the profile is not monotone).
    Points on the axis are fixed; the map is continuous and smooth.
    """
    axial, radial = (float(p) for p in profile)
    if not (axial > 1.0 and radial > 0.5):
        raise InputError(
            "non-monotone profile: need axial > 1 and radial > 1/2")
    scale = float(scale)
    if scale <= 0:
        raise InputError("scale must be positive")
    x = np.asarray(x, dtype=float)
    p = np.asarray(axis_point, dtype=float)
    d = np.asarray(axis_direction, dtype=float)
    nd = np.linalg.norm(d)
    if nd == 0:
        raise InputError("axis direction must be nonzero")
    d = d / nd
    rel = x - p
    t = float(rel @ d)
    perp = rel - t * d
    rho = float(np.linalg.norm(perp))
    r1 = float(_ramp(abs(t), scale, axial * scale))
    r2 = float(_ramp(rho, scale / 2.0, radial * scale))
    chi = r1 + r2 - r1 * r2  # 0 exactly on the closed tube, 1 outside the box
    return tuple(p + t * d + chi * perp)


def collapse_ball(x, center, radii):
    """Radial collapse: everything inside the inner radius goes to the
    center, identity outside the middle radius.

    ``radii = (r0, r1, r2)`` with ``0 < r0 < r1 <= r2``; the profile is 0
    on ``[0, r0]`` and 1 on ``[r1, infinity)``.
    """
    r0, r1, r2 = (float(r) for r in radii)
    if not (0 < r0 < r1 <= r2):
        raise InputError("radii must satisfy 0 < r0 < r1 <= r2")
    x = np.asarray(x, dtype=float)
    c = np.asarray(center, dtype=float)
    rel = x - c
    rho = float(np.linalg.norm(rel))
    chi = float(_ramp(rho, r0, r1))
    return tuple(c + chi * rel)


# ---------------------------------------------------------------------------
# JSON format


def chain_to_json(chain):
    return {"dual_edges": [
        {"plaquette_id": [c, v[0], v[1], v[2]], "coeff": int(n)}
        for (c, v), n in sorted(chain.coefficients.items())]}


def chain_from_json(data, manifold, require_closed=True):
    if isinstance(data, str):
        data = json.loads(data)
    try:
        coeffs = {}
        for entry in data["dual_edges"]:
            c, x, y, z = entry["plaquette_id"]
            coeffs[(int(c), (int(x), int(y), int(z)))] = int(entry["coeff"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed chain.json: {exc}") from exc
    return WeightedChain1(manifold, coeffs, require_closed=require_closed)

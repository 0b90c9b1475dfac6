"""Integer flows on abstract and embedded graphs.

A flow assigns a signed integer ``Theta(e)`` to every edge relative to the
edge's reference orientation (tail -> head); ``theta(e) = |Theta(e)|`` is
the weight and the sign records whether the flow runs with or against the
reference.  Conservation holds at every vertex, loops contributing zero.
Storing the signed form makes the flow group plain coordinatewise
addition; the classical weight-plus-orientation presentation is available
as a derived view (:func:`classical_view`, :func:`classical_add`) and the
two addition laws are checked against each other in the tests.

Embedded graphs place each edge on the lattice 1-skeleton as a polyline;
:func:`gamma_class` sends a flow to the homology class of its weighted
1-cycle and :func:`lambda_image` computes the image sublattice of that
homomorphism over a flow basis.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import EmbeddingError, InputError
from .homology import CubicalTorus, HomologyClass
from .smith import (integer_det, lattice_membership, smith_normal_form,
                    snf_diagonal, solve_integer)

SNAP_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Graph:
    """Finite graph with reference edge orientations; loops allowed."""

    vertices: tuple
    edges: tuple  # of (edge_id, tail, head)

    def __post_init__(self):
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise InputError("duplicate vertex ids")
        ids = [e[0] for e in self.edges]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate edge ids")
        for eid, tail, head in self.edges:
            if tail not in vs or head not in vs:
                raise InputError(f"edge {eid!r} has unknown endpoint")

    @property
    def edge_ids(self):
        return tuple(e[0] for e in self.edges)

    def endpoints(self, eid):
        for e, t, h in self.edges:
            if e == eid:
                return t, h
        raise InputError(f"unknown edge id {eid!r}")

    def incidence(self, vertex, eid):
        """+1 if the edge heads into ``vertex``, -1 if it tails out, 0
        otherwise; loops net to zero."""
        t, h = self.endpoints(eid)
        return (1 if h == vertex else 0) - (1 if t == vertex else 0)

    def components(self):
        adj = {v: [] for v in self.vertices}
        for _, t, h in self.edges:
            adj[t].append(h)
            adj[h].append(t)
        seen = set()
        comps = 0
        for v in self.vertices:
            if v in seen:
                continue
            comps += 1
            queue = deque([v])
            seen.add(v)
            while queue:
                u = queue.popleft()
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
        return comps


@dataclass(frozen=True)
class Flow:
    """Signed integer weights on the edges of a fixed graph."""

    graph: Graph
    theta: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = set(self.graph.edge_ids)
        clean = {}
        for eid, v in self.theta.items():
            if eid not in ids:
                raise InputError(f"unknown edge id {eid!r} in flow")
            v = int(v)
            if v:
                clean[eid] = v
        object.__setattr__(self, "theta", clean)

    def __getitem__(self, eid):
        if eid not in set(self.graph.edge_ids):
            raise InputError(f"unknown edge id {eid!r}")
        return self.theta.get(eid, 0)

    def __eq__(self, other):
        return isinstance(other, Flow) and self.graph == other.graph \
            and self.theta == other.theta

    def __hash__(self):
        return hash((self.graph, tuple(sorted(self.theta.items(), key=repr))))


def is_flow(graph, weights):
    """Does the signed weight assignment satisfy vertex conservation?"""
    theta = weights.theta if isinstance(weights, Flow) else dict(weights)
    ids = set(graph.edge_ids)
    for eid in theta:
        if eid not in ids:
            raise InputError(f"unknown edge id {eid!r}")
    net = {v: 0 for v in graph.vertices}
    for eid, t, h in graph.edges:
        w = int(theta.get(eid, 0))
        if w and t != h:
            net[h] += w
            net[t] -= w
    return all(v == 0 for v in net.values())


def zero_flow(graph):
    return Flow(graph, {})


def flow_add(f1, f2):
    if f1.graph != f2.graph:
        raise InputError("flows live on different graphs")
    theta = dict(f1.theta)
    for eid, v in f2.theta.items():
        theta[eid] = theta.get(eid, 0) + v
    return Flow(f1.graph, theta)


def flow_neg(f):
    """Inverse flow: reverse the orientation of every weighted edge."""
    return Flow(f.graph, {e: -v for e, v in f.theta.items()})


def classical_view(f):
    """Weight-and-orientation presentation of a signed flow.

    Maps each edge to ``(theta, orientation)`` with ``theta = |Theta|`` and
    orientation ``"reference"``/``"reversed"``/``None`` (absent for zero
    weight).
    """
    out = {}
    for eid in f.graph.edge_ids:
        v = f.theta.get(eid, 0)
        if v > 0:
            out[eid] = (v, "reference")
        elif v < 0:
            out[eid] = (-v, "reversed")
        else:
            out[eid] = (0, None)
    return out


def classical_add(view1, view2):
    """Case-rule addition of two classical views.

    Same orientation: weights add.  Opposite orientations (or one weight
    zero): the result weight is the absolute difference, oriented with the
    larger summand.
    """
    out = {}
    for eid, (w1, o1) in view1.items():
        w2, o2 = view2[eid]
        if o1 is not None and o1 == o2:
            out[eid] = (w1 + w2, o1)
        else:
            s1 = w1 if o1 != "reversed" else -w1
            s2 = w2 if o2 != "reversed" else -w2
            s = s1 + s2
            if s > 0:
                out[eid] = (s, "reference")
            elif s < 0:
                out[eid] = (-s, "reversed")
            else:
                out[eid] = (0, None)
    return out


def flow_basis(graph):
    """Integer basis of the flow lattice from fundamental cycles.

    A spanning forest is grown breadth-first from the smallest vertex id;
    each non-forest edge contributes the flow running through it and back
    through the forest.  The basis is certified to be a lattice basis by a
    Smith-form primitivity check (all invariant factors 1), and its size
    always equals ``E - V + #components``.
    """
    order = {v: i for i, v in enumerate(graph.vertices)}
    adj = {v: [] for v in graph.vertices}
    for idx, (eid, t, h) in enumerate(graph.edges):
        if t != h:
            adj[t].append((idx, h))
            adj[h].append((idx, t))
    for v in adj:
        adj[v].sort(key=lambda p: p[0])

    parent = {}
    tree_edges = set()
    seen = set()
    for root in sorted(graph.vertices, key=lambda v: order[v]):
        if root in seen:
            continue
        seen.add(root)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for idx, w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    parent[w] = (idx, u)
                    tree_edges.add(idx)
                    queue.append(w)

    def path_to_root(v):
        out = []
        while v in parent:
            idx, u = parent[v]
            eid, t, h = graph.edges[idx]
            out.append((eid, 1 if h == v else -1))
            v = u
        return out

    basis = []
    for idx, (eid, t, h) in enumerate(graph.edges):
        if idx in tree_edges:
            continue
        theta = {eid: 1}
        if t != h:
            # close up through the forest: head back down to tail
            up = {e: -s for e, s in path_to_root(h)}
            down = dict(path_to_root(t))
            for e, s in list(up.items()) + list(down.items()):
                theta[e] = theta.get(e, 0) + s
        basis.append(Flow(graph, theta))

    expected = len(graph.edges) - len(graph.vertices) + graph.components()
    if len(basis) != expected:
        raise AssertionError("fundamental cycle count mismatch")
    if basis:
        eids = list(graph.edge_ids)
        mat = [[f.theta.get(e, 0) for f in basis] for e in eids]
        if any(d != 1 for d in snf_diagonal(mat)):
            raise AssertionError("fundamental cycles are not a lattice basis")
    return basis


# ---------------------------------------------------------------------------
# embedded graphs


@dataclass(frozen=True)
class EmbeddedGraphFlow:
    """Graph embedded edge-by-edge as lattice polylines, carrying a flow.

    Polylines visit lattice points of the ambient 1-skeleton (integer
    coordinates) or of the dual 1-skeleton (all coordinates offset by one
    half); the two may not be mixed.  Endpoint positions must agree with a
    single position per graph vertex, and distinct edges may only meet at
    shared vertex positions.
    """

    graph: Graph
    embedding: dict  # edge id -> tuple of coordinate tuples
    flow: Flow

    def __post_init__(self):
        if self.flow.graph != self.graph:
            raise InputError("flow belongs to a different graph")
        emb = {e: tuple(tuple(float(c) for c in p) for p in poly)
               for e, poly in self.embedding.items()}
        object.__setattr__(self, "embedding", emb)
        ids = set(self.graph.edge_ids)
        if set(emb) != ids:
            raise InputError("embedding must cover exactly the graph edges")
        pos = {}
        for eid, t, h in self.graph.edges:
            poly = emb[eid]
            if len(poly) < 2:
                raise EmbeddingError(f"edge {eid!r} polyline too short")
            for v, p in ((t, poly[0]), (h, poly[-1])):
                if v in pos and pos[v] != p:
                    raise EmbeddingError(
                        f"vertex {v!r} placed at both {pos[v]} and {p}")
                pos[v] = p
        object.__setattr__(self, "vertex_positions", pos)
        # pairwise disjointness away from shared vertices
        interiors = {}
        for eid, poly in emb.items():
            t, h = self.graph.endpoints(eid)
            ends = {pos[t], pos[h]}
            interiors[eid] = set(poly) - ends
        eids = list(emb)
        for i, e1 in enumerate(eids):
            for e2 in eids[i + 1:]:
                p1 = interiors[e1] | set(self.embedding[e1])
                if interiors[e2] & p1 or interiors[e1] & set(self.embedding[e2]):
                    raise EmbeddingError(
                        f"edges {e1!r} and {e2!r} overlap away from vertices")

    def vertex_position(self, v):
        return self.vertex_positions[v]


def _snap_polyline(poly, ambient):
    """Round to the primal or dual lattice; returns (points, dual flag)."""
    pts = np.asarray(poly, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise EmbeddingError("polyline points must be 3d coordinates")
    frac = pts - np.floor(pts)
    if np.all(np.abs(pts - np.round(pts)) <= SNAP_TOLERANCE):
        dual = False
        snapped = np.round(pts).astype(int)
    elif np.all(np.abs(frac - 0.5) <= SNAP_TOLERANCE):
        dual = True
        snapped = np.floor(pts).astype(int)
    else:
        raise EmbeddingError(
            "polyline leaves the lattice skeleton (neither integer nor "
            "half-integer coordinates within snap tolerance)")
    return [tuple(int(q) % n for q, n in zip(p, ambient.dims)) for p in snapped], dual


def _polyline_edge_chain(poly, ambient):
    """Signed lattice edge chain of one polyline; (chain dict, dual flag)."""
    pts, dual = _snap_polyline(poly, ambient)
    chain = {}
    for p, q in zip(pts[:-1], pts[1:]):
        dv = tuple((b - a) % n for a, b, n in zip(p, q, ambient.dims))
        step = None
        for d in range(3):
            unit = tuple(1 if i == d else 0 for i in range(3))
            back = tuple((ambient.dims[i] - 1) if i == d else 0 for i in range(3))
            if dv == unit:
                step = ((d, p), 1)
            elif dv == back:
                step = ((d, q), -1)
        if step is None:
            raise EmbeddingError(
                f"polyline jump {p} -> {q} is not a single lattice step")
        key, s = step
        cur = chain.get(key, 0) + s
        if cur:
            chain[key] = cur
        else:
            del chain[key]
    return chain, dual


def _flow_cycle(egf, ambient):
    total = {}
    duals = set()
    for eid, poly in egf.embedding.items():
        w = egf.flow[eid]
        chain, dual = _polyline_edge_chain(poly, ambient)
        duals.add(dual)
        if w == 0:
            continue
        for key, s in chain.items():
            cur = total.get(key, 0) + w * s
            if cur:
                total[key] = cur
            else:
                del total[key]
    if len(duals) > 1:
        raise EmbeddingError("embedding mixes primal and dual lattice points")
    return total


def gamma_class(egf, ambient):
    """Homology class of the weighted 1-cycle of an embedded graph flow.

    Additive in the flow.  Dual-lattice embeddings are evaluated on the
    combinatorially identical dual torus; the half-lattice shift is
    homotopic to the identity, so published coordinates agree.
    """
    if not isinstance(ambient, CubicalTorus):
        raise InputError("ambient manifold must be a cubical torus")
    cycle = _flow_cycle(egf, ambient)
    return ambient.edge_chain_class(cycle)


class LambdaSublattice:
    """Image of the flow group inside ``H_1`` -- the reach of a graph.

    ``generators`` are the classes of a flow basis; a Smith-form
    presentation provides canonical generators and exact membership.
    """

    def __init__(self, generators):
        self.generators = [tuple(int(c) for c in g) for g in generators]
        self.ambient_rank = len(self.generators[0]) if self.generators else 3
        mat = [[g[i] for g in self.generators] for i in range(self.ambient_rank)]
        if self.generators:
            U, D, _ = smith_normal_form(mat)
            assert abs(integer_det(U)) == 1
            n = len(U)
            self.rank = sum(1 for i in range(min(n, len(self.generators)))
                            if D[i][i])
            # image lattice = U^-1 (diagonal lattice); the unimodular
            # system U x = d_i e_i solves exactly over the integers
            self.canonical_generators = []
            for i in range(self.rank):
                rhs = [D[i][i] if r == i else 0 for r in range(n)]
                col = solve_integer(U, rhs)
                assert col is not None
                self.canonical_generators.append(tuple(col))
        else:
            self.rank = 0
            self.canonical_generators = []

    def membership(self, cls):
        """Exact test: does the class lie in the sublattice?"""
        if isinstance(cls, HomologyClass):
            if any(r for r, _ in cls.torsion):
                return False
            vec = cls.free
        else:
            vec = tuple(int(c) for c in cls)
        if len(vec) != self.ambient_rank:
            raise InputError("class has the wrong ambient rank")
        return lattice_membership(self.generators, vec)


def lambda_image(egf, ambient):
    """Image sublattice of the class homomorphism over a flow basis."""
    basis = flow_basis(egf.graph)
    gens = []
    for f in basis:
        sub = EmbeddedGraphFlow(egf.graph, egf.embedding, f)
        gens.append(gamma_class(sub, ambient).free)
    return LambdaSublattice([g for g in gens if any(g)])


# ---------------------------------------------------------------------------
# JSON formats


def graph_to_json(egf_or_graph, embedding=None):
    """Serialize a graph (optionally embedded) to the graph.json schema."""
    if isinstance(egf_or_graph, EmbeddedGraphFlow):
        graph = egf_or_graph.graph
        embedding = egf_or_graph.embedding
    else:
        graph = egf_or_graph
    out = {"vertices": list(graph.vertices), "edges": []}
    for eid, t, h in graph.edges:
        entry = {"id": eid, "tail": t, "head": h}
        if embedding is not None:
            entry["polyline"] = [list(p) for p in embedding[eid]]
        out["edges"].append(entry)
    return out


def graph_from_json(data):
    """Parse the graph.json schema; returns (Graph, embedding dict or None)."""
    if isinstance(data, str):
        data = json.loads(data)
    try:
        vertices = tuple(data["vertices"])
        edges = tuple((e["id"], e["tail"], e["head"]) for e in data["edges"])
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed graph.json: {exc}") from exc
    graph = Graph(vertices, edges)
    embedding = None
    if data["edges"] and "polyline" in data["edges"][0]:
        embedding = {e["id"]: tuple(tuple(c) for c in e["polyline"])
                     for e in data["edges"]}
    return graph, embedding


def flow_to_json(f):
    return {"theta": {str(e): int(v) for e, v in sorted(
        f.theta.items(), key=lambda kv: repr(kv[0]))}}


def flow_from_json(data, graph):
    if isinstance(data, str):
        data = json.loads(data)
    if "theta" not in data:
        raise InputError("flow.json must contain a 'theta' object")
    by_str = {str(e): e for e in graph.edge_ids}
    theta = {}
    for k, v in data["theta"].items():
        if k not in by_str:
            raise InputError(f"unknown edge id {k!r} in flow.json")
        if not isinstance(v, int):
            raise InputError("flow weights must be exact integers")
        theta[by_str[k]] = v
    return Flow(graph, theta)

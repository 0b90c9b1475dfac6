"""Integer chain complexes, homology with torsion, and duality on lattices.

The two concrete manifold families are

* :class:`CubicalTorus` -- the flat cubical 3-torus ``T^3`` with dims
  ``(N0, N1, N2)``.  Cells carry lattice coordinates, edges exist in the
  three axis directions, plaquettes are labelled by their *normal*
  direction, and every orientation convention is fixed once here:
  a plaquette with normal ``c`` is oriented counterclockwise as seen from
  ``+e_c`` (its spanning pair is the even permutation complement of ``c``),
  and the dual 1-cell crossing it points along ``+e_c``.  With this choice
  the crossing sign of a dual edge through its own plaquette is always +1.

* :class:`SurfaceCircleProduct` -- a product cell structure on
  ``Sigma_g x S^1`` built from the one-vertex cell structure on a closed
  orientable genus-``g`` surface crossed with an ``m``-gon circle.  It has
  no lattice geometry and serves homology-rank computations.

First homology classes are computed from the boundary matrices alone:
a deterministic spanning forest of the 1-skeleton identifies the cycle
lattice with ``Z^(non-tree edges)`` and a sparse integer reduction of the
2-boundary (see :mod:`zloch.smith`) yields quotient functionals.  Class
coordinates are then re-expressed in a published basis of reference cycles
(the three coordinate circles on the torus) after certifying that the
reference classes form a unimodular basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import CapabilityError, ChainBoundaryError, InputError
from .smith import (QuotientReduction, integer_det, smith_normal_form,
                    solve_integer)

# spanning pair of a plaquette normal: (a, b) with (a, b, c) an even
# permutation of (0, 1, 2); the plaquette boundary runs a, b, -a, -b
SPAN = {0: (1, 2), 1: (2, 0), 2: (0, 1)}

UNIT = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


@dataclass(frozen=True)
class HomologyClass:
    """Element of ``H_k`` in the published basis: free coordinates plus
    reduced torsion residues ``(residue mod modulus)``."""

    free: tuple
    torsion: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(int(v) for v in self.free))
        object.__setattr__(
            self, "torsion",
            tuple((int(r) % int(m), int(m)) for r, m in self.torsion))

    def __add__(self, other):
        if len(self.free) != len(other.free) or len(self.torsion) != len(other.torsion):
            raise InputError("homology classes live in different groups")
        tor = tuple(((r1 + r2) % m1, m1)
                    for (r1, m1), (r2, _) in zip(self.torsion, other.torsion))
        return HomologyClass(
            tuple(a + b for a, b in zip(self.free, other.free)), tor)

    def __neg__(self):
        return HomologyClass(tuple(-a for a in self.free),
                             tuple((-r, m) for r, m in self.torsion))

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self):
        return all(v == 0 for v in self.free) and all(r == 0 for r, _ in self.torsion)


class ChainComplex:
    """Finite chain complex of free Z-modules given by boundary matrices.

    ``boundaries[k]`` is the matrix of the boundary map from k+1-chains to
    k-chains (scipy sparse, integer entries), so ``boundaries`` has one
    entry per positive dimension.  ``d o d = 0`` is verified exactly on
    construction.
    """

    def __init__(self, boundaries, vertex_label=None, edge_label=None,
                 reference_cycles=None):
        self.boundaries = [sp.csr_matrix(b, dtype=np.int64) for b in boundaries]
        self.cell_counts = [self.boundaries[0].shape[0]] + \
            [b.shape[1] for b in self.boundaries]
        for k in range(len(self.boundaries) - 1):
            lo, hi = self.boundaries[k], self.boundaries[k + 1]
            if lo.shape[1] != hi.shape[0]:
                raise InputError("boundary matrix shapes are inconsistent")
            prod = lo @ hi
            if prod.nnz and np.any(prod.data):
                raise InputError("d o d != 0: not a chain complex")
        self.vertex_label = vertex_label or (lambda i: i)
        self.edge_label = edge_label or (lambda i: i)
        self.reference_cycles = reference_cycles
        self._h1 = None
        self._rank_cache = {}

    @property
    def dimension(self):
        return len(self.boundaries)

    def boundary(self, k):
        """Matrix of the boundary map C_k -> C_(k-1) (1 <= k <= dim)."""
        if not 1 <= k <= self.dimension:
            raise InputError(f"no boundary map in dimension {k}")
        return self.boundaries[k - 1]

    def _boundary_rank(self, k):
        """Rank of d_k, with d_0 and d_(dim+1) the zero maps."""
        if k < 1 or k > self.dimension:
            return 0, []
        if k not in self._rank_cache:
            mat = self.boundaries[k - 1].tocsc()
            cols = []
            for j in range(mat.shape[1]):
                sl = slice(mat.indptr[j], mat.indptr[j + 1])
                cols.append(dict(zip(mat.indices[sl].tolist(),
                                     mat.data[sl].tolist())))
            red = QuotientReduction(mat.shape[0], cols, track_left=False)
            self._rank_cache[k] = (red.rank, red.invariant_factors)
        return self._rank_cache[k]

    def homology_ranks(self, k):
        """Betti number and torsion factors of ``H_k``."""
        if not 0 <= k <= self.dimension:
            raise InputError(f"dimension {k} out of range 0..{self.dimension}")
        n_k = self.cell_counts[k]
        rank_dk, _ = self._boundary_rank(k)
        rank_dk1, torsion = self._boundary_rank(k + 1)
        return n_k - rank_dk - rank_dk1, [d for d in torsion if d > 1]

    # -- first homology ----------------------------------------------------

    def _edge_endpoints(self):
        """(tail, head) per 1-cell, or None for chain-level loops."""
        d1 = self.boundaries[0].tocsc()
        out = []
        for j in range(d1.shape[1]):
            sl = slice(d1.indptr[j], d1.indptr[j + 1])
            rows = d1.indices[sl]
            vals = d1.data[sl]
            nz = [(r, v) for r, v in zip(rows.tolist(), vals.tolist()) if v]
            if not nz:
                out.append(None)
            elif len(nz) == 2 and sorted(v for _, v in nz) == [-1, 1]:
                tail = next(r for r, v in nz if v == -1)
                head = next(r for r, v in nz if v == 1)
                out.append((tail, head))
            else:
                raise CapabilityError(
                    "1-skeleton is not a graph incidence structure")
        return out

    def _h1_solver(self):
        if self._h1 is None:
            self._h1 = _H1Solver(self)
        return self._h1

    def cycle_class(self, chain):
        """Homology class of an integer 1-cycle.

        ``chain`` maps 1-cell index -> coefficient (dict or vector).
        Raises :class:`ChainBoundaryError` naming offending vertices when
        the chain is not closed.
        """
        if not isinstance(chain, dict):
            chain = {i: int(v) for i, v in enumerate(np.asarray(chain)) if v}
        else:
            chain = {int(i): int(v) for i, v in chain.items() if v}
        for i in chain:
            if not 0 <= i < self.cell_counts[1]:
                raise InputError(f"unknown 1-cell index {i}")
        self._check_closed(chain)
        return self._h1_solver().coordinates(chain)

    def _check_closed(self, chain):
        d1 = self.boundaries[0].tocsc()
        bnd = {}
        for j, c in chain.items():
            sl = slice(d1.indptr[j], d1.indptr[j + 1])
            for r, v in zip(d1.indices[sl].tolist(), d1.data[sl].tolist()):
                bnd[r] = bnd.get(r, 0) + c * v
        bad = sorted(r for r, v in bnd.items() if v)
        if bad:
            names = ", ".join(str(self.vertex_label(r)) for r in bad[:8])
            more = "" if len(bad) <= 8 else f" (+{len(bad) - 8} more)"
            raise ChainBoundaryError(f"chain has boundary at vertices {names}{more}")

    def bounding_chain(self, chain):
        """Integer 2-chain ``w`` with ``d w = chain``, or ``None``.

        Dense Smith solve; intended for small complexes and test fixtures.
        """
        if not isinstance(chain, dict):
            chain = {i: int(v) for i, v in enumerate(np.asarray(chain)) if v}
        d2 = self.boundaries[1].toarray().astype(object)
        rhs = [0] * self.cell_counts[1]
        for i, v in chain.items():
            rhs[i] = int(v)
        return solve_integer(d2.tolist(), rhs)


class _H1Solver:
    """Quotient functionals for H_1 = cycles / boundaries.

    A deterministic spanning forest (breadth first from the smallest
    vertex, neighbours in 1-cell index order) identifies the cycle lattice
    with ``Z^(non-tree cells)``: the coordinates of a cycle are simply its
    coefficients on non-tree 1-cells.  The 2-boundary restricted to those
    rows is then reduced exactly.
    """

    def __init__(self, cx):
        self.cx = cx
        endpoints = cx._edge_endpoints()
        n_v = cx.cell_counts[0]
        incident = [[] for _ in range(n_v)]
        for j, ep in enumerate(endpoints):
            if ep is not None and ep[0] != ep[1]:
                t, h = ep
                incident[t].append((j, h))
                incident[h].append((j, t))
        for lst in incident:
            lst.sort()
        tree = set()
        seen = [False] * n_v
        for root in range(n_v):
            if seen[root]:
                continue
            seen[root] = True
            queue = [root]
            while queue:
                v = queue.pop(0)
                for j, w in incident[v]:
                    if not seen[w]:
                        seen[w] = True
                        tree.add(j)
                        queue.append(w)
        self.nontree = [j for j in range(cx.cell_counts[1]) if j not in tree]
        self.row_of = {j: i for i, j in enumerate(self.nontree)}

        d2 = cx.boundaries[1].tocsc() if cx.dimension >= 2 else None
        cols = []
        if d2 is not None:
            for j in range(d2.shape[1]):
                sl = slice(d2.indptr[j], d2.indptr[j + 1])
                ent = {}
                for r, v in zip(d2.indices[sl].tolist(), d2.data[sl].tolist()):
                    ri = self.row_of.get(r)
                    if ri is not None and v:
                        ent[ri] = ent.get(ri, 0) + v
                cols.append({r: v for r, v in ent.items() if v})
        self.reduction = QuotientReduction(len(self.nontree), cols)
        self.torsion_moduli = [m for _, m in self.reduction.torsion_functionals]

        self.basis_change = None
        refs = cx.reference_cycles
        if refs is not None:
            raw = [self.reduction.free_coordinates(self._restrict(r)) for r in refs]
            k = self.reduction.free_rank
            if len(raw) != k:
                raise InputError(
                    f"{len(raw)} reference cycles for free rank {k}")
            W = [[raw[j][i] for j in range(k)] for i in range(k)]
            if k and abs(integer_det(W)) != 1:
                raise InputError("reference cycles do not form an H1 basis")
            self.basis_change = W

    def _restrict(self, chain):
        return {self.row_of[j]: v for j, v in chain.items() if j in self.row_of}

    def coordinates(self, chain):
        vec = self._restrict(chain)
        raw = self.reduction.free_coordinates(vec)
        tor = tuple(zip(self.reduction.torsion_residues(vec), self.torsion_moduli))
        if self.basis_change is None:
            return HomologyClass(tuple(raw), tor)
        sol = solve_integer(self.basis_change, raw)
        if sol is None:
            raise InputError("cycle class outside the published basis lattice")
        return HomologyClass(tuple(sol), tor)


def homology(cx, k):
    """Betti rank and torsion factors of ``H_k`` of a chain complex."""
    return cx.homology_ranks(k)


def cycle_class(chain, cx):
    """Homology class of a 1-cycle in the complex's published basis."""
    return cx.cycle_class(chain)


# ---------------------------------------------------------------------------
# lattice manifolds


class LatticeManifold:
    """Base class carrying the family tag and the associated complex."""

    family = "abstract"

    def complex(self):
        raise NotImplementedError

    def h1_rank(self):
        return self.complex().homology_ranks(1)[0]


class CubicalTorus(LatticeManifold):
    """Flat cubical 3-torus with ``dims = (N0, N1, N2)``, each ``N >= 2``.

    Cell naming: vertices ``(x, y, z)``; edges ``(d, x, y, z)`` leaving the
    vertex in direction ``d``; plaquettes ``(c, x, y, z)`` with normal
    ``c`` and corner ``(x, y, z)``; cubes ``(x, y, z)``.  Linear indices
    follow C order on ``(d, x, y, z)``.

    Dual 1-cells: the dual edge of plaquette ``(c, v)`` joins the cube
    ``v - e_c`` to the cube ``v`` and points along ``+e_c``; under the
    half-lattice shift the dual 1-skeleton is the same combinatorial torus,
    which is how dual chains get their homology classes.
    """

    family = "torus3"

    def __init__(self, dims):
        dims = tuple(int(n) for n in dims)
        if len(dims) != 3 or any(n < 2 for n in dims):
            raise InputError("dims must be three integers >= 2")
        self.dims = dims
        self.n_vertices = dims[0] * dims[1] * dims[2]

    def __eq__(self, other):
        return isinstance(other, CubicalTorus) and self.dims == other.dims

    def __hash__(self):
        return hash(("torus3", self.dims))

    # -- indexing ----------------------------------------------------------

    def vertex_index(self, v):
        x, y, z = (v[i] % self.dims[i] for i in range(3))
        return (x * self.dims[1] + y) * self.dims[2] + z

    def vertex_coords(self, i):
        z = i % self.dims[2]
        y = (i // self.dims[2]) % self.dims[1]
        x = i // (self.dims[1] * self.dims[2])
        return (x, y, z)

    def edge_index(self, d, v):
        return d * self.n_vertices + self.vertex_index(v)

    def edge_coords(self, i):
        return (i // self.n_vertices,) + self.vertex_coords(i % self.n_vertices)

    plaquette_index = edge_index
    plaquette_coords = edge_coords

    def shift(self, v, d, step=1):
        w = list(v)
        w[d] = (w[d] + step) % self.dims[d]
        return tuple(w)

    # -- boundary matrices ---------------------------------------------------

    def _grids(self):
        return np.meshgrid(*(np.arange(n) for n in self.dims), indexing="ij")

    def _vidx_arr(self, xs, ys, zs):
        N0, N1, N2 = self.dims
        return (xs % N0 * N1 + ys % N1) * N2 + zs % N2

    def boundary_1(self):
        N = self.n_vertices
        xs, ys, zs = self._grids()
        rows, cols, data = [], [], []
        for d in range(3):
            e = d * N + self._vidx_arr(xs, ys, zs)
            head = self._vidx_arr(xs + (d == 0), ys + (d == 1), zs + (d == 2))
            tail = self._vidx_arr(xs, ys, zs)
            rows += [head.ravel(), tail.ravel()]
            cols += [e.ravel(), e.ravel()]
            data += [np.ones(N, np.int64), -np.ones(N, np.int64)]
        return sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(N, 3 * N))

    def boundary_2(self):
        N = self.n_vertices
        xs, ys, zs = self._grids()

        def edge(d, dx, dy, dz):
            return d * N + self._vidx_arr(xs + dx, ys + dy, zs + dz)

        rows, cols, data = [], [], []
        one = np.ones(N, np.int64)
        for c in range(3):
            a, b = SPAN[c]
            p = c * N + self._vidx_arr(xs, ys, zs)
            ea = (int(a == 0), int(a == 1), int(a == 2))
            eb = (int(b == 0), int(b == 1), int(b == 2))
            terms = [(edge(a, 0, 0, 0), one),
                     (edge(b, *ea), one),
                     (edge(a, *eb), -one),
                     (edge(b, 0, 0, 0), -one)]
            for r, s in terms:
                rows.append(r.ravel())
                cols.append(p.ravel())
                data.append(s)
        return sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(3 * N, 3 * N))

    def boundary_3(self):
        N = self.n_vertices
        xs, ys, zs = self._grids()
        rows, cols, data = [], [], []
        one = np.ones(N, np.int64)
        cube = self._vidx_arr(xs, ys, zs)
        for c in range(3):
            top = c * N + self._vidx_arr(
                xs + (c == 0), ys + (c == 1), zs + (c == 2))
            bot = c * N + self._vidx_arr(xs, ys, zs)
            rows += [top.ravel(), bot.ravel()]
            cols += [cube.ravel(), cube.ravel()]
            data += [one, -one]
        return sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(3 * N, N))

    @lru_cache(maxsize=None)
    def _complex_cached(self):
        refs = [self.coordinate_circle(d) for d in range(3)]
        return ChainComplex(
            [self.boundary_1(), self.boundary_2(), self.boundary_3()],
            vertex_label=self.vertex_coords,
            edge_label=self.edge_coords,
            reference_cycles=[
                {self.edge_index(d, v): c for (d, v), c in ref.items()}
                for ref in refs])

    def complex(self):
        return self._complex_cached()

    # -- published cycles and surfaces --------------------------------------

    def coordinate_circle(self, d, transverse=(0, 0)):
        """The straight 1-cycle running once around direction ``d``.

        ``transverse`` places the circle in the two other directions
        (even-permutation order).
        """
        a, b = SPAN[d]
        chain = {}
        v = [0, 0, 0]
        v[a], v[b] = transverse[0] % self.dims[a], transverse[1] % self.dims[b]
        for j in range(self.dims[d]):
            v[d] = j
            chain[(d, tuple(v))] = 1
        return chain

    def coordinate_torus(self, c, height=0):
        """2-cycle of all plaquettes with normal ``c`` at ``x_c = height``."""
        a, b = SPAN[c]
        surf = {}
        v = [0, 0, 0]
        v[c] = height % self.dims[c]
        for i in range(self.dims[a]):
            for j in range(self.dims[b]):
                v[a], v[b] = i, j
                surf[(c, tuple(v))] = 1
        return surf

    def cube_cluster_boundary(self, cubes):
        """Oriented plaquette 2-chain bounding a set of cubes."""
        surf = {}
        for u in cubes:
            u = tuple(int(q) % n for q, n in zip(u, self.dims))
            for c in range(3):
                for key, s in (((c, self.shift(u, c)), 1), ((c, u), -1)):
                    cur = surf.get(key, 0) + s
                    if cur:
                        surf[key] = cur
                    else:
                        surf.pop(key, None)
        return surf

    def edge_chain_class(self, chain):
        """Class of a 1-cycle given as ``{(d, (x, y, z)): coeff}``."""
        cx = self.complex()
        idx = {self.edge_index(d, v): int(c) for (d, v), c in chain.items()}
        return cx.cycle_class(idx)

    def surface_class_coordinates(self, surface):
        """H_2 coordinates of a closed plaquette 2-chain.

        Pairs the surface with the three dual coordinate circles; also
        verifies closedness.
        """
        idx = {}
        for (c, v), s in surface.items():
            idx[self.plaquette_index(c, v)] = idx.get(
                self.plaquette_index(c, v), 0) + int(s)
        d2 = self.complex().boundary(2).tocsc()
        bnd = {}
        for j, s in idx.items():
            sl = slice(d2.indptr[j], d2.indptr[j + 1])
            for r, v in zip(d2.indices[sl].tolist(), d2.data[sl].tolist()):
                bnd[r] = bnd.get(r, 0) + s * v
        if any(bnd.values()):
            raise InputError("surface 2-chain is not closed")
        out = []
        for c in range(3):
            a, b = SPAN[c]
            tot = 0
            for (cc, v), s in surface.items():
                if cc == c and v[a] == 0 and v[b] == 0:
                    tot += s
            out.append(tot)
        return tuple(out)


class SurfaceCircleProduct(LatticeManifold):
    """Product cell structure on ``Sigma_g x S^1``.

    The surface factor uses the one-vertex structure of a closed
    orientable genus-``g`` surface (2g loop edges, one face whose attaching
    word is the product of commutators, hence zero chain boundary); the
    circle factor is an ``m``-gon.  Good for exact homology ranks; it
    carries no lattice geometry.
    """

    family = "surface_x_circle"

    def __init__(self, genus, circle_cells=4):
        if genus < 1 or circle_cells < 1:
            raise InputError("need genus >= 1 and circle_cells >= 1")
        self.genus = int(genus)
        self.m = int(circle_cells)

    # cell order (dimension): 0: v_j; 1: loops (l, j) for l < 2g then
    # vertical (2g, j); 2: face x v_j first, then loop x circle-edge;
    # 3: face x circle-edge.

    def _idx1(self, kind, j):
        return kind * self.m + j

    @lru_cache(maxsize=None)
    def complex(self):
        g, m = self.genus, self.m
        n0 = m
        n1 = (2 * g + 1) * m
        n2 = m + 2 * g * m
        n3 = m
        d1 = sp.lil_matrix((n0, n1), dtype=np.int64)
        for j in range(m):
            e = self._idx1(2 * g, j)
            d1[(j + 1) % m, e] += 1
            d1[j, e] -= 1
        d2 = sp.lil_matrix((n1, n2), dtype=np.int64)
        # face x v_j has zero boundary (commutator word cancels)
        for l in range(2 * g):
            for j in range(m):
                col = m + l * m + j
                d2[self._idx1(l, (j + 1) % m), col] -= 1
                d2[self._idx1(l, j), col] += 1
        d3 = sp.lil_matrix((n2, n3), dtype=np.int64)
        for j in range(m):
            d3[(j + 1) % m, j] += 1
            d3[j, j] -= 1
        refs = [{self._idx1(l, 0): 1} for l in range(2 * g)]
        refs.append({self._idx1(2 * g, j): 1 for j in range(m)})
        return ChainComplex([d1.tocsr(), d2.tocsr(), d3.tocsr()],
                            reference_cycles=refs)


# ---------------------------------------------------------------------------
# duality


def poincare_dual(flux, manifold):
    """H_1 class dual to an integer flux vector in ``H^2``.

    On the cubical torus the published bases are aligned so the dual of
    flux ``(k0, k1, k2)`` has the same free coordinates; the alignment is
    certified by the pairing tests against :func:`intersection_number`.
    """
    if not isinstance(manifold, CubicalTorus):
        raise CapabilityError(
            f"Poincare duality implemented for the torus family only, "
            f"not {manifold.family!r}")
    flux = tuple(int(v) for v in flux)
    if len(flux) != 3:
        raise InputError("flux vector must have three components")
    return HomologyClass(flux)


def dual_class_representative(cls, manifold):
    """Concrete dual 1-chain (plaquette -> coeff) representing ``cls``.

    Uses one straight dual circle per direction at canonical transverse
    position; the result crosses the coordinate tori transversally.
    """
    if not isinstance(manifold, CubicalTorus):
        raise CapabilityError("representatives exist for the torus family only")
    chain = {}
    for c, k in enumerate(cls.free):
        if k == 0:
            continue
        v = [0, 0, 0]
        for j in range(manifold.dims[c]):
            v[c] = j
            chain[(c, tuple(v))] = k
    return chain


def primal_cycle_to_dual(manifold, edge_chain):
    """Half-lattice shift of a primal 1-cycle onto dual 1-cells.

    Edge ``(d, v)`` shifts to the dual edge crossing plaquette
    ``(d, v + e_d)``; the shift is homotopic to the identity, so classes
    are preserved.
    """
    out = {}
    for (d, v), c in edge_chain.items():
        key = (d, manifold.shift(v, d))
        out[key] = out.get(key, 0) + int(c)
    return {k: v for k, v in out.items() if v}


def intersection_number(chain, surface, manifold):
    """Signed crossing count of a dual 1-cycle with a plaquette 2-cycle.

    ``chain`` maps plaquettes (dual 1-cells) to integers -- pass a
    :class:`zloch.zerolocus.WeightedChain1` or its coefficient dict;
    ``surface`` maps plaquettes to integers.  With the package orientation
    convention every dual edge crosses exactly its own plaquette with sign
    +1, so the pairing is a plain coefficient contraction.  Primal edge
    chains are rejected: shift them first with
    :func:`primal_cycle_to_dual` (a half-lattice shift restores cubical
    transversality).
    """
    if not isinstance(manifold, CubicalTorus):
        raise CapabilityError("intersection numbers on the torus family only")
    coeffs = getattr(chain, "coefficients", chain)
    if not isinstance(coeffs, dict):
        raise InputError("chain must be a dual 1-chain (plaquette -> coeff)")
    for key in coeffs:
        if not (isinstance(key, tuple) and len(key) == 2 and
                isinstance(key[1], tuple)):
            raise InputError(
                "non-transverse input: expected dual 1-cells keyed by "
                "(normal, corner); for a primal cycle apply "
                "primal_cycle_to_dual (half-lattice shift) first")
    total = 0
    small, big = (coeffs, surface) if len(coeffs) <= len(surface) else (surface, coeffs)
    for key, v in small.items():
        w = big.get(key)
        if w:
            total += int(v) * int(w)
    return total

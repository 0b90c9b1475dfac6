"""Exact integer linear algebra: Smith normal form and sparse lattice reduction.

Everything here runs on Python integers, so there is no overflow regardless
of how large intermediate entries grow.  Two engines are provided:

* :func:`smith_normal_form` -- dense, returns the full ``(U, D, V)`` triple
  with ``U @ M @ V == D``, both transforms unimodular and the diagonal
  satisfying the divisibility chain.  Meant for small matrices (flow bases,
  class lattices, fixtures).

* :class:`QuotientReduction` -- sparse column reduction describing the
  quotient ``Z^nrows / span(columns)``.  It tracks left row operations only,
  which is exactly what is needed to read off homology coordinates of
  cycles, and it cascades over unit pivots so chain complexes with tens of
  thousands of cells reduce in well under a second.
"""

from __future__ import annotations

import heapq


def _as_int_rows(mat):
    rows = [[int(x) for x in row] for row in mat]
    if rows:
        w = len(rows[0])
        if any(len(r) != w for r in rows):
            raise ValueError("ragged matrix")
    return rows


def smith_normal_form(mat):
    """Smith normal form of an integer matrix.

    Returns ``(U, D, V)`` as lists of lists of Python ints with
    ``U @ mat @ V == D``, ``|det U| == |det V| == 1``, ``D`` diagonal with
    non-negative entries satisfying ``d1 | d2 | ...``.

    Pivots are chosen as the entry of smallest absolute value, ties broken
    by (row, column) index, so the output is reproducible.
    """
    A = _as_int_rows(mat)
    m = len(A)
    n = len(A[0]) if m else 0
    U = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    V = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        if i != j:
            A[i], A[j] = A[j], A[i]
            U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        if i != j:
            for row in A:
                row[i], row[j] = row[j], row[i]
            for row in V:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):
        # row_dst += q * row_src, in A and U
        Ad, As = A[dst], A[src]
        for k in range(n):
            Ad[k] += q * As[k]
        Ud, Us = U[dst], U[src]
        for k in range(m):
            Ud[k] += q * Us[k]

    def add_col(dst, src, q):
        for row in A:
            row[dst] += q * row[src]
        for row in V:
            row[dst] += q * row[src]

    t = 0
    while t < min(m, n):
        piv = None
        for i in range(t, m):
            Ai = A[i]
            for j in range(t, n):
                v = Ai[j]
                if v:
                    key = (abs(v), i, j)
                    if piv is None or key < piv:
                        piv = key
        if piv is None:
            break
        _, pi, pj = piv
        swap_rows(t, pi)
        swap_cols(t, pj)

        dirty = True
        while dirty:
            dirty = False
            p = A[t][t]
            for i in range(t + 1, m):
                v = A[i][t]
                if v:
                    add_row(i, t, -(v // p))
                    if A[i][t]:
                        # nonzero remainder beats the pivot; promote it
                        swap_rows(t, i)
                        dirty = True
                        break
            if dirty:
                continue
            p = A[t][t]
            for j in range(t + 1, n):
                v = A[t][j]
                if v:
                    add_col(j, t, -(v // p))
                    if A[t][j]:
                        swap_cols(t, j)
                        dirty = True
                        break
            if dirty:
                continue
            # pivot row/column clear; enforce divisibility over the rest
            p = A[t][t]
            for i in range(t + 1, m):
                Ai = A[i]
                if any(Ai[j] % p for j in range(t + 1, n)):
                    add_row(t, i, 1)
                    dirty = True
                    break
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    return U, A, V


def integer_det(mat):
    """Exact determinant via fraction-free Bareiss elimination."""
    A = _as_int_rows(mat)
    n = len(A)
    if n == 0:
        return 1
    if any(len(r) != n for r in A):
        raise ValueError("determinant needs a square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
            A[i][k] = 0
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def snf_diagonal(mat):
    """Invariant factors (positive, divisibility-ordered) of ``mat``."""
    _, D, _ = smith_normal_form(mat)
    out = []
    for i in range(min(len(D), len(D[0]) if D else 0)):
        if D[i][i]:
            out.append(abs(D[i][i]))
    return out


def solve_integer(mat, rhs):
    """One integer solution ``x`` of ``mat @ x == rhs``, or ``None``.

    With ``U M V = D`` the system becomes ``D y = U b``; solvability
    reduces to divisibility of the transformed right-hand side.
    """
    U, D, V = smith_normal_form(mat)
    m = len(D)
    n = len(D[0]) if m else 0
    b = [int(v) for v in rhs]
    if len(b) != m:
        raise ValueError("rhs length mismatch")
    c = [sum(U[i][k] * b[k] for k in range(m)) for i in range(m)]
    y = [0] * n
    for i in range(m):
        d = D[i][i] if i < n else 0
        if d:
            if c[i] % d:
                return None
            y[i] = c[i] // d
        elif c[i]:
            return None
    return [sum(V[i][k] * y[k] for k in range(n)) for i in range(n)]


def integer_kernel_basis(mat):
    """Basis of the integer kernel lattice ``{x : mat @ x = 0}``.

    The columns of ``V`` past the rank form a lattice basis because ``V``
    is unimodular.
    """
    _, D, V = smith_normal_form(mat)
    m = len(D)
    n = len(D[0]) if m else 0
    rank = sum(1 for i in range(min(m, n)) if D[i][i])
    return [[V[i][j] for i in range(n)] for j in range(rank, n)]


def lattice_membership(gens, target):
    """Is ``target`` an integer combination of the vectors in ``gens``?"""
    target = [int(v) for v in target]
    if not gens:
        return all(v == 0 for v in target)
    mat = [[int(g[i]) for g in gens] for i in range(len(gens[0]))]
    return solve_integer(mat, target) is not None


class QuotientReduction:
    """Structure of ``Z^nrows / span(columns)`` for sparse integer columns.

    Parameters
    ----------
    nrows : int
        Ambient rank.
    columns : iterable of dict
        Each column maps row index -> nonzero integer coefficient.
    track_left : bool
        Track accumulated row operations.  Required to evaluate quotient
        coordinates of vectors; switch off for rank-only queries.

    Attributes
    ----------
    rank : int
        Rank of the column span.
    invariant_factors : list[int]
        Nontrivial (>1) invariant factors in divisibility order.
    free_functionals : list[dict]
        Sparse integer functionals (row -> coeff) whose values on a vector
        are its coordinates in the free part of the quotient.  ``None``
        when ``track_left`` is off.
    torsion_functionals : list[(dict, int)]
        Functionals to be read modulo their modulus.

    The reduction cascades over +-1 pivots (columns of minimal fill first,
    deterministic tie-break by index) and finishes any residual core with
    the dense Smith form.  For boundary matrices of the complexes used in
    this package the core is empty.
    """

    def __init__(self, nrows, columns, track_left=True):
        self.nrows = int(nrows)
        self.track_left = bool(track_left)
        cols = {}
        for cid, ent in enumerate(columns):
            ent = {int(r): int(v) for r, v in ent.items() if v}
            for r in ent:
                if not (0 <= r < self.nrows):
                    raise ValueError("row index out of range")
            if ent:
                cols[cid] = ent
        self._reduce(cols)

    def _reduce(self, cols):
        row_cols = {}
        for cid, ent in cols.items():
            for r in ent:
                row_cols.setdefault(r, set()).add(cid)
        left = {}

        def lrow(r):
            d = left.get(r)
            if d is None:
                d = {r: 1}
                left[r] = d
            return d

        pivoted = set()
        unit_pivots = 0
        pending = set(cols)
        while pending:
            heap = [(len(cols[c]), c) for c in pending if c in cols]
            heapq.heapify(heap)
            pending = set()
            progress = False
            while heap:
                nnz, cid = heapq.heappop(heap)
                ent = cols.get(cid)
                if ent is None:
                    continue
                if len(ent) != nnz:
                    heapq.heappush(heap, (len(ent), cid))
                    continue
                best = None
                for r, v in ent.items():
                    if v == 1 or v == -1:
                        key = (len(row_cols[r]), r)
                        if best is None or key < best[0]:
                            best = (key, r, v)
                if best is None:
                    pending.add(cid)
                    continue
                _, pr, pv = best
                others = [(r, v) for r, v in ent.items() if r != pr]
                pr_cols = row_cols[pr]
                lp = lrow(pr) if self.track_left else None
                for ri, vi in others:
                    q = vi * pv  # equals vi / pv for pv = +-1
                    for j in list(pr_cols):
                        if j == cid:
                            continue
                        cj = cols.get(j)
                        if cj is None:
                            continue
                        val = cj.get(pr)
                        if val is None:
                            continue
                        cur = cj.get(ri, 0) - q * val
                        if cur:
                            cj[ri] = cur
                            row_cols[ri].add(j)
                        else:
                            if ri in cj:
                                del cj[ri]
                                row_cols[ri].discard(j)
                    if self.track_left:
                        li = lrow(ri)
                        for k, v2 in lp.items():
                            cur = li.get(k, 0) - q * v2
                            if cur:
                                li[k] = cur
                            else:
                                del li[k]
                # pivot column now has the single entry pr; clearing the
                # pivot row via column operations just deletes it elsewhere
                for j in list(pr_cols):
                    if j == cid:
                        continue
                    cj = cols.get(j)
                    if cj is not None and pr in cj:
                        del cj[pr]
                        if cj:
                            heapq.heappush(heap, (len(cj), j))
                        else:
                            del cols[j]
                            pending.discard(j)
                del cols[cid]
                del row_cols[pr]
                left.pop(pr, None)
                pivoted.add(pr)
                unit_pivots += 1
                progress = True
            if not progress:
                break

        self.rank = unit_pivots
        core_torsion = []
        core_free_rows = []
        if cols:
            # residual core without unit entries: dense Smith form
            core_rows = sorted({r for ent in cols.values() for r in ent})
            if self.track_left:
                core_mat = [[0] * len(cols) for _ in core_rows]
                pos = {r: i for i, r in enumerate(core_rows)}
                for j, cid in enumerate(sorted(cols)):
                    for r, v in cols[cid].items():
                        core_mat[pos[r]][j] = v
                Uc, Dc, _ = smith_normal_form(core_mat)
                k = len(core_rows)
                ncols = len(cols)
                combo = []
                for i in range(k):
                    f = {}
                    for j in range(k):
                        c = Uc[i][j]
                        if c:
                            for rk, rv in lrow(core_rows[j]).items():
                                cur = f.get(rk, 0) + c * rv
                                if cur:
                                    f[rk] = cur
                                else:
                                    del f[rk]
                    combo.append(f)
                for i in range(k):
                    d = Dc[i][i] if i < min(k, ncols) else 0
                    if d == 0:
                        core_free_rows.append(combo[i])
                    else:
                        self.rank += 1
                        if abs(d) > 1:
                            core_torsion.append((combo[i], abs(d)))
                for r in core_rows:
                    pivoted.add(r)
            else:
                core_mat = [[0] * len(cols) for _ in core_rows]
                pos = {r: i for i, r in enumerate(core_rows)}
                for j, cid in enumerate(sorted(cols)):
                    for r, v in cols[cid].items():
                        core_mat[pos[r]][j] = v
                diag = snf_diagonal(core_mat)
                self.rank += len(diag)
                core_torsion = [(None, d) for d in diag if d > 1]
                for r in core_rows:
                    pivoted.add(r)

        self.invariant_factors = [d for _, d in core_torsion]
        self.torsion_functionals = [
            (f, d) for f, d in core_torsion if f is not None]
        if self.track_left:
            free = []
            for r in range(self.nrows):
                if r not in pivoted:
                    free.append(left.get(r, {r: 1}))
            free.extend(core_free_rows)
            self.free_functionals = free
        else:
            self.free_functionals = None

    # -- queries -----------------------------------------------------------

    @property
    def free_rank(self):
        return self.nrows - self.rank

    def free_coordinates(self, vec):
        """Free-part quotient coordinates of a sparse vector (row -> int)."""
        if self.free_functionals is None:
            raise ValueError("reduction was built without left tracking")
        out = []
        for f in self.free_functionals:
            s = 0
            if len(f) < len(vec):
                for r, c in f.items():
                    v = vec.get(r)
                    if v:
                        s += c * v
            else:
                for r, v in vec.items():
                    c = f.get(r)
                    if c:
                        s += c * v
            out.append(s)
        return out

    def torsion_residues(self, vec):
        out = []
        for f, d in self.torsion_functionals:
            s = 0
            for r, v in vec.items():
                c = f.get(r)
                if c:
                    s += c * v
            out.append(s % d)
        return out

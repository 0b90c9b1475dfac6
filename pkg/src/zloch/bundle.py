"""Lattice U(1) line bundles: link phases, curvature, flux and test sections.

A bundle is stored as one phase in ``(-pi, pi]`` per positively oriented
link (reversal is antisymmetric by definition, so only the three forward
arrays are kept).  Two plaquette quantities matter:

* the *plain* angle sum, which telescopes to exactly zero over any closed
  surface and over every 3-cube boundary -- the bookkeeping identity; and
* the *curvature*, the same sum wrapped back into ``(-pi, pi]``.  Its
  layer sums are ``2 pi x integer`` for genuine bundle data, which is what
  :func:`chern_coordinates` measures, and its cube sums vanish exactly
  for monopole-free data.

Sections are one complex value per vertex in the bundle's fixed gauge.
Ground-truth vortex sections are built from tanh radial profiles with a
phase field obtained by an exact discrete solve, so their vortex content
is prescribed, auditable and rejected (never absorbed) on flux mismatch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsqr

from .errors import (FluxMismatchError, InputError, NonIntegralFluxError,
                     UndersampledError, ZeroSampleError)
from .homology import SPAN, CubicalTorus

TWO_PI = 2.0 * np.pi
DEFAULT_STEP_TOL = 1e-3
FLUX_RESIDUAL_TOL = 1e-6
ZERO_SAMPLE_THRESHOLD = 1e-8


def wrap_angle(x):
    """Wrap radians into ``(-pi, pi]``."""
    return -((np.pi - np.asarray(x)) % TWO_PI) + np.pi


def _roll_minus(arr, axis):
    return np.roll(arr, -1, axis=axis)


@dataclass(frozen=True)
class U1Bundle:
    """Link phases of a U(1) connection on a cubical torus.

    ``link_phases[d, x, y, z]`` is the phase of the link leaving vertex
    ``(x, y, z)`` in direction ``d``; the reversed link carries the
    negated phase by convention.
    """

    manifold: CubicalTorus
    link_phases: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.link_phases, dtype=float)
        if arr.shape != (3,) + self.manifold.dims:
            raise InputError(
                f"link phase array must have shape {(3,) + self.manifold.dims}")
        arr = wrap_angle(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "link_phases", arr)

    def plaquette_angle_sum(self):
        """Plain oriented sum of the four link phases per plaquette."""
        th = self.link_phases
        out = np.empty_like(th)
        for c in range(3):
            a, b = SPAN[c]
            out[c] = th[a] + _roll_minus(th[b], a) - _roll_minus(th[a], b) - th[b]
        return out

    def curvature(self):
        """Wrapped plaquette sums in ``(-pi, pi]``."""
        return wrap_angle(self.plaquette_angle_sum())

    def link_phase(self, d, v):
        return float(self.link_phases[(d,) + tuple(
            q % n for q, n in zip(v, self.manifold.dims))])


def constant_flux_bundle(manifold, k):
    """Bundle with first Chern coordinates ``k`` and uniform curvature.

    One Landau-style twist seam per direction: for flux ``k_c`` through the
    tori normal to ``c`` with spanning pair ``(a, b)``, the ``b`` links
    grow linearly in ``x_a`` and the seam layer ``x_a = N_a - 1`` of ``a``
    links carries the compensating twist.  Requires
    ``N_a * N_b > 2 |k_c|`` so each plaquette holds less than ``pi`` flux.
    """
    if not isinstance(manifold, CubicalTorus):
        raise InputError("bundles require a cubical torus manifold")
    k = tuple(int(v) for v in k)
    if len(k) != 3:
        raise InputError("flux vector must have three components")
    dims = manifold.dims
    theta = np.zeros((3,) + dims)
    coords = np.indices(dims)
    for c in range(3):
        if k[c] == 0:
            continue
        a, b = SPAN[c]
        na, nb = dims[a], dims[b]
        if na * nb <= 2 * abs(k[c]):
            raise InputError(
                f"undersampled bundle: direction {c} needs N_a*N_b > "
                f"2|k_c| = {2 * abs(k[c])}, got {na * nb}")
        theta[b] += TWO_PI * k[c] * coords[a] / (na * nb)
        seam = coords[a] == na - 1
        theta[a] += np.where(seam, -TWO_PI * k[c] * coords[b] / nb, 0.0)
    return U1Bundle(manifold, theta)


def chern_coordinates(bundle, residual_tol=FLUX_RESIDUAL_TOL):
    """First Chern coordinates from curvature sums over coordinate tori.

    Sums the wrapped plaquette curvature over the ``x_c = 0`` layer of each
    normal direction and divides by ``2 pi``; the result must be within
    ``residual_tol`` of an integer, otherwise the bundle data is corrupt.
    """
    curv = bundle.curvature()
    out = []
    for c in range(3):
        flux = float(np.take(curv[c], 0, axis=c).sum()) / TWO_PI
        k = int(round(flux))
        if abs(flux - k) > residual_tol:
            raise NonIntegralFluxError(
                f"non-integral flux through direction-{c} torus: "
                f"{flux:.9f} (residual {abs(flux - k):.3e})")
        out.append(k)
    return tuple(out)


@dataclass(frozen=True)
class SampledSection:
    """One complex sample per vertex, in the bundle's fixed gauge."""

    manifold: CubicalTorus
    values: np.ndarray
    charge: int = 1

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex)
        if arr.shape != self.manifold.dims:
            raise InputError(
                f"section value array must have shape {self.manifold.dims}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "charge", int(self.charge))

    def value(self, v):
        return complex(self.values[tuple(
            q % n for q, n in zip(v, self.manifold.dims))])


def _check_nonzero(section, threshold=ZERO_SAMPLE_THRESHOLD):
    mag = np.abs(section.values)
    if np.any(mag < threshold):
        where = np.argwhere(mag < threshold)[0]
        raise ZeroSampleError(
            f"zero sample at vertex {tuple(int(q) for q in where)}")


def covariant_deltas(section, bundle, step_tol=DEFAULT_STEP_TOL):
    """Wrapped covariant phase increments on all links, shape (3, dims).

    Raises :class:`ZeroSampleError` on vanishing samples and
    :class:`UndersampledError` when any increment comes within
    ``step_tol`` of ``+-pi`` (winding counts are meaningless past that).
    """
    if section.manifold != bundle.manifold:
        raise InputError("section and bundle live on different manifolds")
    _check_nonzero(section)
    arg = np.angle(section.values)
    q = section.charge
    out = np.empty_like(bundle.link_phases)
    for d in range(3):
        out[d] = wrap_angle(_roll_minus(arg, d) - arg - q * bundle.link_phases[d])
    bad = np.abs(out) >= np.pi - step_tol
    if np.any(bad):
        d, x, y, z = (int(v) for v in np.argwhere(bad)[0])
        raise UndersampledError(
            f"undersampled section: covariant step on link "
            f"(dir {d}, vertex ({x}, {y}, {z})) is {out[d, x, y, z]:+.6f} rad")
    return out


def covariant_link_delta(section, bundle, link, step_tol=DEFAULT_STEP_TOL):
    """Covariant phase increment across one link ``(d, (x, y, z))``."""
    d, v = link
    if d not in (0, 1, 2):
        raise InputError("link direction must be 0, 1 or 2")
    v = tuple(int(q) % n for q, n in zip(v, bundle.manifold.dims))
    s_tail = section.value(v)
    s_head = section.value(bundle.manifold.shift(v, d))
    if abs(s_tail) < ZERO_SAMPLE_THRESHOLD or abs(s_head) < ZERO_SAMPLE_THRESHOLD:
        raise ZeroSampleError(f"zero sample at an endpoint of link {link}")
    delta = float(wrap_angle(
        np.angle(s_head) - np.angle(s_tail)
        - section.charge * bundle.link_phase(d, v)))
    if abs(delta) >= np.pi - step_tol:
        raise UndersampledError(
            f"undersampled section: covariant step on link {link} "
            f"is {delta:+.6f} rad")
    return delta


# ---------------------------------------------------------------------------
# gauge transformations


def gauge_transform(bundle, section, phases):
    """Apply a vertex gauge transformation jointly to bundle and section.

    ``phases`` is a real array over vertices; links pick up the phase
    difference, samples rotate by ``charge x phase``.  Every covariant
    quantity is unchanged.
    """
    phi = np.asarray(phases, dtype=float)
    if phi.shape != bundle.manifold.dims:
        raise InputError("gauge phase array must cover the vertices")
    theta = np.array(bundle.link_phases)
    for d in range(3):
        theta[d] = theta[d] + _roll_minus(phi, d) - phi
    new_bundle = U1Bundle(bundle.manifold, theta)
    new_section = None
    if section is not None:
        new_section = SampledSection(
            section.manifold,
            section.values * np.exp(1j * section.charge * phi),
            section.charge)
    return new_bundle, new_section


# ---------------------------------------------------------------------------
# prescribed-vortex sections


@lru_cache(maxsize=32)
def _unit_line_increments(dims, c):
    """Covariant increments of one +1 vortex line in direction ``c``.

    Solves the discrete consistency system on the transverse 2-torus:
    plaquette winding ``2 pi`` at the canonical transverse corner (0, 0)
    and the uniform compensation ``-2 pi / (N_a N_b)`` everywhere, then
    broadcasts along ``c``.  The minimum-norm solution is deterministic.
    """
    a, b = SPAN[c]
    na, nb = dims[a], dims[b]
    nl = na * nb

    def ia(x, y):
        return (x % na) * nb + (y % nb)

    rows, cols, vals = [], [], []
    for x in range(na):
        for y in range(nb):
            p = x * nb + y
            for j, s in ((ia(x, y), 1), (nl + ia(x + 1, y), 1),
                         (ia(x, y + 1), -1), (nl + ia(x, y), -1)):
                rows.append(p)
                cols.append(j)
                vals.append(s)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(nl, 2 * nl))
    target = np.full(nl, -TWO_PI / nl)
    target[0] += TWO_PI
    sol = lsqr(mat, target, atol=1e-14, btol=1e-14, iter_lim=50000)[0]
    resid = np.max(np.abs(mat @ sol - target))
    if resid > 1e-9:
        raise AssertionError(f"unit line solve did not converge ({resid:.2e})")
    inc_a = sol[:nl].reshape(na, nb)
    inc_b = sol[nl:].reshape(na, nb)

    out = np.zeros((3,) + dims)
    shape_a = [1, 1, 1]
    shape_a[a], shape_a[b] = na, nb
    out[a] = inc_a.reshape(shape_a)
    out[b] = inc_b.reshape(shape_a)
    return out


def _line_field(manifold, direction, transverse, multiplicity):
    """Increment field of a weight-``multiplicity`` line at ``transverse``."""
    base = _unit_line_increments(manifold.dims, direction)
    a, b = SPAN[direction]
    shift = [0, 0, 0]
    shift[a], shift[b] = transverse
    return multiplicity * np.roll(base, shift, axis=(1, 2, 3))


def _integrate_phases(total, dims):
    """Vertex phases whose tree increments reproduce ``total`` exactly.

    Integrates along the comb spanning tree (z spine at the origin column,
    then y rows in the x = 0 plane, then x rows everywhere).
    """
    alpha = np.zeros(dims)
    alpha[0, 0, 1:] = np.cumsum(total[2][0, 0, :-1])
    alpha[0, 1:, :] = alpha[0, 0, :][None, :] + np.cumsum(
        total[1][0, :-1, :], axis=0)
    alpha[1:, :, :] = alpha[0][None, :, :] + np.cumsum(
        total[0][:-1, :, :], axis=0)
    return alpha


def _holonomy_fix(increments, bundle, charge=1):
    """Shift increments by a harmonic field so all loop holonomies vanish.

    Loop sums of ``increments + charge * theta`` along the three axis
    directions must be multiples of ``2 pi`` for vertex phases to exist;
    parallel loops already agree modulo ``2 pi`` because plaquette windings
    are integral, so one uniform shift per direction suffices.
    """
    out = np.array(increments)
    for d in range(3):
        hol = (out[d] + charge * bundle.link_phases[d]).sum(axis=d)
        err = float(np.angle(np.mean(np.exp(1j * hol))))  # circular mean
        out[d] -= err / bundle.manifold.dims[d]
    return out


def _nearest_image(delta, n):
    return (np.asarray(delta) + n / 2.0) % n - n / 2.0


def _section_from_increments(bundle, increments, magnitude, charge=1):
    total = increments + charge * bundle.link_phases
    alpha = _integrate_phases(total, bundle.manifold.dims)
    return SampledSection(bundle.manifold,
                          magnitude * np.exp(1j * alpha), charge)


def vortex_section(bundle, seeds, profile_scale=1.0,
                   step_tol=DEFAULT_STEP_TOL):
    """Section whose vortex content is exactly the prescribed seeds.

    ``seeds`` is a list of ``((x, y), multiplicity)``: each entry places a
    vertical (direction-2) vortex line of the given integer multiplicity
    through the plaquette column at corner ``(x, y)``.  Magnitudes are
    products of ``tanh(distance / profile_scale)`` single-vortex profiles;
    the phase field comes from an exact discrete solve so that the
    extracted chain is the seed configuration, with residual flux
    mismatch rejected rather than absorbed.

    Multiplicities are limited to ``|m| <= 2``: a weight-3 line cannot be
    carried by four links each strictly below the ``pi`` sampling bound.
    Seeds must be pairwise at least 3 lattice units apart (torus metric).
    """
    manifold = bundle.manifold
    dims = manifold.dims
    seeds = [((int(p[0]) % dims[0], int(p[1]) % dims[1]), int(m))
             for p, m in seeds]
    for i in range(len(seeds)):
        for j in range(i + 1, len(seeds)):
            (x1, y1), (x2, y2) = seeds[i][0], seeds[j][0]
            dx = min(abs(x1 - x2), dims[0] - abs(x1 - x2))
            dy = min(abs(y1 - y2), dims[1] - abs(y1 - y2))
            if max(dx, dy) < 3:
                raise InputError(
                    f"seeds {seeds[i][0]} and {seeds[j][0]} closer than 3")
    for _, m in seeds:
        if m == 0 or abs(m) > 2:
            raise InputError("seed multiplicities must be +-1 or +-2")

    k = chern_coordinates(bundle)
    total_m = sum(m for _, m in seeds)
    if k[0] != 0 or k[1] != 0 or total_m != k[2]:
        raise FluxMismatchError(
            f"seed multiplicities sum to (0, 0, {total_m}) but the bundle "
            f"flux is {k}; mismatch rejected")

    increments = np.zeros((3,) + dims)
    for (x, y), m in seeds:
        increments += _line_field(manifold, 2, (x, y), m)
    increments = _holonomy_fix(increments, bundle)
    # uniform shifts cancel around plaquette loops, so equalizing after the
    # holonomy fix pins weight-2 cores at exactly one quarter of their
    # winding, the only split that clears the sampling bound
    for (x, y), m in seeds:
        if abs(m) == 2:
            _equalize_core(increments, bundle, (x, y))

    # tanh profile magnitudes around each seed line
    xs, ys = np.indices(dims[:2]).astype(float)
    mag2d = np.ones(dims[:2])
    for (x, y), _ in seeds:
        dx = _nearest_image(xs - (x + 0.5), dims[0])
        dy = _nearest_image(ys - (y + 0.5), dims[1])
        mag2d *= np.tanh(np.hypot(dx, dy) / profile_scale)
    magnitude = np.repeat(mag2d[:, :, None], dims[2], axis=2)

    section = _section_from_increments(bundle, increments, magnitude)
    covariant_deltas(section, bundle, step_tol=step_tol)  # validity gate
    return section


def _equalize_core(increments, bundle, corner):
    """Equalize the four links around a weight-2 seed plaquette.

    The plaquette winding pins their sum near ``4 pi``; splitting it
    exactly evenly keeps every link below the sampling bound.  The
    correction is a vertex-potential coboundary supported on the four
    corners, so no plaquette winding and no loop holonomy changes.
    """
    x, y = corner
    dims = bundle.manifold.dims
    x1, y1 = (x + 1) % dims[0], (y + 1) % dims[1]
    # plaquette loop links in boundary order: +x at (x,y), +y at (x1,y),
    # -x at (x,y1), -y at (x,y); the field is z-independent, use z = 0
    loop = [(0, (x, y), 1), (1, (x1, y), 1), (0, (x, y1), -1), (1, (x, y), -1)]
    cur = np.array([s * increments[d][v[0], v[1], 0] for d, v, s in loop])
    corr = cur.mean() - cur  # oriented corrections, sum zero
    pots = {(x, y): 0.0,
            (x1, y): corr[0],
            (x1, y1): corr[0] + corr[1],
            (x, y1): corr[0] + corr[1] + corr[2]}
    gauge = np.zeros(dims[:2])
    for (px, py), val in pots.items():
        gauge[px, py] = val
    increments[0] += (np.roll(gauge, -1, axis=0) - gauge)[:, :, None]
    increments[1] += (np.roll(gauge, -1, axis=1) - gauge)[:, :, None]


def random_valid_section(bundle, seed, max_attempts=64,
                         step_tol=DEFAULT_STEP_TOL):
    """Seeded random valid section of a constant-flux bundle.

    Draws random unit vortex lines realizing the bundle flux (one line per
    unit, random pairwise-separated transverse positions, lines in all
    three directions as needed), then perturbs with a smooth random phase
    and a smooth positive magnitude.  Sections are rejected and redrawn
    until every covariant step clears the sampling bound, so the result is
    always valid; the draw is deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    manifold = bundle.manifold
    dims = manifold.dims
    k = chern_coordinates(bundle)

    for _ in range(max_attempts):
        increments = np.zeros((3,) + dims)
        ok = True
        for c in range(3):
            if k[c] == 0:
                continue
            a, b = SPAN[c]
            placed = []
            tries = 0
            while len(placed) < abs(k[c]) and tries < 200:
                tries += 1
                pos = (int(rng.integers(dims[a])), int(rng.integers(dims[b])))
                if all(max(min(abs(pos[0] - p[0]), dims[a] - abs(pos[0] - p[0])),
                           min(abs(pos[1] - p[1]), dims[b] - abs(pos[1] - p[1])))
                       >= 3 for p in placed):
                    placed.append(pos)
            if len(placed) < abs(k[c]):
                ok = False
                break
            for pos in placed:
                increments += _line_field(manifold, c, pos,
                                          1 if k[c] > 0 else -1)
        if not ok:
            continue
        increments = _holonomy_fix(increments, bundle)

        # smooth random phase: a few low-frequency modes, bounded gradient
        coords = np.indices(dims).astype(float)
        phase = np.zeros(dims)
        for _ in range(3):
            m = rng.integers(1, 3, size=3)
            amp = rng.uniform(0.05, 0.12)
            off = rng.uniform(0, TWO_PI)
            wave = sum(TWO_PI * m[i] * coords[i] / dims[i] for i in range(3))
            phase += amp * np.cos(wave + off)
        mag = np.ones(dims)
        for _ in range(2):
            m = rng.integers(1, 3, size=3)
            amp = rng.uniform(0.05, 0.2)
            off = rng.uniform(0, TWO_PI)
            wave = sum(TWO_PI * m[i] * coords[i] / dims[i] for i in range(3))
            mag += amp * np.cos(wave + off)
        mag = np.clip(mag, 0.4, None)

        section = _section_from_increments(bundle, increments, mag)
        section = SampledSection(
            manifold, section.values * np.exp(1j * phase), section.charge)
        try:
            covariant_deltas(section, bundle, step_tol=step_tol)
        except UndersampledError:
            continue
        return section
    raise InputError(
        "could not draw a valid random section; flux too dense for the lattice")


# ---------------------------------------------------------------------------
# JSON formats


def bundle_to_json(bundle):
    """bundle.json schema: dims plus per-direction flat phase arrays.

    Arrays are flattened in row-major (z, y, x) order.
    """
    dims = bundle.manifold.dims
    out = {"dims": list(dims), "link_phases": {}}
    for name, d in (("x", 0), ("y", 1), ("z", 2)):
        out["link_phases"][name] = [
            float(v) for v in bundle.link_phases[d].transpose(2, 1, 0).ravel()]
    return out


def bundle_from_json(data):
    if isinstance(data, str):
        data = json.loads(data)
    try:
        dims = tuple(int(n) for n in data["dims"])
        phases = data["link_phases"]
        names = ("x", "y", "z")
        arrays = [np.asarray(phases[n], dtype=float) for n in names]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed bundle.json: {exc}") from exc
    manifold = CubicalTorus(dims)
    n = dims[0] * dims[1] * dims[2]
    theta = np.empty((3,) + dims)
    for d, arr in enumerate(arrays):
        if arr.shape != (n,):
            raise InputError(
                f"link_phases[{names[d]!r}] must hold {n} values")
        theta[d] = arr.reshape(dims[2], dims[1], dims[0]).transpose(2, 1, 0)
    return U1Bundle(manifold, theta)


def section_to_json(section):
    """section.json schema: dims plus [re, im] pairs in (z, y, x) order."""
    vals = section.values.transpose(2, 1, 0).ravel()
    return {"dims": list(section.manifold.dims),
            "charge": section.charge,
            "values": [[float(v.real), float(v.imag)] for v in vals]}


def section_from_json(data):
    if isinstance(data, str):
        data = json.loads(data)
    try:
        dims = tuple(int(n) for n in data["dims"])
        charge = int(data.get("charge", 1))
        pairs = np.asarray(data["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed section.json: {exc}") from exc
    n = dims[0] * dims[1] * dims[2]
    if pairs.shape != (n, 2):
        raise InputError(f"values must hold {n} [re, im] pairs")
    vals = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(
        dims[2], dims[1], dims[0]).transpose(2, 1, 0)
    return SampledSection(CubicalTorus(dims), vals, charge)

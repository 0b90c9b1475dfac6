"""Moment-map algebra, quaternionic structure and Grassmannian frames.

Conventions fixed once for the whole package (several are free choices
and everything downstream depends on picking one consistently):

* Hermitian inner products are conjugate-linear in the first slot.
* The quaternionic structure is ``J(z1, z2) = (-conj(z2), conj(z1))``,
  so ``J^2 = -id`` and ``v`` is always orthogonal to ``J v``.
* Pauli matrices are the standard ones; the flat Dirac operator is
  ``sigma_1 d_1 + sigma_2 d_2 + sigma_3 d_3``.
* Grassmannian points are represented by orthonormal frames; frames are
  only ever compared through principal angles, never entrywise, and
  first-Chern numbers of pulled-back determinant bundles use the
  overlap-determinant plaquette method (integer-exact at coarse mesh).
  The sign convention is the tautological one: the degree-one sphere
  into the line Grassmannian gives -1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (FrameOverlapError, InputError,
                     InternalConsistencyError, NotSurjectiveError)

TWO_PI = 2.0 * np.pi

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

MU_TOL = 1e-10
FRAME_ORTHO_TOL = 1e-10


def mu(B):
    """Moment map ``B B* - (|B|^2 / 2) Id`` on 2 x n matrices.

    Accepts stacked input ``(..., 2, n)``; the output is Hermitian and
    traceless (a value in ``i su(2)``) up to roundoff.
    """
    B = np.asarray(B, dtype=complex)
    if B.shape[-2] != 2:
        raise InputError("expected a 2 x n matrix (or a stack of them)")
    bb = B @ np.conj(np.swapaxes(B, -1, -2))
    norm2 = np.einsum("...ij,...ij->...", B, np.conj(B)).real
    eye = np.eye(2)
    return bb - 0.5 * norm2[..., None, None] * eye


def is_mu_null(B, tol=MU_TOL):
    """Does ``B B* = (|B|^2 / 2) Id`` hold within ``tol``?

    Equivalent (and tested as a property) to the two rows of ``B`` being
    orthogonal with equal norm.
    """
    val = mu(B)
    return bool(np.max(np.abs(val)) <= tol)


def quaternionic_J(v):
    """Antilinear map ``(z1, z2) -> (-conj(z2), conj(z1))``; ``J^2 = -id``."""
    v = np.asarray(v, dtype=complex)
    if v.shape[-1] != 2:
        raise InputError("spinor values live in C^2")
    out = np.empty_like(v)
    out[..., 0] = -np.conj(v[..., 1])
    out[..., 1] = np.conj(v[..., 0])
    return out


def pair_tuple(psis):
    """Stack spinors with their J-partners: columns ``psi_1, J psi_1, ...``.

    Input: sequence of arrays of shape ``(..., 2)``.  Output shape
    ``(..., 2, 2n)``.  Every value of the result lies in the moment-map
    zero set, and ``|result|^2 = 2 sum |psi_j|^2`` pointwise.
    """
    psis = [np.asarray(p, dtype=complex) for p in psis]
    if not psis:
        raise InputError("need at least one spinor")
    cols = []
    for p in psis:
        if p.shape[-1] != 2:
            raise InputError("spinor values live in C^2")
        cols.append(p)
        cols.append(quaternionic_J(p))
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# Grassmannian frames


def kernel_frame(B, tol=1e-9):
    """Orthonormal frame of ``ker B`` for a surjective 2 x n matrix.

    The frame is an ``n x (n - 2)`` matrix with orthonormal columns,
    canonicalized deterministically: pivoted Gram-Schmidt on the kernel
    projector columns (largest remaining norm first, ties by index) with
    each column's largest entry rotated to be real positive.  The
    underlying subspace is basis-independent; compare frames through
    principal angles only.
    """
    B = np.asarray(B, dtype=complex)
    if B.ndim != 2 or B.shape[0] != 2:
        raise InputError("expected a single 2 x n matrix")
    n = B.shape[1]
    sv = np.linalg.svd(B, compute_uv=False)
    if sv.size < 2 or sv[1] <= tol:
        raise NotSurjectiveError(
            f"matrix is not surjective: singular values {sv}")
    proj = np.eye(n, dtype=complex) - np.linalg.pinv(B) @ B
    frame = np.empty((n, n - 2), dtype=complex)
    cols = proj.copy()
    for k in range(n - 2):
        norms = np.linalg.norm(cols, axis=0)
        pick = int(np.argmax(norms > np.max(norms) - 1e-12))
        v = cols[:, pick] / norms[pick]
        lead = int(np.argmax(np.abs(v) > np.max(np.abs(v)) - 1e-12))
        phase = v[lead] / abs(v[lead])
        v = v / phase
        frame[:, k] = v
        cols = cols - np.outer(v, np.conj(v) @ cols)
    gram = np.conj(frame.T) @ frame
    if np.max(np.abs(gram - np.eye(n - 2))) > FRAME_ORTHO_TOL:
        raise InternalConsistencyError("kernel frame lost orthonormality")
    return frame


def principal_angles(F, G):
    """Principal angles between the column spans of two frames."""
    F = np.asarray(F, dtype=complex)
    G = np.asarray(G, dtype=complex)
    if F.shape != G.shape:
        raise InputError("frames must have equal shapes")
    if F.shape[1] == 0:
        return np.zeros(0)
    s = np.linalg.svd(np.conj(F.T) @ G, compute_uv=False)
    return np.arccos(np.clip(s, 0.0, 1.0))


def grassmann_distance(F, G):
    """Largest principal angle (0 for equal subspaces)."""
    ang = principal_angles(F, G)
    return float(ang.max()) if ang.size else 0.0


def pullback_detS_chern(frames, periodic=(True, True), det_tol=1e-12,
                        residual_tol=1e-6):
    """First Chern number of the pulled-back determinant line of the
    tautological bundle, by overlap-determinant plaquette sums.

    ``frames`` has shape ``(P, Q, n, k)``: one orthonormal frame per
    surface vertex.  Per plaquette the phase of the product of the four
    overlap determinants ``det(F_i* F_j)`` is wrapped and summed; the
    total divided by ``2 pi`` must be an integer.  Non-periodic directions
    contribute ``P - 1`` plaquette rows (use constant pole rows for
    sphere parametrizations).  ``k = 0`` frames give 0.
    """
    frames = np.asarray(frames, dtype=complex)
    if frames.ndim != 4:
        raise InputError("frames field must have shape (P, Q, n, k)")
    P, Q, n, k = frames.shape
    if k == 0:
        return 0
    pu, pv = periodic
    iu = P if pu else P - 1
    iv = Q if pv else Q - 1

    f00 = frames[:iu, :iv]
    f10 = np.roll(frames, -1, axis=0)[:iu, :iv]
    f11 = np.roll(np.roll(frames, -1, axis=0), -1, axis=1)[:iu, :iv]
    f01 = np.roll(frames, -1, axis=1)[:iu, :iv]

    def overlaps(a, b):
        return np.linalg.det(np.conj(np.swapaxes(a, -1, -2)) @ b)

    prod = (overlaps(f00, f10) * overlaps(f10, f11)
            * overlaps(f11, f01) * overlaps(f01, f00))
    if np.min(np.abs(prod)) <= det_tol:
        where = np.unravel_index(int(np.argmin(np.abs(prod))), prod.shape)
        raise FrameOverlapError(
            f"frame field too rough: vanishing overlap determinant at "
            f"plaquette {tuple(int(q) for q in where)}")
    total = float(np.angle(prod).sum()) / TWO_PI
    c1 = int(round(total))
    if abs(total - c1) > residual_tol:
        raise FrameOverlapError(
            f"frame field too rough: plaquette sum {total:.9f} is not an "
            f"integer (residual {abs(total - c1):.3e})")
    return c1


def obstruction_a(degrees):
    """Sum of squared boundary degrees; nonzero blocks lifting."""
    return sum(int(a) ** 2 for a in degrees)


# ---------------------------------------------------------------------------
# flat-chart model spinors


@dataclass(frozen=True)
class ModelSpinorField:
    """The field ``((x1 + i x2)^N, 0)`` with analytic derivatives."""

    exponent: int

    def __post_init__(self):
        if self.exponent < 1:
            raise InputError("exponent must be a positive integer")

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        w = pts[..., 0] + 1j * pts[..., 1]
        out = np.zeros(pts.shape[:-1] + (2,), dtype=complex)
        out[..., 0] = w ** self.exponent
        return out

    def partials(self, points):
        """Exact partial derivatives (d1, d2, d3), each shape (..., 2)."""
        pts = np.asarray(points, dtype=float)
        w = pts[..., 0] + 1j * pts[..., 1]
        dw = self.exponent * w ** (self.exponent - 1)
        d1 = np.zeros(pts.shape[:-1] + (2,), dtype=complex)
        d2 = np.zeros_like(d1)
        d3 = np.zeros_like(d1)
        d1[..., 0] = dw
        d2[..., 0] = 1j * dw
        return d1, d2, d3


def model_harmonic_spinor(N):
    """Degree-``N`` model field in the kernel of the flat Dirac operator."""
    return ModelSpinorField(int(N))


def dirac_residual(field, points):
    """Max norm of ``sigma_1 d1 + sigma_2 d2 + sigma_3 d3`` at the points.

    Derivatives are analytic for model fields, so this is exactly zero
    for them (the two Pauli terms cancel entrywise in floating point).
    """
    d1, d2, d3 = field.partials(points)
    acc = (np.einsum("ij,...j->...i", PAULI[0], d1)
           + np.einsum("ij,...j->...i", PAULI[1], d2)
           + np.einsum("ij,...j->...i", PAULI[2], d3))
    return float(np.max(np.abs(acc))) if acc.size else 0.0


@dataclass(frozen=True)
class Phi0ExtensionResult:
    converged: bool
    limit_frame: np.ndarray
    distances: tuple  # max Grassmann distance per radius, largest first

    def __bool__(self):
        return self.converged


def phi0_extension_check(fields, radii=(1e-2, 1e-3, 1e-4), n_angles=12,
                         tol=1e-4):
    """Does the kernel-frame map extend across the axis of model spinors?

    Evaluates kernel frames of the paired tuple on shrinking circles
    around the third axis and measures the spread against the innermost
    frame.  Converged means the per-radius spread decreases and the final
    spread is below ``tol``; the innermost frame is returned as the limit.
    The first field must attain the minimal vanishing exponent (relabel
    otherwise).
    """
    fields = list(fields)
    if not fields:
        raise InputError("need at least one spinor field")
    exps = [f.exponent for f in fields]
    if exps[0] != min(exps):
        raise InputError(
            "first spinor must attain the minimal exponent; relabel")
    radii = tuple(sorted(float(r) for r in radii), )[::-1]
    if len(radii) < 2:
        raise InputError("need at least two radii")
    n = 2 * len(fields)
    if n == 2:
        # rank-0 Grassmannian: a single point, trivially continuous
        return Phi0ExtensionResult(True, np.zeros((2, 0), dtype=complex),
                                   tuple(0.0 for _ in radii))

    def frame_at(r, t):
        pt = np.array([r * np.cos(t), r * np.sin(t), 0.0])
        vals = [f(pt) for f in fields]
        return kernel_frame(pair_tuple(vals))

    ref = frame_at(radii[-1], 0.0)
    angles = np.linspace(0.0, TWO_PI, n_angles, endpoint=False)
    spreads = []
    for r in radii:
        worst = max(grassmann_distance(frame_at(r, t), ref) for t in angles)
        spreads.append(worst)
    decreasing = all(a >= b - tol for a, b in zip(spreads, spreads[1:]))
    converged = decreasing and spreads[-1] < tol
    return Phi0ExtensionResult(converged, ref, tuple(spreads))


# ---------------------------------------------------------------------------
# frames.json


def frames_to_json(frames):
    frames = np.asarray(frames, dtype=complex)
    P, Q, n, k = frames.shape
    flat = frames.reshape(P * Q, n * k)
    return {"surface_dims": [P, Q],
            "frame_shape": [n, k],
            "frames": [[[float(z.real), float(z.imag)] for z in row]
                       for row in flat]}


def frames_from_json(data):
    if isinstance(data, str):
        data = json.loads(data)
    try:
        P, Q = (int(v) for v in data["surface_dims"])
        n, k = (int(v) for v in data["frame_shape"])
        rows = data["frames"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed frames.json: {exc}") from exc
    if len(rows) != P * Q:
        raise InputError(f"expected {P * Q} frames")
    arr = np.asarray(rows, dtype=float)
    if arr.shape != (P * Q, n * k, 2):
        raise InputError("frame entries must be [re, im] pairs")
    return (arr[..., 0] + 1j * arr[..., 1]).reshape(P, Q, n, k)

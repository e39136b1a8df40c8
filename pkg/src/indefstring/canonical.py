"""Trace-normed canonical systems and their correspondence with strings.

A Hamiltonian here is a piecewise-constant, real, symmetric, positive
semidefinite 2x2 matrix function H on [0, inf) with unit trace per piece
(h22 = 1 - h11 is implied).  Strings map onto such Hamiltonians through the
travel-coordinate change of variables: with xi the generalized inverse of
sigma,

    H(s) = [[1 - xi'(s),  xi'(s) w(xi(s))],
            [xi'(s) w(xi(s)),  xi'(s)]],

which is exactly piecewise constant whenever w is piecewise constant, i.e.
for purely atomic omega; pieces where omega carries a density are resolved
by a recorded equal-travel-step mesh.  Blocked pieces ([[1, 0], [0, 0]])
appear exactly where sigma jumps (upsilon point masses) and beyond sigma(L).

The reverse direction reads the string off H piece by piece: position
x(s) = int_0^s h22, w = h12/h22, upsilon density det H / h22^2, finite
blocked pieces become upsilon point masses, and a trailing infinite blocked
piece ends the string at the current position.

The Weyl function of the system U' = -z Jt H U, Jt = [[0, 1], [-1, 0]], is
the limit of U11/U12; per constant piece the propagator is the exponential
of the trace-free generator -z*len*Jt*H, evaluated in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .coefficients import (
    MeasureData,
    StringSpec,
    _parse_extent,
    coefficient_view,
    validate_spec,
)
from .errors import (
    DegenerateHamiltonian,
    NonPositiveLength,
    NonRealRequired,
    TruncationNotConverged,
    UnsupportedShape,
    ValidationError,
)

_INF = math.inf
_DET_TOL = 1e-12
# Largest |z|*len*sqrt(det H) handled by a single exponential; longer pieces
# are split so cos/sin stay within floating range.
_MAX_PHASE = 200.0
_TAIL_DOUBLINGS = 200
_RENORM_AT = 1e100


@dataclass(frozen=True)
class HamiltonianPiece:
    """One constant piece: extent and the two free matrix entries."""

    length: float
    h11: float
    h12: float

    @property
    def h22(self) -> float:
        return 1.0 - self.h11

    @property
    def det(self) -> float:
        return self.h11 * self.h22 - self.h12 * self.h12

    def is_blocked(self) -> bool:
        """True for the rank-one piece [[1, 0], [0, 0]] (no travel in x)."""
        return self.h11 == 1.0 and self.h12 == 0.0


@dataclass(frozen=True)
class Hamiltonian:
    """Piecewise-constant trace-normed Hamiltonian covering [0, inf).

    ``mesh`` records the equal-travel-step resolution used when a string
    with omega densities was approximated; None means the pieces are exact.
    """

    pieces: tuple[HamiltonianPiece, ...]
    mesh: int | None = None


@dataclass(frozen=True)
class CanonicalSolution:
    """Matrix solution samples (s, U) with U(0) = I and det U = 1."""

    z: complex
    samples: tuple[tuple[float, np.ndarray], ...]


def _coerce_piece(raw) -> HamiltonianPiece:
    if isinstance(raw, HamiltonianPiece):
        return raw
    if isinstance(raw, Mapping):
        return HamiltonianPiece(
            length=_parse_extent(raw["len"]), h11=float(raw["h11"]), h12=float(raw["h12"])
        )
    length, h11, h12 = raw
    return HamiltonianPiece(length=_parse_extent(length), h11=float(h11), h12=float(h12))


def validate_hamiltonian(raw) -> Hamiltonian:
    """Normalize and validate Hamiltonian data.

    Accepts a :class:`Hamiltonian`, a mapping with a ``pieces`` list, or an
    iterable of ``(len, h11, h12)`` entries.  Pieces must have positive
    extent, unit trace (implied), h11 in [0, 1], det >= -1e-12, exactly one
    infinite piece at the end, and must not all be blocked; adjacent equal
    pieces are merged.
    """
    mesh = None
    if isinstance(raw, Hamiltonian):
        pieces_in: Iterable = raw.pieces
        mesh = raw.mesh
    elif isinstance(raw, Mapping):
        pieces_in = raw.get("pieces", ())
        mesh = raw.get("mesh")
    else:
        pieces_in = raw
    pieces = [_coerce_piece(p) for p in pieces_in]
    if not pieces:
        raise ValidationError("Hamiltonian needs at least one piece")

    for k, p in enumerate(pieces):
        if math.isnan(p.length) or p.length <= 0.0:
            raise NonPositiveLength(f"piece {k} has non-positive extent {p.length}")
        if math.isinf(p.length) and k + 1 < len(pieces):
            raise ValidationError(f"only the final piece may be infinite (piece {k})")
        if not (math.isfinite(p.h11) and math.isfinite(p.h12)):
            raise ValidationError(f"piece {k} entries must be finite")
        if not 0.0 <= p.h11 <= 1.0:
            raise ValidationError(f"piece {k} has h11={p.h11} outside [0, 1]")
        if p.det < -_DET_TOL:
            raise ValidationError(f"piece {k} is not positive semidefinite (det={p.det:g})")
        if p.h22 == 0.0 and p.h12 != 0.0:
            raise ValidationError(f"piece {k} has h22=0 but h12={p.h12}; semidefiniteness needs h12=0")
        if p.h11 == 0.0 and p.h12 != 0.0:
            raise ValidationError(f"piece {k} has h11=0 but h12={p.h12}; semidefiniteness needs h12=0")
    if not math.isinf(pieces[-1].length):
        raise ValidationError("the final piece must be infinite so H covers [0, inf)")

    fused: list[HamiltonianPiece] = []
    for p in pieces:
        if fused and fused[-1].h11 == p.h11 and fused[-1].h12 == p.h12:
            prev = fused[-1]
            fused[-1] = HamiltonianPiece(prev.length + p.length, prev.h11, prev.h12)
        else:
            fused.append(p)
    if all(p.is_blocked() for p in fused):
        raise DegenerateHamiltonian("H is the blocked matrix [[1,0],[0,0]] everywhere")
    return Hamiltonian(pieces=tuple(fused), mesh=mesh)


def hamiltonian_to_json(ham: Hamiltonian) -> dict:
    doc = {
        "pieces": [
            {"len": "inf" if math.isinf(p.length) else p.length, "h11": p.h11, "h12": p.h12}
            for p in ham.pieces
        ]
    }
    if ham.mesh is not None:
        doc["mesh"] = ham.mesh
    return doc


def hamiltonian_from_json(doc: Mapping) -> Hamiltonian:
    return validate_hamiltonian(doc)


# -- string -> Hamiltonian ----------------------------------------------------


def string_to_hamiltonian(spec: StringSpec, mesh: int = 256) -> Hamiltonian:
    """Hamiltonian of a string in travel coordinates.

    Exact piecewise-constant output whenever omega is purely atomic (any
    upsilon); pieces where omega carries a density are approximated by
    ``mesh`` equal travel-coordinate substeps each, with cell averages of
    h22 and h12 (this preserves total extent, x-extent and int w exactly up
    to rounding).  A density of omega on an unbounded interval cannot be
    meshed and raises UnsupportedShape.
    """
    spec = validate_spec(spec)
    view = coefficient_view(spec)
    pieces: list[HamiltonianPiece] = []
    meshed = False
    n = len(view.bp)
    for j in range(n):
        x0 = float(view.bp[j])
        mass = float(view.atom_upsilon[j])
        if mass > 0.0:
            pieces.append(HamiltonianPiece(mass, 1.0, 0.0))
        x1 = float(view.bp[j + 1]) if j + 1 < n else spec.length
        if not x1 > x0:
            continue
        slope = float(view.dens_omega[j])
        bval = float(view.dens_upsilon[j])
        w0 = float(view.w_right[j])
        if slope == 0.0:
            rate = 1.0 + w0 * w0 + bval
            h22 = 1.0 / rate
            pieces.append(HamiltonianPiece(rate * (x1 - x0), 1.0 - h22, w0 * h22))
            continue
        if math.isinf(x1):
            raise UnsupportedShape(
                "omega density on an unbounded interval has no finite piecewise"
                " representation; truncate the string instead"
            )
        meshed = True
        s0 = float(view.sigma_right[j])
        s1 = float(view.sigma_left[j + 1])
        step = (s1 - s0) / mesh
        prev_s, prev_x, prev_i1 = s0, x0, view.w_integral(x0)
        for k in range(1, mesh + 1):
            sk = s1 if k == mesh else s0 + k * step
            xk = x1 if k == mesh else view.xi(sk)
            ik = view.w_integral(xk)
            ds = sk - prev_s
            h22 = (xk - prev_x) / ds
            h12 = (ik - prev_i1) / ds
            pieces.append(HamiltonianPiece(ds, 1.0 - h22, h12))
            prev_s, prev_x, prev_i1 = sk, xk, ik
    if math.isfinite(spec.length):
        pieces.append(HamiltonianPiece(_INF, 1.0, 0.0))
    return validate_hamiltonian(Hamiltonian(tuple(pieces), mesh=mesh if meshed else None))


# -- Hamiltonian -> string ----------------------------------------------------


def hamiltonian_to_string(ham: Hamiltonian) -> StringSpec:
    """String whose travel-coordinate Hamiltonian is ``ham``.

    Position advances by h22 per unit extent, w = h12/h22 per piece (jumps
    become omega point masses), the upsilon density is det H/h22^2, finite
    blocked pieces are upsilon point masses, and a trailing infinite blocked
    piece terminates the string at the current position.  Slope jumps below
    rounding noise relative to the neighbouring slopes are treated as
    continuity rather than emitted as spurious point masses.
    """
    ham = validate_hamiltonian(ham)
    x = 0.0
    w_prev = 0.0
    om_atoms: list[tuple[float, float]] = []
    ups_atoms: list[tuple[float, float]] = []
    ups_dens: list[tuple[float, float, float]] = []
    length = _INF
    for p in ham.pieces:
        if p.h22 == 0.0:
            if math.isinf(p.length):
                length = x
                break
            ups_atoms.append((x, p.length))
            continue
        w_here = p.h12 / p.h22
        jump = w_here - w_prev
        if abs(jump) > 4.0 * math.ulp(1.0) * max(1.0, abs(w_here), abs(w_prev)):
            om_atoms.append((x, jump))
            w_prev = w_here
        det = max(p.det, 0.0)
        dx = p.h22 * p.length
        if det > 0.0:
            ups_dens.append((x, x + dx, det / (p.h22 * p.h22)))
        x += dx
    return validate_spec(
        StringSpec(
            length=length,
            omega=MeasureData(atoms=tuple(om_atoms)),
            upsilon=MeasureData(atoms=tuple(ups_atoms), density=tuple(ups_dens)),
        )
    )


# -- canonical-system propagation ---------------------------------------------


def _sinc(d: np.ndarray) -> np.ndarray:
    small = np.abs(d) < 1e-6
    safe = np.where(small, 1.0, d)
    with np.errstate(invalid="ignore", over="ignore"):
        full = np.sin(safe) / safe
    return np.where(small, 1.0 - d * d / 6.0, full)


def _piece_factor(piece: HamiltonianPiece, length: float, z: np.ndarray) -> np.ndarray:
    """exp(-z*length*Jt*H) for an array of z, shape z.shape + (2, 2)."""
    t = -z * length
    root = math.sqrt(piece.det) if piece.det > 0.0 else 0.0
    d = z * (length * root)
    with np.errstate(invalid="ignore", over="ignore"):
        c = np.cos(d)
    s = _sinc(d)
    out = np.empty(z.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c + s * t * piece.h12
    out[..., 0, 1] = s * t * piece.h22
    out[..., 1, 0] = -s * t * piece.h11
    out[..., 1, 1] = c - s * t * piece.h12
    return out


def _apply_piece(u: np.ndarray, piece: HamiltonianPiece, length: float,
                 z: np.ndarray, zmax: float, renorm: bool) -> np.ndarray:
    root = math.sqrt(piece.det) if piece.det > 0.0 else 0.0
    chunks = max(1, int(math.ceil(zmax * length * root / _MAX_PHASE)))
    h = length / chunks
    for _ in range(chunks):
        u = _piece_factor(piece, h, z) @ u
        if renorm:
            norm = np.max(np.abs(u), axis=(-2, -1), keepdims=True)
            u = np.where(norm > _RENORM_AT, u / norm, u)
    return u


def canonical_m_grid(ham: Hamiltonian, zs, tol: float = 1e-10) -> np.ndarray:
    """Canonical Weyl function lim U11/U12 for an array of non-real z."""
    ham = validate_hamiltonian(ham)
    zarr = np.asarray(zs, dtype=complex)
    if np.any(zarr.imag == 0.0):
        raise NonRealRequired("canonical Weyl evaluation needs Im z != 0")
    z = np.atleast_1d(zarr).ravel()
    zmax = float(np.max(np.abs(z)))
    u = np.broadcast_to(np.eye(2, dtype=complex), z.shape + (2, 2)).copy()
    for p in ham.pieces[:-1]:
        u = _apply_piece(u, p, p.length, z, zmax, renorm=True)
    tail = ham.pieces[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        if tail.is_blocked():
            # The blocked generator only feeds the second row; the ratio is final.
            ratio = u[..., 0, 0] / u[..., 0, 1]
            if not np.all(np.isfinite(ratio)):
                raise TruncationNotConverged("ratio undefined at the blocked tail")
            return ratio.reshape(zarr.shape)
        delta = 1.0
        history = []
        for _ in range(_TAIL_DOUBLINGS):
            u = _apply_piece(u, tail, delta, z, zmax, renorm=True)
            history.append(u[..., 0, 0] / u[..., 0, 1])
            delta *= 2.0
            if len(history) >= 4:
                t0, t1, t2, t3 = history[-4:]
                scale = np.maximum(1.0, np.abs(t3))
                ok = (
                    (np.abs(t1 - t0) <= tol * scale)
                    & (np.abs(t2 - t1) <= tol * scale)
                    & (np.abs(t3 - t2) <= tol * scale)
                )
                if np.all(ok) and np.all(np.isfinite(t3)):
                    return t3.reshape(zarr.shape)
    raise TruncationNotConverged("canonical Weyl ratio did not stabilise on the tail")


def canonical_m(ham: Hamiltonian, z: complex, tol: float = 1e-10) -> complex:
    """Canonical Weyl function at one non-real z."""
    return complex(canonical_m_grid(ham, np.asarray(complex(z)), tol=tol))


def canonical_solution(ham: Hamiltonian, z: complex, ss) -> CanonicalSolution:
    """Matrix solution U of U' = -z*Jt*H*U, U(0) = I, sampled at coordinates ss.

    No renormalization is applied, so det U stays 1 up to rounding drift and
    can be used to monitor propagation quality.
    """
    ham = validate_hamiltonian(ham)
    z = complex(z)
    targets = sorted({float(s) for s in ss})
    if targets and targets[0] < 0.0:
        raise ValidationError(f"coordinates must be non-negative, got {targets[0]}")
    zarr = np.array([z])
    zmax = abs(z)
    u = np.eye(2, dtype=complex)[None, :, :].copy()
    samples: list[tuple[float, np.ndarray]] = []
    pos = 0.0
    idx = 0
    k = 0
    pieces = ham.pieces
    remaining = pieces[k].length
    while idx < len(targets):
        s_next = targets[idx]
        if s_next <= pos:
            samples.append((s_next, u[0].copy()))
            idx += 1
            continue
        gap = s_next - pos
        if gap < remaining or math.isinf(remaining) or k + 1 >= len(pieces):
            u = _apply_piece(u, pieces[k], gap, zarr, zmax, renorm=False)
            if not math.isinf(remaining):
                remaining -= gap
            pos = s_next
        else:
            u = _apply_piece(u, pieces[k], remaining, zarr, zmax, renorm=False)
            pos += remaining
            k += 1
            remaining = pieces[k].length
    return CanonicalSolution(z=z, samples=tuple(samples))


def indivisible_prefix(ham: Hamiltonian) -> float:
    """Extent of the initial blocked run [[1,0],[0,0]]; equals upsilon({0})
    for Hamiltonians produced from strings."""
    ham = validate_hamiltonian(ham)
    total = 0.0
    for p in ham.pieces:
        if not p.is_blocked():
            break
        total += p.length
    return total

"""Weyl functions of strings and their Herglotz-Nevanlinna structure.

The Weyl function of a string is the locally uniform limit

    m(z) = lim_{x -> L} -theta(z, x) / (z * phi(z, x)),   Im z != 0,

which maps the upper half-plane into itself and satisfies m(conj z) = conj m(z).
For finite-length strings in the representable class the travel coordinate is
finite at L, so the limit is attained at the endpoint; for infinite strings a
truncation schedule doubles progress in the travel coordinate until three
consecutive evaluations agree.

The integral representation

    m(z) = c1 z + c2 - 1/(L z) + int (1/(l - z) - l/(1 + l^2)) dmu(l)

has c1 = upsilon({0}) and -lim_{e -> 0} i e m(i e) = 1/L; when the string is a
non-negative one without a second measure (the Stieltjes case) the constant
term lim m(i eta) equals omega({0}).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import StringSpec, coefficient_view, validate_spec
from .errors import (
    ExtrapolationUnstable,
    NonRealRequired,
    PositionOutOfRange,
    TruncationNotConverged,
)
from .propagation import SystemState, fundamental_system, transfer_matrices

_TRUNCATION_DOUBLINGS = 140


@dataclass(frozen=True)
class WeylSample:
    """One Weyl-function evaluation with truncation metadata.

    ``est_error`` is the last Cauchy difference of the truncation sequence --
    a heuristic indicator, not a rigorous bound (exactly 0.0 when the value
    is attained at a finite endpoint).
    """

    z: complex
    m: complex
    truncation_x: float
    est_error: float


@dataclass(frozen=True)
class IntegralRep:
    """Constants of the Herglotz integral representation.

    ``c2`` is only determined in the Stieltjes case and is ``None`` otherwise.
    ``mu`` stays ``None`` here; spectral-measure routines can attach it.
    """

    c1: float
    inv_L: float
    c2: float | None = None
    mu: object | None = None


@dataclass(frozen=True)
class Classification:
    """Numerical Herglotz/Stieltjes flags plus structural predictions."""

    herglotz: bool
    stieltjes: bool
    stieltjes_structural: bool
    nonneg_spectrum_predicted: bool
    margins: dict = field(default_factory=dict)


def standard_grid() -> np.ndarray:
    """Upper-half-plane sample grid [-5, 5] x [0.1, 5]i, 7 x 7 points."""
    re = np.linspace(-5.0, 5.0, 7)
    im = np.linspace(0.1, 5.0, 7)
    return (re[:, None] + 1j * im[None, :]).ravel()


def _require_nonreal(z: np.ndarray) -> None:
    if np.any(np.asarray(z).imag == 0.0):
        raise NonRealRequired("Weyl evaluation needs Im z != 0")


def m_truncated(spec: StringSpec, z, x: float):
    """Truncated Weyl function -theta(z, x)/(z phi(z, x)); vectorized in z."""
    spec = validate_spec(spec)
    zarr = np.asarray(z, dtype=complex)
    _require_nonreal(zarr)
    if not x > 0.0:
        raise PositionOutOfRange(f"truncation point must be positive, got {x}")
    mats = transfer_matrices(spec, zarr, [float(x)], rescale=True)[0]
    with np.errstate(invalid="ignore"):
        m = -mats[..., 0, 0] / (zarr * mats[..., 0, 1])
    return complex(m) if zarr.shape == () else m


def weyl_m(spec: StringSpec, z: complex, tol: float = 1e-10) -> WeylSample:
    """Weyl function at z with the truncation limit resolved automatically."""
    spec = validate_spec(spec)
    z = complex(z)
    _require_nonreal(np.asarray(z))
    view = coefficient_view(spec)
    if math.isfinite(spec.length):
        m = m_truncated(spec, z, spec.length)
        return WeylSample(z=z, m=m, truncation_x=spec.length, est_error=0.0)

    # Start far below unit travel distance: at large |z| the limit is already
    # reached at tiny x and late starts would push trig factors toward overflow.
    s = 2.0 ** -40
    history: list[complex] = []
    last_x = 0.0
    for _ in range(_TRUNCATION_DOUBLINGS):
        x = view.xi(s)
        s *= 2.0
        if x <= 0.0 or x == last_x:
            continue
        last_x = x
        history.append(m_truncated(spec, z, x))
        if len(history) >= 4:
            tail = history[-4:]
            scale = max(1.0, abs(tail[-1]))
            diffs = [abs(tail[k + 1] - tail[k]) for k in range(3)]
            if all(dd <= tol * scale for dd in diffs):
                return WeylSample(z=z, m=history[-1], truncation_x=x, est_error=diffs[-1])
    raise TruncationNotConverged(
        f"Weyl truncation did not stabilise at z={z}; last diff "
        f"{abs(history[-1] - history[-2]) if len(history) > 1 else math.nan:g}"
    )


def weyl_solution_psi(spec: StringSpec, z: complex, xs, tol: float = 1e-10) -> tuple[SystemState, ...]:
    """The Weyl solution psi = theta + m z phi sampled along the string."""
    sample = weyl_m(spec, z, tol=tol)
    fs = fundamental_system(spec, z, xs)
    mz = sample.m * sample.z
    out = []
    for th, ph in zip(fs.theta, fs.phi):
        out.append(SystemState(x=th.x, f=th.f + mz * ph.f, f2=th.f2 + mz * ph.f2,
                               quasi=th.quasi + mz * ph.quasi))
    return tuple(out)


def _richardson(values, ratio: float, powers, scale_floor: float = 1.0) -> float:
    """Eliminate the given error powers from a geometrically refined sequence.

    ``values`` are ordered from coarsest to finest parameter; consecutive
    parameters differ by ``ratio``.  Raises if the extrapolated tail spreads
    more than the raw tail, which signals a wrong error model.
    """
    seq = [float(v) for v in values]
    raw_spread = abs(seq[-1] - seq[-2])
    for p in powers:
        if len(seq) < 2:
            break
        f = ratio ** p
        seq = [(f * seq[k + 1] - seq[k]) / (f - 1.0) for k in range(len(seq) - 1)]
    if len(seq) >= 2:
        extrap_spread = abs(seq[-1] - seq[-2])
        if extrap_spread > 10.0 * raw_spread + 1e-12 * max(scale_floor, abs(seq[-1])):
            raise ExtrapolationUnstable(
                f"extrapolation tail spread {extrap_spread:g} exceeds raw spread {raw_spread:g}"
            )
    return seq[-1]


def structural_flags(spec: StringSpec) -> tuple[bool, bool]:
    """(stieltjes, nonneg_spectrum) predicates read off the coefficients.

    Stieltjes needs upsilon identically zero and omega a non-negative measure.
    A non-negative spectrum needs upsilon to vanish on the open interval
    (0, L) and w non-decreasing there; point masses at 0 are unconstrained
    because they only shift boundary data.
    """
    spec = validate_spec(spec)
    omega_nonneg = all(m >= 0.0 for _, m in spec.omega.atoms) and all(
        v >= 0.0 for _, _, v in spec.omega.density
    )
    stieltjes = spec.upsilon.is_zero() and omega_nonneg
    upsilon_interior_zero = not spec.upsilon.density and all(
        x == 0.0 for x, _ in spec.upsilon.atoms
    )
    w_nondecreasing = all(m >= 0.0 for x, m in spec.omega.atoms if x > 0.0) and all(
        v >= 0.0 for _, _, v in spec.omega.density
    )
    return stieltjes, upsilon_interior_zero and w_nondecreasing


def classify(spec: StringSpec, samples=None, tol: float = 1e-8) -> Classification:
    """Herglotz/Stieltjes checks on a grid plus structural spectrum prediction.

    The numerical Stieltjes flag (Im m >= 0 and Im z m >= 0 on the grid) and
    the structural one must agree on valid inputs; both are reported.
    """
    spec = validate_spec(spec)
    zs = standard_grid() if samples is None else np.asarray(samples, dtype=complex)
    _require_nonreal(zs)
    ms = np.array([weyl_m(spec, complex(zv)).m for zv in zs])
    ms_conj = np.array([weyl_m(spec, complex(np.conj(zv))).m for zv in zs])
    scale = max(1.0, float(np.max(np.abs(ms))))
    min_im_m = float(np.min(ms.imag * np.sign(zs.imag)))
    symmetry_defect = float(np.max(np.abs(ms_conj - np.conj(ms))))
    min_im_zm = float(np.min((zs * ms).imag * np.sign(zs.imag)))
    herglotz = min_im_m >= -tol and symmetry_defect <= 1e-10 * scale
    stieltjes_num = herglotz and min_im_zm >= -tol
    stieltjes_struct, nonneg = structural_flags(spec)
    return Classification(
        herglotz=herglotz,
        stieltjes=stieltjes_num,
        stieltjes_structural=stieltjes_struct,
        nonneg_spectrum_predicted=nonneg,
        margins={
            "min_im_m": min_im_m,
            "symmetry_defect": symmetry_defect,
            "min_im_zm": min_im_zm,
            "scale": scale,
        },
    )


def integral_rep_constants(spec: StringSpec, tol: float = 1e-12) -> IntegralRep:
    """Estimate c1 = upsilon({0}), 1/L, and (Stieltjes only) c2 = omega({0}).

    c1 comes from Im m(i eta)/eta over eta = 1e2..1e6 with even-power
    elimination; 1/L from Re(-i e m(i e)) over e = 1e-2..1e-6.  c2 is only
    extrapolated when the structural Stieltjes predicate holds; otherwise the
    constant term is undetermined and reported as None.
    """
    spec = validate_spec(spec)
    etas = [10.0 ** k for k in range(2, 7)]
    m_eta = [weyl_m(spec, 1j * eta, tol=tol).m for eta in etas]
    c1 = _richardson([m.imag / eta for m, eta in zip(m_eta, etas)], 10.0, (2, 4))
    eps = [10.0 ** (-k) for k in range(2, 7)]
    m_eps = [weyl_m(spec, 1j * e, tol=tol).m for e in eps]
    inv_l = _richardson([(-1j * e * m).real for m, e in zip(m_eps, eps)], 10.0, (1, 2))
    stieltjes_struct, _ = structural_flags(spec)
    c2 = None
    if stieltjes_struct:
        c2 = _richardson([m.real for m in m_eta], 10.0, (1, 2))
    return IntegralRep(c1=c1, inv_L=inv_l, c2=c2)

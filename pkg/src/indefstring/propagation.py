"""Propagation of the string equation -u'' = z w' u + z^2 Upsilon' u + chi.

Two interchangeable engines advance solutions across the string:

* ``closed`` (default): per piece the two densities are constant, so the
  second-order equation has constant coefficient kappa = z*a + z^2*b and the
  transfer matrix in (u, u') variables is the exact trig/hyperbolic form;
  point masses contribute unimodular jump matrices.  This is exact (up to
  rounding) on the whole representable coefficient class.
* ``frozen``: the first-order system F = (u, u' + n_z u) with
  n_z(x) = z w(x) + z^2 Upsilon(x) is advanced by I + dx*A(n) steps, where
  A(n) = [[-n, 1], [-n^2, n]] squares to zero, freezing n at substep
  midpoints with step-doubling on density pieces.  Exact on purely atomic
  strings, second order elsewhere; kept as an independent cross-check.

Both engines force every coefficient breakpoint to be a step boundary and
report states with left-continuous conventions: the value at x never
includes a point mass sitting exactly at x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import (
    CoefficientView,
    MeasureData,
    StringSpec,
    _MeasureView,
    _normalize_measure,
    coefficient_view,
    validate_spec,
)
from .errors import PositionOutOfRange, ToleranceNotMet

_MAX_SUBSTEPS = 1 << 21


@dataclass(frozen=True)
class SystemState:
    """Solution sample: value, first-order-system component, quasi-derivative.

    ``f2 = u' + n_z(x) u (+ q(x))`` stays absolutely continuous across point
    masses; ``quasi = u' + z w(x) u`` is the quasi-derivative, equal to
    ``f2 - z^2 Upsilon(x) f`` for homogeneous solutions.
    """

    x: float
    f: complex
    f2: complex
    quasi: complex


@dataclass(frozen=True)
class FundamentalSystem:
    """Fundamental pair theta, phi with theta(0)=phi'(0-)=1, theta'(0-)=phi(0)=0."""

    z: complex
    xs: tuple[float, ...]
    theta: tuple[SystemState, ...]
    phi: tuple[SystemState, ...]
    wronskian: complex


def exact_step_matrix(n: complex, dx: float) -> np.ndarray:
    """One exact step of the first-order system while n_z is frozen at n."""
    return np.array([[1.0 - dx * n, dx], [-dx * n * n, 1.0 + dx * n]], dtype=complex)


def exact_step(state: SystemState, n: complex, dx: float, zsq_upsilon: complex = 0j) -> SystemState:
    """Advance a state by dx with frozen n_z = n.

    ``zsq_upsilon`` is z^2 * Upsilon on the step interval and is only needed
    to keep the reported quasi-derivative consistent.
    """
    f = (1.0 - dx * n) * state.f + dx * state.f2
    f2 = -dx * n * n * state.f + (1.0 + dx * n) * state.f2
    return SystemState(x=state.x + dx, f=f, f2=f2, quasi=f2 - zsq_upsilon * f)


def _trig_entries(kappa: np.ndarray, h: float):
    """cos/sinc/versine entries of the constant-coefficient transfer matrix.

    Returns (C, S, C2) with C = cos(s h), S = sin(s h)/s, C2 = (1-cos(s h))/s^2
    for s = sqrt(kappa); series branches keep the kappa -> 0 limit exact.
    """
    kappa = np.asarray(kappa, dtype=complex)
    y = kappa * (h * h)
    C = np.empty_like(y)
    S = np.empty_like(y)
    C2 = np.empty_like(y)
    small = np.abs(y) < 1e-12
    if small.any():
        ys = y[small]
        C[small] = 1.0 - ys / 2.0 + ys * ys / 24.0
        S[small] = h * (1.0 - ys / 6.0 + ys * ys / 120.0)
        C2[small] = h * h * (0.5 - ys / 24.0 + ys * ys / 720.0)
    big = ~small
    if big.any():
        kb = kappa[big]
        s = np.sqrt(kb)
        sh = s * h
        C[big] = np.cos(sh)
        S[big] = np.sin(sh) / s
        half = np.sin(sh / 2.0)
        C2[big] = 2.0 * half * half / kb
    return C, S, C2


class _Sweep:
    """Shared event walk: breakpoints and sample points in increasing order."""

    def __init__(self, view: CoefficientView, xs: np.ndarray, chi: _MeasureView | None):
        self.view = view
        self.chi = chi
        if xs.size == 0:
            raise PositionOutOfRange("need at least one sample position")
        if not np.all(np.isfinite(xs)):
            raise PositionOutOfRange("sample positions must be finite")
        if xs[0] < 0.0 or xs[-1] > view.length:
            raise PositionOutOfRange(
                f"sample positions must lie in [0, {view.length}], got [{xs[0]}, {xs[-1]}]"
            )
        x_max = float(xs[-1])
        points = set(float(x) for x in xs)
        points.update(float(p) for p in view.bp if p <= x_max)
        self.atoms: dict[float, tuple[float, float, float]] = {}
        for p, aw, au in zip(view.bp, view.atom_omega, view.atom_upsilon):
            if p <= x_max and (aw != 0.0 or au != 0.0):
                self.atoms[float(p)] = (float(aw), float(au), 0.0)
        if chi is not None:
            points.update(float(p) for p in chi.bp if p <= x_max)
            for p, mass in zip(chi.bp, chi.atom):
                if p <= x_max and mass != 0.0:
                    aw, au, _ = self.atoms.get(float(p), (0.0, 0.0, 0.0))
                    self.atoms[float(p)] = (aw, au, float(mass))
        self.points = sorted(points)
        self.targets = {float(x) for x in xs}

    def densities(self, lo: float, hi: float) -> tuple[float, float, float]:
        mid = lo + (hi - lo) / 2.0
        j = self.view.locate(mid)
        c = self.chi.density_value(mid) if self.chi is not None else 0.0
        return float(self.view.dens_omega[j]), float(self.view.dens_upsilon[j]), c


def _sweep_closed(view, z, xs, chi: _MeasureView | None = None, rescale: bool = False):
    """Closed-form transfer in (u, u') variables; vectorized over z.

    Returns per-sample affine data ``(a, b, c, d, r1, r2)`` so that a solution
    with u(0)=d1, u'(0-)=d2 has u(x) = a d1 + b d2 + r1, u'(x-) = c d1 + d d2 + r2.
    With ``rescale`` the matrix is renormalized whenever entries grow huge;
    that spoils det = 1 but keeps entry ratios (hence Weyl quotients) stable.
    """
    z = np.asarray(z, dtype=complex)
    walk = _Sweep(view, xs, chi)
    one = np.ones(z.shape, dtype=complex)
    zero = np.zeros(z.shape, dtype=complex)
    a, b, c, d = one.copy(), zero.copy(), zero.copy(), one.copy()
    r1, r2 = zero.copy(), zero.copy()
    records = {}
    cur = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for p in walk.points:
            if p > cur:
                da, db, dc = walk.densities(cur, p)
                h = p - cur
                kappa = z * da + z * z * db
                C, S, C2 = _trig_entries(kappa, h)
                mS = -kappa * S
                a, c = C * a + S * c, mS * a + C * c
                b, d = C * b + S * d, mS * b + C * d
                if chi is not None:
                    r1, r2 = C * r1 + S * r2 - dc * C2, mS * r1 + C * r2 - dc * S
                if rescale:
                    big = np.maximum(np.maximum(np.abs(a), np.abs(b)),
                                     np.maximum(np.abs(c), np.abs(d)))
                    factor = np.where(big > 1e120, big, 1.0)
                    a, b, c, d = a / factor, b / factor, c / factor, d / factor
                cur = p
            if p in walk.targets:
                records[p] = (a.copy(), b.copy(), c.copy(), d.copy(), r1.copy(), r2.copy())
            atom = walk.atoms.get(p)
            if atom is not None:
                aw, au, ac = atom
                g = z * aw + z * z * au
                c = c - g * a
                d = d - g * b
                if chi is not None:
                    r2 = r2 - g * r1 - ac
    return records


def _sweep_frozen(view, z, xs, tol: float | None, substeps: int | None):
    """Midpoint-frozen nilpotent steps on the first-order system.

    Point masses are free: the F state is continuous across them.  Density
    pieces are halved until two consecutive piece transfers agree to ``tol``
    (skipped when a fixed ``substeps`` count is forced).
    """
    z = np.asarray(z, dtype=complex)
    walk = _Sweep(view, xs, None)
    one = np.ones(z.shape, dtype=complex)
    zero = np.zeros(z.shape, dtype=complex)
    a, b, c, d = one.copy(), zero.copy(), zero.copy(), one.copy()
    records = {}
    cur = 0.0
    for p in walk.points:
        if p > cur:
            h = p - cur
            da, db, _ = walk.densities(cur, p)
            kappa = z * da + z * z * db
            j = view.locate(cur + h / 2.0)
            w0 = view.w_right[j] + view.dens_omega[j] * (cur - view.bp[j])
            u0 = view.ups_right[j] + view.dens_upsilon[j] * (cur - view.bp[j])
            n0 = z * w0 + z * z * u0
            if np.all(kappa == 0.0):
                # n_z constant on the piece: a single nilpotent step is exact.
                pa, pb, pc, pd = _frozen_piece(n0, kappa, h, 1)
            elif substeps is not None:
                pa, pb, pc, pd = _frozen_piece(n0, kappa, h, substeps)
            else:
                pa, pb, pc, pd = _frozen_piece_adaptive(n0, kappa, h, tol)
            a, c = pa * a + pb * c, pc * a + pd * c
            b, d = pa * b + pb * d, pc * b + pd * d
            cur = p
        if p in walk.targets:
            n_here = z * view.w(p) + z * z * view.upsilon(p)
            records[p] = (a.copy(), b.copy(), c - n_here * a, d - n_here * b,
                          np.zeros_like(a), np.zeros_like(a))
    return records


def _frozen_piece(n0, kappa, h: float, steps: int):
    """Transfer over one density piece with a fixed number of frozen substeps."""
    shape = np.broadcast(n0, kappa).shape
    pa = np.ones(shape, dtype=complex)
    pb = np.zeros(shape, dtype=complex)
    pc = np.zeros(shape, dtype=complex)
    pd = np.ones(shape, dtype=complex)
    dx = h / steps
    for k in range(steps):
        n = n0 + kappa * ((k + 0.5) * dx)
        ndx = n * dx
        pa, pc = (1.0 - ndx) * pa + dx * pc, -n * ndx * pa + (1.0 + ndx) * pc
        pb, pd = (1.0 - ndx) * pb + dx * pd, -n * ndx * pb + (1.0 + ndx) * pd
    return pa, pb, pc, pd


def _frozen_piece_adaptive(n0, kappa, h: float, tol: float):
    steps = 8
    prev = _frozen_piece(n0, kappa, h, steps)
    while steps <= _MAX_SUBSTEPS:
        steps *= 2
        nxt = _frozen_piece(n0, kappa, h, steps)
        scale = max(float(np.max(np.abs(m))) for m in nxt)
        err = max(float(np.max(np.abs(m1 - m0))) for m0, m1 in zip(prev, nxt))
        if err <= tol * max(1.0, scale):
            return nxt
        prev = nxt
    raise ToleranceNotMet(
        f"frozen-step refinement exceeded {_MAX_SUBSTEPS} substeps on a piece of length {h}"
    )


def _prepare(spec: StringSpec, xs) -> tuple[CoefficientView, np.ndarray]:
    view = coefficient_view(validate_spec(spec))
    arr = np.atleast_1d(np.asarray(xs, dtype=float))
    return view, arr


def transfer_matrices(spec: StringSpec, z, xs, *, method: str = "closed",
                      tol: float = 1e-10, substeps: int | None = None,
                      rescale: bool = False) -> np.ndarray:
    """Fundamental matrices M(x) in (u, u') variables at the given positions.

    Columns are the theta and phi solutions; result shape is
    ``(len(xs),) + shape(z) + (2, 2)`` and ``det M = 1`` along the sweep
    (unless ``rescale`` trades the determinant for overflow safety).
    """
    view, arr = _prepare(spec, xs)
    order = np.unique(arr)
    zarr = np.asarray(z, dtype=complex)
    zflat = np.atleast_1d(zarr).ravel()
    if method == "closed":
        records = _sweep_closed(view, zflat, order, rescale=rescale)
    elif method == "frozen":
        records = _sweep_frozen(view, zflat, order, tol, substeps)
    else:
        raise ValueError(f"unknown propagation method {method!r}")
    out = np.empty((len(arr), zflat.size, 2, 2), dtype=complex)
    for k, x in enumerate(arr):
        a, b, c, d, _, _ = records[float(x)]
        out[k, :, 0, 0] = a
        out[k, :, 0, 1] = b
        out[k, :, 1, 0] = c
        out[k, :, 1, 1] = d
    return out.reshape((len(arr),) + zarr.shape + (2, 2))


def fundamental_system(spec: StringSpec, z: complex, xs, *, method: str = "closed",
                       tol: float = 1e-10, substeps: int | None = None) -> FundamentalSystem:
    """Evaluate the fundamental pair theta, phi at the sample positions."""
    spec = validate_spec(spec)
    view, arr = _prepare(spec, xs)
    mats = transfer_matrices(spec, complex(z), arr, method=method, tol=tol, substeps=substeps)
    theta = []
    phi = []
    for k, x in enumerate(arr):
        xf = float(x)
        w_x = view.w(xf)
        ups_x = view.upsilon(xf)
        n_x = z * w_x + z * z * ups_x
        m = mats[k]
        theta.append(SystemState(x=xf, f=complex(m[0, 0]), f2=complex(m[1, 0] + n_x * m[0, 0]),
                                 quasi=complex(m[1, 0] + z * w_x * m[0, 0])))
        phi.append(SystemState(x=xf, f=complex(m[0, 1]), f2=complex(m[1, 1] + n_x * m[0, 1]),
                               quasi=complex(m[1, 1] + z * w_x * m[0, 1])))
    last = mats[-1]
    wronskian = complex(last[0, 0] * last[1, 1] - last[0, 1] * last[1, 0])
    return FundamentalSystem(z=complex(z), xs=tuple(float(x) for x in arr),
                             theta=tuple(theta), phi=tuple(phi), wronskian=wronskian)


def solve_inhomogeneous(spec: StringSpec, z: complex, chi, d1: complex, d2: complex,
                        xs) -> tuple[SystemState, ...]:
    """Solve -f'' = z omega f + z^2 upsilon f + chi with f(0)=d1, f'(0-)=d2.

    ``chi`` is measure data in the same atoms+density format as the string
    coefficients; the solve is closed-form on the whole class (variation of
    parameters built into the piece transfers).
    """
    spec = validate_spec(spec)
    view, arr = _prepare(spec, xs)
    chi_data = chi if isinstance(chi, MeasureData) else _as_measure_like(chi)
    chi_data = _normalize_measure(chi_data, spec.length, nonneg=False, label="chi")
    chi_view = _MeasureView(chi_data, spec.length)
    records = _sweep_closed(view, np.array([complex(z)]), np.unique(arr), chi=chi_view)
    out = []
    for x in arr:
        xf = float(x)
        a, b, c, d, r1, r2 = records[xf]
        u = complex(a[0] * d1 + b[0] * d2 + r1[0])
        up = complex(c[0] * d1 + d[0] * d2 + r2[0])
        w_x = view.w(xf)
        n_x = z * w_x + z * z * view.upsilon(xf)
        q_x = chi_view.distribution(xf)
        out.append(SystemState(x=xf, f=u, f2=up + n_x * u + q_x, quasi=up + z * w_x * u))
    return tuple(out)


def _as_measure_like(raw) -> MeasureData:
    from .coefficients import _as_measure

    return _as_measure(raw)

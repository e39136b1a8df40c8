"""String specifications and their coefficient functions.

A string is a triple (L, omega, upsilon): a length L in (0, inf], a real
Borel measure omega and a non-negative Borel measure upsilon on [0, L).
Both measures are stored as finitely many point masses plus finitely many
piecewise-constant density pieces.  The module exposes the left-continuous
distribution functions w(x) = omega([0, x)) and Upsilon(x) = upsilon([0, x)),
the travel coordinate

    sigma(x) = x + int_0^x w(t)^2 dt + Upsilon(x),

and its generalized inverse xi.  sigma is strictly increasing and piecewise
cubic with a jump of size upsilon({p}) just after each point mass p; xi is
1-Lipschitz and flat across those jumps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import (
    NegativeUpsilon,
    NonPositiveLength,
    OverlappingDensityIntervals,
    PositionOutOfRange,
    ValidationError,
)

_INF = math.inf

# Two-point Gauss-Legendre nodes on [0, 1]; exact through cubic integrands.
_GAUSS2 = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))


@dataclass(frozen=True)
class MeasureData:
    """One measure: point masses ``(x, mass)`` and density pieces ``(a, b, value)``."""

    atoms: tuple[tuple[float, float], ...] = ()
    density: tuple[tuple[float, float, float], ...] = ()

    def is_zero(self) -> bool:
        return not self.atoms and not self.density

    def is_atomic(self) -> bool:
        return not self.density

    def atom_at(self, x: float) -> float:
        for p, mass in self.atoms:
            if p == x:
                return mass
        return 0.0

    def total_variation_bound(self) -> float:
        tv = sum(abs(m) for _, m in self.atoms)
        tv += sum(abs(v) * (b - a) for a, b, v in self.density if math.isfinite(b))
        return tv


@dataclass(frozen=True)
class StringSpec:
    """A string ``(length, omega, upsilon)``; build via :func:`validate_spec`."""

    length: float
    omega: MeasureData = MeasureData()
    upsilon: MeasureData = MeasureData()


def _as_measure(raw) -> MeasureData:
    if isinstance(raw, MeasureData):
        return raw
    if raw is None:
        return MeasureData()
    if isinstance(raw, Mapping):
        atoms = tuple((float(d["x"]), float(d["mass"])) for d in raw.get("atoms", ()))
        density = tuple(
            (float(d["a"]), _parse_extent(d["b"]), float(d["value"]))
            for d in raw.get("density", ())
        )
        return MeasureData(atoms=atoms, density=density)
    raise ValidationError(f"cannot interpret measure data: {raw!r}")


def _parse_extent(value) -> float:
    if value == "inf" or value is None:
        return _INF
    return float(value)


def _normalize_measure(data: MeasureData, length: float, *, nonneg: bool, label: str) -> MeasureData:
    merged: dict[float, float] = {}
    for x, mass in data.atoms:
        if not math.isfinite(x):
            raise PositionOutOfRange(f"{label} atom position must be finite, got {x}")
        if not math.isfinite(mass):
            raise ValidationError(f"{label} atom mass must be finite, got {mass}")
        if not 0.0 <= x < length:
            raise PositionOutOfRange(f"{label} atom at {x} outside [0, {length})")
        merged[x] = merged.get(x, 0.0) + mass
    atoms = tuple(sorted((x, m) for x, m in merged.items() if m != 0.0))

    pieces = []
    for a, b, value in data.density:
        if not (math.isfinite(a) and math.isfinite(value)):
            raise ValidationError(f"{label} density piece ({a}, {b}, {value}) must have finite endpoint/value")
        if a >= b:
            raise PositionOutOfRange(f"{label} density interval [{a}, {b}) is empty or reversed")
        if a < 0.0 or b > length:
            raise PositionOutOfRange(f"{label} density interval [{a}, {b}) outside [0, {length}]")
        if value != 0.0:
            pieces.append((a, b, value))
    pieces.sort()
    for (a0, b0, _), (a1, _, _) in zip(pieces, pieces[1:]):
        if a1 < b0:
            raise OverlappingDensityIntervals(
                f"{label} density intervals starting at {a0} and {a1} overlap"
            )
    fused: list[tuple[float, float, float]] = []
    for piece in pieces:
        if fused and fused[-1][1] == piece[0] and fused[-1][2] == piece[2]:
            fused[-1] = (fused[-1][0], piece[1], piece[2])
        else:
            fused.append(piece)

    if nonneg:
        bad = [m for _, m in atoms if m < 0.0] + [v for _, _, v in fused if v < 0.0]
        if bad:
            raise NegativeUpsilon(f"{label} must be a non-negative measure, found {bad[0]}")
    return MeasureData(atoms=atoms, density=tuple(fused))


def validate_spec(raw) -> StringSpec:
    """Normalize and validate a string specification.

    Accepts a :class:`StringSpec` or a JSON-style mapping with keys
    ``L``, ``omega``, ``upsilon``.  Atoms at equal positions are merged,
    zero entries dropped, intervals sorted; violations raise the specific
    :mod:`indefstring.errors` subclasses.
    """
    if isinstance(raw, StringSpec):
        length, omega, upsilon = raw.length, raw.omega, raw.upsilon
    elif isinstance(raw, Mapping):
        length = _parse_extent(raw.get("L"))
        omega = _as_measure(raw.get("omega"))
        upsilon = _as_measure(raw.get("upsilon"))
    else:
        raise ValidationError(f"cannot interpret string spec: {raw!r}")

    length = float(length)
    if math.isnan(length) or length <= 0.0:
        raise NonPositiveLength(f"string length must be positive, got {length}")
    omega = _normalize_measure(omega, length, nonneg=False, label="omega")
    upsilon = _normalize_measure(upsilon, length, nonneg=True, label="upsilon")
    return StringSpec(length=length, omega=omega, upsilon=upsilon)


def _extent_to_json(value: float):
    return "inf" if value == _INF else value


def spec_to_json(spec: StringSpec) -> dict:
    def measure(data: MeasureData) -> dict:
        return {
            "atoms": [{"x": x, "mass": m} for x, m in data.atoms],
            "density": [
                {"a": a, "b": _extent_to_json(b), "value": v} for a, b, v in data.density
            ],
        }

    return {
        "L": _extent_to_json(spec.length),
        "omega": measure(spec.omega),
        "upsilon": measure(spec.upsilon),
    }


def spec_from_json(doc: Mapping) -> StringSpec:
    return validate_spec(doc)


class _MeasureView:
    """Distribution-function machinery for a single measure on [0, length)."""

    def __init__(self, data: MeasureData, length: float):
        self.length = length
        points = {0.0}
        points.update(x for x, _ in data.atoms)
        for a, b, _ in data.density:
            points.add(a)
            if math.isfinite(b):
                points.add(b)
        if math.isfinite(length):
            points.add(length)
        self.bp = np.array(sorted(points))
        n = len(self.bp)
        self.atom = np.zeros(n)
        for x, mass in data.atoms:
            self.atom[np.searchsorted(self.bp, x)] += mass
        # dens[i] holds the density on (bp[i], bp[i+1]); the final entry covers
        # the unbounded tail when length is infinite and is zero otherwise.
        self.dens = np.zeros(n)
        for a, b, value in data.density:
            i = int(np.searchsorted(self.bp, a))
            while i < n and self.bp[i] < b:
                self.dens[i] = value
                i += 1
        self.cum_left = np.zeros(n)
        self.cum_right = np.zeros(n)
        for i in range(n):
            self.cum_right[i] = self.cum_left[i] + self.atom[i]
            if i + 1 < n:
                h = self.bp[i + 1] - self.bp[i]
                self.cum_left[i + 1] = self.cum_right[i] + self.dens[i] * h

    def locate(self, x: float) -> int:
        return max(0, int(np.searchsorted(self.bp, x, side="right")) - 1)

    def distribution(self, x: float) -> float:
        """Left-continuous cumulative value measure([0, x))."""
        j = self.locate(x)
        if x == self.bp[j]:
            return float(self.cum_left[j])
        return float(self.cum_right[j] + self.dens[j] * (x - self.bp[j]))

    def atom_mass(self, x: float) -> float:
        j = self.locate(x)
        return float(self.atom[j]) if x == self.bp[j] else 0.0

    def density_value(self, x: float) -> float:
        """Density on the piece containing x (taken just right of breakpoints)."""
        return float(self.dens[self.locate(x)])


class CoefficientView:
    """Merged, query-ready view of a string's coefficient data.

    Breakpoints collect every atom position and density endpoint of both
    measures (plus 0 and a finite L); between consecutive breakpoints both
    densities are constant and w is affine.
    """

    def __init__(self, spec: StringSpec):
        self.spec = spec
        self.length = spec.length
        self.wv = _MeasureView(spec.omega, spec.length)
        self.uv = _MeasureView(spec.upsilon, spec.length)
        self.bp = np.array(sorted(set(self.wv.bp) | set(self.uv.bp)))
        n = len(self.bp)
        mid = lambda i: self.bp[i] + (
            (self.bp[i + 1] - self.bp[i]) / 2.0 if i + 1 < n else 1.0
        )
        self.atom_omega = np.array([self.wv.atom_mass(x) for x in self.bp])
        self.atom_upsilon = np.array([self.uv.atom_mass(x) for x in self.bp])
        self.dens_omega = np.array([self.wv.density_value(mid(i)) for i in range(n)])
        self.dens_upsilon = np.array([self.uv.density_value(mid(i)) for i in range(n)])

        self.w_left = np.zeros(n)
        self.ups_left = np.zeros(n)
        self.i1 = np.zeros(n)  # int_0^bp w
        self.i2 = np.zeros(n)  # int_0^bp w^2
        for i in range(n - 1):
            h = self.bp[i + 1] - self.bp[i]
            wr = self.w_left[i] + self.atom_omega[i]
            a = self.dens_omega[i]
            self.w_left[i + 1] = wr + a * h
            self.ups_left[i + 1] = (
                self.ups_left[i] + self.atom_upsilon[i] + self.dens_upsilon[i] * h
            )
            self.i1[i + 1] = self.i1[i] + h * wr + a * h * h / 2.0
            self.i2[i + 1] = self.i2[i] + h * wr * wr + wr * a * h * h + a * a * h ** 3 / 3.0
        self.w_right = self.w_left + self.atom_omega
        self.ups_right = self.ups_left + self.atom_upsilon
        self.sigma_left = self.bp + self.i2 + self.ups_left
        self.sigma_right = self.bp + self.i2 + self.ups_right
        self.sigma_length = self.sigma_left[-1] if math.isfinite(self.length) else _INF

    # -- point queries (left-continuous convention throughout) --------------

    def _check(self, x: float) -> None:
        if math.isnan(x) or x < 0.0 or x > self.length:
            raise PositionOutOfRange(f"position {x} outside [0, {self.length}]")

    def locate(self, x: float) -> int:
        return max(0, int(np.searchsorted(self.bp, x, side="right")) - 1)

    def w(self, x: float) -> float:
        self._check(x)
        j = self.locate(x)
        if x == self.bp[j]:
            return float(self.w_left[j])
        return float(self.w_right[j] + self.dens_omega[j] * (x - self.bp[j]))

    def upsilon(self, x: float) -> float:
        self._check(x)
        j = self.locate(x)
        if x == self.bp[j]:
            return float(self.ups_left[j])
        return float(self.ups_right[j] + self.dens_upsilon[j] * (x - self.bp[j]))

    def w_integral(self, x: float) -> float:
        """int_0^x w(t) dt in closed form."""
        self._check(x)
        j = self.locate(x)
        h = x - self.bp[j]
        wr = self.w_right[j]
        a = self.dens_omega[j]
        if h == 0.0:
            return float(self.i1[j])
        return float(self.i1[j] + h * wr + a * h * h / 2.0)

    def wsq_integral(self, x: float) -> float:
        """int_0^x w(t)^2 dt in closed form."""
        self._check(x)
        j = self.locate(x)
        h = x - self.bp[j]
        if h == 0.0:
            return float(self.i2[j])
        wr = self.w_right[j]
        a = self.dens_omega[j]
        return float(self.i2[j] + h * wr * wr + wr * a * h * h + a * a * h ** 3 / 3.0)

    def sigma(self, x: float) -> float:
        if x == self.length and not math.isfinite(x):
            return _INF
        self._check(x)
        return x + self.wsq_integral(x) + self.upsilon(x)

    def sigma_integral(self, x: float) -> float:
        """int_0^x sigma(t) dt, exact per piece (two-point Gauss on cubics)."""
        self._check(x)
        total = 0.0
        for j in range(len(self.bp)):
            lo = self.bp[j]
            if lo >= x:
                break
            hi = min(self.bp[j + 1] if j + 1 < len(self.bp) else _INF, x)
            h = hi - lo
            total += h * sum(self.sigma(lo + t * h) for t in _GAUSS2) / 2.0
        return total

    # -- generalized inverse of the travel coordinate ------------------------

    def xi(self, s: float) -> float:
        """xi(s) = sup{x in [0, L) : sigma(x) <= s}, with xi(s) = L past sigma(L)."""
        if math.isnan(s) or s < 0.0:
            raise PositionOutOfRange(f"travel coordinate {s} must be non-negative")
        if s >= self.sigma_length:
            return self.length
        j = int(np.searchsorted(self.sigma_right, s, side="right")) - 1
        if j < 0:
            return 0.0
        if j + 1 < len(self.bp) and s >= self.sigma_left[j + 1]:
            return float(self.bp[j + 1])
        rhs = s - self.sigma_right[j]
        wr = self.w_right[j]
        a = self.dens_omega[j]
        c1 = 1.0 + wr * wr + self.dens_upsilon[j]
        h_max = (self.bp[j + 1] - self.bp[j]) if j + 1 < len(self.bp) else _INF
        if a == 0.0:
            h = rhs / c1
        else:
            c2 = wr * a
            c3 = a * a / 3.0
            roots = np.roots([c3, c2, c1, -rhs])
            real = [r.real for r in roots if abs(r.imag) <= 1e-9 * (1.0 + abs(r))]
            inside = [r for r in real if -1e-9 <= r <= h_max + 1e-9]
            # The cubic is strictly monotone, so there is exactly one real root
            # in range; fall back to a Newton start if rounding hid it.
            h = inside[0] if inside else (real[0] if real else rhs / c1)
            for _ in range(3):
                p = ((c3 * h + c2) * h + c1) * h - rhs
                dp = (3.0 * c3 * h + 2.0 * c2) * h + c1
                h -= p / dp
        h = min(max(h, 0.0), h_max)
        return float(min(self.bp[j] + h, self.length))


@lru_cache(maxsize=256)
def coefficient_view(spec: StringSpec) -> CoefficientView:
    return CoefficientView(spec)


@dataclass(frozen=True)
class TravelCoords:
    """Travel coordinate sigma, its generalized inverse xi, and sigma's limit at L."""

    sigma: Callable[[float], float]
    xi: Callable[[float], float]
    sigma_L: float


def travel_coords(spec: StringSpec) -> TravelCoords:
    view = coefficient_view(validate_spec(spec))
    return TravelCoords(sigma=view.sigma, xi=view.xi, sigma_L=view.sigma_length)


def eval_coefficients(spec: StringSpec, x: float) -> tuple[float, float, float]:
    """Left-continuous values ``(w(x), Upsilon(x), sigma(x))``."""
    view = coefficient_view(validate_spec(spec))
    return view.w(x), view.upsilon(x), view.sigma(x)


def xi_eval(spec: StringSpec, s: float) -> float:
    """Generalized inverse of the travel coordinate at s."""
    return coefficient_view(validate_spec(spec)).xi(s)


def merge_breakpoints(*arrays: Iterable[float]) -> np.ndarray:
    points: set[float] = set()
    for arr in arrays:
        points.update(float(v) for v in arr)
    return np.array(sorted(points))


def _atom_mismatch(a: tuple[tuple[float, float], ...], b: tuple[tuple[float, float], ...]) -> float:
    """Worst position/mass defect between two sorted atom lists."""
    if len(a) != len(b):
        return _INF
    worst = 0.0
    for (xa, ma), (xb, mb) in zip(a, b):
        worst = max(worst, abs(xa - xb), abs(ma - mb))
    return worst


def spec_discrepancy(a: StringSpec, b: StringSpec, *, probes: int = 129) -> dict[str, float]:
    """Deviation between two strings as lengths, atoms, and primitives.

    Atoms are paired in order, so a jump that merely moved by a rounding
    error contributes its tiny position error rather than its full mass.
    The primitive functions of both measures are compared on a probe grid
    kept away from jump points for the same reason.  Returns the parts and
    their maximum under ``"overall"``.
    """
    sa, sb = validate_spec(a), validate_spec(b)
    va, vb = coefficient_view(sa), coefficient_view(sb)
    if math.isinf(sa.length) and math.isinf(sb.length):
        length_diff = 0.0
    else:
        length_diff = abs(sa.length - sb.length)
    span = min(sa.length, sb.length)
    if math.isinf(span):
        finite = [float(p) for p in va.bp if math.isfinite(p)]
        finite += [float(p) for p in vb.bp if math.isfinite(p)]
        span = max(10.0, max(finite, default=0.0) + 1.0)
    cuts = sorted(
        {float(p) for p in va.bp if p <= span}
        | {float(p) for p in vb.bp if p <= span}
        | {0.0, span}
    )
    guard = 1e-12 * max(1.0, span)
    pts = {0.5 * (lo + hi) for lo, hi in zip(cuts[:-1], cuts[1:]) if hi - lo > 4.0 * guard}
    for k in range(probes):
        x = span * (k + 0.5) / probes
        if min(abs(x - c) for c in cuts) > guard:
            pts.add(x)
    dist_diff = 0.0
    for x in sorted(pts):
        dist_diff = max(dist_diff, abs(va.w(x) - vb.w(x)), abs(va.upsilon(x) - vb.upsilon(x)))
    atom_diff = max(
        _atom_mismatch(sa.omega.atoms, sb.omega.atoms),
        _atom_mismatch(sa.upsilon.atoms, sb.upsilon.atoms),
    )
    return {
        "length": length_diff,
        "atoms": atom_diff,
        "distributions": dist_diff,
        "overall": max(length_diff, atom_diff, dist_diff),
    }

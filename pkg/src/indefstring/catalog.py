"""Named example strings used across tests, docs, and the regression suite."""
from __future__ import annotations

import numpy as np

from .coefficients import StringSpec, validate_spec


def empty_string(length: float = 1.0) -> StringSpec:
    return validate_spec({"L": length})


def empty_halfline() -> StringSpec:
    return validate_spec({"L": "inf"})


def uniform_string(length: float = 1.0, value: float = 1.0) -> StringSpec:
    return validate_spec({"L": length, "omega": {"density": [{"a": 0.0, "b": length, "value": value}]}})


def negative_uniform_string(length: float = 1.0) -> StringSpec:
    return uniform_string(length, -1.0)


def uniform_halfline() -> StringSpec:
    return validate_spec({"L": "inf", "omega": {"density": [{"a": 0.0, "b": "inf", "value": 1.0}]}})


def upsilon_lebesgue_halfline() -> StringSpec:
    return validate_spec({"L": "inf", "upsilon": {"density": [{"a": 0.0, "b": "inf", "value": 1.0}]}})


def omega_atom_origin(mass: float = 2.0, length: float = 1.0) -> StringSpec:
    return validate_spec({"L": length, "omega": {"atoms": [{"x": 0.0, "mass": mass}]}})


def upsilon_atom_origin(mass: float = 3.0, length: float = 1.0) -> StringSpec:
    return validate_spec({"L": length, "upsilon": {"atoms": [{"x": 0.0, "mass": mass}]}})


def omega_atom_middle(mass: float = 1.0, length: float = 1.0) -> StringSpec:
    return validate_spec({"L": length, "omega": {"atoms": [{"x": length / 2.0, "mass": mass}]}})


def upsilon_atom_middle(mass: float = 1.0, length: float = 1.0) -> StringSpec:
    return validate_spec({"L": length, "upsilon": {"atoms": [{"x": length / 2.0, "mass": mass}]}})


def mixed_example() -> StringSpec:
    """Finite string combining point masses of both signs, an upsilon point
    mass, and an upsilon density piece."""
    return validate_spec(
        {
            "L": 2.0,
            "omega": {"atoms": [{"x": 0.0, "mass": 2.0}, {"x": 0.5, "mass": -1.0}]},
            "upsilon": {
                "atoms": [{"x": 0.25, "mass": 1.5}],
                "density": [{"a": 1.0, "b": 2.0, "value": 0.7}],
            },
        }
    )


REGRESSION_SPECS: tuple[tuple[str, StringSpec], ...] = (
    ("empty", empty_string()),
    ("empty-L2", empty_string(2.0)),
    ("empty-halfline", empty_halfline()),
    ("uniform", uniform_string()),
    ("negative-uniform", negative_uniform_string()),
    ("uniform-halfline", uniform_halfline()),
    ("upsilon-lebesgue-halfline", upsilon_lebesgue_halfline()),
    ("omega-atom-origin", omega_atom_origin()),
    ("upsilon-atom-origin", upsilon_atom_origin()),
    ("omega-atom-middle", omega_atom_middle()),
    ("omega-atom-middle-negative", omega_atom_middle(-1.0)),
    ("upsilon-atom-middle", upsilon_atom_middle()),
    ("mixed", mixed_example()),
)

# The half-line string with an omega density has no finite piecewise-constant
# Hamiltonian, so the transform-based checks skip it.
CANONICAL_SPECS: tuple[tuple[str, StringSpec], ...] = tuple(
    (name, spec) for name, spec in REGRESSION_SPECS if name != "uniform-halfline"
)


def random_discrete_string(rng: np.random.Generator, max_atoms: int = 4) -> StringSpec:
    """Finite string with purely atomic measures (eigenvalue-friendly)."""
    length = float(rng.uniform(0.5, 3.0))
    n_om = int(rng.integers(1, max_atoms + 1))
    n_up = int(rng.integers(0, max_atoms + 1))
    positions = lambda n: np.sort(rng.uniform(0.0, length * 0.95, size=n))
    om = [
        {"x": float(x), "mass": float(rng.uniform(0.2, 2.0) * rng.choice([-1.0, 1.0]))}
        for x in positions(n_om)
    ]
    up = [{"x": float(x), "mass": float(rng.uniform(0.2, 2.0))} for x in positions(n_up)]
    return validate_spec({"L": length, "omega": {"atoms": om}, "upsilon": {"atoms": up}})


def random_atomic_omega_string(rng: np.random.Generator, max_atoms: int = 4) -> StringSpec:
    """Finite string with atomic omega and general (atoms + densities) upsilon;
    exactly representable as a piecewise-constant Hamiltonian."""
    length = float(rng.uniform(0.5, 3.0))
    n_om = int(rng.integers(1, max_atoms + 1))
    om = [
        {"x": float(x), "mass": float(rng.uniform(0.2, 2.0) * rng.choice([-1.0, 1.0]))}
        for x in np.sort(rng.uniform(0.0, length * 0.95, size=n_om))
    ]
    up_atoms = [
        {"x": float(x), "mass": float(rng.uniform(0.2, 2.0))}
        for x in np.sort(rng.uniform(0.0, length * 0.95, size=int(rng.integers(0, 3))))
    ]
    cuts = np.sort(rng.uniform(0.0, length, size=4))
    up_dens = []
    for a, b in ((cuts[0], cuts[1]), (cuts[2], cuts[3])):
        if b - a > 1e-3 and rng.random() < 0.8:
            up_dens.append({"a": float(a), "b": float(b), "value": float(rng.uniform(0.1, 2.0))})
    return validate_spec(
        {"L": length, "omega": {"atoms": om}, "upsilon": {"atoms": up_atoms, "density": up_dens}}
    )

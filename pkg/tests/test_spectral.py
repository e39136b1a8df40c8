"""Tests for eigenvalues, spectral measures, Green kernel, and the transform."""

import numpy as np
import pytest

from indefstring import catalog
from indefstring.errors import (
    NotAtomic,
    NotFiniteLength,
    UnsupportedShape,
    WindowTouchesAtomZero,
)
from indefstring.spectral import (
    HilbertElement,
    discrete_eigenvalues,
    green_kernel,
    hilbert_inner,
    hilbert_norm_squared,
    measure_from_json,
    measure_to_json,
    norm_squared_in_measure,
    point_evaluator,
    projection_energy,
    spectral_measure_discrete,
    stieltjes_inversion,
    transfer_polynomials,
    transform_hat,
)
from indefstring.weyl import structural_flags

OMEGA_MID = catalog.omega_atom_middle()            # omega = 1*delta at 1/2
OMEGA_MID_NEG = catalog.omega_atom_middle(-1.0)
UPS_MID = catalog.upsilon_atom_middle()            # upsilon = 1*delta at 1/2


def test_transfer_polynomials_atomic():
    theta, phi = transfer_polynomials(OMEGA_MID)
    # phi(z, 1) = 1 - z/4
    assert phi(0.0) == pytest.approx(1.0, abs=1e-14)
    assert phi(4.0) == pytest.approx(0.0, abs=1e-13)
    assert theta(0.0) == pytest.approx(1.0, abs=1e-14)


def test_eigenvalues_single_atom():
    assert discrete_eigenvalues(OMEGA_MID) == pytest.approx([4.0], abs=1e-12)
    assert discrete_eigenvalues(OMEGA_MID_NEG) == pytest.approx([-4.0], abs=1e-12)


def test_eigenvalues_upsilon_atom():
    assert discrete_eigenvalues(UPS_MID) == pytest.approx([-2.0, 2.0], abs=1e-12)


def test_eigenvalue_window_filter():
    assert discrete_eigenvalues(UPS_MID, window=(0.0, 3.0)) == pytest.approx([2.0], abs=1e-12)


def test_empty_string_has_no_eigenvalues():
    assert discrete_eigenvalues(catalog.empty_string()) == []


def test_eigenvalues_require_discrete_string():
    with pytest.raises(NotAtomic):
        discrete_eigenvalues(catalog.uniform_string())
    with pytest.raises(NotFiniteLength):
        discrete_eigenvalues(catalog.empty_halfline())


def test_eigenvalues_nonzero_and_simple_on_random_strings():
    rng = np.random.default_rng(31)
    for _ in range(10):
        spec = catalog.random_discrete_string(rng)
        eigs = discrete_eigenvalues(spec)
        assert all(abs(l) > 1e-10 for l in eigs)
        assert all(b - a > 1e-8 for a, b in zip(eigs, eigs[1:]))


def test_discrete_measure_masses():
    mu = spectral_measure_discrete(OMEGA_MID)
    assert mu.atoms == (pytest.approx((4.0, 1.0), abs=1e-12),)
    mu_neg = spectral_measure_discrete(OMEGA_MID_NEG)
    assert mu_neg.atoms == (pytest.approx((-4.0, 1.0), abs=1e-12),)
    mu_ups = spectral_measure_discrete(UPS_MID)
    assert mu_ups.atoms == (pytest.approx((-2.0, 0.5), abs=1e-12),
                            pytest.approx((2.0, 0.5), abs=1e-12))
    assert spectral_measure_discrete(catalog.empty_string()).atoms == ()


def test_measure_json_roundtrip():
    mu = spectral_measure_discrete(UPS_MID)
    again = measure_from_json(measure_to_json(mu))
    assert again.atoms == mu.atoms


def test_inversion_uniform_string():
    mu = stieltjes_inversion(catalog.uniform_string(), (5.0, 45.0))
    assert len(mu.atoms) == 2
    for (lam, mass), n in zip(mu.atoms, (1, 2)):
        expected = (n * np.pi) ** 2
        assert abs(lam - expected) <= 0.01 * expected
        assert abs(mass - 2.0) <= 0.02


def test_inversion_matches_discrete_residues():
    mu = stieltjes_inversion(OMEGA_MID, (2.0, 6.0))
    assert len(mu.atoms) == 1
    lam, mass = mu.atoms[0]
    assert lam == pytest.approx(4.0, abs=1e-3)
    assert mass == pytest.approx(1.0, abs=1e-3)


def test_inversion_empty_string_measure_vanishes():
    mu = stieltjes_inversion(catalog.empty_string(), (2.0, 6.0))
    assert mu.atoms == ()


def test_inversion_window_must_avoid_origin():
    with pytest.raises(WindowTouchesAtomZero):
        stieltjes_inversion(OMEGA_MID, (-1.0, 6.0))


def test_green_kernel_empty_string():
    g = green_kernel(catalog.empty_string(), 2j, 0.5, 0.25)
    assert g[0] == pytest.approx(0.125, abs=1e-12)
    assert g[1] == pytest.approx(2j * 0.125, abs=1e-12)


def test_green_kernel_symmetry():
    spec = catalog.mixed_example()
    a = green_kernel(spec, 1.5 + 0.5j, 0.4, 1.2)
    b = green_kernel(spec, 1.5 + 0.5j, 1.2, 0.4)
    assert np.allclose(a, b, atol=1e-12)


def test_green_kernel_atomic_diagonal():
    g = green_kernel(catalog.omega_atom_origin(), 1j, 0.5, 0.5)
    assert g[0] == pytest.approx(0.25, abs=1e-12)


def test_point_evaluator_shape():
    delta = point_evaluator(catalog.empty_string(), 0.5)
    assert delta.nodes == (0.0, 0.5, 1.0)
    assert delta.values == (0.0, 0.25, 0.0)
    ray = point_evaluator(catalog.empty_halfline(), 2.0)
    assert ray.nodes == (0.0, 2.0)
    assert ray.f1(5.0) == 2.0


def test_reproducing_identity():
    spec = OMEGA_MID
    f = HilbertElement(nodes=(0.0, 0.3, 0.7, 1.0), values=(0.0, 0.5, 0.2, 0.0))
    for x in (0.2, 0.5, 0.85):
        delta = point_evaluator(spec, x)
        assert hilbert_inner(spec, f, delta) == pytest.approx(f.f1(x), abs=1e-12)


def test_pointwise_bound_from_energy():
    spec = catalog.empty_string()
    f = HilbertElement(nodes=(0.0, 0.3, 0.7, 1.0), values=(0.0, 0.5, 0.2, 0.0))
    energy = hilbert_norm_squared(spec, f)
    for x in np.linspace(0.05, 0.95, 19):
        bound = x * (1.0 - x / spec.length) * energy
        assert f.f1(float(x)) ** 2 <= bound + 1e-12


def test_transform_point_evaluator():
    f = point_evaluator(OMEGA_MID, 0.5)
    assert transform_hat(OMEGA_MID, f, 4.0) == pytest.approx(0.5, abs=1e-12)
    assert transform_hat(OMEGA_MID, f, 0.0) == 0.0


def test_transform_vectorized_and_zero_at_origin():
    f = point_evaluator(OMEGA_MID, 0.5)
    vals = transform_hat(OMEGA_MID, f, np.array([0.0, 4.0]))
    assert vals.shape == (2,)
    assert vals[0] == 0.0


def test_parseval_point_evaluator():
    f = point_evaluator(OMEGA_MID, 0.5)
    mu = spectral_measure_discrete(OMEGA_MID)
    lhs = norm_squared_in_measure(mu, lambda l: transform_hat(OMEGA_MID, f, l))
    rhs = hilbert_norm_squared(OMEGA_MID, f)
    assert lhs == pytest.approx(0.25, abs=1e-12)
    assert rhs == pytest.approx(0.25, abs=1e-12)


def test_parseval_second_component():
    f = HilbertElement(nodes=(0.0,), values=(0.0,), f2_atoms=((0.5, 0.7),))
    mu = spectral_measure_discrete(UPS_MID)
    lhs = norm_squared_in_measure(mu, lambda l: transform_hat(UPS_MID, f, l))
    rhs = hilbert_norm_squared(UPS_MID, f)
    assert lhs == pytest.approx(0.49, abs=1e-12)
    assert rhs == pytest.approx(0.49, abs=1e-12)


def test_parseval_projection_on_random_discrete_strings():
    rng = np.random.default_rng(32)
    done = 0
    while done < 5:
        spec = catalog.random_discrete_string(rng)
        interior = [x for x, _ in spec.omega.atoms if x > 0.0]
        if not interior:
            continue
        done += 1
        nodes = tuple([0.0] + interior + [spec.length])
        values = tuple([0.0] + list(rng.uniform(-1.0, 1.0, size=len(interior))) + [0.0])
        f2 = tuple((x, float(rng.uniform(-1.0, 1.0))) for x, _ in spec.upsilon.atoms if x > 0.0)
        f = HilbertElement(nodes=nodes, values=values, f2_atoms=f2)
        mu = spectral_measure_discrete(spec)
        lhs = norm_squared_in_measure(mu, lambda l: transform_hat(spec, f, l))
        rhs = projection_energy(spec, f)
        assert lhs == pytest.approx(rhs, abs=1e-9 * max(1.0, rhs))


def test_transform_requires_compact_support():
    f = HilbertElement(nodes=(0.0, 0.5), values=(0.0, 0.3))
    with pytest.raises(UnsupportedShape):
        transform_hat(OMEGA_MID, f, 4.0)


def test_transform_rejects_f2_off_upsilon_atoms():
    f = HilbertElement(nodes=(0.0,), values=(0.0,), f2_atoms=((0.25, 1.0),))
    with pytest.raises(UnsupportedShape):
        transform_hat(UPS_MID, f, 2.0)


def test_sign_law_on_random_strings():
    rng = np.random.default_rng(33)
    for _ in range(8):
        spec = catalog.random_discrete_string(rng)
        eigs = discrete_eigenvalues(spec)
        predicted = structural_flags(spec)[1]
        assert (all(l >= 0.0 for l in eigs)) == predicted

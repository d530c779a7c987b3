import numpy as np
import pytest

from prostar.algebra import FiniteCStarAlgebra
from prostar.errors import StructuralError
from prostar.modules import (
    AdjointableOperator,
    HilbertModule,
    adjointability_residual,
)

B = FiniteCStarAlgebra((2,))
C = FiniteCStarAlgebra((1,))


def test_rank_one_inner_product(rng):
    e = HilbertModule.free(B, 1)
    a = B.random_element(rng)
    xi = e.element_from_entries([a])
    assert (xi.inner(xi) - a.adjoint() * a).frobenius() <= 1e-13


def test_zero_element():
    e = HilbertModule.free(B, 2)
    z = e.zero_element()
    assert z.inner(z).frobenius() == 0.0
    assert z.norm() == 0.0


def test_inner_product_symmetry_and_positivity(rng):
    e = HilbertModule.free(B, 3)
    xi, eta = e.random_element(rng), e.random_element(rng)
    assert (xi.inner(eta).adjoint() - eta.inner(xi)).frobenius() <= 1e-12
    assert xi.inner(xi).is_positive().positive
    # faithful: nonzero element has nonzero self-pairing
    assert xi.inner(xi).operator_norm() > 1e-8


def test_module_action_laws(rng):
    e = HilbertModule.free(B, 3)
    xi, eta = e.random_element(rng), e.random_element(rng)
    b, c = B.random_element(rng), B.random_element(rng)
    assert ((xi * B.unit()) - xi).flat.sum() == 0.0
    assert ((xi * b) * c - xi * (b * c)).norm() <= 1e-12 * max(1.0, xi.norm())
    assert ((xi * b).inner(eta) - b.adjoint() * xi.inner(eta)).frobenius() <= 1e-12
    assert (xi.inner(eta * b) - xi.inner(eta) * b).frobenius() <= 1e-12


def test_cauchy_schwarz(rng):
    e = HilbertModule.free(B, 2)
    for _ in range(10):
        xi, eta = e.random_element(rng), e.random_element(rng)
        assert xi.inner(eta).operator_norm() <= xi.norm() * eta.norm() + 1e-9


def test_adjoint_involution_and_composition(rng):
    e = HilbertModule.free(B, 2)
    t = AdjointableOperator.from_entries(
        e, e, [[B.random_element(rng) for _ in range(2)] for _ in range(2)]
    )
    s = AdjointableOperator.from_entries(
        e, e, [[B.random_element(rng) for _ in range(2)] for _ in range(2)]
    )
    assert np.array_equal(t.adjoint().adjoint().flat, t.flat)
    assert np.allclose(
        (s @ t).adjoint().flat, (t.adjoint() @ s.adjoint()).flat, atol=1e-12
    )
    # identity composition
    ident = e.identity_operator()
    assert np.allclose((t @ ident).flat, t.flat)
    # <T xi, eta> = <xi, T* eta> on all basis pairs
    assert adjointability_residual(t) <= 1e-11


def test_transpose_unit_operator():
    # B = C, the matrix-unit operator on B^2 has the transposed unit as adjoint
    e = HilbertModule.free(C, 2)
    t = AdjointableOperator.from_complex_matrix(e, e, np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert np.allclose(t.adjoint().flat, np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_operator_cstar_identity(rng):
    e = HilbertModule.free(B, 2)
    t = AdjointableOperator.from_entries(
        e, e, [[B.random_element(rng) for _ in range(2)] for _ in range(2)]
    )
    n = t.norm()
    assert abs((t.adjoint() @ t).norm() - n * n) <= 1e-9 * n * n


def test_norms():
    e1 = HilbertModule.free(B, 1)
    unit_col = e1.element_from_entries([B.unit()])
    assert unit_col.norm() == pytest.approx(1.0)
    assert e1.identity_operator().norm() == pytest.approx(1.0)


def test_is_unitary():
    e = HilbertModule.free(B, 2)
    assert e.identity_operator().is_unitary().passed
    swap = AdjointableOperator.from_complex_matrix(e, e, np.array([[0, 1], [1, 0]]))
    assert swap.is_unitary().passed
    e1 = HilbertModule.free(C, 1)
    half = 0.5 * e1.identity_operator()
    rep = half.is_unitary()
    assert not rep.passed
    assert rep.check("T*T = id").residual == pytest.approx(0.75)


@pytest.mark.parametrize(
    "algebra,rank,expected",
    [(B, 1, 4), (C, 2, 2), (B, 2, 8)],
)
def test_complex_basis_free(algebra, rank, expected):
    e = HilbertModule.free(algebra, rank)
    assert e.complex_dim == expected
    # linear independence: coordinates round-trip exactly on basis elements
    for k, b in enumerate(e.complex_basis):
        coords = e.coords_of(b)
        assert abs(coords[k] - 1.0) <= 1e-10
        assert np.linalg.norm(np.delete(coords, k)) <= 1e-10


def test_complex_basis_projective():
    v = np.array([[0.6], [0.8]], dtype=complex)
    proj = v @ v.conj().T
    m = HilbertModule(C, 2, proj)
    assert m.complex_dim == 1
    xi = m.complex_basis[0]
    assert xi.range_defect() <= 1e-12


def test_structural_mismatches(rng):
    e2 = HilbertModule.free(B, 2)
    e3 = HilbertModule.free(B, 3)
    with pytest.raises(StructuralError):
        e2.random_element(rng).inner(e3.random_element(rng))
    t = e2.identity_operator()
    with pytest.raises(StructuralError):
        t(e3.random_element(rng))

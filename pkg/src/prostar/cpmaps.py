"""Completely positive maps A -> L_B(E): basis values, amplification, Choi tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .algebra import (
    AlgebraElement,
    Check,
    FiniteCStarAlgebra,
    VerificationReport,
)
from .errors import PreconditionError, StructuralError
from .linalg import DEFAULT_TOL
from .modules import AdjointableOperator, HilbertModule


@dataclass(frozen=True)
class CPCertificate:
    """Outcome of the blockwise Choi test."""

    is_hermitian_preserving: bool
    hermitian_residual: float
    choi_min_eigenvalues: tuple[float, ...]
    is_cp: bool
    tol: float

    @property
    def min_eigenvalue(self) -> float:
        return min(self.choi_min_eigenvalues)


@dataclass(eq=False)
class CompletelyPositiveMap:
    """Linear map A -> L_B(E), stored by its values on the matrix-unit basis of A."""

    source: FiniteCStarAlgebra
    module: HilbertModule
    basis_values: tuple[AdjointableOperator, ...]
    certification: CPCertificate | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.basis_values) != self.source.linear_dim:
            raise StructuralError(
                f"need {self.source.linear_dim} basis values, got {len(self.basis_values)}"
            )
        for op in self.basis_values:
            if op.domain != self.module or op.codomain != self.module:
                raise StructuralError("basis values must be endomorphisms of the target module")
        self.basis_values = tuple(self.basis_values)

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_callable(
        cls,
        source: FiniteCStarAlgebra,
        module: HilbertModule,
        fn: Callable[[AlgebraElement], AdjointableOperator],
    ) -> "CompletelyPositiveMap":
        return cls(source, module, tuple(fn(b) for b in source.basis()))

    @classmethod
    def from_dense_images(
        cls, source: FiniteCStarAlgebra, module: HilbertModule, images: Sequence
    ) -> "CompletelyPositiveMap":
        values = []
        for m in images:
            op = AdjointableOperator(module, module, linalg.as_complex_matrix(m))
            module._check_b_structure(op.flat, module.rank, module.rank)
            if op.corner_defect() > 1e-9 * max(1.0, linalg.frobenius(op.flat)):
                raise StructuralError("image does not respect the module's range projection")
            values.append(op)
        return cls(source, module, tuple(values))

    @classmethod
    def identity_representation(
        cls, source: FiniteCStarAlgebra, module: HilbertModule
    ) -> "CompletelyPositiveMap":
        """a -> a acting on E when E's flattened fibre is the defining space of A."""
        if module.flat_dim != source.total_dim:
            raise StructuralError(
                f"identity representation needs flat module dimension {source.total_dim}"
            )
        return cls.from_dense_images(source, module, [b.dense() for b in source.basis()])

    @classmethod
    def trace_state(cls, source: FiniteCStarAlgebra, module: HilbertModule) -> "CompletelyPositiveMap":
        """a -> (trace a / trace 1) * id_E, the normalized-trace state."""
        total = float(source.total_dim)
        images = [
            (b.trace() / total) * module.projection_flat for b in source.basis()
        ]
        return cls.from_dense_images(source, module, images)

    @classmethod
    def from_kraus(
        cls, source: FiniteCStarAlgebra, module: HilbertModule, kraus: Sequence
    ) -> "CompletelyPositiveMap":
        """a -> sum_r K_r a K_r* with K_r of shape (flat_dim(E), total_dim(A)).

        The caller must supply Kraus terms whose images stay inside L_B(E);
        this is checked at construction.
        """
        ks = [linalg.as_complex_matrix(k) for k in kraus]
        for k in ks:
            if k.shape != (module.flat_dim, source.total_dim):
                raise StructuralError(
                    f"Kraus shape {k.shape} != {(module.flat_dim, source.total_dim)}"
                )
        images = []
        for b in source.basis():
            dense = b.dense()
            images.append(sum(k @ dense @ k.conj().T for k in ks))
        return cls.from_dense_images(source, module, images)

    @classmethod
    def zero(cls, source: FiniteCStarAlgebra, module: HilbertModule) -> "CompletelyPositiveMap":
        z = np.zeros((module.flat_dim, module.flat_dim), dtype=np.complex128)
        return cls.from_dense_images(source, module, [z] * source.linear_dim)

    # -- evaluation ----------------------------------------------------------

    @cached_property
    def _value_tensor(self) -> np.ndarray:
        return np.stack([op.flat for op in self.basis_values], axis=0)

    @cached_property
    def _value_matrix(self) -> np.ndarray:
        fd = self.module.flat_dim
        return self._value_tensor.reshape(self.source.linear_dim, fd * fd)

    def __call__(self, a: AlgebraElement) -> AdjointableOperator:
        if a.algebra != self.source:
            raise StructuralError("element does not belong to the source algebra")
        fd = self.module.flat_dim
        flat = (a.coords() @ self._value_matrix).reshape(fd, fd)
        return AdjointableOperator(self.module, self.module, flat)

    def value(self, index: int) -> AdjointableOperator:
        return self.basis_values[index]

    # -- structure tests -----------------------------------------------------

    def hermiticity_residual(self) -> float:
        worst = 0.0
        for i, b in enumerate(self.source.basis()):
            lhs = self(b.adjoint())
            worst = max(worst, linalg.frobenius(lhs.flat - self.basis_values[i].flat.conj().T))
        return worst

    def choi_matrices(self) -> list[np.ndarray]:
        """Per source block: C_k = sum_ij E_ij (x) rho(E_ij), flattened over L_B(E)."""
        fd = self.module.flat_dim
        out = []
        for k, n in enumerate(self.source.block_sizes):
            off = self.source.coord_offsets[k]
            vals = self._value_tensor[off : off + n * n].reshape(n, n, fd, fd)
            choi = vals.transpose(0, 2, 1, 3).reshape(n * fd, n * fd)
            out.append(choi)
        return out

    def verify_completely_positive(self, tol: float = DEFAULT_TOL) -> CPCertificate:
        herm = self.hermiticity_residual()
        scale = max(1.0, max(linalg.frobenius(v.flat) for v in self.basis_values))
        herm_ok = herm <= tol * scale
        mins = []
        for choi in self.choi_matrices():
            if linalg.hermitian_defect(choi) > tol * max(1.0, linalg.frobenius(choi)):
                sym = (choi + choi.conj().T) / 2.0
                anti = linalg.spectral_norm(choi - sym)
                mins.append(min(linalg.min_eigenvalue(sym), -anti))
            else:
                mins.append(linalg.min_eigenvalue((choi + choi.conj().T) / 2.0))
        cert = CPCertificate(
            is_hermitian_preserving=herm_ok,
            hermitian_residual=herm,
            choi_min_eigenvalues=tuple(float(m) for m in mins),
            is_cp=herm_ok and all(m >= -tol for m in mins),
            tol=tol,
        )
        self.certification = cert
        return cert

    def verify_nondegenerate(self, tol: float = DEFAULT_TOL) -> VerificationReport:
        """Unitality rho(1) = id_E, the finite-dimensional form of non-degeneracy."""
        resid = linalg.spectral_norm(
            self(self.source.unit()).flat - self.module.projection_flat
        )
        return VerificationReport(
            "non-degeneracy", (Check("rho(1) = id_E", float(resid), tol),)
        )

    def verify_representation(self, tol: float = DEFAULT_TOL) -> VerificationReport:
        """Unital *-homomorphism check of the map into L_B(E), on all basis pairs."""
        basis = list(self.source.basis())
        dim = self.source.linear_dim
        vals = self._value_tensor
        products = np.matmul(vals[:, None, :, :], vals[None, :, :, :])
        prod_coords = np.empty((dim, dim, dim), dtype=np.complex128)
        for i, a in enumerate(basis):
            for j, b in enumerate(basis):
                prod_coords[i, j] = (a * b).coords()
        expected = np.tensordot(prod_coords, vals, axes=([2], [0]))
        mult = float(np.sqrt(np.max(np.sum(np.abs(products - expected) ** 2, axis=(2, 3)))))
        star = self.hermiticity_residual()
        unital = linalg.frobenius(self(self.source.unit()).flat - self.module.projection_flat)
        return VerificationReport(
            "representation",
            (
                Check("multiplicative", float(mult), tol),
                Check("star", float(star), tol),
                Check("unital", float(unital), tol),
            ),
        )

    # -- amplification -------------------------------------------------------

    def amplify(self, n: int) -> "CompletelyPositiveMap":
        """Entrywise application on n×n matrices over A, as a map M_n(A) -> L_B(E^n)."""
        if n < 1:
            raise PreconditionError("amplification order must be >= 1")
        if n == 1:
            return self
        big_source = FiniteCStarAlgebra(tuple(n * m for m in self.source.block_sizes))
        big_module = HilbertModule(
            self.module.algebra,
            n * self.module.rank,
            np.kron(np.eye(n, dtype=np.complex128), self.module.projection_flat),
        )
        fd = self.module.flat_dim
        values = []
        for k, m in enumerate(self.source.block_sizes):
            for big_row in range(n * m):
                for big_col in range(n * m):
                    i, u = divmod(big_row, m)
                    j, v = divmod(big_col, m)
                    flat = np.zeros((n * fd, n * fd), dtype=np.complex128)
                    inner = self.basis_values[self.source.basis_index(k, u, v)].flat
                    flat[i * fd : (i + 1) * fd, j * fd : (j + 1) * fd] = inner
                    values.append(AdjointableOperator(big_module, big_module, flat))
        return CompletelyPositiveMap(big_source, big_module, tuple(values))

    def __str__(self) -> str:
        return f"CP map {self.source} -> L_B({self.module})"


def apply_cp(rho: CompletelyPositiveMap, a: AlgebraElement) -> AdjointableOperator:
    return rho(a)


def amplify(rho: CompletelyPositiveMap, n: int) -> CompletelyPositiveMap:
    return rho.amplify(n)


def choi_matrices(rho: CompletelyPositiveMap) -> list[np.ndarray]:
    return rho.choi_matrices()


def verify_completely_positive(rho: CompletelyPositiveMap, tol: float = DEFAULT_TOL) -> CPCertificate:
    return rho.verify_completely_positive(tol)


def verify_nondegenerate(rho: CompletelyPositiveMap, tol: float = DEFAULT_TOL) -> VerificationReport:
    return rho.verify_nondegenerate(tol)


def require_certified_cp(rho: CompletelyPositiveMap, tol: float = DEFAULT_TOL) -> CPCertificate:
    """Certify on demand; raise PreconditionError when the map is not CP."""
    cert = rho.certification or rho.verify_completely_positive(tol)
    if not cert.is_cp:
        raise PreconditionError(
            f"map is not completely positive (Choi minimum {cert.min_eigenvalue:.3e})"
        )
    return cert

"""Convolution algebra C(G,A), its concrete C*-realization, and extensions.

The crossed product is realized by the regular representation on the
defining space of A tensored with functions on G: a acts by alpha_{t^-1}(a)
at coordinate t, the group shifts coordinates, and a function f embeds as
sum_g pi(f(g)) lambda_g. Integration over the finite group is the plain sum
(counting Haar measure); the modular function is constant 1 but kept in the
involution formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg
from .algebra import (
    AlgebraElement,
    Check,
    FiniteCStarAlgebra,
    VerificationReport,
    WedderburnDecomposition,
    wedderburn_decompose,
)
from .cpmaps import CompletelyPositiveMap
from .dilation import CovariantDilation
from .errors import NumericalError, PreconditionError, StructuralError
from .groups import GroupAction, UnitaryRepresentation, check_covariance
from .linalg import DEFAULT_TOL
from .modules import AdjointableOperator, HilbertModule


@dataclass(eq=False)
class ConvolutionElement:
    """A function f: G -> A attached to a dynamical system (G, A, alpha)."""

    system: GroupAction
    values: tuple[AlgebraElement, ...]

    def __post_init__(self):
        if len(self.values) != self.system.group.order:
            raise StructuralError("need one value per group element")
        for v in self.values:
            if v.algebra != self.system.algebra:
                raise StructuralError("value outside the coefficient algebra")

    @classmethod
    def delta(cls, system: GroupAction, g: int, a: AlgebraElement) -> "ConvolutionElement":
        values = [system.algebra.zero() for _ in range(system.group.order)]
        values[g] = a
        return cls(system, tuple(values))

    @classmethod
    def unit(cls, system: GroupAction) -> "ConvolutionElement":
        e = system.group.identity
        if e is None:
            raise StructuralError("system group has no identity")
        return cls.delta(system, e, system.algebra.unit())

    def _require_same(self, other: "ConvolutionElement") -> None:
        if self.system is not other.system and (
            self.system.group != other.system.group
            or self.system.algebra != other.system.algebra
        ):
            raise StructuralError("convolution elements from different systems")

    def __add__(self, other: "ConvolutionElement") -> "ConvolutionElement":
        self._require_same(other)
        return ConvolutionElement(
            self.system, tuple(a + b for a, b in zip(self.values, other.values))
        )

    def __sub__(self, other: "ConvolutionElement") -> "ConvolutionElement":
        self._require_same(other)
        return ConvolutionElement(
            self.system, tuple(a - b for a, b in zip(self.values, other.values))
        )

    def __rmul__(self, scalar) -> "ConvolutionElement":
        return ConvolutionElement(self.system, tuple(complex(scalar) * a for a in self.values))

    def convolve(self, other: "ConvolutionElement") -> "ConvolutionElement":
        """(f x h)(s) = sum_t f(t) alpha_t(h(t^-1 s))."""
        self._require_same(other)
        group, action = self.system.group, self.system
        out = []
        for s in group.elements():
            acc = self.system.algebra.zero()
            for t in group.elements():
                idx = group.multiply(group.inverse(t), s)
                acc = acc + self.values[t] * action.apply(t, other.values[idx])
            out.append(acc)
        return ConvolutionElement(self.system, tuple(out))

    def involution(self) -> "ConvolutionElement":
        """f#(t) = Delta(t)^-1 alpha_t(f(t^-1)*); Delta is 1 on a finite group."""
        group, action = self.system.group, self.system
        out = []
        for t in group.elements():
            factor = 1.0 / group.modular_function(t)
            out.append(factor * action.apply(t, self.values[group.inverse(t)].adjoint()))
        return ConvolutionElement(self.system, tuple(out))

    def l1_seminorm(self, level_map=None) -> float:
        """N(f) = sum_g ||f(g)||, optionally evaluated at a lower tower level.

        `level_map` is a connecting *-homomorphism out of the coefficient
        algebra; values are pushed through it before taking norms.
        """
        if level_map is None:
            return float(sum(v.operator_norm() for v in self.values))
        if level_map.source != self.system.algebra:
            raise StructuralError("level map does not start at the coefficient algebra")
        return float(sum(level_map.apply(v).operator_norm() for v in self.values))

    def coords(self) -> np.ndarray:
        """Coordinates in the g-major spanning order delta_g (x) basis_i."""
        return np.concatenate([v.coords() for v in self.values])


def convolve(f: ConvolutionElement, h: ConvolutionElement) -> ConvolutionElement:
    return f.convolve(h)


def involution(f: ConvolutionElement) -> ConvolutionElement:
    return f.involution()


def l1_seminorm(f: ConvolutionElement, level_map=None) -> float:
    return f.l1_seminorm(level_map)


@dataclass(eq=False)
class CrossedProductRealization:
    """A⋊G: regular-representation embedding plus its standard form."""

    system: GroupAction
    ambient_dim: int
    wedderburn: WedderburnDecomposition
    embedding_report: VerificationReport

    @property
    def standard_algebra(self) -> FiniteCStarAlgebra:
        return self.wedderburn.standard_form

    @property
    def conv_dim(self) -> int:
        return self.system.group.order * self.system.algebra.linear_dim

    def conv_basis(self) -> list[ConvolutionElement]:
        out = []
        for g in self.system.group.elements():
            for b in self.system.algebra.basis():
                out.append(ConvolutionElement.delta(self.system, g, b))
        return out

    def embed(self, f: ConvolutionElement) -> np.ndarray:
        """Concrete matrix of f: block (t, t') is alpha_{t^-1}(f(t t'^-1))."""
        group, alg = self.system.group, self.system.algebra
        d = alg.total_dim
        out = np.zeros((self.ambient_dim, self.ambient_dim), dtype=np.complex128)
        for t in group.elements():
            inv_t = group.inverse(t)
            for tp in group.elements():
                g = group.multiply(t, group.inverse(tp))
                block = self.system.apply(inv_t, f.values[g]).dense()
                out[t * d : (t + 1) * d, tp * d : (tp + 1) * d] = block
        return out

    def extract_convolution(self, matrix) -> ConvolutionElement:
        """Inverse of `embed` on its image, read off the identity block row."""
        m = linalg.as_complex_matrix(matrix)
        group, alg = self.system.group, self.system.algebra
        d = alg.total_dim
        e = group.identity
        values = []
        for g in group.elements():
            tp = group.inverse(g)
            values.append(
                alg.from_dense(m[e * d : (e + 1) * d, tp * d : (tp + 1) * d], check=False)
            )
        return ConvolutionElement(self.system, tuple(values))

    def standardize(self, f: ConvolutionElement) -> AlgebraElement:
        return self.wedderburn.to_standard(self.embed(f))

    def unstandardize(self, a: AlgebraElement) -> ConvolutionElement:
        return self.extract_convolution(self.wedderburn.from_standard(a))

    @cached_property
    def _std_from_conv(self) -> np.ndarray:
        """Linear map: convolution coordinates -> standard-form coordinates."""
        cols = [self.standardize(f).coords() for f in self.conv_basis()]
        return np.stack(cols, axis=1)

    @cached_property
    def _conv_from_std(self) -> np.ndarray:
        return np.linalg.inv(self._std_from_conv)


def build_crossed_product(
    system: GroupAction, *, seed: int = 0, tol: float = DEFAULT_TOL
) -> CrossedProductRealization:
    """Realize A⋊G concretely and bring it to standard form.

    Verifies that the embedding turns convolution into composition and the
    involution into the adjoint on all spanning pairs, and that it is
    injective (so dim(A⋊G) = |G|·dim(A)).
    """
    group, alg = system.group, system.algebra
    if group.identity is None:
        raise PreconditionError("system group has no identity element")
    xp = CrossedProductRealization(
        system=system,
        ambient_dim=group.order * alg.total_dim,
        wedderburn=None,
        embedding_report=None,
    )
    basis = xp.conv_basis()
    embedded = [xp.embed(f) for f in basis]
    m = len(basis)

    stack = np.stack([e.ravel() for e in embedded], axis=1)
    rank = linalg.matrix_rank(stack)
    injective = Check("embedding injective", float(m - rank), 0.5, f"rank {rank} of {m}")

    emb_tensor = np.stack(embedded, axis=0)
    products = np.matmul(emb_tensor[:, None, :, :], emb_tensor[None, :, :, :])
    conv_coords = np.zeros((m, m, m), dtype=np.complex128)
    for i, f in enumerate(basis):
        for j, h in enumerate(basis):
            conv_coords[i, j] = f.convolve(h).coords()
    expected = np.tensordot(conv_coords, emb_tensor, axes=([2], [0]))
    mult = float(np.sqrt(np.max(np.sum(np.abs(products - expected) ** 2, axis=(2, 3)))))

    star = 0.0
    for i, f in enumerate(basis):
        star = max(
            star, linalg.frobenius(xp.embed(f.involution()) - embedded[i].conj().T)
        )
    unital = linalg.frobenius(
        xp.embed(ConvolutionElement.unit(system)) - np.eye(xp.ambient_dim)
    )
    round_trip = 0.0
    for i, f in enumerate(basis):
        back = xp.extract_convolution(embedded[i])
        round_trip = max(
            round_trip, max((a - b).frobenius() for a, b in zip(back.values, f.values))
        )

    xp.embedding_report = VerificationReport(
        f"crossed product embedding ({alg} by group of order {group.order})",
        (
            Check("convolution -> product", mult, tol),
            Check("involution -> adjoint", star, tol),
            Check("unit -> identity", unital, tol),
            injective,
            Check("extraction round trip", round_trip, tol),
        ),
    )
    if not xp.embedding_report.passed:
        raise NumericalError(
            f"crossed-product embedding failed verification:\n{xp.embedding_report}"
        )
    xp.wedderburn = wedderburn_decompose(embedded, seed=seed, tol=tol)
    return xp


@dataclass(eq=False)
class IntegratedForm:
    """(Phi x v): the representation of A⋊G attached to a covariant pair."""

    crossed: CrossedProductRealization
    representation: CompletelyPositiveMap  # Phi, a verified representation on F
    unitaries: UnitaryRepresentation  # v on F
    standard_map: CompletelyPositiveMap  # the induced map on the standard form
    report: VerificationReport

    @property
    def module(self) -> HilbertModule:
        return self.representation.module

    def on_convolution(self, f: ConvolutionElement) -> AdjointableOperator:
        """(Phi x v)(f) = sum_g Phi(f(g)) v_g."""
        acc = np.zeros((self.module.flat_dim, self.module.flat_dim), dtype=np.complex128)
        for g in self.crossed.system.group.elements():
            acc += self.representation(f.values[g]).flat @ self.unitaries.unitaries[g].flat
        return AdjointableOperator(self.module, self.module, acc)

    def on_standard(self, a: AlgebraElement) -> AdjointableOperator:
        return self.standard_map(a)


def integrated_form(
    phi: CompletelyPositiveMap,
    v: UnitaryRepresentation,
    xp: CrossedProductRealization,
    tol: float = DEFAULT_TOL,
) -> IntegratedForm:
    """Integrate a covariant representation (Phi, v, F) over the crossed product.

    Preconditions: Phi is a unital *-representation and (Phi, v, F) is
    covariant for the system of `xp`. The result is verified to send
    convolution to composition and the involution to the adjoint on the
    whole spanning set {delta_g (x) a_i}; by linearity this pins the map on
    all of A⋊G, which realizes the uniqueness clause.
    """
    action = xp.system
    if phi.source != action.algebra:
        raise StructuralError("representation source differs from the system algebra")
    rep_check = phi.verify_representation(max(tol, 1e-9))
    if not rep_check.passed:
        raise PreconditionError(
            f"Phi is not a unital *-representation (residual {rep_check.max_residual:.3e})"
        )
    cov = check_covariance(phi, action, v, max(tol, 1e-8))
    if not cov.passed:
        raise PreconditionError(
            f"(Phi, v) is not covariant (residual {cov.max_residual:.3e})"
        )

    group = action.group
    dim_a = action.algebra.linear_dim
    fd = phi.module.flat_dim
    phi_tensor = phi._value_tensor
    u_tensor = np.stack([u.flat for u in v.unitaries], axis=0)

    # Spanning values K[g, i] = Phi(a_i) v_g.
    k_values = np.einsum("aij,gjk->gaik", phi_tensor, u_tensor, optimize=True)

    # Multiplicativity on every spanning pair (delta_g a_i, delta_h a_j):
    # both sides share the right factor v_{gh}, which is unitary, so the
    # residual equals || Phi(a_i) (v_g Phi(a_j) v_g*) - Phi(a_i alpha_g(a_j)) ||.
    basis = list(action.algebra.basis())
    mult = 0.0
    for g in group.elements():
        ug = u_tensor[g]
        conj = np.matmul(ug[None], np.matmul(phi_tensor, ug.conj().T[None]))
        lhs = np.matmul(phi_tensor[:, None, :, :], conj[None, :, :, :])
        twisted = np.empty((dim_a, dim_a, dim_a), dtype=np.complex128)
        for i, a in enumerate(basis):
            for j, b in enumerate(basis):
                twisted[i, j] = (a * action.apply(g, b)).coords()
        rhs = np.tensordot(twisted, phi_tensor, axes=([2], [0]))
        mult = max(mult, float(np.sqrt(np.max(np.sum(np.abs(lhs - rhs) ** 2, axis=(2, 3))))))

    star = 0.0
    for g in group.elements():
        for i, a in enumerate(basis):
            f = ConvolutionElement.delta(action, g, a)
            lhs_op = _sum_form(f.involution(), phi, v)
            rhs = (phi_tensor[i] @ u_tensor[g]).conj().T
            star = max(star, linalg.frobenius(lhs_op - rhs))

    unital = linalg.frobenius(
        _sum_form(ConvolutionElement.unit(action), phi, v) - phi.module.projection_flat
    )

    # Factor through the standard form: values on the standard basis by linearity.
    k_matrix = k_values.reshape(group.order * dim_a, fd * fd)
    std_values = (xp._conv_from_std.T @ k_matrix).reshape(-1, fd, fd)
    standard_map = CompletelyPositiveMap(
        xp.standard_algebra,
        phi.module,
        tuple(AdjointableOperator(phi.module, phi.module, m) for m in std_values),
    )
    std_report = standard_map.verify_representation(max(tol, 1e-9))

    checks = (
        Check("convolution -> composition (spanning pairs)", mult, max(tol, 1e-9)),
        Check("involution -> adjoint (spanning set)", star, max(tol, 1e-9)),
        Check("unit of C(G,A) -> identity", unital, max(tol, 1e-9)),
        Check(
            "standard-form factorization is a unital *-homomorphism",
            std_report.max_residual,
            max(tol, 1e-9),
        ),
    )
    return IntegratedForm(
        crossed=xp,
        representation=phi,
        unitaries=v,
        standard_map=standard_map,
        report=VerificationReport("integrated form", checks),
    )


def _sum_form(
    f: ConvolutionElement, phi: CompletelyPositiveMap, v: UnitaryRepresentation
) -> np.ndarray:
    acc = np.zeros((phi.module.flat_dim, phi.module.flat_dim), dtype=np.complex128)
    for g in f.system.group.elements():
        acc += phi(f.values[g]).flat @ v.unitaries[g].flat
    return acc


@dataclass(eq=False)
class CovariantExtension:
    """phi = V*(Phi_rho x v_rho)(.)V, the CP extension of rho to A⋊G."""

    dilation: CovariantDilation
    crossed: CrossedProductRealization
    integrated: IntegratedForm
    standard_map: CompletelyPositiveMap  # on the standard form of A⋊G, CP-certified
    report: VerificationReport

    def on_convolution(self, f: ConvolutionElement) -> AdjointableOperator:
        v = self.dilation.connector.flat
        inner = self.integrated.on_convolution(f).flat
        module = self.dilation.cp_map.module
        return AdjointableOperator(module, module, v.conj().T @ inner @ v)

    def direct_form(self, f: ConvolutionElement) -> AdjointableOperator:
        """The defining formula sum_g rho(f(g)) u_g, computed without the dilation."""
        rho, rep = self.dilation.cp_map, self.dilation.rep
        module = rho.module
        acc = np.zeros((module.flat_dim, module.flat_dim), dtype=np.complex128)
        for g in f.system.group.elements():
            acc += rho(f.values[g]).flat @ rep.unitaries[g].flat
        return AdjointableOperator(module, module, acc)


def extend_covariant_cp(
    d: CovariantDilation,
    xp: CrossedProductRealization,
    tol: float = DEFAULT_TOL,
) -> CovariantExtension:
    """Extend a covariant CP map to a CP map on the crossed product.

    The extension is phi(x) = V* (Phi x v)(x) V on the standard form; it is
    verified to agree with sum_g rho(f(g)) u_g on the spanning set, to be
    unital, and to be completely positive (blockwise Choi test on the
    standard form).
    """
    if d.residuals is None or not d.residuals.passed:
        raise PreconditionError("extension needs a verified covariant dilation")
    if xp.system is not d.action and (
        xp.system.group != d.action.group or xp.system.algebra != d.action.algebra
    ):
        raise StructuralError("crossed product belongs to a different dynamical system")

    integrated = integrated_form(d.representation, d.group_unitaries, xp, tol)
    v_flat = d.connector.flat
    module = d.cp_map.module
    values = tuple(
        AdjointableOperator(
            module, module, v_flat.conj().T @ op.flat @ v_flat
        )
        for op in integrated.standard_map.basis_values
    )
    phi_std = CompletelyPositiveMap(xp.standard_algebra, module, values)
    cert = phi_std.verify_completely_positive(max(tol, 1e-9))

    # Spanning agreement phi(delta_g a) = rho(a) u_g.
    rho, rep = d.cp_map, d.rep
    agree = 0.0
    for g in d.action.group.elements():
        for i in range(rho.source.linear_dim):
            lhs = (
                v_flat.conj().T
                @ d.representation.basis_values[i].flat
                @ d.group_unitaries.unitaries[g].flat
                @ v_flat
            )
            rhs = rho.basis_values[i].flat @ rep.unitaries[g].flat
            agree = max(agree, linalg.frobenius(lhs - rhs))

    unit_std = xp.standardize(ConvolutionElement.unit(xp.system))
    nondeg = linalg.frobenius(phi_std(unit_std).flat - module.projection_flat)

    checks = (
        Check("phi(delta_g a) = rho(a) u_g (spanning set)", float(agree), max(tol, 1e-10)),
        Check("phi(1) = id_E", float(nondeg), max(tol, 1e-10)),
        Check(
            "phi completely positive (Choi on standard form)",
            float(max(0.0, -cert.min_eigenvalue)),
            max(tol, 1e-9),
        ),
        Check(
            "restriction to delta_e (x) A equals rho",
            float(
                max(
                    linalg.frobenius(
                        (
                            v_flat.conj().T
                            @ d.representation.basis_values[i].flat
                            @ d.group_unitaries.unitaries[d.action.group.identity].flat
                            @ v_flat
                        )
                        - rho.basis_values[i].flat
                    )
                    for i in range(rho.source.linear_dim)
                )
            ),
            max(tol, 1e-10),
        ),
    )
    return CovariantExtension(
        dilation=d,
        crossed=xp,
        integrated=integrated,
        standard_map=phi_std,
        report=VerificationReport("covariant CP extension to A⋊G", checks),
    )

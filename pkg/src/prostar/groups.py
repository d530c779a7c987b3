"""Finite groups, actions by *-automorphisms, unitary representations, covariance.

Groups are Cayley tables over indices 0..order-1. The modular function is
housed as the constant 1 (finite groups are unimodular); convolution-algebra
formulas keep the factor for fidelity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from typing import Sequence

import numpy as np

from . import linalg
from .algebra import (
    AlgebraElement,
    Check,
    FiniteCStarAlgebra,
    StarHomomorphism,
    VerificationReport,
)
from .cpmaps import CompletelyPositiveMap
from .errors import StructuralError
from .linalg import DEFAULT_TOL
from .modules import AdjointableOperator, HilbertModule


@dataclass(frozen=True)
class FiniteGroup:
    """A finite group as a Cayley table: entry [g][h] is the index of g·h."""

    cayley: tuple[tuple[int, ...], ...]
    element_names: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.cayley)
        if any(len(row) != n for row in self.cayley):
            raise StructuralError("Cayley table must be square")
        if any(not (0 <= v < n) for row in self.cayley for v in row):
            raise StructuralError("Cayley table entries out of range")
        if not self.element_names:
            object.__setattr__(self, "element_names", tuple(str(i) for i in range(n)))

    @classmethod
    def from_table(cls, table, names: Sequence[str] = ()) -> "FiniteGroup":
        rows = tuple(tuple(int(v) for v in row) for row in table)
        return cls(rows, tuple(names))

    @classmethod
    def trivial(cls) -> "FiniteGroup":
        return cls.cyclic(1)

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        table = tuple(tuple((g + h) % n for h in range(n)) for g in range(n))
        return cls(table, tuple(str(k) for k in range(n)))

    @classmethod
    def symmetric(cls, n: int) -> "FiniteGroup":
        """S_n on {0..n-1}; element order is lexicographic in one-line notation."""
        perms = list(permutations(range(n)))
        index = {p: i for i, p in enumerate(perms)}
        table = tuple(
            tuple(index[tuple(p[q[x]] for x in range(n))] for q in perms) for p in perms
        )
        names = tuple("".join(str(x) for x in p) for p in perms)
        return cls(table, names)

    @property
    def order(self) -> int:
        return len(self.cayley)

    @cached_property
    def identity(self) -> int | None:
        for e in range(self.order):
            if all(self.cayley[e][h] == h and self.cayley[h][e] == h for h in range(self.order)):
                return e
        return None

    @cached_property
    def inverses(self) -> tuple[int | None, ...]:
        e = self.identity
        out = []
        for g in range(self.order):
            inv = None
            if e is not None:
                for h in range(self.order):
                    if self.cayley[g][h] == e and self.cayley[h][g] == e:
                        inv = h
                        break
            out.append(inv)
        return tuple(out)

    def multiply(self, g: int, h: int) -> int:
        return self.cayley[g][h]

    def inverse(self, g: int) -> int:
        inv = self.inverses[g]
        if inv is None:
            raise StructuralError(f"element {g} has no inverse in this table")
        return inv

    def modular_function(self, g: int) -> float:
        """Finite groups are unimodular."""
        return 1.0

    def elements(self) -> range:
        return range(self.order)

    def __str__(self) -> str:
        return f"group of order {self.order}"


def verify_group(group: FiniteGroup) -> VerificationReport:
    """Exhaustive identity/inverse/associativity check with a witness on failure."""
    identity_fail = 1.0 if group.identity is None else 0.0
    inverse_fail, inverse_witness = 0.0, ""
    for g in range(group.order):
        if group.inverses[g] is None:
            inverse_fail = 1.0
            inverse_witness = f"element {g}"
            break
    assoc_fail, assoc_witness = 0.0, ""
    for a in range(group.order):
        for b in range(group.order):
            for c in range(group.order):
                if group.cayley[group.cayley[a][b]][c] != group.cayley[a][group.cayley[b][c]]:
                    assoc_fail = 1.0
                    assoc_witness = f"triple ({a},{b},{c})"
                    break
            if assoc_fail:
                break
        if assoc_fail:
            break
    return VerificationReport(
        "group axioms",
        (
            Check("identity exists", identity_fail, 0.5),
            Check("inverses exist", inverse_fail, 0.5, inverse_witness),
            Check("associativity", assoc_fail, 0.5, assoc_witness),
        ),
    )


@dataclass(eq=False)
class GroupAction:
    """Action of a finite group on an algebra by *-automorphisms."""

    group: FiniteGroup
    algebra: FiniteCStarAlgebra
    automorphisms: tuple[StarHomomorphism, ...]

    def __post_init__(self):
        if len(self.automorphisms) != self.group.order:
            raise StructuralError("need one automorphism per group element")
        for phi in self.automorphisms:
            if phi.source != self.algebra or phi.target != self.algebra:
                raise StructuralError("automorphisms must map the algebra to itself")

    @classmethod
    def trivial(cls, group: FiniteGroup, algebra: FiniteCStarAlgebra) -> "GroupAction":
        ident = StarHomomorphism.identity(algebra)
        return cls(group, algebra, tuple(ident for _ in range(group.order)))

    @classmethod
    def by_conjugation(
        cls, group: FiniteGroup, algebra: FiniteCStarAlgebra, unitary_blocks: Sequence
    ) -> "GroupAction":
        """Inner action g -> Ad(u_g) from per-element blockwise unitaries."""
        autos = tuple(
            StarHomomorphism.conjugation_by(algebra, blocks) for blocks in unitary_blocks
        )
        return cls(group, algebra, autos)

    @classmethod
    def by_block_permutation(
        cls, group: FiniteGroup, algebra: FiniteCStarAlgebra, perms: Sequence[Sequence[int]]
    ) -> "GroupAction":
        """Outer action permuting equal-sized blocks, one permutation per element."""
        autos = tuple(StarHomomorphism.block_permutation(algebra, p) for p in perms)
        return cls(group, algebra, autos)

    def apply(self, g: int, a: AlgebraElement) -> AlgebraElement:
        return self.automorphisms[g].apply(a)

    def __str__(self) -> str:
        return f"action of {self.group} on {self.algebra}"


def verify_action(action: GroupAction, tol: float = DEFAULT_TOL) -> VerificationReport:
    group, alg = action.group, action.algebra
    e = group.identity
    ident = np.eye(alg.linear_dim)
    id_resid = (
        linalg.frobenius(action.automorphisms[e].action_matrix - ident)
        if e is not None
        else np.inf
    )
    cocycle = 0.0
    for g in group.elements():
        mg = action.automorphisms[g].action_matrix
        for h in group.elements():
            mh = action.automorphisms[h].action_matrix
            mgh = action.automorphisms[group.multiply(g, h)].action_matrix
            cocycle = max(cocycle, linalg.frobenius(mg @ mh - mgh))
    star_hom = 0.0
    bijective = True
    for g in group.elements():
        rep = action.automorphisms[g].verify(tol, check_surjective=False)
        star_hom = max(star_hom, rep.max_residual)
        bijective = bijective and action.automorphisms[g].is_bijective()
    return VerificationReport(
        "group action",
        (
            Check("unit acts as identity", float(id_resid), tol),
            Check("cocycle law", float(cocycle), tol),
            Check("*-automorphisms", float(star_hom), tol),
            Check("bijectivity", 0.0 if bijective else 1.0, 0.5),
        ),
    )


@dataclass(eq=False)
class UnitaryRepresentation:
    """Unitary representation of a finite group on a Hilbert module."""

    group: FiniteGroup
    module: HilbertModule
    unitaries: tuple[AdjointableOperator, ...]

    def __post_init__(self):
        if len(self.unitaries) != self.group.order:
            raise StructuralError("need one unitary per group element")
        for u in self.unitaries:
            if u.domain != self.module or u.codomain != self.module:
                raise StructuralError("unitaries must act on the representation module")

    @classmethod
    def trivial(cls, group: FiniteGroup, module: HilbertModule) -> "UnitaryRepresentation":
        ident = module.identity_operator()
        return cls(group, module, tuple(ident for _ in range(group.order)))

    @classmethod
    def from_complex_matrices(
        cls, group: FiniteGroup, module: HilbertModule, matrices: Sequence
    ) -> "UnitaryRepresentation":
        """Promote a complex unitary representation entrywise to operators over B."""
        ops = tuple(
            AdjointableOperator.from_complex_matrix(module, module, m) for m in matrices
        )
        return cls(group, module, ops)

    def apply(self, g: int) -> AdjointableOperator:
        return self.unitaries[g]

    def __str__(self) -> str:
        return f"unitary representation of {self.group} on {self.module}"


def verify_unitary_representation(
    rep: UnitaryRepresentation, tol: float = DEFAULT_TOL
) -> VerificationReport:
    group = rep.group
    e = group.identity
    id_resid = (
        linalg.frobenius(rep.unitaries[e].flat - rep.module.projection_flat)
        if e is not None
        else np.inf
    )
    unitary = 0.0
    for u in rep.unitaries:
        r = u.is_unitary(tol)
        unitary = max(unitary, r.max_residual)
    mult = 0.0
    for g in group.elements():
        ug = rep.unitaries[g].flat
        for h in group.elements():
            uh = rep.unitaries[h].flat
            ugh = rep.unitaries[group.multiply(g, h)].flat
            mult = max(mult, linalg.frobenius(ug @ uh - ugh))
    inverse = 0.0
    for g in group.elements():
        inv = group.inverses[g]
        if inv is None:
            inverse = np.inf
            break
        inverse = max(
            inverse,
            linalg.frobenius(rep.unitaries[inv].flat - rep.unitaries[g].flat.conj().T),
        )
    return VerificationReport(
        "unitary representation",
        (
            Check("unit maps to identity", float(id_resid), tol),
            Check("unitarity", float(unitary), tol),
            Check("multiplicativity", float(mult), tol),
            Check("inverse law u_{g^-1} = u_g*", float(inverse), tol),
        ),
    )


def check_covariance(
    rho: CompletelyPositiveMap,
    action: GroupAction,
    rep: UnitaryRepresentation,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """Residuals of rho(alpha_g(a)) = u_g rho(a) u_g* over all g and basis a."""
    if action.algebra != rho.source:
        raise StructuralError("action algebra differs from the map's source")
    if rep.module != rho.module:
        raise StructuralError("representation module differs from the map's target module")
    if action.group != rep.group:
        raise StructuralError("action and representation use different groups")
    worst, witness = 0.0, ""
    for g in action.group.elements():
        ug = rep.unitaries[g].flat
        for i, a in enumerate(rho.source.basis()):
            lhs = rho(action.apply(g, a)).flat
            rhs = ug @ rho.basis_values[i].flat @ ug.conj().T
            r = linalg.frobenius(lhs - rhs)
            if r > worst:
                worst, witness = r, f"g={g}, basis #{i}"
    return VerificationReport(
        "covariance", (Check("rho(alpha_g(a)) = u_g rho(a) u_g*", float(worst), tol, witness),)
    )


def covariant_average(
    sigma: CompletelyPositiveMap,
    action: GroupAction,
    rep: UnitaryRepresentation,
) -> CompletelyPositiveMap:
    """Group-average a CP map into a covariant one:

        rho(a) = (1/|G|) * sum_g u_g* sigma(alpha_g(a)) u_g
    """
    if action.algebra != sigma.source or rep.module != sigma.module:
        raise StructuralError("averaging data does not match the map")
    order = action.group.order
    values = []
    for a in sigma.source.basis():
        acc = np.zeros((sigma.module.flat_dim, sigma.module.flat_dim), dtype=np.complex128)
        for g in action.group.elements():
            ug = rep.unitaries[g].flat
            acc += ug.conj().T @ sigma(action.apply(g, a)).flat @ ug
        values.append(AdjointableOperator(sigma.module, sigma.module, acc / order))
    return CompletelyPositiveMap(sigma.source, sigma.module, tuple(values))

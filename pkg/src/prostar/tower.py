"""Finite inverse systems of algebras and modules, coherent elements, and
levelwise constructions with commuting-square verification.

Levels form a finite directed poset; connecting maps run downward
(pi_pq: A_p -> A_q for p >= q) and are surjective *-homomorphisms. Module
towers share one ambient rank, with connecting maps acting entrywise through
the algebra maps, so well-definedness of induced operators is structural.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
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
from .crossed import CrossedProductRealization, IntegratedForm, integrated_form
from .dilation import CovariantDilation
from .errors import PreconditionError, StructuralError
from .groups import (
    FiniteGroup,
    GroupAction,
    UnitaryRepresentation,
    check_covariance,
    verify_action,
)
from .linalg import DEFAULT_TOL
from .modules import AdjointableOperator, HilbertModule


@dataclass(frozen=True)
class DirectedPoset:
    """Finite poset given by its elements and the strict relations b < a."""

    elements: tuple[str, ...]
    relations: frozenset[tuple[str, str]]  # (lower, upper) pairs, strict

    @classmethod
    def chain(cls, labels: Sequence[str]) -> "DirectedPoset":
        """Totally ordered: labels[0] < labels[1] < ..."""
        rels = {
            (labels[i], labels[j])
            for i in range(len(labels))
            for j in range(i + 1, len(labels))
        }
        return cls(tuple(labels), frozenset(rels))

    def leq(self, a: str, b: str) -> bool:
        return a == b or (a, b) in self.relations

    def comparable_pairs(self) -> list[tuple[str, str]]:
        """All (upper, lower) pairs with upper > lower."""
        return sorted((b, a) for (a, b) in self.relations)

    def upper_bound(self, a: str, b: str) -> str | None:
        for c in self.elements:
            if self.leq(a, c) and self.leq(b, c):
                return c
        return None

    def greatest(self) -> str | None:
        for c in self.elements:
            if all(self.leq(x, c) for x in self.elements):
                return c
        return None

    def verify(self) -> VerificationReport:
        anti = 0.0
        witness_anti = ""
        for a, b in self.relations:
            if (b, a) in self.relations or a == b:
                anti, witness_anti = 1.0, f"{a} ~ {b}"
                break
        trans = 0.0
        witness_trans = ""
        for a, b in self.relations:
            for b2, c in self.relations:
                if b2 == b and not self.leq(a, c):
                    trans, witness_trans = 1.0, f"{a} < {b} < {c}"
                    break
        direct = 0.0
        witness_dir = ""
        for a in self.elements:
            for b in self.elements:
                if self.upper_bound(a, b) is None:
                    direct, witness_dir = 1.0, f"({a}, {b})"
        return VerificationReport(
            "directed poset",
            (
                Check("antisymmetry", anti, 0.5, witness_anti),
                Check("transitivity", trans, 0.5, witness_trans),
                Check("directedness", direct, 0.5, witness_dir),
            ),
        )


def _dense_selector(algebra: FiniteCStarAlgebra) -> np.ndarray:
    """Linear map vec(dense embedding) -> matrix-unit coordinates."""
    d = algebra.total_dim
    sel = np.zeros((algebra.linear_dim, d * d), dtype=np.complex128)
    idx = 0
    for off, n in zip(algebra.block_offsets, algebra.block_sizes):
        for i in range(n):
            for j in range(n):
                sel[idx, (off + i) * d + (off + j)] = 1.0
                idx += 1
    return sel


def dense_transfer_matrix(hom: StarHomomorphism) -> np.ndarray:
    """The map vec(dense block) -> vec(dense block) induced by a *-homomorphism."""
    images = np.stack(
        [hom.apply(b).dense().ravel() for b in hom.source.basis()], axis=1
    )
    return images @ _dense_selector(hom.source)


def apply_hom_entrywise(
    hom: StarHomomorphism, flat: np.ndarray, rows: int, cols: int, transfer=None
) -> np.ndarray:
    """Apply a *-homomorphism to each D×D entry of a flattened block matrix."""
    dp = hom.source.total_dim
    dq = hom.target.total_dim
    if transfer is None:
        transfer = dense_transfer_matrix(hom)
    grid = flat.reshape(rows, dp, cols, dp).transpose(0, 2, 1, 3).reshape(rows * cols, dp * dp)
    out = grid @ transfer.T
    return out.reshape(rows, cols, dq, dq).transpose(0, 2, 1, 3).reshape(rows * dq, cols * dq)


@dataclass(eq=False)
class AlgebraTower:
    """Inverse system {A_p; pi_pq} over a directed poset."""

    poset: DirectedPoset
    algebras: dict[str, FiniteCStarAlgebra]
    connecting: dict[tuple[str, str], StarHomomorphism]  # (upper, lower) -> map

    def __post_init__(self):
        for label in self.poset.elements:
            if label not in self.algebras:
                raise StructuralError(f"no algebra at level {label}")
        for (p, q) in self.poset.comparable_pairs():
            if (p, q) not in self.connecting:
                raise StructuralError(f"missing connecting map {p} -> {q}")
            hom = self.connecting[(p, q)]
            if hom.source != self.algebras[p] or hom.target != self.algebras[q]:
                raise StructuralError(f"connecting map {p} -> {q} has wrong end algebras")

    @classmethod
    def from_chain(
        cls,
        labels: Sequence[str],
        algebras: Sequence[FiniteCStarAlgebra],
        downward_maps: Sequence[StarHomomorphism],
    ) -> "AlgebraTower":
        """Chain tower from consecutive maps labels[i+1] -> labels[i]; composites filled in."""
        if len(downward_maps) != len(labels) - 1:
            raise StructuralError("need one map per consecutive pair")
        poset = DirectedPoset.chain(labels)
        alg = dict(zip(labels, algebras))
        connecting: dict[tuple[str, str], StarHomomorphism] = {}
        for i in range(len(labels) - 1, 0, -1):
            step = downward_maps[i - 1]
            connecting[(labels[i], labels[i - 1])] = step
            for j in range(i + 1, len(labels)):
                connecting[(labels[j], labels[i - 1])] = step.compose(
                    connecting[(labels[j], labels[i])]
                )
        return cls(poset, alg, connecting)

    def map(self, p: str, q: str) -> StarHomomorphism:
        if p == q:
            return StarHomomorphism.identity(self.algebras[p])
        return self.connecting[(p, q)]

    def verify(self, tol: float = DEFAULT_TOL) -> VerificationReport:
        hom_res, surj_ok = 0.0, True
        for pair, hom in self.connecting.items():
            rep = hom.verify(tol)
            hom_res = max(hom_res, rep.check("multiplicative").residual,
                          rep.check("star").residual, rep.check("unital").residual)
            surj_ok = surj_ok and rep.check("surjective").passed
        comp, witness = 0.0, ""
        for (p, q) in self.poset.comparable_pairs():
            for r in self.poset.elements:
                if r == q or not self.poset.leq(r, q):
                    continue
                lhs = self.map(q, r).action_matrix @ self.map(p, q).action_matrix
                res = linalg.frobenius(lhs - self.map(p, r).action_matrix)
                if res > comp:
                    comp, witness = res, f"{p} -> {q} -> {r}"
        checks = (
            Check("connecting maps are *-homomorphisms", float(hom_res), tol),
            Check("connecting maps surjective", 0.0 if surj_ok else 1.0, 0.5),
            Check("composition squares", float(comp), tol, witness),
        ) + tuple(self.poset.verify().checks)
        return VerificationReport("algebra tower", checks)


@dataclass(eq=False)
class CoherentElement:
    """A level-indexed family carried onto itself by the connecting maps."""

    tower: AlgebraTower
    levels: dict[str, AlgebraElement]

    def __post_init__(self):
        for label in self.tower.poset.elements:
            if label not in self.levels:
                raise StructuralError(f"no component at level {label}")
            if self.levels[label].algebra != self.tower.algebras[label]:
                raise StructuralError(f"component at {label} is in the wrong algebra")

    @classmethod
    def from_top(cls, tower: AlgebraTower, top: str, a: AlgebraElement) -> "CoherentElement":
        levels = {top: a}
        for label in tower.poset.elements:
            if label != top:
                if not tower.poset.leq(label, top):
                    raise StructuralError(f"level {label} is not below {top}")
                levels[label] = tower.map(top, label).apply(a)
        return cls(tower, levels)

    def verify(self, tol: float = DEFAULT_TOL) -> VerificationReport:
        worst, witness = 0.0, ""
        for (p, q) in self.tower.poset.comparable_pairs():
            res = (self.tower.map(p, q).apply(self.levels[p]) - self.levels[q]).frobenius()
            if res > worst:
                worst, witness = res, f"{p} -> {q}"
        return VerificationReport(
            "coherent element", (Check("coherence", float(worst), tol, witness),)
        )

    def seminorm(self, level: str) -> float:
        if level not in self.levels:
            raise StructuralError(f"unknown level {level}")
        return self.levels[level].operator_norm()

    def __add__(self, other: "CoherentElement") -> "CoherentElement":
        return CoherentElement(
            self.tower, {k: v + other.levels[k] for k, v in self.levels.items()}
        )

    def __mul__(self, other: "CoherentElement") -> "CoherentElement":
        return CoherentElement(
            self.tower, {k: v * other.levels[k] for k, v in self.levels.items()}
        )

    def adjoint(self) -> "CoherentElement":
        return CoherentElement(self.tower, {k: v.adjoint() for k, v in self.levels.items()})


def seminorm_eval(a: CoherentElement, level: str) -> float:
    return a.seminorm(level)


@dataclass(eq=False)
class TowerAction:
    """A group acting compatibly on every level of an algebra tower."""

    group: FiniteGroup
    tower: AlgebraTower
    actions: dict[str, GroupAction]

    def verify(self, tol: float = DEFAULT_TOL) -> VerificationReport:
        level_res = 0.0
        for label in self.tower.poset.elements:
            act = self.actions[label]
            if act.group != self.group or act.algebra != self.tower.algebras[label]:
                raise StructuralError(f"action at level {label} does not match the tower")
            level_res = max(level_res, verify_action(act, tol).max_residual)
        compat, witness = 0.0, ""
        for (p, q) in self.tower.poset.comparable_pairs():
            pi = self.tower.map(p, q).action_matrix
            for g in self.group.elements():
                lhs = self.actions[q].automorphisms[g].action_matrix @ pi
                rhs = pi @ self.actions[p].automorphisms[g].action_matrix
                res = linalg.frobenius(lhs - rhs)
                if res > compat:
                    compat, witness = res, f"g={g}, {p} -> {q}"
        return VerificationReport(
            "tower action",
            (
                Check("levelwise actions", float(level_res), tol),
                Check("compatibility with connecting maps", float(compat), tol, witness),
            ),
        )


@dataclass(eq=False)
class ModuleTower:
    """Inverse system of modules over an algebra tower, sharing one ambient rank.

    The connecting maps sigma_pq act entrywise through pi_pq, so
    sigma(xi·a) = sigma(xi)·pi(a) and <sigma xi, sigma eta> = pi(<xi, eta>)
    hold structurally and are re-verified numerically.
    """

    base: AlgebraTower
    modules: dict[str, HilbertModule]

    def __post_init__(self):
        ranks = {m.rank for m in self.modules.values()}
        if len(ranks) != 1:
            raise StructuralError("module tower levels must share the ambient rank")
        for label in self.base.poset.elements:
            if label not in self.modules:
                raise StructuralError(f"no module at level {label}")
            if self.modules[label].algebra != self.base.algebras[label]:
                raise StructuralError(f"module at {label} is over the wrong algebra")

    @cached_property
    def _transfers(self) -> dict[tuple[str, str], np.ndarray]:
        return {
            pair: dense_transfer_matrix(self.base.connecting[pair])
            for pair in self.base.connecting
        }

    @classmethod
    def of_free_modules(cls, base: AlgebraTower, rank: int) -> "ModuleTower":
        return cls(
            base, {label: HilbertModule.free(alg, rank) for label, alg in base.algebras.items()}
        )

    @classmethod
    def pushed_down(cls, base: AlgebraTower, top: str, top_module: HilbertModule) -> "ModuleTower":
        """Tower generated by one module at the top level: E_q = pi(P)·B_q^n."""
        if top_module.algebra != base.algebras[top]:
            raise StructuralError(f"module is not over the level-{top} algebra")
        modules = {top: top_module}
        for label in base.poset.elements:
            if label == top:
                continue
            if not base.poset.leq(label, top):
                raise StructuralError(f"level {label} is not below {top}")
            hom = base.map(top, label)
            proj = apply_hom_entrywise(
                hom, top_module.projection_flat, top_module.rank, top_module.rank
            )
            modules[label] = HilbertModule(base.algebras[label], top_module.rank, proj)
        return cls(base, modules)

    def connect_element(self, p: str, q: str, xi) -> "np.ndarray":
        """sigma_pq applied to a flat element of the level-p module."""
        if p == q:
            return xi
        hom = self.base.map(p, q)
        return apply_hom_entrywise(
            hom, xi, self.modules[p].rank, 1, self._transfers[(p, q)]
        )

    def induced_operator(self, p: str, q: str, t: AdjointableOperator) -> AdjointableOperator:
        """(pi_pq)_* applied to an operator at level p."""
        if t.domain != self.modules[p] or t.codomain != self.modules[p]:
            raise StructuralError(f"operator does not live at level {p}")
        if p == q:
            return t
        hom = self.base.map(p, q)
        flat = apply_hom_entrywise(
            hom, t.flat, self.modules[p].rank, self.modules[p].rank, self._transfers[(p, q)]
        )
        return AdjointableOperator(self.modules[q], self.modules[q], flat)

    def verify(self, tol: float = DEFAULT_TOL) -> VerificationReport:
        proj_res, inner_res, witness = 0.0, 0.0, ""
        for (p, q) in self.base.poset.comparable_pairs():
            ep, eq = self.modules[p], self.modules[q]
            mapped_proj = apply_hom_entrywise(
                self.base.map(p, q), ep.projection_flat, ep.rank, ep.rank, self._transfers[(p, q)]
            )
            res = linalg.frobenius(mapped_proj - eq.projection_flat)
            if res > proj_res:
                proj_res, witness = res, f"{p} -> {q}"
            basis = ep.complex_basis
            mapped = [self.connect_element(p, q, b.flat) for b in basis]
            for i, bi in enumerate(basis):
                for j, bj in enumerate(basis):
                    lhs = mapped[i].conj().T @ mapped[j]
                    rhs = apply_hom_entrywise(
                        self.base.map(p, q),
                        bi.flat.conj().T @ bj.flat,
                        1,
                        1,
                        self._transfers[(p, q)],
                    )
                    inner_res = max(inner_res, linalg.frobenius(lhs - rhs))
        comp = 0.0
        for (p, q) in self.base.poset.comparable_pairs():
            for r in self.base.poset.elements:
                if r == p or r == q or not self.base.poset.leq(r, q):
                    continue
                probe = self.modules[p].projection_flat[:, : self.modules[p].block_dim]
                via = self.connect_element(q, r, self.connect_element(p, q, probe))
                direct = self.connect_element(p, r, probe)
                comp = max(comp, linalg.frobenius(via - direct))
        checks = (
            Check("projections connect", float(proj_res), tol, witness),
            Check("inner products connect", float(inner_res), tol),
            Check("sigma composition", float(comp), tol),
        )
        return VerificationReport("module tower", checks)


def verify_tower(t, tol: float = DEFAULT_TOL) -> VerificationReport:
    """Verify an AlgebraTower or a ModuleTower."""
    return t.verify(tol)


def induced_map(
    connecting: StarHomomorphism,
    t: AdjointableOperator,
    mt: ModuleTower,
    *,
    tol: float = DEFAULT_TOL,
) -> AdjointableOperator:
    """Push an operator down a module tower along a connecting map.

    Raises StructuralError when the result fails the defining identity
    (pi)_*(T)(sigma(xi)) = sigma(T(xi)) on the level's complex basis.
    """
    p_label = q_label = None
    for (pp, qq), hom in mt.base.connecting.items():
        if hom is connecting:
            p_label, q_label = pp, qq
            break
    if p_label is None:
        for label, alg in mt.base.algebras.items():
            if alg == connecting.source and mt.modules[label] == t.domain:
                p_label = label
            if alg == connecting.target and q_label is None:
                q_label = label
    if p_label is None or q_label is None:
        raise StructuralError("connecting map does not match the module tower")
    pushed = mt.induced_operator(p_label, q_label, t)
    worst = 0.0
    for b in mt.modules[p_label].complex_basis:
        lhs = pushed.flat @ mt.connect_element(p_label, q_label, b.flat)
        rhs = mt.connect_element(p_label, q_label, t.flat @ b.flat)
        worst = max(worst, linalg.frobenius(lhs - rhs))
    if worst > max(tol, 1e-8):
        raise StructuralError(
            f"operator does not descend along {p_label} -> {q_label}: residual {worst:.3e}"
        )
    return pushed


def push_cp_map(rho: CompletelyPositiveMap, mt: ModuleTower, p: str, q: str) -> CompletelyPositiveMap:
    """(pi_q)_* of a CP map defined at level p."""
    values = tuple(
        mt.induced_operator(p, q, op) for op in rho.basis_values
    )
    return CompletelyPositiveMap(rho.source, mt.modules[q], values)


def push_representation(
    u: UnitaryRepresentation, mt: ModuleTower, p: str, q: str
) -> UnitaryRepresentation:
    ops = tuple(mt.induced_operator(p, q, op) for op in u.unitaries)
    return UnitaryRepresentation(u.group, mt.modules[q], ops)


@dataclass
class CoherenceReport:
    report: VerificationReport
    level_dimensions: dict[str, int]
    dilations: dict[str, CovariantDilation] | None = None

    @property
    def passed(self) -> bool:
        return self.report.passed

    @property
    def max_residual(self) -> float:
        return self.report.max_residual


def _connecting_class_matrix(
    d_upper: "CovariantDilation",
    d_lower: "CovariantDilation",
    mt: ModuleTower,
    p: str,
    q: str,
    cores,
) -> np.ndarray:
    """Class-coordinate matrix of the map a(x)xi -> a(x)sigma(xi) on the quotients."""
    ep = mt.modules[p]
    eq = mt.modules[q]
    y = np.stack(
        [
            eq.coords_of(eq.element_from_flat(mt.connect_element(p, q, b.flat)))
            for b in ep.complex_basis
        ],
        axis=1,
    )  # (d_q, d_p)
    dim_a = d_upper.cp_map.source.linear_dim
    shuffle = np.kron(np.eye(dim_a), y)
    return cores[q]._coord_map @ shuffle @ cores[p]._class_embed


def levelwise_dilation_coherence(
    rho_top: CompletelyPositiveMap,
    action: GroupAction,
    rep_top: UnitaryRepresentation,
    mt: ModuleTower,
    *,
    top: str | None = None,
    tol: float = DEFAULT_TOL,
) -> CoherenceReport:
    """Build the covariant dilation at every level and verify the commuting squares.

    rho and u are given at the top level and pushed down; the connecting maps
    between the level dilation modules send a (x) xi to a (x) sigma(xi) and
    are verified to intertwine the representations, the connectors, and the
    level unitaries, and to respect the B-valued inner products.
    """
    from .dilation import covariant_extend, minimal_dilation

    top = top or mt.base.poset.greatest()
    if top is None:
        raise PreconditionError("module tower has no greatest level to push from")
    if rho_top.module != mt.modules[top]:
        raise StructuralError(f"rho is not defined on the level-{top} module")

    base_report = mt.base.verify(tol)
    mod_report = mt.verify(tol)
    if not (base_report.passed and mod_report.passed):
        raise PreconditionError("the underlying towers fail verification")

    levels = list(mt.base.poset.elements)
    rhos, reps, cores, dils = {}, {}, {}, {}
    for q in levels:
        rho_q = rho_top if q == top else push_cp_map(rho_top, mt, top, q)
        u_q = rep_top if q == top else push_representation(rep_top, mt, top, q)
        cert = rho_q.verify_completely_positive(max(tol, 1e-9))
        if not cert.is_cp:
            raise PreconditionError(f"pushed map at level {q} is not CP")
        cov = check_covariance(rho_q, action, u_q, max(tol, 1e-8))
        if not cov.passed:
            raise PreconditionError(f"covariance fails at level {q}")
        core = minimal_dilation(rho_q, tol=tol)
        dils[q] = covariant_extend(core, action, u_q, tol)
        cores[q] = core
        rhos[q], reps[q] = rho_q, u_q

    checks: list[Check] = [
        Check("levelwise dilations verified",
              max(dils[q].residuals.max_residual for q in levels), max(tol, 1e-9)),
    ]
    class_maps: dict[tuple[str, str], np.ndarray] = {}
    rep_sq = conn_sq = v_sq = gram_sq = surj = 0.0
    for (p, q) in mt.base.poset.comparable_pairs():
        m_pq = _connecting_class_matrix(dils[p], dils[q], mt, p, q, cores)
        class_maps[(p, q)] = m_pq
        cm_phi_p = [op.complex_matrix() for op in dils[p].representation.basis_values]
        cm_phi_q = [op.complex_matrix() for op in dils[q].representation.basis_values]
        for a, b in zip(cm_phi_p, cm_phi_q):
            rep_sq = max(rep_sq, linalg.frobenius(m_pq @ a - b @ m_pq))
        cm_v_p = dils[p].connector.complex_matrix()
        cm_v_q = dils[q].connector.complex_matrix()
        y = np.stack(
            [
                mt.modules[q].coords_of(
                    mt.modules[q].element_from_flat(
                        mt.connect_element(p, q, b.flat)
                    )
                )
                for b in mt.modules[p].complex_basis
            ],
            axis=1,
        )
        conn_sq = max(conn_sq, linalg.frobenius(m_pq @ cm_v_p - cm_v_q @ y))
        for g in action.group.elements():
            a = dils[p].group_unitaries.unitaries[g].complex_matrix()
            b = dils[q].group_unitaries.unitaries[g].complex_matrix()
            v_sq = max(v_sq, linalg.frobenius(m_pq @ a - b @ m_pq))
        # Inner products: <Sigma x, Sigma y> = pi(<x, y>) on the class basis.
        mapped = np.hstack(
            [
                dils[q].module.element_from_coords(m_pq[:, alpha]).flat
                for alpha in range(m_pq.shape[1])
            ]
        )
        lhs = mapped.conj().T @ mapped
        h_p = cores[p]._sqrt_flat @ cores[p]._sqrt_flat
        rhs = apply_hom_entrywise(
            mt.base.map(p, q), h_p, dils[p].module.rank, dils[p].module.rank,
            mt._transfers[(p, q)],
        )
        gram_sq = max(gram_sq, linalg.frobenius(lhs - rhs))
        surj = max(
            surj,
            float(
                dils[q].module.complex_dim
                - linalg.matrix_rank(m_pq, rel_threshold=1e-9)
            ),
        )
    func = 0.0
    for (p, q) in mt.base.poset.comparable_pairs():
        for r in levels:
            if r == p or r == q or not mt.base.poset.leq(r, q):
                continue
            m_qr = class_maps[(q, r)]
            m_pr = class_maps[(p, r)]
            func = max(func, linalg.frobenius(m_qr @ class_maps[(p, q)] - m_pr))

    checks.extend(
        [
            Check("squares: representations", float(rep_sq), max(tol, 1e-9)),
            Check("squares: connectors", float(conn_sq), max(tol, 1e-9)),
            Check("squares: group unitaries", float(v_sq), max(tol, 1e-9)),
            Check("squares: inner products", float(gram_sq), max(tol, 1e-9)),
            Check("level dilation modules match", float(surj), 0.5),
            Check("functoriality of connecting maps", float(func), max(tol, 1e-9)),
        ]
    )
    return CoherenceReport(
        report=VerificationReport("levelwise dilation coherence", tuple(checks)),
        level_dimensions={q: dils[q].module.complex_dim for q in levels},
        dilations=dils,
    )


def levelwise_integrated_coherence(
    phi_top: CompletelyPositiveMap,
    v_top: UnitaryRepresentation,
    xp: CrossedProductRealization,
    mt: ModuleTower,
    *,
    top: str | None = None,
    tol: float = DEFAULT_TOL,
) -> CoherenceReport:
    """Integrate a covariant representation at every level and check coherence.

    Verifies (pi_qr)_*((Phi_q x v_q)(f)) = (Phi_r x v_r)(f) on the spanning
    set {delta_g (x) a_i} for every comparable pair of levels.
    """
    top = top or mt.base.poset.greatest()
    if top is None:
        raise PreconditionError("module tower has no greatest level to push from")
    if phi_top.module != mt.modules[top]:
        raise StructuralError(f"Phi is not defined on the level-{top} module")

    action = xp.system
    levels = list(mt.base.poset.elements)
    forms: dict[str, IntegratedForm] = {}
    k_values: dict[str, np.ndarray] = {}
    for q in levels:
        phi_q = phi_top if q == top else push_cp_map(phi_top, mt, top, q)
        v_q = v_top if q == top else push_representation(v_top, mt, top, q)
        forms[q] = integrated_form(phi_q, v_q, xp, tol)
        phi_tensor = phi_q._value_tensor
        u_tensor = np.stack([u.flat for u in v_q.unitaries], axis=0)
        k_values[q] = np.einsum("aij,gjk->gaik", phi_tensor, u_tensor, optimize=True)

    level_res = max(forms[q].report.max_residual for q in levels)
    conn = 0.0
    for (p, q) in mt.base.poset.comparable_pairs():
        rank = mt.modules[p].rank
        for g in action.group.elements():
            for i in range(action.algebra.linear_dim):
                pushed = apply_hom_entrywise(
                    mt.base.map(p, q), k_values[p][g, i], rank, rank,
                    mt._transfers[(p, q)],
                )
                conn = max(conn, linalg.frobenius(pushed - k_values[q][g, i]))
    checks = (
        Check("levelwise integrated forms verified", float(level_res), max(tol, 1e-9)),
        Check("connecting identity on the spanning set", float(conn), max(tol, 1e-9)),
    )
    return CoherenceReport(
        report=VerificationReport("levelwise integrated-form coherence", tuple(checks)),
        level_dimensions={q: forms[q].module.complex_dim for q in levels},
    )

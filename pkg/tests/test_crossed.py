import numpy as np
import pytest

from prostar.algebra import FiniteCStarAlgebra
from prostar.crossed import (
    ConvolutionElement,
    build_crossed_product,
    extend_covariant_cp,
    integrated_form,
)
from prostar.dilation import covariant_dilation, scaled_connector_variant
from prostar.errors import PreconditionError
from prostar.groups import FiniteGroup, GroupAction, UnitaryRepresentation
from prostar.recipes import dilation_instance, named_group, standard_action

M2 = FiniteCStarAlgebra((2,))
C = FiniteCStarAlgebra((1,))


def z2_m2_action():
    x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return GroupAction.by_conjugation(FiniteGroup.cyclic(2), M2, [[np.eye(2)], [x]])


def random_conv(system, rng):
    return ConvolutionElement(
        system, tuple(system.algebra.random_element(rng) for _ in system.group.elements())
    )


class TestConvolution:
    def test_delta_product_trivial_action(self, rng):
        sys_ = GroupAction.trivial(FiniteGroup.cyclic(3), M2)
        a, b = M2.random_element(rng), M2.random_element(rng)
        f = ConvolutionElement.delta(sys_, 0, a)
        h = ConvolutionElement.delta(sys_, 2, b)
        out = f.convolve(h)
        assert (out.values[2] - a * b).frobenius() <= 1e-13
        assert out.values[0].frobenius() == 0.0 and out.values[1].frobenius() == 0.0

    def test_delta_product_twisted(self, rng):
        sys_ = z2_m2_action()
        a, b = M2.random_element(rng), M2.random_element(rng)
        f = ConvolutionElement.delta(sys_, 1, a)
        h = ConvolutionElement.delta(sys_, 1, b)
        out = f.convolve(h)
        # delta_g a x delta_h b = delta_{gh} (a alpha_g(b)); here g = h = 1, gh = e
        assert (out.values[0] - a * sys_.apply(1, b)).frobenius() <= 1e-13

    def test_order_one_group_is_algebra_product(self, rng):
        sys_ = GroupAction.trivial(FiniteGroup.trivial(), M2)
        a, b = M2.random_element(rng), M2.random_element(rng)
        f = ConvolutionElement.delta(sys_, 0, a)
        h = ConvolutionElement.delta(sys_, 0, b)
        assert (f.convolve(h).values[0] - a * b).frobenius() <= 1e-13

    def test_involution(self, rng):
        sys_ = z2_m2_action()
        a = M2.random_element(rng)
        f = ConvolutionElement.delta(sys_, 1, a)
        sharp = f.involution()
        # (delta_g a)# = delta_{g^-1} alpha_{g^-1}(a*); in Z2, 1^-1 = 1
        assert (sharp.values[1] - sys_.apply(1, a.adjoint())).frobenius() <= 1e-13
        assert sharp.values[0].frobenius() == 0.0
        # supported at e: plain adjoint
        fe = ConvolutionElement.delta(sys_, 0, a)
        assert (fe.involution().values[0] - a.adjoint()).frobenius() <= 1e-13

    def test_involution_laws(self, rng):
        sys_ = z2_m2_action()
        f, h = random_conv(sys_, rng), random_conv(sys_, rng)
        anti = f.convolve(h).involution()
        expected = h.involution().convolve(f.involution())
        assert max((x - y).frobenius() for x, y in zip(anti.values, expected.values)) <= 1e-12
        twice = f.involution().involution()
        assert max((x - y).frobenius() for x, y in zip(twice.values, f.values)) <= 1e-13

    def test_associativity(self, rng):
        sys_ = z2_m2_action()
        f, h, k = (random_conv(sys_, rng) for _ in range(3))
        lhs = f.convolve(h).convolve(k)
        rhs = f.convolve(h.convolve(k))
        assert max((x - y).frobenius() for x, y in zip(lhs.values, rhs.values)) <= 1e-10

    def test_l1_seminorm(self, rng):
        sys_ = z2_m2_action()
        one = ConvolutionElement(sys_, (M2.unit(), M2.unit()))
        assert one.l1_seminorm() == pytest.approx(2.0)
        delta = ConvolutionElement.delta(sys_, 1, M2.unit())
        assert delta.l1_seminorm() == pytest.approx(1.0)
        f, h = random_conv(sys_, rng), random_conv(sys_, rng)
        assert f.convolve(h).l1_seminorm() <= f.l1_seminorm() * h.l1_seminorm() + 1e-9

    def test_l1_seminorm_at_lower_level(self, rng):
        from prostar.algebra import StarHomomorphism

        alg = FiniteCStarAlgebra((2, 1))
        g = FiniteGroup.cyclic(2)
        sys_ = GroupAction.trivial(g, alg)
        pi = StarHomomorphism.block_projection(alg, [0])
        f, h = random_conv(sys_, rng), random_conv(sys_, rng)
        # pushing down is contractive and stays submultiplicative
        assert f.l1_seminorm(pi) <= f.l1_seminorm() + 1e-10
        assert (
            f.convolve(h).l1_seminorm(pi)
            <= f.l1_seminorm(pi) * h.l1_seminorm(pi) + 1e-9
        )


class TestCrossedProduct:
    @pytest.mark.parametrize(
        "algebra,group_name,expected",
        [
            ((1,), "z2", (1, 1)),
            ((1, 1), "z2", (2,)),
            ((1,), "s3", (1, 1, 2)),
            ((2,), "trivial", (2,)),
        ],
    )
    def test_golden_block_sizes(self, algebra, group_name, expected):
        alg = FiniteCStarAlgebra(algebra)
        if algebra == (1, 1) and group_name == "z2":
            action = standard_action("z2", alg)  # the block swap
        else:
            action = GroupAction.trivial(named_group(group_name), alg)
        xp = build_crossed_product(action)
        assert xp.standard_algebra.block_sizes == expected
        assert xp.embedding_report.passed

    def test_dimension_identity(self):
        for group_name in ("trivial", "z2", "z3", "s3"):
            action = standard_action(group_name, M2)
            xp = build_crossed_product(action)
            assert (
                xp.standard_algebra.linear_dim
                == action.group.order * M2.linear_dim
            )

    def test_extraction_roundtrip(self, rng):
        sys_ = z2_m2_action()
        xp = build_crossed_product(sys_)
        f = random_conv(sys_, rng)
        back = xp.extract_convolution(xp.embed(f))
        assert max((x - y).frobenius() for x, y in zip(back.values, f.values)) <= 1e-12

    def test_standardize_is_star_isomorphism(self, rng):
        sys_ = z2_m2_action()
        xp = build_crossed_product(sys_)
        f, h = random_conv(sys_, rng), random_conv(sys_, rng)
        lhs = xp.standardize(f.convolve(h))
        rhs = xp.standardize(f) * xp.standardize(h)
        assert (lhs - rhs).frobenius() <= 1e-10
        assert (xp.standardize(f.involution()) - xp.standardize(f).adjoint()).frobenius() <= 1e-10


class TestIntegratedForm:
    @pytest.fixture
    def z2_data(self):
        rho, act, rep = dilation_instance("m2", "c", 2, "z2", seed=23)
        d = covariant_dilation(rho, act, rep)
        xp = build_crossed_product(act)
        return d, xp

    def test_from_dilation_verified(self, z2_data):
        d, xp = z2_data
        form = integrated_form(d.representation, d.group_unitaries, xp)
        assert form.report.passed
        assert form.report.max_residual <= 1e-9

    def test_delta_unit_gives_unitary(self, z2_data):
        d, xp = z2_data
        form = integrated_form(d.representation, d.group_unitaries, xp)
        for g in xp.system.group.elements():
            f = ConvolutionElement.delta(xp.system, g, M2.unit())
            assert (
                np.abs(form.on_convolution(f).flat - d.group_unitaries.unitaries[g].flat).max()
                <= 1e-12
            )

    def test_trivial_group_evaluates_at_identity(self):
        rho, act, rep = dilation_instance("m2", "c", 2, "trivial", seed=24)
        d = covariant_dilation(rho, act, rep)
        xp = build_crossed_product(act)
        form = integrated_form(d.representation, d.group_unitaries, xp)
        f = ConvolutionElement.delta(xp.system, 0, M2.random_element(np.random.default_rng(0)))
        assert (
            np.abs(form.on_convolution(f).flat - d.representation(f.values[0]).flat).max()
            <= 1e-12
        )

    def test_on_standard_matches_convolution_route(self, z2_data, rng):
        d, xp = z2_data
        form = integrated_form(d.representation, d.group_unitaries, xp)
        f = random_conv(xp.system, rng)
        via_standard = form.on_standard(xp.standardize(f))
        direct = form.on_convolution(f)
        assert np.abs(via_standard.flat - direct.flat).max() <= 1e-10

    def test_noncovariant_rejected(self, z2_data, rng):
        d, xp = z2_data
        wrong_u = UnitaryRepresentation.trivial(xp.system.group, d.module)
        with pytest.raises(PreconditionError):
            integrated_form(d.representation, wrong_u, xp)


class TestExtension:
    def test_trivial_group_phi_equals_rho(self):
        rho, act, rep = dilation_instance("m2", "c", 2, "trivial", seed=31)
        d = covariant_dilation(rho, act, rep)
        xp = build_crossed_product(act)
        ext = extend_covariant_cp(d, xp)
        assert ext.report.passed
        worst = 0.0
        for i, a in enumerate(rho.source.basis()):
            f = ConvolutionElement.delta(xp.system, 0, a)
            out = ext.standard_map(xp.standardize(f))
            worst = max(worst, np.abs(out.flat - rho.basis_values[i].flat).max())
        assert worst <= 1e-12

    def test_z2_extension_checks(self):
        rho, act, rep = dilation_instance("m2", "c", 2, "z2", seed=32)
        d = covariant_dilation(rho, act, rep)
        xp = build_crossed_product(act)
        ext = extend_covariant_cp(d, xp)
        assert ext.report.passed
        cert = ext.standard_map.certification
        assert cert.is_cp and cert.min_eigenvalue >= -1e-9
        # phi(delta_g (x) 1) = u_g
        for g in act.group.elements():
            f = ConvolutionElement.delta(xp.system, g, M2.unit())
            assert (
                np.abs(ext.on_convolution(f).flat - rep.unitaries[g].flat).max() <= 1e-10
            )

    def test_two_routes_agree(self, rng):
        rho, act, rep = dilation_instance("m3", "m2", 1, "z3", seed=33)
        d = covariant_dilation(rho, act, rep)
        xp = build_crossed_product(act)
        ext = extend_covariant_cp(d, xp)
        for _ in range(3):
            f = random_conv(xp.system, rng)
            assert (
                np.abs(ext.on_convolution(f).flat - ext.direct_form(f).flat).max()
                <= 1e-10
            )

    def test_unverified_dilation_rejected(self):
        rho, act, rep = dilation_instance("m2", "c", 1, "z2", seed=34)
        d = covariant_dilation(rho, act, rep)
        xp = build_crossed_product(act)
        bad = scaled_connector_variant(d, 0.5)
        bad.residuals = None
        with pytest.raises(PreconditionError):
            extend_covariant_cp(bad, xp)

"""Assembled model behavior: variant construction rules, stress as energy
gradient, undeformed-state normalization, frame/material symmetry,
serialization integrity, and the structure-free baseline."""

import math

import numpy as np
import pytest

from pann.errors import (
    DimensionMismatchError,
    FormatError,
    NonPositiveDeterminantError,
)
from pann.icnn import NetworkArchitecture, init_params
from pann.invariants import MaterialSymmetry
from pann.model import (
    VARIANTS,
    PannModel,
    SimpleFP,
    SimpleFPParams,
    growth_energy,
    growth_stress,
    normalization_constants,
)
from pann.tensor3 import Rotation3, SymTensor3, Tensor3

ISO = MaterialSymmetry.isotropic()
TISO = MaterialSymmetry.transversely_isotropic(2.0)
IDENTITY = SymTensor3.identity()


def make_model(variant, sym, seed=101, hidden=(8,)):
    arch = NetworkArchitecture(sym.input_dim, hidden,
                               constrain_weights=variant != "basic")
    return PannModel(variant, sym, init_params(arch, seed))


def random_c(rng, scale=0.4):
    A = rng.normal(size=(3, 3)) * scale
    return SymTensor3.from_matrix(A @ A.T + 0.8 * np.eye(3))


def rot_x1(phi):
    c, s = math.cos(phi), math.sin(phi)
    return Rotation3(np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]]))


class TestGrowthTerm:
    def test_energy_profile(self):
        assert growth_energy(1.0) == 0.0
        assert growth_energy(2.0) == pytest.approx((2 + 0.5 - 2) ** 2)
        assert growth_energy(1e-6) > 1e11
        assert growth_energy(1e6) > 1e11
        with pytest.raises(NonPositiveDeterminantError):
            growth_energy(0.0)
        with pytest.raises(NonPositiveDeterminantError):
            growth_stress(-1.0, IDENTITY)

    def test_stress_is_volumetric_energy_gradient(self):
        # for C = J^(2/3) 1 the growth stress must match 2 d/dC of the energy
        rng = np.random.default_rng(103)
        for _ in range(5):
            J = rng.uniform(0.3, 3.0)
            lam2 = J ** (2.0 / 3.0)
            C = SymTensor3.diag(lam2, lam2, lam2)
            S = growth_stress(J, C.inverse())
            h = 1e-7
            for j in range(3):
                comps = np.array(C.components())
                cp, cm = comps.copy(), comps.copy()
                cp[j] += h
                cm[j] -= h
                Jp = math.sqrt(SymTensor3.from_components(cp).det())
                Jm = math.sqrt(SymTensor3.from_components(cm).det())
                fd = (growth_energy(Jp) - growth_energy(Jm)) / (2 * h)
                assert S.components()[j] == pytest.approx(2 * fd, rel=1e-5)


class TestConstruction:
    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            make_model("fancy", ISO)

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_constraint_flag_must_match_variant(self, variant):
        wrong = NetworkArchitecture(4, (8,), constrain_weights=variant == "basic")
        with pytest.raises(ValueError):
            PannModel(variant, ISO, init_params(wrong, 0))

    def test_negative_weights_rejected_for_constrained(self):
        arch = NetworkArchitecture(4, (8,), constrain_weights=True)
        params = init_params(arch, 0)
        flat = params.to_flat()
        flat[0] = -0.1
        from pann.icnn import NetworkParams
        with pytest.raises(ValueError):
            PannModel("pann", ISO, NetworkParams.from_flat(arch, flat))

    def test_symmetry_width_mismatch(self):
        arch = NetworkArchitecture(4, (8,), constrain_weights=True)
        with pytest.raises(DimensionMismatchError):
            PannModel("pann", TISO, init_params(arch, 0))

    def test_variant_flags(self):
        flags = {v: (make_model(v, ISO).has_growth,
                     make_model(v, ISO).has_normalization) for v in VARIANTS}
        assert flags == {
            "basic": (False, False),
            "polyconvex": (False, False),
            "polyconvex_growth": (True, False),
            "pann": (True, True),
        }


class TestEvaluation:
    @pytest.mark.parametrize("variant", VARIANTS)
    @pytest.mark.parametrize("sym", [ISO, TISO], ids=["iso", "tiso"])
    def test_single_matches_batch(self, variant, sym):
        model = make_model(variant, sym)
        rng = np.random.default_rng(107)
        Cs = [random_c(rng) for _ in range(5)]
        C6 = np.array([C.components() for C in Cs])
        psi = model.energy_batch(C6)
        T = model.stress_batch(C6)
        for i, C in enumerate(Cs):
            assert model.energy(C) == pytest.approx(psi[i], rel=1e-14)
            assert np.allclose(model.stress(C).components(), T[i], rtol=1e-14)

    @pytest.mark.parametrize("variant", VARIANTS)
    @pytest.mark.parametrize("sym", [ISO, TISO], ids=["iso", "tiso"])
    def test_stress_is_twice_energy_gradient(self, variant, sym):
        model = make_model(variant, sym)
        rng = np.random.default_rng(109)
        h = 1e-6
        for _ in range(5):
            C = random_c(rng)
            T = model.stress(C)
            D = SymTensor3.from_matrix(
                0.5 * (lambda a: a + a.T)(rng.normal(size=(3, 3))))
            fd = (model.energy(C + D * h) - model.energy(C + D * (-h))) / (2 * h)
            assert 0.5 * T.contract(D) == pytest.approx(fd, rel=5e-6, abs=1e-9)

    @pytest.mark.parametrize("sym", [ISO, TISO], ids=["iso", "tiso"])
    def test_pann_variant_is_normalized(self, sym):
        model = make_model("pann", sym)
        assert abs(model.energy(IDENTITY)) <= 1e-12
        assert model.stress(IDENTITY).norm() <= 1e-12

    def test_unnormalized_variants_carry_residual_stress(self):
        # generic random weights: without normalization the undeformed state
        # is not stress-free (that is the point of the pann variant)
        model = make_model("polyconvex_growth", ISO)
        assert model.stress(IDENTITY).norm() > 1e-3

    @pytest.mark.parametrize("variant", ["polyconvex_growth", "pann"])
    def test_growth_variants_diverge_at_volume_extremes(self, variant):
        model = make_model(variant, ISO)
        psi_ref = model.energy(IDENTITY)
        for lam in (1e-3, 1e3):
            C = SymTensor3.diag(lam ** 2, lam ** 2, lam ** 2)
            assert model.energy(C) - psi_ref > 1e5

    def test_isotropic_energy_rotation_invariant(self):
        model = make_model("pann", ISO)
        rng = np.random.default_rng(113)
        C = random_c(rng)
        for phi in (0.3, 1.2):
            R = Rotation3.about_axes(phi, 2 * phi)
            assert model.energy(R.apply(C)) == pytest.approx(model.energy(C),
                                                             rel=1e-10)

    def test_transverse_energy_invariant_about_preferred_axis_only(self):
        model = make_model("pann", TISO)
        rng = np.random.default_rng(127)
        C = random_c(rng)
        e0 = model.energy(C)
        assert model.energy(rot_x1(0.9).apply(C)) == pytest.approx(e0, rel=1e-10)
        # a generic rotation moves the preferred direction: energy changes
        e_gen = model.energy(Rotation3.about_axes(0.9, 0.4).apply(C))
        assert abs(e_gen - e0) > 1e-6


class TestTangent:
    @pytest.mark.parametrize("variant", ["basic", "pann"])
    def test_major_symmetry(self, variant):
        model = make_model(variant, ISO)
        rng = np.random.default_rng(131)
        C = random_c(rng)
        M = model.tangent(C)
        scale = np.abs(M).max()
        assert np.abs(M - M.T).max() <= 1e-5 * scale

    def test_positive_semidefinite_for_convex_potential(self):
        # non-negative weights + convex inputs give a convex psi in C along
        # volumetric rays; the Mandel tangent of the growth variant at a
        # moderate stretch should have non-negative smallest eigenvalue
        model = make_model("pann", ISO)
        M = model.tangent(SymTensor3.diag(1.21, 1.0, 0.9))
        assert np.linalg.eigvalsh(M).min() > -1e-6 * np.abs(M).max()


class TestSerialization:
    @pytest.mark.parametrize("variant", VARIANTS)
    @pytest.mark.parametrize("sym", [ISO, TISO], ids=["iso", "tiso"])
    def test_roundtrip(self, variant, sym):
        model = make_model(variant, sym)
        text = model.dumps()
        back = PannModel.loads(text)
        assert back.variant == model.variant
        assert back.symmetry.kind == model.symmetry.kind
        assert back.dumps() == text
        rng = np.random.default_rng(137)
        C = random_c(rng)
        assert back.energy(C) == model.energy(C)
        assert np.array_equal(back.stress(C).components(), model.stress(C).components())

    def test_normalization_constants_stored_and_checked(self):
        model = make_model("pann", TISO)
        data = model.to_dict()
        assert set(data["normalization"]) == {"o", "p", "q"}
        fresh = normalization_constants(model.params, TISO)
        assert data["normalization"] == fresh
        data["normalization"]["o"] += 1e-6
        with pytest.raises(FormatError):
            PannModel.from_dict(data)

    def test_malformed_payloads(self):
        model = make_model("pann", ISO)
        good = model.to_dict()
        with pytest.raises(FormatError):
            PannModel.from_dict({**good, "format": "other"})
        with pytest.raises(FormatError):
            PannModel.from_dict({**good, "version": 99})
        with pytest.raises(FormatError):
            PannModel.from_dict({**good, "variant": "fancy"})
        with pytest.raises(FormatError):
            PannModel.loads("not json at all")

    def test_tampered_weight_sign_rejected(self):
        model = make_model("pann", ISO)
        data = model.to_dict()
        data["network"]["layers"][0]["weights"][0][0] = -0.5
        with pytest.raises(FormatError):
            PannModel.from_dict(data)


class TestSimpleFP:
    def test_forward_oracle(self):
        params = SimpleFPParams.init(hidden=4, seed=139)
        net = SimpleFP(params)
        rng = np.random.default_rng(139)
        F9 = rng.normal(size=(3, 9))
        out = net.forward_batch(F9)
        expected = np.logaddexp(0.0, F9 @ params.w.T + params.b) @ params.W + params.B
        assert np.allclose(out, expected, rtol=1e-14)

    def test_tensor_api_matches_batch(self):
        net = SimpleFP(SimpleFPParams.init(hidden=4, seed=149))
        F = Tensor3.from_matrix(np.array([[1.1, 0.2, 0], [0, 0.95, 0.1],
                                          [0.05, 0, 1.0]]))
        P = net.forward(F)
        P9 = net.forward_batch(F.as_matrix().reshape(1, 9))[0]
        assert np.allclose(P.as_matrix().reshape(9), P9)

    def test_no_built_in_normalization(self):
        # generic parameters produce nonzero stress at F = identity
        net = SimpleFP(SimpleFPParams.init(hidden=4, seed=151))
        P = net.forward(Tensor3.identity())
        assert np.linalg.norm(P.as_matrix()) > 1e-2

    def test_flat_roundtrip_and_validation(self):
        params = SimpleFPParams.init(hidden=5, seed=157)
        flat = params.to_flat()
        assert flat.shape == (19 * 5 + 9,)
        back = SimpleFPParams.from_flat(5, flat)
        assert np.array_equal(back.to_flat(), flat)
        with pytest.raises(DimensionMismatchError):
            SimpleFPParams.from_flat(5, flat[:-1])
        with pytest.raises(DimensionMismatchError):
            SimpleFPParams(np.zeros((4, 9)), np.zeros(5), np.zeros((5, 9)),
                           np.zeros(9))

    def test_serialization_roundtrip(self):
        net = SimpleFP(SimpleFPParams.init(hidden=3, seed=163))
        back = SimpleFP.from_dict(net.to_dict())
        assert np.array_equal(back.params.to_flat(), net.params.to_flat())
        with pytest.raises(FormatError):
            SimpleFP.from_dict({"format": "other"})

    def test_batch_shape_validation(self):
        net = SimpleFP(SimpleFPParams.init(hidden=3, seed=167))
        with pytest.raises(DimensionMismatchError):
            net.forward_batch(np.zeros((2, 8)))

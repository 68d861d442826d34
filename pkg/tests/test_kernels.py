"""Kernel-level checks: invariant feature preparation against the tensor
API, exact parameter gradients against finite differences of the loss, and
bit-level-tight agreement between the python and compiled backends."""

import numpy as np
import pytest

from pann import _kernels
from pann._kernels import pyref
from pann.icnn import NetworkArchitecture, init_params
from pann.invariants import MaterialSymmetry, compute_invariants
from pann.tensor3 import SymTensor3

BETA = 2.0
ISO = MaterialSymmetry.isotropic()
TISO = MaterialSymmetry.transversely_isotropic(BETA)

# Each entry: (growth, normalize) kernel flags of one model variant.
FLAG_COMBOS = [(False, False), (True, False), (True, True)]
FLAG_IDS = ["plain", "growth", "growth+norm"]


def _random_c6(rng, count):
    rows = []
    for _ in range(count):
        A = rng.normal(size=(3, 3)) * 0.4
        rows.append(SymTensor3.from_matrix(A @ A.T + 0.8 * np.eye(3)).components())
    return np.array(rows)


def _theta(input_dim, hidden, seed):
    arch = NetworkArchitecture(input_dim, hidden)
    return init_params(arch, seed).to_flat(), arch.layer_sizes()


class TestPrepare:
    @pytest.mark.parametrize("sym,tiso", [(ISO, False), (TISO, True)],
                             ids=["iso", "tiso"])
    def test_features_match_invariant_api(self, sym, tiso):
        rng = np.random.default_rng(51)
        C6 = _random_c6(rng, 20)
        feat, dfeat, J, Cinv6 = pyref.prepare(C6, tiso, BETA)
        assert feat.shape == (20, sym.input_dim)
        assert dfeat.shape == (20, sym.input_dim, 6)
        for i in range(20):
            C = SymTensor3.from_components(C6[i])
            inv = compute_invariants(C, sym)
            assert np.allclose(feat[i], inv.inputs(), rtol=1e-12)
            assert J[i] == pytest.approx(inv.J, rel=1e-12)
            assert np.allclose(Cinv6[i], C.inverse().components(), rtol=1e-10)
            for j, d in enumerate(inv.input_gradients()):
                assert np.allclose(dfeat[i, j], d.components(), rtol=1e-9,
                                   atol=1e-12), (i, j)

    def test_identity_features(self):
        feat, dfeat, J, Cinv6 = pyref.prepare(np.eye(3)[None, (0, 1, 2), (0, 1, 2)]
                                              .reshape(1, 3).repeat(2, 1).reshape(1, 6)
                                              * np.array([1, 1, 1, 0, 0, 0.0]), True, BETA)
        assert np.allclose(feat[0], [3.0, 3.0, 1.0, 5.0, 5.0, -2.0])
        assert J[0] == 1.0
        assert np.allclose(Cinv6[0], [1, 1, 1, 0, 0, 0])


class TestStressEnergyConsistency:
    @pytest.mark.parametrize("growth,normalize", FLAG_COMBOS, ids=FLAG_IDS)
    @pytest.mark.parametrize("tiso", [False, True], ids=["iso", "tiso"])
    def test_stress_is_twice_energy_gradient(self, tiso, growth, normalize):
        rng = np.random.default_rng(53)
        theta, sizes = _theta(6 if tiso else 4, (8,), seed=53)
        C6 = _random_c6(rng, 8)
        T = pyref.stress_batch(C6, theta, sizes, tiso, BETA, growth, normalize)
        w6 = np.array([1.0, 1, 1, 2, 2, 2])
        h = 1e-6
        for i in range(8):
            D6 = rng.normal(size=6)
            ep = pyref.energy_batch((C6[i] + h * D6)[None], theta, sizes,
                                    tiso, BETA, growth, normalize)[0]
            em = pyref.energy_batch((C6[i] - h * D6)[None], theta, sizes,
                                    tiso, BETA, growth, normalize)[0]
            fd = (ep - em) / (2.0 * h)
            # directional derivative of psi equals (T/2) : D
            assert 0.5 * float((T[i] * w6) @ D6) == pytest.approx(fd, rel=2e-6,
                                                                  abs=1e-9)

    @pytest.mark.parametrize("tiso", [False, True], ids=["iso", "tiso"])
    def test_normalized_variant_vanishes_at_identity(self, tiso):
        theta, sizes = _theta(6 if tiso else 4, (8,), seed=57)
        I6 = np.array([[1.0, 1, 1, 0, 0, 0]])
        T = pyref.stress_batch(I6, theta, sizes, tiso, BETA, True, True)
        psi = pyref.energy_batch(I6, theta, sizes, tiso, BETA, True, True)
        assert np.abs(T).max() <= 1e-12
        assert abs(psi[0]) <= 1e-12

    def test_growth_term_diverges_at_volume_extremes(self):
        theta, sizes = _theta(4, (8,), seed=59)
        for lam in (1e-2, 1e2):
            C6 = np.array([[lam ** 2, lam ** 2, lam ** 2, 0, 0, 0]])
            with_g = pyref.energy_batch(C6, theta, sizes, False, BETA, True, False)[0]
            without = pyref.energy_batch(C6, theta, sizes, False, BETA, False, False)[0]
            J = lam ** 3
            assert with_g - without == pytest.approx((J + 1 / J - 2) ** 2, rel=1e-12)


class TestNormConstants:
    def test_iso_constant_formula(self):
        theta, sizes = _theta(4, (8,), seed=61)
        x0 = np.array([3.0, 3.0, 1.0, -2.0])
        _, g0 = pyref._net_forward(theta, sizes, x0[None])
        expected = 2.0 * (g0[0, 0] + 2.0 * g0[0, 1] + g0[0, 2] - g0[0, 3])
        (n,) = pyref.norm_constants(theta, sizes, False, BETA)
        assert n == pytest.approx(expected, rel=1e-14)

    def test_tiso_switch_split(self):
        theta, sizes = _theta(6, (8,), seed=63)
        o, p, q, x = pyref.norm_constants(theta, sizes, True, BETA)
        assert p >= 0.0 and q >= 0.0
        assert p * q == 0.0  # at most one side of the switch active
        if x > 0:
            assert q == pytest.approx(x)
        elif x < 0:
            assert p == pytest.approx(-x)


class TestParameterGradient:
    @pytest.mark.parametrize("growth,normalize", FLAG_COMBOS, ids=FLAG_IDS)
    @pytest.mark.parametrize("tiso", [False, True], ids=["iso", "tiso"])
    @pytest.mark.parametrize("hidden", [(5,), (4, 3)], ids=["1layer", "2layer"])
    def test_gradient_matches_finite_differences(self, hidden, tiso, growth,
                                                 normalize):
        rng = np.random.default_rng(67)
        theta, sizes = _theta(6 if tiso else 4, hidden, seed=67)
        C6 = _random_c6(rng, 12)
        T6 = rng.normal(size=(12, 6)) * 0.3
        mse, grad = pyref.mse_and_grad(C6, T6, theta, sizes, tiso, BETA,
                                       growth, normalize)
        assert np.isfinite(mse) and mse > 0.0
        h = 1e-6
        for j in range(len(theta)):
            e = np.zeros_like(theta)
            e[j] = h
            fp, _ = pyref.mse_and_grad(C6, T6, theta + e, sizes, tiso, BETA,
                                       growth, normalize)
            fm, _ = pyref.mse_and_grad(C6, T6, theta - e, sizes, tiso, BETA,
                                       growth, normalize)
            fd = (fp - fm) / (2.0 * h)
            assert grad[j] == pytest.approx(fd, rel=5e-5, abs=1e-8), j

    def test_tiso_switch_negative_branch_gradient(self):
        # force x = g4 - g5 < 0 by boosting the fifth input's first-layer column
        rng = np.random.default_rng(71)
        arch = NetworkArchitecture(6, (5,))
        params = init_params(arch, seed=71)
        w = params.weights[0].copy()
        w[:, 4] += 3.0
        theta = np.concatenate([w.ravel(), params.biases[0],
                                params.output_weights])
        sizes = arch.layer_sizes()
        _, _, _, x = pyref.norm_constants(theta, sizes, True, BETA)
        assert x < 0.0
        C6 = _random_c6(rng, 6)
        T6 = rng.normal(size=(6, 6)) * 0.3
        _, grad = pyref.mse_and_grad(C6, T6, theta, sizes, True, BETA, True, True)
        h = 1e-5
        for j in range(0, len(theta), 7):
            e = np.zeros_like(theta)
            e[j] = h
            fp, _ = pyref.mse_and_grad(C6, T6, theta + e, sizes, True, BETA, True, True)
            fm, _ = pyref.mse_and_grad(C6, T6, theta - e, sizes, True, BETA, True, True)
            assert grad[j] == pytest.approx((fp - fm) / (2 * h), rel=5e-4,
                                            abs=2e-9), j


needs_compiled = pytest.mark.skipif(
    _kernels.BACKEND_NAME != "compiled",
    reason="compiled backend not built in this installation",
)


@needs_compiled
class TestBackendEquivalence:
    """The compiled backend must reproduce the reference to roundoff."""

    @pytest.mark.parametrize("growth,normalize", FLAG_COMBOS, ids=FLAG_IDS)
    @pytest.mark.parametrize("tiso", [False, True], ids=["iso", "tiso"])
    @pytest.mark.parametrize("hidden", [(8,), (6, 5)], ids=["1layer", "2layer"])
    def test_all_entry_points_agree(self, hidden, tiso, growth, normalize):
        comp = _kernels.get_backend("compiled")
        rng = np.random.default_rng(73)
        theta, sizes = _theta(6 if tiso else 4, hidden, seed=73)
        C6 = _random_c6(rng, 40)
        T6 = rng.normal(size=(40, 6)) * 0.3

        pf, pdf, pJ, pCi = pyref.prepare(C6, tiso, BETA)
        cf, cdf, cJ, cCi = comp.prepare(C6, tiso, BETA)
        assert np.allclose(cf, pf, rtol=1e-13, atol=1e-15)
        assert np.allclose(cdf, pdf, rtol=1e-13, atol=1e-15)
        assert np.allclose(cJ, pJ, rtol=1e-13)
        assert np.allclose(cCi, pCi, rtol=1e-12, atol=1e-15)

        args = (theta, sizes, tiso, BETA, growth, normalize)
        ep = pyref.energy_batch(C6, *args)
        ec = comp.energy_batch(C6, *args)
        np.testing.assert_allclose(ec, ep, rtol=1e-11, atol=1e-13)

        tp = pyref.stress_batch(C6, *args)
        tc = comp.stress_batch(C6, *args)
        np.testing.assert_allclose(tc, tp, rtol=1e-11, atol=1e-13)

        mp, gp = pyref.mse_and_grad(C6, T6, *args)
        mc, gc = comp.mse_and_grad(C6, T6, *args)
        assert mc == pytest.approx(mp, rel=1e-12)
        np.testing.assert_allclose(gc, gp, rtol=1e-11, atol=1e-13)

    def test_prepared_entry_points_agree(self):
        comp = _kernels.get_backend("compiled")
        rng = np.random.default_rng(79)
        theta, sizes = _theta(6, (8,), seed=79)
        C6 = _random_c6(rng, 30)
        T6 = rng.normal(size=(30, 6)) * 0.3
        prep_p = pyref.prepare(C6, True, BETA)
        prep_c = comp.prepare(C6, True, BETA)
        mp, gp = pyref.mse_and_grad_prepared(prep_p, T6, theta, sizes, True,
                                             BETA, True, True)
        mc, gc = comp.mse_and_grad_prepared(prep_c, T6, theta, sizes, True,
                                            BETA, True, True)
        assert mc == pytest.approx(mp, rel=1e-12)
        np.testing.assert_allclose(gc, gp, rtol=1e-11, atol=1e-13)
        np.testing.assert_allclose(
            comp.stress_batch_prepared(prep_c, theta, sizes, True, BETA, True, True),
            pyref.stress_batch_prepared(prep_p, theta, sizes, True, BETA, True, True),
            rtol=1e-11, atol=1e-13)
        np.testing.assert_allclose(
            comp.energy_batch_prepared(prep_c, theta, sizes, True, BETA, True, True),
            pyref.energy_batch_prepared(prep_p, theta, sizes, True, BETA, True, True),
            rtol=1e-11, atol=1e-13)


class TestBackendSelection:
    def test_active_backend_exposed(self):
        assert _kernels.BACKEND_NAME in ("python", "compiled")
        assert _kernels.get_backend("python") is pyref

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            _kernels.get_backend("fortran")

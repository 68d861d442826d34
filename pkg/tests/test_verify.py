"""Verification suites: the relative-error statistic, energy non-negativity
scans (including the hypothesis-downgrade path), the stress/energy
consistency audit, and the repeated-calibration ladder study."""

import numpy as np
import pytest

from pann.analytic import DEFAULT_NEO_HOOKE, DEFAULT_TRANS_ISO
from pann.datagen import Dataset, sample_multiaxial, uniaxial_data
from pann.errors import (
    AllZeroStressError,
    EmptyDatasetError,
    HypothesisViolatedWarning,
)
from pann.icnn import NetworkArchitecture, NetworkParams, init_params
from pann.invariants import MaterialSymmetry
from pann.model import PannModel
from pann.verify import (
    ErrorStats,
    NonNegReport,
    gradient_audit,
    nonneg_scan_iso,
    nonneg_scan_transiso,
    relative_error,
    variant_ladder_study,
    write_epsilon_csv,
)

ISO = MaterialSymmetry.isotropic()
TISO = MaterialSymmetry.transversely_isotropic(2.0)


def make_model(variant, sym, seed=401):
    arch = NetworkArchitecture(sym.input_dim, (8,),
                               constrain_weights=variant != "basic")
    return PannModel(variant, sym, init_params(arch, seed))


class TestErrorStats:
    def test_percentiles_match_numpy(self):
        rng = np.random.default_rng(403)
        values = rng.uniform(0.0, 1.0, size=200)
        stats = ErrorStats.from_values(values)
        assert stats.count == 200
        assert stats.median == pytest.approx(np.percentile(values, 50))
        assert stats.p25 == pytest.approx(np.percentile(values, 25))
        assert stats.p99 == pytest.approx(np.percentile(values, 99))

    def test_nan_filtered(self):
        stats = ErrorStats.from_values([1.0, float("nan"), 3.0])
        assert stats.count == 2
        assert stats.median == 2.0

    def test_empty_rejected(self):
        with pytest.raises(EmptyDatasetError):
            ErrorStats.from_values([float("nan")])


class TestRelativeError:
    def test_manual_oracle(self):
        ds = uniaxial_data(DEFAULT_NEO_HOOKE, 0.8, 1.2, 10)
        model = make_model("pann", ISO)
        R = model.stress_batch(ds.C6) - ds.T6
        to_norm = lambda A: np.sqrt((A * A) @ [1, 1, 1, 2, 2, 2])
        expected = to_norm(R).max() / to_norm(ds.T6).max()
        assert relative_error(model, ds) == pytest.approx(expected, rel=1e-13)

    def test_perfect_model_scores_zero(self):
        ds = uniaxial_data(DEFAULT_NEO_HOOKE, 0.8, 1.2, 10)
        assert relative_error(DEFAULT_NEO_HOOKE, ds) <= 1e-12

    def test_error_conditions(self):
        model = make_model("pann", ISO)
        with pytest.raises(EmptyDatasetError):
            relative_error(model, Dataset(np.empty((0, 6)), np.empty((0, 6))))
        with pytest.raises(AllZeroStressError):
            relative_error(model, Dataset(np.tile([1.0, 1, 1, 0, 0, 0], (3, 1)),
                                          np.zeros((3, 6))))


class TestNonNegIso:
    def test_reference_model_passes(self):
        report = nonneg_scan_iso(DEFAULT_NEO_HOOKE, count=1000)
        assert isinstance(report, NonNegReport)
        assert report.violation_count == 0
        assert report.min_energy == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(report.argmin_state, [1, 1, 1, 0, 0, 0])
        assert report.sample_count >= 1000
        assert report.hypothesis_ok is None  # probe applies to network models only

    def test_network_model_probed(self):
        model = make_model("pann", ISO)
        report = nonneg_scan_iso(model, count=200)
        assert report.hypothesis_ok is True
        assert "volumetric" in report.sweep

    def test_hypothesis_violation_downgrades_scan(self):
        # zero first-layer column for the I1 input: d psi / d I1 vanishes
        arch = NetworkArchitecture(4, (6,), constrain_weights=True)
        params = init_params(arch, 409)
        w = params.weights[0].copy()
        w[:, 0] = 0.0
        w[:, 1] = 0.0
        crippled = NetworkParams(arch, (w,), params.biases, params.output_weights)
        model = PannModel("pann", ISO, crippled)
        with pytest.warns(HypothesisViolatedWarning):
            report = nonneg_scan_iso(model, count=128, seed=2)
        assert report.hypothesis_ok is False
        assert "sobol" in report.sweep

    def test_symmetry_guard(self):
        with pytest.raises(ValueError):
            nonneg_scan_iso(make_model("pann", TISO))


class TestNonNegTransIso:
    def test_reference_model_passes_sobol(self):
        report = nonneg_scan_transiso(DEFAULT_TRANS_ISO, count=2000, seed=1)
        assert report.violation_count == 0
        assert report.sample_count == 2001  # identity appended
        assert report.min_energy >= -1e-10

    def test_grid_mode(self):
        report = nonneg_scan_transiso(DEFAULT_TRANS_ISO, grid=True, grid_points=3)
        assert report.sample_count == 3 ** 5 + 1
        assert report.violation_count == 0

    def test_deterministic_under_seed(self):
        a = nonneg_scan_transiso(DEFAULT_TRANS_ISO, count=512, seed=7)
        b = nonneg_scan_transiso(DEFAULT_TRANS_ISO, count=512, seed=7)
        assert a == b

    def test_symmetry_guard(self):
        with pytest.raises(ValueError):
            nonneg_scan_transiso(DEFAULT_NEO_HOOKE)


class TestGradientAudit:
    def test_reference_models_consistent(self):
        for model in (DEFAULT_NEO_HOOKE, DEFAULT_TRANS_ISO):
            audit = gradient_audit(model, count=50, seed=3)
            assert audit["max_relative_deviation"] <= 1e-5
            assert audit["mean_relative_deviation"] <= audit["max_relative_deviation"]
            assert audit["count"] == 50

    @pytest.mark.parametrize("variant", ["basic", "pann"])
    def test_network_models_consistent(self, variant):
        audit = gradient_audit(make_model(variant, TISO), count=40, seed=5)
        assert audit["max_relative_deviation"] <= 1e-4


@pytest.fixture(scope="module")
def tiny_ds():
    return sample_multiaxial(DEFAULT_NEO_HOOKE, 60, seed=419)


@pytest.fixture(scope="module")
def tiny_kwargs():
    return dict(runs=2, restarts=2, seed=0, hidden_layers=(4,),
                prune_iter=0, prune_keep=2, max_iter=60, polish_iter=60,
                polish_top=1, variants=("basic", "pann"))


class TestLadderStudy:
    def test_structure_and_success(self, tiny_ds, tiny_kwargs):
        out = variant_ladder_study(ISO, tiny_ds, **tiny_kwargs)
        assert out["symmetry"] == ISO.kind
        assert set(out["variants"]) == {"basic", "pann"}
        for v in ("basic", "pann"):
            entry = out["variants"][v]
            assert entry["stats"]["count"] == 2
            assert len(entry["epsilons"]) == 2
            assert entry["failed_runs"] == []
            assert all(e["epsilon"] > 0 for e in entry["runs"])

    def test_parallel_matches_serial(self, tiny_ds, tiny_kwargs):
        serial = variant_ladder_study(ISO, tiny_ds, threads=1, **tiny_kwargs)
        parallel = variant_ladder_study(ISO, tiny_ds, threads=2, **tiny_kwargs)
        for v in ("basic", "pann"):
            assert parallel["variants"][v]["epsilons"] == \
                serial["variants"][v]["epsilons"]


class TestEpsilonCsv:
    def test_format(self, tmp_path):
        path = tmp_path / "eps.csv"
        write_epsilon_csv([0.5, 0.25], str(path))
        assert path.read_text() == "epsilon\n0.5\n0.25\n"

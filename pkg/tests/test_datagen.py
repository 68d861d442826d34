"""Dataset container semantics, synthetic generation determinism,
perturbations, splitting, near-duplicate filtering, and the bit-exact CSV
round trip."""

import numpy as np
import pytest

from pann.analytic import DEFAULT_NEO_HOOKE, DEFAULT_TRANS_ISO
from pann.datagen import (
    CSV_HEADER,
    Dataset,
    apply_noise,
    apply_offset,
    biaxial_data,
    filter_by_invariants,
    fp_arrays,
    from_loadpoints,
    read_csv,
    sample_multiaxial,
    shear_data,
    split,
    uniaxial_data,
    write_csv,
)
from pann.errors import (
    DatasetTooSmallError,
    DimensionMismatchError,
    EmptyDatasetError,
    FormatError,
)
from pann.invariants import MaterialSymmetry
from pann.loadcases import solve_uniaxial


class TestDataset:
    def test_basic_container(self):
        ds = Dataset(np.ones((3, 6)), np.zeros((3, 6)), {"kind": "test"})
        assert len(ds) == 3
        assert ds.meta == {"kind": "test"}
        pairs = list(ds.tuples())
        assert len(pairs) == 3
        assert pairs[0][0].components() == (1.0,) * 6

    def test_shape_validation(self):
        with pytest.raises(DimensionMismatchError):
            Dataset(np.ones((3, 5)), np.zeros((3, 6)))
        with pytest.raises(DimensionMismatchError):
            Dataset(np.ones((3, 6)), np.zeros((2, 6)))

    def test_subset(self):
        ds = Dataset(np.arange(24.0).reshape(4, 6), np.zeros((4, 6)))
        sub = ds.subset([2, 0])
        assert len(sub) == 2
        assert np.array_equal(sub.C6[0], ds.C6[2])

    def test_from_loadpoints(self):
        pts = [solve_uniaxial(DEFAULT_NEO_HOOKE, lam) for lam in (1.0, 1.2)]
        ds = from_loadpoints(pts)
        assert len(ds) == 2
        assert ds.meta["controls"] == [1.0, 1.2]
        with pytest.raises(EmptyDatasetError):
            from_loadpoints([])


class TestGeneration:
    def test_uniaxial_consistent_with_reference(self):
        ds = uniaxial_data(DEFAULT_NEO_HOOKE, 0.8, 1.1, 15)
        assert len(ds) == 15
        assert ds.meta["kind"] == "uniaxial"
        assert ds.meta["reference_model"]["class"] == "NeoHooke"
        # stored stresses are the reference stresses of the stored states
        assert np.allclose(ds.T6, DEFAULT_NEO_HOOKE.stress_batch(ds.C6),
                           rtol=1e-12, atol=1e-12)
        identity_rows = np.flatnonzero(
            np.all(np.isclose(ds.C6, [1, 1, 1, 0, 0, 0]), axis=1))
        assert len(identity_rows) == 2

    def test_biaxial_and_shear_kinds(self):
        assert biaxial_data(DEFAULT_NEO_HOOKE, 0.9, 1.2, 6).meta["kind"] == "biaxial"
        ds = shear_data(DEFAULT_NEO_HOOKE, 0.0, 1.0, 5)
        assert ds.meta["kind"] == "shear"
        assert len(ds) == 5

    def test_multiaxial_deterministic(self):
        a = sample_multiaxial(DEFAULT_TRANS_ISO, 50, seed=3)
        b = sample_multiaxial(DEFAULT_TRANS_ISO, 50, seed=3)
        assert np.array_equal(a.C6, b.C6)
        assert np.array_equal(a.T6, b.T6)
        c = sample_multiaxial(DEFAULT_TRANS_ISO, 50, seed=4)
        assert not np.array_equal(a.C6, c.C6)

    def test_multiaxial_stretch_bounds(self):
        ds = sample_multiaxial(DEFAULT_NEO_HOOKE, 100, seed=7,
                               stretch_range=(0.7, 1.6))
        from pann.batch import bmat
        eigs = np.linalg.eigvalsh(bmat(ds.C6))
        assert eigs.min() >= 0.7 ** 2 - 1e-9
        assert eigs.max() <= 1.6 ** 2 + 1e-9
        assert np.allclose(ds.T6, DEFAULT_NEO_HOOKE.stress_batch(ds.C6))

    def test_multiaxial_with_shear(self):
        ds = sample_multiaxial(DEFAULT_TRANS_ISO, 30, seed=11,
                               shear_range=(0.0, 0.3))
        assert len(ds) == 30
        assert ds.meta["shear_range"] == [0.0, 0.3]

    def test_multiaxial_validation(self):
        with pytest.raises(ValueError):
            sample_multiaxial(DEFAULT_NEO_HOOKE, 0, seed=0)
        with pytest.raises(ValueError):
            sample_multiaxial(DEFAULT_NEO_HOOKE, 5, seed=0, stretch_range=(1.6, 0.7))


class TestPerturbations:
    def test_offset_shifts_only_t11(self):
        ds = uniaxial_data(DEFAULT_NEO_HOOKE, 0.8, 1.1, 10)
        shifted = apply_offset(ds, 100.0)
        assert np.allclose(shifted.T6[:, 0], ds.T6[:, 0] + 100.0)
        assert np.array_equal(shifted.T6[:, 1:], ds.T6[:, 1:])
        assert np.array_equal(shifted.C6, ds.C6)
        assert shifted.meta["perturbations"] == [{"kind": "offset_t11",
                                                  "value": 100.0}]
        # original untouched
        assert "perturbations" not in ds.meta

    def test_noise_is_seeded_and_t11_only(self):
        ds = uniaxial_data(DEFAULT_NEO_HOOKE, 0.8, 1.2, 12)
        a = apply_noise(ds, std=2.0, seed=5)
        b = apply_noise(ds, std=2.0, seed=5)
        assert np.array_equal(a.T6, b.T6)
        assert not np.array_equal(a.T6[:, 0], ds.T6[:, 0])
        assert np.array_equal(a.T6[:, 1:], ds.T6[:, 1:])
        c = apply_noise(ds, std=2.0, seed=6)
        assert not np.array_equal(a.T6[:, 0], c.T6[:, 0])

    def test_perturbations_accumulate_in_meta(self):
        ds = uniaxial_data(DEFAULT_NEO_HOOKE, 0.8, 1.2, 8)
        both = apply_noise(apply_offset(ds, 50.0), std=1.0, seed=1)
        kinds = [p["kind"] for p in both.meta["perturbations"]]
        assert kinds == ["offset_t11", "noise_t11"]


class TestSplit:
    def test_sizes_and_disjointness(self):
        ds = sample_multiaxial(DEFAULT_NEO_HOOKE, 30, seed=13)
        cal, test = split(ds, fraction=0.7, seed=2)
        assert len(cal) == 21 and len(test) == 9
        ci = cal.meta["split"]["indices"]
        ti = test.meta["split"]["indices"]
        assert sorted(ci + ti) == list(range(30))
        assert cal.meta["split"]["role"] == "calibration"
        assert test.meta["split"]["role"] == "test"

    def test_deterministic(self):
        ds = sample_multiaxial(DEFAULT_NEO_HOOKE, 20, seed=17)
        a_cal, _ = split(ds, seed=9)
        b_cal, _ = split(ds, seed=9)
        assert np.array_equal(a_cal.C6, b_cal.C6)
        c_cal, _ = split(ds, seed=10)
        assert not np.array_equal(a_cal.C6, c_cal.C6)

    def test_validation(self):
        tiny = Dataset(np.ones((1, 6)), np.zeros((1, 6)))
        with pytest.raises(DatasetTooSmallError):
            split(tiny)
        ds = sample_multiaxial(DEFAULT_NEO_HOOKE, 10, seed=1)
        with pytest.raises(ValueError):
            split(ds, fraction=1.0)

    def test_every_row_kept_even_at_extreme_fractions(self):
        ds = sample_multiaxial(DEFAULT_NEO_HOOKE, 5, seed=1)
        cal, test = split(ds, fraction=0.99, seed=0)
        assert len(cal) == 4 and len(test) == 1


class TestInvariantFilter:
    def test_exact_duplicates_removed(self):
        base = sample_multiaxial(DEFAULT_NEO_HOOKE, 10, seed=19)
        doubled = Dataset(np.vstack([base.C6, base.C6]),
                          np.vstack([base.T6, base.T6]), base.meta)
        kept = filter_by_invariants(doubled, MaterialSymmetry.isotropic())
        assert len(kept) == 10
        assert kept.meta["invariant_filter"] == {"eta": 0.01, "kept": 10,
                                                 "incoming": 20}

    def test_idempotent(self):
        ds = sample_multiaxial(DEFAULT_NEO_HOOKE, 40, seed=23)
        once = filter_by_invariants(ds, MaterialSymmetry.isotropic(), eta=0.05)
        twice = filter_by_invariants(once, MaterialSymmetry.isotropic(), eta=0.05)
        assert np.array_equal(once.C6, twice.C6)

    def test_spread_data_untouched(self):
        ds = uniaxial_data(DEFAULT_NEO_HOOKE, 0.5, 2.0, 10,
                           duplicate_identity=False)
        kept = filter_by_invariants(ds, MaterialSymmetry.isotropic(), eta=1e-6)
        assert len(kept) == 10


class TestCsvRoundTrip:
    def test_bit_exact(self, tmp_path):
        ds = sample_multiaxial(DEFAULT_TRANS_ISO, 25, seed=29,
                               shear_range=(0.0, 0.2))
        path = str(tmp_path / "data.csv")
        write_csv(ds, path)
        back = read_csv(path)
        assert np.array_equal(back.C6, ds.C6)
        assert np.array_equal(back.T6, ds.T6)
        assert back.meta == ds.meta

    def test_missing_sidecar_gives_empty_meta(self, tmp_path):
        ds = Dataset(np.ones((2, 6)), np.zeros((2, 6)), {"kind": "x"})
        path = str(tmp_path / "d.csv")
        write_csv(ds, path)
        (tmp_path / "d.meta.json").unlink()
        assert read_csv(path).meta == {}

    def test_malformed_files_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("")
        with pytest.raises(FormatError):
            read_csv(str(p))
        p.write_text("A,B\n1,2\n")
        with pytest.raises(FormatError):
            read_csv(str(p))
        header = ",".join(CSV_HEADER)
        p.write_text(header + "\n1,2,3\n")
        with pytest.raises(FormatError):
            read_csv(str(p))
        p.write_text(header + "\n" + ",".join(["x"] * 12) + "\n")
        with pytest.raises(FormatError):
            read_csv(str(p))
        p.write_text(header + "\n" + ",".join(["inf"] * 12) + "\n")
        with pytest.raises(FormatError):
            read_csv(str(p))


class TestFpArrays:
    def test_f_is_spd_square_root(self):
        ds = sample_multiaxial(DEFAULT_NEO_HOOKE, 15, seed=31)
        F9, P9 = fp_arrays(ds)
        assert F9.shape == (15, 9) and P9.shape == (15, 9)
        from pann.batch import bmat
        F = F9.reshape(15, 3, 3)
        C = bmat(ds.C6)
        # symmetric positive square root: F = F^T and F F = C
        assert np.allclose(F, np.transpose(F, (0, 2, 1)), atol=1e-12)
        assert np.allclose(F @ F, C, rtol=1e-10, atol=1e-12)
        assert np.linalg.eigvalsh(F).min() > 0
        # P = F T
        T = bmat(ds.T6)
        assert np.allclose(P9.reshape(15, 3, 3), F @ T, rtol=1e-12)

    def test_errors(self):
        with pytest.raises(EmptyDatasetError):
            fp_arrays(Dataset(np.empty((0, 6)), np.empty((0, 6))))
        bad = Dataset(np.array([[1.0, 1, -1, 0, 0, 0]]), np.zeros((1, 6)))
        with pytest.raises(FormatError):
            fp_arrays(bad)

import json
from itertools import product

import numpy as np
import pytest

from gtebench.datagen import (
    DEFAULT_LOAN_REMOVALS,
    Dataset,
    EquationConfig,
    FeatureSchema,
    Instance,
    VariationSpec,
    apply_variation,
    base_energy_distance,
    base_energy_time,
    class_overlap_report,
    generate_equation_dataset,
    generate_loan,
    loan_label,
    loan_score,
)
from gtebench.errors import ConfigError, NumericFailure

from importlib import resources

TIME_CFG = EquationConfig.load(resources.files("gtebench.configs") / "time_desk.json")
DIST_CFG = EquationConfig.load(resources.files("gtebench.configs") / "distance_desk.json")


class TestLoanScore:
    def test_employed_branch(self):
        assert loan_score(5, 3, 0) == 157

    def test_no_job_branch(self):
        assert loan_score(2, 3, 0) == 93

    def test_negative_score(self):
        assert loan_score(3, 0, 3) == -69  # 8*1 + 0 - 81 + 4

    def test_out_of_interval(self):
        with pytest.raises(ConfigError):
            loan_score(1, 0, 0)
        with pytest.raises(ConfigError):
            loan_score(3, 4, 0)

    def test_label_boundary(self):
        assert loan_label(157) == 1
        assert loan_label(32) == 1  # boundary inclusive
        assert loan_label(31.999) == 0


class TestGenerateLoan:
    def test_default_count(self):
        assert len(generate_loan()) == 54

    def test_empty_removals(self):
        assert len(generate_loan(())) == 64

    def test_full_removal_warns(self):
        everything = tuple(product(range(2, 6), range(0, 4), range(0, 4)))
        with pytest.warns(UserWarning):
            ds = generate_loan(everything)
        assert len(ds) == 0

    def test_invalid_removal(self):
        with pytest.raises(ConfigError):
            generate_loan(((9, 9, 9),))

    def test_labels_match_brute_force(self, loan_dataset):
        # re-evaluate the scoring rule independently over the full grid
        for x1, x2, x3 in product(range(2, 6), range(0, 4), range(0, 4)):
            if x1 == 2:
                score = 3 * x2**3 + x3**4 + 12
            else:
                score = 8 * (x1 - 2) ** 2 + 3 * x2**3 - x3**4 + 4
            expected = 1 if score >= 32 else 0
            mask = np.all(loan_dataset.X == [x1, x2, x3], axis=1)
            if mask.any():
                assert loan_dataset.labels[mask][0] == expected

    def test_schema_respected(self, loan_dataset):
        X = loan_dataset.X
        assert np.all(X == np.round(X))
        assert np.all((X[:, 0] >= 2) & (X[:, 0] <= 5))
        assert np.all((X[:, 1:] >= 0) & (X[:, 1:] <= 3))


class TestEnergyEquations:
    def test_distance_basic(self):
        assert base_energy_distance(2, 10, 2, 1) == 10
        assert base_energy_distance(0, 5, 2, 1) == 0
        assert base_energy_distance(1, 1, 1, 1) == 1

    def test_distance_zero_occupancy(self):
        with pytest.raises(NumericFailure):
            base_energy_distance(1, 1, 0, 1)

    def test_time_basic(self):
        assert base_energy_time(2, 30, 0.5) == 30
        assert base_energy_time(0, 30, 0.5) == 0
        assert base_energy_time(1, 1, 1) == 1


class TestVariations:
    def test_single_op(self):
        spec = VariationSpec(3, (("TD", "pow", 2.0),))
        row = Instance(np.array([1.0, 3.0, 2.0, 1.0, 1.0]), 0, 0, 0)
        out = apply_variation(row, spec, DIST_CFG.schema)
        assert out.features[DIST_CFG.schema.index("TD")] == 9.0
        assert out.label == 3

    def test_identity_variation(self):
        spec = VariationSpec(0, ())
        row = Instance(np.array([1.0, 3.0, 2.0, 1.0, 1.0]), 0, 0, 5)
        out = apply_variation(row, spec, DIST_CFG.schema)
        assert np.array_equal(out.features, row.features)
        assert out.label == 0

    def test_ops_in_listed_order(self):
        # (3 * 2) ** 2 = 36, not 3**2 * 2 = 18
        spec = VariationSpec(1, (("TO", "mul", 2.0), ("TO", "pow", 2.0)))
        row = Instance(np.array([1.0, 1.0, 3.0, 1.0, 1.0]), 0, 0, 0)
        out = apply_variation(row, spec, DIST_CFG.schema)
        assert out.features[DIST_CFG.schema.index("TO")] == 36.0

    def test_bad_op_rejected(self):
        with pytest.raises(ConfigError):
            VariationSpec(1, (("TD", "sqrt", 2.0),))
        with pytest.raises(ConfigError):
            VariationSpec(1, (("TD", "mul", 0.0),))
        with pytest.raises(ConfigError):
            VariationSpec(1, ())


class TestGenerateEquationDataset:
    def test_desk_counts(self):
        cfg = EquationConfig(
            TIME_CFG.equation, TIME_CFG.schema, TIME_CFG.variations, rows_per_class=100
        )
        ds = generate_equation_dataset(cfg, seed=3)
        assert len(ds) == 700
        assert ds.n_classes == 7
        counts = np.bincount(ds.labels)
        assert np.all(counts == 100)

    def test_full_scale_count_arithmetic(self):
        # full configs are too large to materialize here; check the arithmetic
        time_full = EquationConfig.load(resources.files("gtebench.configs") / "time_full.json")
        dist_full = EquationConfig.load(resources.files("gtebench.configs") / "distance_full.json")
        assert time_full.rows_per_class * len(time_full.variations) == 504_000
        assert dist_full.rows_per_class * len(dist_full.variations) == 2_600_000

    def test_reproducible(self):
        cfg = EquationConfig(
            DIST_CFG.equation, DIST_CFG.schema, DIST_CFG.variations, rows_per_class=50
        )
        a = generate_equation_dataset(cfg, seed=9)
        b = generate_equation_dataset(cfg, seed=9)
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.labels, b.labels)

    def test_base_rows_satisfy_equation(self):
        for cfg_src, fn, names in [
            (TIME_CFG, base_energy_time, ("TT", "Speed", "FE")),
            (DIST_CFG, base_energy_distance, ("TF", "TD", "TO", "EI")),
        ]:
            cfg = EquationConfig(cfg_src.equation, cfg_src.schema, cfg_src.variations, 200)
            ds = generate_equation_dataset(cfg, seed=4)
            cols = [ds.base_raw[:, cfg.schema.index(n)] for n in names]
            residual = np.abs(fn(*cols) - ds.base_energy)
            assert residual.max() < 1e-9

    def test_schema_interval_and_precision(self):
        cfg = EquationConfig(TIME_CFG.equation, TIME_CFG.schema, TIME_CFG.variations, 100)
        ds = generate_equation_dataset(cfg, seed=1)
        for j, f in enumerate(cfg.schema.features):
            col = ds.X[:, j]
            assert np.all((col >= f.lo) & (col <= f.hi))
            assert np.array_equal(col, np.round(col, f.precision))

    def test_grid_mode(self):
        cfg = EquationConfig(
            TIME_CFG.equation, TIME_CFG.schema, TIME_CFG.variations, 1,
            grid_mode=True, grid_points=3,
        )
        ds = generate_equation_dataset(cfg, seed=0)
        # 3 grid points per continuous variable x 5 modes, per class
        assert len(ds) == 3 * 3 * 3 * 5 * 7


class TestCsvRoundTrip:
    def test_loan(self, loan_dataset, tmp_path):
        p = tmp_path / "loan.csv"
        loan_dataset.save_csv(p)
        back = Dataset.load_csv(p)
        assert np.array_equal(back.X, loan_dataset.X)
        assert np.array_equal(back.labels, loan_dataset.labels)
        assert back.config_hash == loan_dataset.config_hash

    def test_equation(self, tmp_path):
        cfg = EquationConfig(TIME_CFG.equation, TIME_CFG.schema, TIME_CFG.variations, 30)
        ds = generate_equation_dataset(cfg, seed=2)
        p = tmp_path / "t.csv"
        ds.save_csv(p)
        back = Dataset.load_csv(p)
        assert np.array_equal(back.X, ds.X)
        assert back.n_classes == 7

    def test_byte_identical(self, tmp_path):
        cfg = EquationConfig(TIME_CFG.equation, TIME_CFG.schema, TIME_CFG.variations, 30)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        generate_equation_dataset(cfg, seed=2).save_csv(p1)
        generate_equation_dataset(cfg, seed=2).save_csv(p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestClassOverlap:
    def _toy(self, X, labels, n_classes):
        schema = FeatureSchema.from_dict(
            [{"name": "a", "kind": "continuous", "lo": -1e9, "hi": 1e9}]
        )
        return Dataset(schema, np.asarray(X, float), np.asarray(labels), np.asarray(labels),
                       n_classes, 0, "h", "time")

    def test_disjoint(self):
        ds = self._toy([[0.0], [1.0], [2.0], [3.0]], [0, 0, 1, 1], 2)
        assert class_overlap_report(ds)[0, 1] == 0.0

    def test_identical(self):
        ds = self._toy([[0.0], [1.0], [0.0], [1.0]], [0, 0, 1, 1], 2)
        m = class_overlap_report(ds)
        assert m[0, 1] == 1.0
        assert np.array_equal(m, m.T)

    def test_single_class_error(self):
        ds = self._toy([[0.0]], [0], 1)
        with pytest.raises(ConfigError):
            class_overlap_report(ds)

    def test_loan_brute_force(self, loan_dataset):
        m = class_overlap_report(loan_dataset)
        # brute-force bounding-box intersection over the 54 instances
        X, y = loan_dataset.X, loan_dataset.labels
        boxes = [(X[y == c].min(axis=0), X[y == c].max(axis=0)) for c in (0, 1)]
        lo = np.maximum(boxes[0][0], boxes[1][0])
        hi = np.minimum(boxes[0][1], boxes[1][1])
        expected = np.all((X >= lo) & (X <= hi), axis=1).mean()
        assert m[0, 1] == pytest.approx(expected)

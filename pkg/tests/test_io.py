"""Round-trip exactness and strict parsing for every file format."""

from __future__ import annotations

import json

import numpy as np
import pytest

from stochsep import io as sepio
from stochsep import corrector as co, sampling, separability as sep


class TestMatrixCsv:
    def test_one_by_one(self, tmp_path):
        path = tmp_path / "m.csv"
        sepio.write_matrix(np.array([[0.5]]), path)
        assert np.array_equal(sepio.read_matrix(path), np.array([[0.5]]))

    def test_value_exact_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((20, 5)) * np.logspace(-200, 200, 5)
        path = tmp_path / "m.csv"
        sepio.write_matrix(x, path)
        assert np.array_equal(sepio.read_matrix(path), x)

    def test_header_comment(self, tmp_path):
        path = tmp_path / "m.csv"
        sepio.write_matrix(np.ones((2, 2)), path, header="two rows")
        assert path.read_text().startswith("# two rows\n")
        assert sepio.read_matrix(path).shape == (2, 2)

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,2.0\n3.0\n", encoding="utf-8")
        with pytest.raises(sepio.FormatError, match=":2:"):
            sepio.read_matrix(path)

    def test_non_numeric_token_names_line(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,2.0\n3.0,abc\n", encoding="utf-8")
        with pytest.raises(sepio.FormatError, match=":2:.*abc"):
            sepio.read_matrix(path)

    @pytest.mark.parametrize("token", ["nan", "inf", "-inf", "NaN"])
    def test_non_finite_rejected_on_read(self, token, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(f"1.0,{token}\n", encoding="utf-8")
        with pytest.raises(sepio.FormatError, match="non-finite"):
            sepio.read_matrix(path)

    def test_non_finite_rejected_on_write(self, tmp_path):
        with pytest.raises(sepio.FormatError):
            sepio.write_matrix(np.array([[np.nan]]), tmp_path / "m.csv")

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("# only a header\n", encoding="utf-8")
        with pytest.raises(sepio.FormatError, match="no data"):
            sepio.read_matrix(path)


class TestMatrixBin:
    def test_bit_exact_round_trip_with_special_values(self, tmp_path):
        x = np.array([[0.1, -0.0], [5e-324, 1e308], [-1.5, 3.141592653589793]])
        path = tmp_path / "m.bin"
        sepio.write_matrix(x, path, fmt="bin")
        back = sepio.read_matrix(path, fmt="bin")
        assert back.tobytes() == x.tobytes()  # includes the -0.0 sign bit
        assert np.signbit(back[0, 1])

    def test_format_inferred_from_suffix(self, tmp_path):
        x = np.arange(6.0).reshape(2, 3)
        path = tmp_path / "m.bin"
        sepio.write_matrix(x, path)
        assert np.array_equal(sepio.read_matrix(path), x)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"XXXX" + bytes(20))
        with pytest.raises(sepio.FormatError, match="magic"):
            sepio.read_matrix(path, fmt="bin")

    def test_truncated_payload(self, tmp_path):
        x = np.ones((4, 4))
        path = tmp_path / "m.bin"
        sepio.write_matrix(x, path, fmt="bin")
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(sepio.FormatError, match="bytes"):
            sepio.read_matrix(path, fmt="bin")

    def test_unknown_format_name(self, tmp_path):
        with pytest.raises(sepio.FormatError):
            sepio.write_matrix(np.ones((1, 1)), tmp_path / "m.dat", fmt="hdf5")


class TestLabeled:
    def test_round_trip(self, tmp_path):
        ds = co.LabeledDataset(
            np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]),
            ("positive", "trash", "positive"),
        )
        path = tmp_path / "d.csv"
        sepio.write_labeled(ds, path)
        back = sepio.read_labeled(path)
        assert np.array_equal(back.features, ds.features)
        assert back.labels == ds.labels

    def test_unknown_label_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,2.0,maybe\n", encoding="utf-8")
        with pytest.raises(sepio.FormatError, match="maybe"):
            sepio.read_labeled(path)


def _example_model() -> co.CorrectorModel:
    rng = np.random.default_rng(1)
    pos = rng.standard_normal((100, 4))
    w = co.build_whitening(pos, rule=3, whiten=True)
    return co.fisher_corrector_multi(pos, rng.standard_normal((3, 4)) + 5.0, w)


class TestModelJson:
    def test_value_exact_round_trip(self, tmp_path):
        model = _example_model()
        path = tmp_path / "model.json"
        sepio.write_model(model, path)
        back = sepio.read_model(path)
        assert back.kind == model.kind
        assert np.array_equal(back.whitening.mean, model.whitening.mean)
        assert np.array_equal(back.whitening.basis, model.whitening.basis)
        assert np.array_equal(back.whitening.scale, model.whitening.scale)
        for c1, c2 in zip(back.cascade.clauses, model.cascade.clauses):
            for p1, p2 in zip(c1.predicates, c2.predicates):
                assert np.array_equal(p1.weights, p2.weights)
                assert p1.threshold == p2.threshold
                assert p1.closed == p2.closed

    def test_decisions_survive_round_trip(self, tmp_path):
        model = _example_model()
        path = tmp_path / "model.json"
        sepio.write_model(model, path)
        back = sepio.read_model(path)
        pts = np.random.default_rng(2).standard_normal((200, 4)) * 3
        assert np.array_equal(np.asarray(back.apply(pts)), np.asarray(model.apply(pts)))

    def test_empty_cascade_round_trip(self, tmp_path):
        model = co.CorrectorModel(
            co.WhiteningModel.identity(3), sep.CascadePredicate(()), "cascade", {}
        )
        path = tmp_path / "model.json"
        sepio.write_model(model, path)
        back = sepio.read_model(path)
        assert back.cascade.clauses == ()
        assert not np.asarray(back.apply(np.zeros((5, 3)))).any()

    def test_unknown_kind_rejected(self, tmp_path):
        model = _example_model()
        doc = sepio.model_to_dict(model)
        doc["kind"] = "perceptron_tower"
        path = tmp_path / "model.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(sepio.FormatError, match="kind"):
            sepio.read_model(path)

    def test_malformed_predicate_rejected(self, tmp_path):
        doc = sepio.model_to_dict(_example_model())
        doc["cascade"]["clauses"][0]["predicates"][0]["theta"] = "high"
        path = tmp_path / "model.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(sepio.FormatError, match="theta"):
            sepio.read_model(path)


class TestReportJson:
    @staticmethod
    def _report(repeats: int) -> sep.ExperimentReport:
        rng = np.random.default_rng(3)
        config = sep.ExperimentConfig(("ball", "cube"), (5,), 100, repeats, 7)
        cells = []
        for spec_kind in ("ball", "cube"):
            spec = sampling.DistributionSpec(spec_kind, 5)
            values = tuple(float(v) for v in rng.random(repeats))
            theory = 0.25 if spec_kind == "ball" else None
            cells.append(sep.CellResult(spec, values, theory))
        return sep.ExperimentReport(config, tuple(cells))

    def test_fifty_repeats_echoed(self, tmp_path):
        report = self._report(50)
        path = tmp_path / "report.json"
        sepio.write_report(report, path)
        back = sepio.read_report(path)
        for cell, orig in zip(back.cells, report.cells):
            assert len(cell.f1_values) == 50
            assert cell.f1_values == orig.f1_values
            assert cell.theory == orig.theory
        assert back.config == report.config

    def test_repeat_count_mismatch_rejected(self, tmp_path):
        report = self._report(5)
        doc = sepio.report_to_dict(report)
        doc["cells"][0]["f1_values"] = doc["cells"][0]["f1_values"][:3]
        path = tmp_path / "report.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(sepio.FormatError, match="repeats"):
            sepio.read_report(path)

    def test_missing_config_key_rejected(self, tmp_path):
        doc = sepio.report_to_dict(self._report(2))
        del doc["config"]["seed"]
        path = tmp_path / "report.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(sepio.FormatError, match="seed"):
            sepio.read_report(path)

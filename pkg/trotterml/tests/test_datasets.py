"""Tests for dataset generation, post-selection, pairing and dataset files."""

from __future__ import annotations

import json

import numpy as np
import pytest

from trotterml.core.errors import (
    AlignmentError,
    DatasetParseError,
    DegeneratePostSelectionError,
    InvalidArgumentError,
)
from trotterml.processing.dataset_io import export_csv, load_dataset, save_dataset
from trotterml.processing.datasets import (
    expected_size,
    full_basis,
    generate,
    pair_for_training,
    post_select,
    post_select_probabilities,
    reference_dataset,
    select_init_states,
    validation_rows,
)
from trotterml.reports.metrics import mse
from trotterml.schemas.models import Role, RunConfig
from trotterml.simulation.circuits import ModelKind, SpinModel, Stage, TrotterSchedule, time_grid
from trotterml.simulation.qsim import Axis, NoiseModel, ShotHistogram
from trotterml.simulation.reference import ideal_trotter_expectations


def _gen(model, schedule, stage, noise, shots=None, states=None, seed=11, **kwargs):
    states = states or full_basis(model.num_spins)
    return generate(model, schedule, stage, noise, shots, states, seed, workers=1, **kwargs)


class TestGenerate:
    """Stage dataset generation."""

    def test_record_count_follows_size_formula(self, tfim3, short_schedule, default_noise3):
        """Test that a stage holds states x times x axes x qubits records."""
        ds = _gen(tfim3, short_schedule, Stage.QUASI_IDEAL, default_noise3, shots=256)
        assert len(ds) == expected_size(3, 8, 3, 3) == 216
        assert ds.header.axes == [Axis.X, Axis.Y, Axis.Z]

    def test_full_basis_tfim_size(self):
        assert expected_size(5, 32, 20, 3) == 9600

    def test_xy_defaults_to_z_axis(self, xy3, short_schedule, default_noise3):
        ds = _gen(xy3, short_schedule, Stage.QUASI_IDEAL, default_noise3, states=["110"])
        assert ds.axes == [Axis.Z]
        assert len(ds) == 3 * 3

    def test_empty_blocks_are_identities_without_noise(self, tfim3, short_schedule, noiseless3):
        quasi = _gen(tfim3, short_schedule, Stage.QUASI_IDEAL, noiseless3)
        train = _gen(tfim3, short_schedule, Stage.TRAINING_NOISY, noiseless3)
        assert quasi.keys() == train.keys()
        for key in quasi.keys():
            assert quasi.value(*key) == pytest.approx(train.value(*key), abs=1e-12)

    def test_noise_free_exact_mode_matches_ideal_trotter(self, tfim3, short_schedule, noiseless3):
        """Test that a noiseless quasi-ideal dataset equals the N1-step ideal Trotter reference."""
        quasi = _gen(tfim3, short_schedule, Stage.QUASI_IDEAL, noiseless3, states=["010", "111"])
        grid = time_grid(short_schedule)
        for label in ("010", "111"):
            obs = [(axis, q) for axis in (Axis.X, Axis.Z) for q in range(3)]
            table = ideal_trotter_expectations(tfim3, label, short_schedule.N1, grid, obs)
            for o, (axis, q) in enumerate(obs):
                np.testing.assert_allclose(quasi.values(label, axis)[:, q], table.values[:, o], atol=1e-10)

    def test_stage_parity(self, tfim3, short_schedule, default_noise3):
        train = _gen(tfim3, short_schedule, Stage.TRAINING_NOISY, default_noise3, shots=128)
        evaluate = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=128)
        assert train.keys() == evaluate.keys()

    def test_shot_mode_is_deterministic(self, tfim3, short_schedule, default_noise3):
        a = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=200)
        b = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=200)
        assert a.records == b.records
        assert all(r.shots == 200 and r.seed is not None for r in a.records)

    def test_subset_regenerates_same_records(self, tfim3, short_schedule, default_noise3):
        """Test that regenerating a subset of states reproduces the same records."""
        full = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=300)
        part = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=300, states=["101"])
        for record in part.records:
            assert full.value(*record.key) == record.value

    def test_seed_changes_samples(self, tfim3, short_schedule, default_noise3):
        a = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=100, seed=1)
        b = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=100, seed=2)
        assert [r.value for r in a.records] != [r.value for r in b.records]

    def test_empty_init_states_rejected(self, tfim3, short_schedule, default_noise3):
        with pytest.raises(InvalidArgumentError):
            generate(tfim3, short_schedule, Stage.QUASI_IDEAL, default_noise3, 100, [], 1, workers=1)

    def test_noise_grows_with_depth(self):
        model = SpinModel(ModelKind.TFIM, 3)
        noise = NoiseModel.uniform(3)
        errors = []
        for c in (2, 4):
            schedule = TrotterSchedule(N1=2, c=c, T=1.0, K=3)
            raw = _gen(model, schedule, Stage.EVAL_NOISY, noise, states=["000", "011"])
            ideal = reference_dataset(model, schedule, Role.IDEAL_TROTTER, ["000", "011"], raw.axes)
            errors.append(mse(raw, ideal, [Axis.Z]))
        assert errors[1] > errors[0]


class TestPostSelect:
    """Excitation-number post-selection."""

    def test_filters_wrong_popcount(self):
        h = ShotHistogram(counts={"11100": 4000, "11000": 96, "11110": 50}, shots=4146)
        kept = post_select(h, 3)
        assert kept.counts == {"11100": 4000}
        assert kept.shots == 4000

    def test_idempotent(self):
        h = ShotHistogram(counts={"110": 10, "100": 3, "011": 7}, shots=20)
        once = post_select(h, 2)
        assert post_select(once, 2) == once

    def test_noiseless_state_unchanged(self):
        h = ShotHistogram(counts={"01101": 8192}, shots=8192)
        assert post_select(h, 3) == h

    def test_all_discarded(self):
        h = ShotHistogram(counts={"000": 5}, shots=5)
        with pytest.raises(DegeneratePostSelectionError):
            post_select(h, 1)

    def test_target_range(self):
        h = ShotHistogram(counts={"000": 5}, shots=5)
        with pytest.raises(InvalidArgumentError):
            post_select(h, 4)

    def test_probability_version_renormalizes(self):
        """Test that exact-mode post-selection renormalizes the kept probabilities."""
        probs = np.array([0.1, 0.2, 0.3, 0.4])
        kept = post_select_probabilities(probs, 2, 1)
        np.testing.assert_allclose(kept, [0.0, 0.4, 0.6, 0.0])

    def test_post_selection_improves_xy_quasi_ideal(self):
        model = SpinModel(ModelKind.XY, 5)
        schedule = TrotterSchedule(N1=2, c=2, T=1.0, K=5)
        noise = NoiseModel.uniform(5)
        states = ["11100"]
        plain = _gen(model, schedule, Stage.QUASI_IDEAL, noise, states=states)
        selected = _gen(model, schedule, Stage.QUASI_IDEAL, noise, states=states, post_select_enabled=True)
        table = ideal_trotter_expectations(model, "11100", schedule.N1, time_grid(schedule))
        ideal = table.values

        def err(ds):
            return float(np.sum((ds.values("11100", Axis.Z) - ideal) ** 2) / (2 * ideal.size))

        assert err(selected) < err(plain)

    @pytest.mark.parametrize("shots", [None, 256])
    def test_x_records_are_never_filtered(self, xy3, short_schedule, default_noise3, shots):
        """Test that post-selection leaves x-basis records untouched."""
        kwargs = dict(shots=shots, states=["110", "100"], axes=[Axis.X, Axis.Z])
        plain = _gen(xy3, short_schedule, Stage.EVAL_NOISY, default_noise3, **kwargs)
        selected = _gen(
            xy3, short_schedule, Stage.EVAL_NOISY, default_noise3, post_select_enabled=True, **kwargs
        )
        x_plain = [r for r in plain.records if r.axis is Axis.X]
        x_selected = [r for r in selected.records if r.axis is Axis.X]
        assert x_plain == x_selected
        z_changed = [
            r.value != plain.value(*r.key) for r in selected.records if r.axis is Axis.Z
        ]
        assert any(z_changed)

    def test_noise_free_post_selection_keeps_x(self, xy3, short_schedule, noiseless3):
        kwargs = dict(states=["110"], axes=[Axis.X, Axis.Z])
        plain = _gen(xy3, short_schedule, Stage.QUASI_IDEAL, noiseless3, **kwargs)
        selected = _gen(
            xy3, short_schedule, Stage.QUASI_IDEAL, noiseless3, post_select_enabled=True, **kwargs
        )
        np.testing.assert_allclose(
            selected.values("110", Axis.X), plain.values("110", Axis.X), atol=1e-12
        )
        np.testing.assert_allclose(
            selected.values("110", Axis.Z), plain.values("110", Axis.Z), atol=1e-12
        )


class TestTrainingPairs:
    """Tests for aligning noisy and quasi-ideal records into training pairs."""

    def test_tfim_shapes(self, tfim3, short_schedule, default_noise3):
        noisy = _gen(tfim3, short_schedule, Stage.TRAINING_NOISY, default_noise3, shots=64)
        quasi = _gen(tfim3, short_schedule, Stage.QUASI_IDEAL, default_noise3, shots=64)
        pairs = pair_for_training(noisy, quasi)
        assert len(pairs) == 8 * 3
        assert pairs.shape == (9, 3)

    def test_identical_datasets_project_onto_z(self, tfim3, short_schedule, default_noise3):
        """Test that pairing a dataset with itself gives its own z magnetizations as targets."""
        ds = _gen(tfim3, short_schedule, Stage.QUASI_IDEAL, default_noise3, shots=64)
        pairs = pair_for_training(ds, ds)
        np.testing.assert_array_equal(pairs.targets, pairs.inputs[:, 6:9])

    def test_xy_pairs_are_square(self, xy3, short_schedule, default_noise3):
        noisy = _gen(xy3, short_schedule, Stage.TRAINING_NOISY, default_noise3)
        quasi = _gen(xy3, short_schedule, Stage.QUASI_IDEAL, default_noise3)
        assert pair_for_training(noisy, quasi).shape == (3, 3)

    def test_key_mismatch(self, tfim3, short_schedule, default_noise3):
        noisy = _gen(tfim3, short_schedule, Stage.TRAINING_NOISY, default_noise3, states=["000", "001"])
        quasi = _gen(tfim3, short_schedule, Stage.QUASI_IDEAL, default_noise3, states=["000"])
        with pytest.raises(AlignmentError) as excinfo:
            pair_for_training(noisy, quasi)
        assert ("001", 1) in excinfo.value.missing

    def test_validation_rows_per_state(self, tfim3, default_noise3):
        schedule = TrotterSchedule(N1=2, c=2, T=1.0, K=10)
        ds = _gen(tfim3, schedule, Stage.QUASI_IDEAL, default_noise3, states=["000", "111"])
        pairs = pair_for_training(ds, ds)
        held = validation_rows(pairs, 0.2, seed=42)
        assert len(held) == 4
        assert sorted({pairs.keys[r][0] for r in held}) == ["000", "111"]
        assert held == validation_rows(pairs, 0.2, seed=42)


class TestInitStates:
    """Tests for initial-state selection."""

    def test_default_is_full_basis(self):
        config = RunConfig.model_validate({"model": {"Nq": 3}})
        assert select_init_states(config) == full_basis(3)

    def test_sampled_subset_is_seeded(self):
        config = RunConfig.model_validate({"model": {"Nq": 4}, "sampling": {"init_sample": 5}})
        chosen = select_init_states(config)
        assert len(chosen) == 5
        assert chosen == select_init_states(config)


class TestDatasetFiles:
    """JSON-lines dataset files."""

    def test_save_then_load(self, tmp_path, tfim3, short_schedule, default_noise3):
        ds = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=100, states=["001"])
        path = save_dataset(ds, tmp_path / "eval.jsonl")
        again = load_dataset(path)
        assert again.header == ds.header
        assert again.records == ds.records

    def test_exact_records_have_null_shots(self, tmp_path, tfim3, short_schedule, noiseless3):
        ds = _gen(tfim3, short_schedule, Stage.QUASI_IDEAL, noiseless3, states=["001"])
        path = save_dataset(ds, tmp_path / "quasi.jsonl")
        row = json.loads(path.read_text().splitlines()[1])
        assert row["shots"] is None

    def test_zero_shots_row_rejected(self, tmp_path, tfim3, short_schedule, default_noise3):
        ds = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=100, states=["001"])
        path = save_dataset(ds, tmp_path / "eval.jsonl")
        lines = path.read_text().splitlines()
        row = json.loads(lines[3])
        row["shots"] = 0
        lines[3] = json.dumps(row)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetParseError) as excinfo:
            load_dataset(path)
        assert excinfo.value.line == 4

    def test_version_mismatch(self, tmp_path, tfim3, short_schedule, default_noise3):
        ds = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=100, states=["001"])
        path = save_dataset(ds, tmp_path / "eval.jsonl")
        lines = path.read_text().splitlines()
        header = json.loads(lines[0])
        header["format_version"] = 99
        lines[0] = json.dumps(header)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetParseError) as excinfo:
            load_dataset(path)
        assert excinfo.value.line == 1

    def test_malformed_json_line(self, tmp_path, tfim3, short_schedule, default_noise3):
        ds = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=100, states=["001"])
        path = save_dataset(ds, tmp_path / "eval.jsonl")
        with open(path, "a", encoding="utf-8") as fh:
            fh.write("{not json\n")
        with pytest.raises(DatasetParseError) as excinfo:
            load_dataset(path)
        assert excinfo.value.line == len(ds) + 2

    def test_header_echoes_physics(self, tmp_path, tfim3, short_schedule, default_noise3):
        ds = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=100, states=["001"])
        again = load_dataset(save_dataset(ds, tmp_path / "eval.jsonl"))
        assert again.header.model.J == 2.0
        assert again.header.model.h == 1.0
        assert again.header.schedule.T == 1.0
        assert again.header.schedule.K == 3

    def test_csv_export(self, tmp_path, tfim3, short_schedule, default_noise3):
        ds = _gen(tfim3, short_schedule, Stage.EVAL_NOISY, default_noise3, shots=100, states=["001"])
        path = export_csv(ds, tmp_path / "eval.csv")
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# config_hash=")
        assert "p1=0.0005" in lines[0] and "eps10=0.02" in lines[0]
        assert lines[1].split(",")[:3] == ["model", "N1", "c"]
        assert len(lines) == len(ds) + 2

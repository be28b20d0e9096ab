import numpy as np
import pytest

from iminr.data import (
    MotionDataset,
    SyntheticDatasetSpec,
    generate_synthetic_dataset,
    read_motions,
    write_motions,
)
from iminr.errors import SchemaError
from iminr.kinematics import rot6d_to_matrix


class TestGenerateSyntheticDataset:
    def test_deterministic_given_seed(self):
        spec = SyntheticDatasetSpec(sequences_per_action=3, seed=5)
        a = generate_synthetic_dataset(spec)
        b = generate_synthetic_dataset(spec)
        assert [s.id for s in a.sequences] == [s.id for s in b.sequences]
        for sa, sb in zip(a.sequences, b.sequences):
            np.testing.assert_array_equal(sa.frames, sb.frames)

    def test_default_spec_counts_and_length_spread(self):
        ds = generate_synthetic_dataset(SyntheticDatasetSpec())
        assert len(ds.sequences) == 240
        assert ds.action_count == 6
        for action, seqs in ds.by_action().items():
            lengths = {s.length for s in seqs}
            assert len(lengths) >= 2
            assert max(lengths) - min(lengths) >= 2

    def test_lengths_respect_range(self):
        spec = SyntheticDatasetSpec(sequences_per_action=10, length_range=(8, 20), seed=1)
        ds = generate_synthetic_dataset(spec)
        assert all(8 <= s.length <= 20 for s in ds.sequences)

    def test_rotations_decode_to_valid_matrices(self):
        spec = SyntheticDatasetSpec(sequences_per_action=2, length_range=(8, 16), seed=2)
        ds = generate_synthetic_dataset(spec)
        for seq in ds.sequences:
            rots = seq.frames[:, : 6 * 24].reshape(-1, 6)
            mats = rot6d_to_matrix(rots)
            prod = np.einsum("nij,nik->njk", mats, mats)
            assert np.allclose(prod, np.eye(3), atol=1e-6)

    def test_zero_noise_sequences_are_smooth_templates(self):
        spec = SyntheticDatasetSpec(
            sequences_per_action=1, noise=0.0, amplitude_jitter=0.0, seed=3
        )
        a = generate_synthetic_dataset(spec)
        b = generate_synthetic_dataset(spec)
        for sa, sb in zip(a.sequences, b.sequences):
            np.testing.assert_array_equal(sa.frames, sb.frames)

    def test_too_many_actions_for_templates(self):
        with pytest.raises(ValueError):
            SyntheticDatasetSpec(action_count=9)

    def test_unique_ids_enforced(self):
        ds = generate_synthetic_dataset(SyntheticDatasetSpec(sequences_per_action=2))
        dup = [ds.sequences[0], ds.sequences[0]]
        with pytest.raises(SchemaError):
            MotionDataset(dup, ds.topology)


class TestMotionFile:
    def test_round_trip_within_1e12(self, tmp_path):
        spec = SyntheticDatasetSpec(sequences_per_action=2, length_range=(8, 12), seed=9)
        ds = generate_synthetic_dataset(spec)
        path = tmp_path / "motions.jsonl"
        write_motions(ds, path)
        back = read_motions(path)
        assert [s.id for s in back.sequences] == [s.id for s in ds.sequences]
        assert [s.action for s in back.sequences] == [s.action for s in ds.sequences]
        for sa, sb in zip(ds.sequences, back.sequences):
            assert np.max(np.abs(sa.frames - sb.frames)) <= 1e-12

    def test_missing_action_field_names_it(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "x", "frames": [[0,0,0,0,0,0,0,0,0]]}\n')
        with pytest.raises(SchemaError, match="action"):
            read_motions(path)

    def test_schema_error_carries_line_number(self, tmp_path):
        good = '{"id": "x", "action": 0, "frames": [[0,0,0,0,0,0,0,0,0]]}'
        path = tmp_path / "bad.jsonl"
        path.write_text(good + "\n" + "not json\n")
        with pytest.raises(SchemaError, match="line 2"):
            read_motions(path)

    def test_empty_file_is_empty_dataset(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        ds = read_motions(path)
        assert ds.sequences == []

    def test_ragged_frames_rejected(self, tmp_path):
        path = tmp_path / "ragged.jsonl"
        path.write_text('{"id": "x", "action": 0, "frames": [[1,2],[1]]}\n')
        with pytest.raises(SchemaError):
            read_motions(path)

    def test_mixed_pose_dims_rejected(self, tmp_path):
        rows = [
            '{"id": "x", "action": 0, "frames": [[0,0,0,0,0,0,0,0,0]]}',
            '{"id": "y", "action": 0, "frames": [[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]]}',
        ]
        path = tmp_path / "mixed.jsonl"
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(SchemaError, match="line 2"):
            read_motions(path)

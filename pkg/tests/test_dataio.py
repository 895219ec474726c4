import json
import struct

import numpy as np
import pytest

import videostory as vs
from videostory.dataio import (
    build_feature_store,
    load_manifest,
    read_feature_store,
    read_flo,
    read_semantic_vector,
    write_feature_store,
    write_flo,
)

from helpers import write_corpus


class TestFloFormat:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        flow = rng.normal(size=(5, 7, 2)).astype(np.float32).astype(np.float64)
        p = tmp_path / "a.flo"
        write_flo(p, flow)
        np.testing.assert_array_equal(read_flo(p), flow)

    def test_bad_magic_names_path(self, tmp_path):
        p = tmp_path / "bad.flo"
        p.write_bytes(struct.pack("<fii", 1.0, 2, 2) + b"\0" * 32)
        with pytest.raises(ValueError, match="bad.flo"):
            read_flo(p)

    def test_truncated(self, tmp_path):
        p = tmp_path / "short.flo"
        p.write_bytes(struct.pack("<fii", 202021.25, 3, 3) + b"\0" * 8)
        with pytest.raises(ValueError, match="short.flo"):
            read_flo(p)

    def test_bad_dimensions(self, tmp_path):
        p = tmp_path / "dims.flo"
        p.write_bytes(struct.pack("<fii", 202021.25, 0, 4))
        with pytest.raises(ValueError, match="dims.flo"):
            read_flo(p)


class TestSemanticVectors:
    def test_roundtrip(self, tmp_path):
        vec = np.arange(8, dtype="<f4")
        p = tmp_path / "v.sem"
        p.write_bytes(vec.tobytes())
        np.testing.assert_array_equal(read_semantic_vector(p, 8), vec.astype(np.float64))

    def test_length_mismatch_names_path(self, tmp_path):
        p = tmp_path / "v.sem"
        p.write_bytes(np.zeros(4, dtype="<f4").tobytes())
        with pytest.raises(ValueError, match="v.sem"):
            read_semantic_vector(p, 8)


class TestManifest:
    def test_valid_manifest_loads(self, tmp_path):
        manifest = write_corpus(tmp_path, n_clips=2)
        doc = load_manifest(manifest)
        assert len(doc["clips"]) == 2
        assert doc["semantic_dim"] == 16

    def test_missing_key_rejected(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"clips": [{"id": "a", "semantic": "s"}], "semantic_dim": 4}))
        with pytest.raises(ValueError, match="flows"):
            load_manifest(p)

    def test_empty_clips_rejected(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"clips": [], "semantic_dim": 4}))
        with pytest.raises(ValueError, match="no clips"):
            load_manifest(p)

    def test_duplicate_ids_rejected(self, tmp_path):
        entry = {"id": "a", "semantic": "s", "flows": ["f"]}
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"clips": [entry, dict(entry)], "semantic_dim": 4}))
        with pytest.raises(ValueError, match="duplicate"):
            load_manifest(p)

    def test_bad_json_rejected(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text("{nope")
        with pytest.raises(ValueError, match="JSON"):
            load_manifest(p)


class TestFeatureStore:
    def test_build_and_roundtrip(self, tmp_path):
        manifest = write_corpus(tmp_path, n_clips=3, semantic_dim=12)
        clips = build_feature_store(manifest, bins=10, pyramid_m=3)
        assert [c.clip_id for c in clips] == ["clip00", "clip01", "clip02"]
        assert all(c.motion.shape == (100,) for c in clips)
        store = tmp_path / "c.vsfs"
        write_feature_store(store, clips)
        back = read_feature_store(store)
        for a, b in zip(clips, back):
            assert a.clip_id == b.clip_id
            np.testing.assert_array_equal(a.semantic, b.semantic)
            np.testing.assert_array_equal(a.motion, b.motion)
            assert a.dynamics == b.dynamics

    def test_store_bytes_deterministic(self, tmp_path):
        manifest = write_corpus(tmp_path, n_clips=2)
        clips = build_feature_store(manifest, 10, 3)
        p1, p2 = tmp_path / "a.vsfs", tmp_path / "b.vsfs"
        write_feature_store(p1, clips)
        write_feature_store(p2, clips)
        assert p1.read_bytes() == p2.read_bytes()

    def test_uniform_flow_dynamics_exact(self, tmp_path):
        mags = np.array([1.5, 0.25, 2.0])
        manifest = write_corpus(tmp_path, n_clips=3, magnitudes=mags)
        clips = build_feature_store(manifest, 10, 3)
        np.testing.assert_allclose([c.dynamics for c in clips], mags, atol=1e-9)

    def test_corrupt_store_rejected(self, tmp_path):
        p = tmp_path / "bad.vsfs"
        p.write_bytes(b"VSFS" + struct.pack("<II", 1, 3) + b"\0" * 4)
        with pytest.raises(ValueError, match="bad.vsfs"):
            read_feature_store(p)

    def test_wrong_magic_rejected(self, tmp_path):
        p = tmp_path / "bad.vsfs"
        p.write_bytes(b"NOPE" + b"\0" * 16)
        with pytest.raises(ValueError, match="magic"):
            read_feature_store(p)

    def test_missing_flow_file_names_path(self, tmp_path):
        manifest = write_corpus(tmp_path, n_clips=2)
        doc = json.loads(manifest.read_text())
        doc["clips"][1]["flows"].append("missing.flo")
        manifest.write_text(json.dumps(doc))
        with pytest.raises(FileNotFoundError, match="missing.flo"):
            build_feature_store(manifest, 10, 3)

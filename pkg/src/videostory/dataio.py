"""File ingestion and the binary feature store.

Formats handled here:

* Middlebury ``.flo``: float32 sanity tag 202021.25, then width and height
  as little-endian int32, then width*height interleaved (u, v) float32
  pairs, row-major.
* raw semantic vectors: headerless little-endian float32, length declared
  by the corpus manifest.
* corpus manifest: JSON ``{"clips": [{"id", "semantic", "flows": [...]}],
  "semantic_dim": int}``; flow paths listed in frame order.
* feature store: single binary container, magic ``VSFS`` -- see
  :func:`write_feature_store` for the exact layout.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .features import ClipFeatures, clip_motion_feature, dynamics_score
from .util import atomic_write_bytes

FLO_MAGIC = 202021.25
STORE_MAGIC = b"VSFS"
STORE_VERSION = 1


def read_flo(path) -> np.ndarray:
    """Read a .flo file into a float64 array of shape (height, width, 2)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12:
        raise ValueError(f"{path}: too short to be a .flo file")
    (tag,) = struct.unpack_from("<f", data, 0)
    if tag != FLO_MAGIC:
        raise ValueError(f"{path}: bad .flo sanity tag {tag!r}")
    width, height = struct.unpack_from("<ii", data, 4)
    if width < 1 or height < 1:
        raise ValueError(f"{path}: invalid dimensions {width}x{height}")
    expected = 12 + width * height * 8
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for {width}x{height}, got {len(data)}")
    flat = np.frombuffer(data, dtype="<f4", count=width * height * 2, offset=12)
    return flat.astype(np.float64).reshape(height, width, 2)


def write_flo(path, flow) -> None:
    """Write a (height, width, 2) array as a .flo file."""
    arr = np.asarray(flow, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"flow field must have shape (height, width, 2), got {arr.shape}")
    height, width = arr.shape[0], arr.shape[1]
    payload = struct.pack("<fii", FLO_MAGIC, width, height)
    payload += arr.astype("<f4").tobytes()
    atomic_write_bytes(path, payload)


def read_semantic_vector(path, expected_dim: int) -> np.ndarray:
    """Read a raw float32 semantic feature file and check its length."""
    path = Path(path)
    vec = np.frombuffer(path.read_bytes(), dtype="<f4")
    if vec.size != expected_dim:
        raise ValueError(f"{path}: semantic vector has {vec.size} floats, manifest declares {expected_dim}")
    return vec.astype(np.float64)


def load_manifest(path) -> dict:
    """Load and validate a corpus manifest; clip file paths stay as written."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(doc, dict) or "clips" not in doc or "semantic_dim" not in doc:
        raise ValueError(f"{path}: manifest must contain 'clips' and 'semantic_dim'")
    dim = doc["semantic_dim"]
    if not isinstance(dim, int) or dim < 1:
        raise ValueError(f"{path}: semantic_dim must be a positive integer")
    clips = doc["clips"]
    if not isinstance(clips, list) or not clips:
        raise ValueError(f"{path}: manifest contains no clips")
    seen = set()
    for entry in clips:
        for key in ("id", "semantic", "flows"):
            if key not in entry:
                raise ValueError(f"{path}: clip entry missing '{key}'")
        if not entry["flows"]:
            raise ValueError(f"{path}: clip {entry['id']!r} lists no flow files")
        if entry["id"] in seen:
            raise ValueError(f"{path}: duplicate clip id {entry['id']!r}")
        seen.add(entry["id"])
    return doc


def compute_clip_features(entry: dict, semantic_dim: int, bins: int, pyramid_m: int,
                          base_dir=None) -> ClipFeatures:
    """Assemble one clip's feature record from its manifest entry."""
    base = Path(base_dir) if base_dir is not None else Path(".")
    semantic = read_semantic_vector(base / entry["semantic"], semantic_dim)
    flows = [read_flo(base / p) for p in entry["flows"]]
    return ClipFeatures(
        clip_id=entry["id"],
        semantic=semantic,
        motion=clip_motion_feature(flows, bins, pyramid_m),
        dynamics=dynamics_score(flows),
    )


def build_feature_store(manifest_path, bins: int, pyramid_m: int) -> list[ClipFeatures]:
    """Compute feature records for every clip in a manifest, in manifest order."""
    manifest_path = Path(manifest_path)
    doc = load_manifest(manifest_path)
    base = manifest_path.parent
    return [
        compute_clip_features(entry, doc["semantic_dim"], bins, pyramid_m, base)
        for entry in doc["clips"]
    ]


def write_feature_store(path, clips: list[ClipFeatures]) -> None:
    """Serialize clip feature records to one binary container.

    Layout (all little-endian): magic ``VSFS``, u32 version, u32 clip count,
    then per clip: u32 id byte-length, id bytes (utf-8), u32 semantic dim,
    semantic float64s, u32 motion dim, motion float64s, float64 dynamics.
    """
    if not clips:
        raise ValueError("refusing to write an empty feature store")
    out = bytearray()
    out += STORE_MAGIC
    out += struct.pack("<II", STORE_VERSION, len(clips))
    for clip in clips:
        ident = clip.clip_id.encode("utf-8")
        out += struct.pack("<I", len(ident))
        out += ident
        out += struct.pack("<I", clip.semantic.size)
        out += clip.semantic.astype("<f8").tobytes()
        out += struct.pack("<I", clip.motion.size)
        out += clip.motion.astype("<f8").tobytes()
        out += struct.pack("<d", clip.dynamics)
    atomic_write_bytes(path, bytes(out))


def read_feature_store(path) -> list[ClipFeatures]:
    """Read back a feature store written by :func:`write_feature_store`."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != STORE_MAGIC:
        raise ValueError(f"{path}: not a feature store (bad magic)")
    version, count = struct.unpack_from("<II", data, 4)
    if version != STORE_VERSION:
        raise ValueError(f"{path}: unsupported store version {version}")
    offset = 12
    clips = []
    try:
        for _ in range(count):
            (id_len,) = struct.unpack_from("<I", data, offset)
            offset += 4
            clip_id = data[offset:offset + id_len].decode("utf-8")
            offset += id_len
            (d_f,) = struct.unpack_from("<I", data, offset)
            offset += 4
            semantic = np.frombuffer(data, dtype="<f8", count=d_f, offset=offset).copy()
            offset += d_f * 8
            (d_m,) = struct.unpack_from("<I", data, offset)
            offset += 4
            motion = np.frombuffer(data, dtype="<f8", count=d_m, offset=offset).copy()
            offset += d_m * 8
            (phi,) = struct.unpack_from("<d", data, offset)
            offset += 8
            clips.append(ClipFeatures(clip_id, semantic, motion, phi))
    except (struct.error, ValueError) as e:
        raise ValueError(f"{path}: truncated or corrupt feature store ({e})") from e
    if offset != len(data):
        raise ValueError(f"{path}: trailing bytes after {count} clip records")
    dims_f = {c.semantic.size for c in clips}
    dims_m = {c.motion.size for c in clips}
    if len(dims_f) > 1 or len(dims_m) > 1:
        raise ValueError(f"{path}: inconsistent feature dimensions across clips")
    return clips

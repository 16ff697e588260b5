"""Binary state snapshots.

Layout (all integers little-endian):

    bytes 0-3    magic "BECL"
    bytes 4-7    format version (u32), currently 1
    bytes 8-11   metadata length (u32)
    ...          metadata, UTF-8 JSON
    next 8       payload element count (u64)
    ...          payload: complex amplitudes as little-endian float64 pairs
                 (re, im), row-major over (slot, x-row, x-col, hermite-mode)
    last 4       CRC-32 of the payload (u32)

Metadata records dims, basis sizes, omega, N, beta, time and norm as
available for the saved object.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

MAGIC = b"BECL"
VERSION = 1

__all__ = ["SnapshotError", "save_snapshot", "load_snapshot", "snapshot_metadata"]


class SnapshotError(RuntimeError):
    pass


def snapshot_metadata(state) -> dict:
    """Metadata block for the supported state types (duck-typed)."""
    meta: dict = {"time": float(getattr(state, "time", 0.0))}
    if hasattr(state, "amplitudes"):  # ManyBodyState
        meta |= {
            "kind": "manybody",
            "dims": list(state.amplitudes.shape),
            "n": state.grid.n,
            "L": state.grid.L,
            "modes": state.basis.mode_count,
            "N": state.N,
            "norm": float(np.linalg.norm(state.amplitudes)),
        }
    elif hasattr(state, "coeffs"):  # Field3D
        meta |= {
            "kind": "field3d",
            "dims": list(state.coeffs.shape),
            "n": state.grid.n,
            "L": state.grid.L,
            "modes": state.basis.mode_count,
            "omega": state.omega,
            "norm": float(np.sqrt(state.mass())),
        }
    elif hasattr(state, "values"):  # Field2D
        meta |= {
            "kind": "field2d",
            "dims": list(state.values.shape),
            "n": state.grid.n,
            "L": state.grid.L,
            "norm": float(np.sqrt(state.mass())),
        }
    else:
        raise SnapshotError(f"cannot snapshot object of type {type(state).__name__}")
    return meta


def _payload_of(state) -> np.ndarray:
    for attr in ("amplitudes", "coeffs", "values"):
        if hasattr(state, attr):
            return np.ascontiguousarray(getattr(state, attr), dtype="<c16")
    raise SnapshotError(f"cannot snapshot object of type {type(state).__name__}")


def save_snapshot(state, path, extra_metadata: dict | None = None) -> None:
    arr = _payload_of(state)
    meta = snapshot_metadata(state)
    if extra_metadata:
        meta |= extra_metadata
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    payload = arr.tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<Q", arr.size))
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_snapshot(path) -> tuple[np.ndarray, dict]:
    """Returns (amplitudes, metadata); amplitudes reshaped per metadata dims."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise SnapshotError(f"bad magic {blob[:4]!r}; not a snapshot file")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version} (supported: {VERSION})")
    (meta_len,) = struct.unpack_from("<I", blob, 8)
    meta_end = 12 + meta_len
    try:
        meta = json.loads(blob[12:meta_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"corrupt metadata block: {exc}") from exc
    (count,) = struct.unpack_from("<Q", blob, meta_end)
    payload_start = meta_end + 8
    payload_end = payload_start + 16 * count
    if len(blob) < payload_end + 4:
        raise SnapshotError(
            f"truncated payload: need {payload_end + 4} bytes, file has {len(blob)}"
        )
    payload = blob[payload_start:payload_end]
    (crc,) = struct.unpack_from("<I", blob, payload_end)
    if zlib.crc32(payload) != crc:
        raise SnapshotError("payload checksum mismatch; snapshot is corrupt")
    arr = np.frombuffer(payload, dtype="<c16").copy()
    dims = meta.get("dims")
    if dims is not None:
        if int(np.prod(dims)) != count:
            raise SnapshotError(f"metadata dims {dims} disagree with element count {count}")
        arr = arr.reshape(dims)
    return arr, meta

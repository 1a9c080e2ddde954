"""Binary channel-tensor files, GSCM config files and run manifests.

Tensor file layout, all little-endian::

    b"MCHT"  version:u16  K:u32 N:u32 F:u32 M:u32  flags:u32
    meta_len:u32  meta: UTF-8 JSON
    payload: K*N*F*M pairs of f64 (re, im), k-major then n, f, m
    [mask: per user ceil(N/8) bytes, bit n set = snapshot valid, LSB first]

Bit 0 of ``flags`` marks the presence of the validity mask.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import struct
import tempfile
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np
import yaml

from .core import ChannelError, ChannelTensor, TensorMeta
from .synth.gscm import GscmConfig

MAGIC = b"MCHT"
VERSION = 1
FLAG_MASK = 1
_HEADER = struct.Struct("<4sHIIIII")
_U32 = struct.Struct("<I")

PathLike = Union[str, os.PathLike]


class TensorFileError(Exception):
    code = "data_error"
    exit_code = 3


class BadMagicError(TensorFileError):
    code = "bad_magic"


class VersionMismatchError(TensorFileError):
    code = "version_mismatch"


class TruncatedPayloadError(TensorFileError):
    code = "truncated_payload"


class InvariantViolationError(TensorFileError):
    code = "invariant_violation"
    exit_code = 4


def atomic_write_bytes(path: PathLike, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def encode_tensor(tensor: ChannelTensor) -> bytes:
    K, N, F, M = tensor.shape
    flags = FLAG_MASK if tensor.mask is not None else 0
    meta = json.dumps(tensor.meta.to_dict(), sort_keys=True).encode("utf-8")
    parts = [_HEADER.pack(MAGIC, VERSION, K, N, F, M, flags), _U32.pack(len(meta)), meta]
    parts.append(tensor.samples.astype("<c16", copy=False).tobytes(order="C"))
    if tensor.mask is not None:
        parts.append(np.packbits(tensor.mask, axis=1, bitorder="little").tobytes())
    return b"".join(parts)


def decode_tensor(data: bytes) -> ChannelTensor:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError("not a channel tensor file (bad magic)")
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError("file ends inside the header")
    _, version, K, N, F, M, flags = _HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise VersionMismatchError(f"unsupported version {version}, expected {VERSION}")
    if min(K, N, F, M) < 1:
        raise InvariantViolationError(f"dimensions must be >= 1, got K={K} N={N} F={F} M={M}")
    if flags & ~FLAG_MASK:
        raise InvariantViolationError(f"unknown flag bits {flags:#x}")
    off = _HEADER.size
    if len(data) < off + _U32.size:
        raise TruncatedPayloadError("file ends before the metadata length")
    (meta_len,) = _U32.unpack_from(data, off)
    off += _U32.size
    if len(data) < off + meta_len:
        raise TruncatedPayloadError("file ends inside the metadata block")
    try:
        meta = TensorMeta.from_dict(json.loads(data[off : off + meta_len].decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, AttributeError) as e:
        raise InvariantViolationError(f"bad metadata block: {e}") from e
    off += meta_len
    n_payload = K * N * F * M * 16
    mask_row = (N + 7) // 8
    expected = off + n_payload + (K * mask_row if flags & FLAG_MASK else 0)
    if len(data) < expected:
        raise TruncatedPayloadError(f"payload truncated: {len(data)} of {expected} bytes")
    if len(data) > expected:
        raise InvariantViolationError(f"{len(data) - expected} trailing bytes after payload")
    samples = np.frombuffer(data, dtype="<c16", count=K * N * F * M, offset=off).reshape(K, N, F, M)
    off += n_payload
    mask = None
    if flags & FLAG_MASK:
        packed = np.frombuffer(data, dtype=np.uint8, count=K * mask_row, offset=off).reshape(K, mask_row)
        mask = np.unpackbits(packed, axis=1, count=N, bitorder="little").astype(bool)
    try:
        return ChannelTensor(samples.astype(np.complex128), meta, mask)
    except ChannelError as e:
        raise InvariantViolationError(str(e)) from e


def write_tensor(tensor: ChannelTensor, path: PathLike) -> None:
    atomic_write_bytes(path, encode_tensor(tensor))


def read_tensor(path: PathLike) -> ChannelTensor:
    return decode_tensor(Path(path).read_bytes())


DEFAULT_CONFIG = "indoor_closely_spaced_2_6ghz"


def default_config_text(name: str = DEFAULT_CONFIG) -> str:
    return resources.files("chhard").joinpath("configs", f"{name}.yaml").read_text(encoding="utf-8")


def load_config(path: PathLike | None = None) -> GscmConfig:
    """Read a GSCM config file; ``None`` or a shipped name gives the defaults."""
    if path is None or str(path) == DEFAULT_CONFIG:
        text = default_config_text()
    else:
        text = Path(path).read_text(encoding="utf-8")
    return GscmConfig.from_dict(yaml.safe_load(text) or {})


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x)}")


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def versions() -> dict:
    from . import __version__

    return {"chhard": __version__, "numpy": np.__version__, "python": platform.python_version()}


def write_manifest(path: PathLike, command: str, seeds, config, artifacts, extra=None) -> dict:
    manifest = {
        "command": command,
        "seeds": seeds,
        "config": config,
        "config_sha256": config_hash(config),
        "versions": versions(),
        "artifacts": sorted(str(a) for a in artifacts),
    }
    if extra:
        manifest.update(extra)
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    return manifest

"""Binary volume container and JSON manifests.

Volume files start with an 8-byte magic ("FLOF" plus four zero bytes),
a little-endian u16 format version, a kind byte (0 scalar, 1 deformation),
an axis-count byte, one u32 extent per axis and a component-count byte.
The payload is 32-bit little-endian floats with axis 0 varying fastest and
the component index slowest.
"""

import json
import struct
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

MAGIC = b"FLOF\x00\x00\x00\x00"
FORMAT_VERSION = 1
KIND_SCALAR = 0
KIND_DEFORMATION = 1


class VolumeFormatError(ValueError):
    pass


def header_size(naxes):
    return 8 + 2 + 1 + 1 + 4 * naxes + 1


def _pack_header(kind, dims, components):
    return (
        MAGIC
        + struct.pack("<H", FORMAT_VERSION)
        + struct.pack("B", kind)
        + struct.pack("B", len(dims))
        + struct.pack(f"<{len(dims)}I", *dims)
        + struct.pack("B", components)
    )


def write_volume(path, data, kind=KIND_SCALAR):
    """Write a scalar or deformation volume; returns the path."""
    arr = np.asarray(data)
    if kind == KIND_SCALAR:
        dims = arr.shape
        components = 1
        payload = arr
    elif kind == KIND_DEFORMATION:
        if arr.ndim < 2 or arr.shape[-1] != arr.ndim - 1:
            raise VolumeFormatError(
                f"deformation volume must have shape dims + (len(dims),), got {arr.shape}"
            )
        dims = arr.shape[:-1]
        components = arr.shape[-1]
        payload = arr
    else:
        raise VolumeFormatError(f"unknown volume kind {kind}")
    path = Path(path)
    raw = np.asarray(payload, dtype="<f4").ravel(order="F")
    with open(path, "wb") as fh:
        fh.write(_pack_header(kind, dims, components))
        fh.write(raw.tobytes())
    return path


def read_header(path):
    """Parse the header; returns ``(kind, dims, components, payload_offset)``."""
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:8] != MAGIC:
            raise VolumeFormatError(f"{path}: not a FLOF volume")
        version = struct.unpack_from("<H", head, 8)[0]
        if version != FORMAT_VERSION:
            raise VolumeFormatError(f"{path}: unsupported format version {version}")
        kind = head[10]
        naxes = head[11]
        rest = fh.read(4 * naxes + 1)
        if len(rest) != 4 * naxes + 1:
            raise VolumeFormatError(f"{path}: truncated header")
        dims = struct.unpack(f"<{naxes}I", rest[: 4 * naxes])
        components = rest[-1]
    expected = (KIND_DEFORMATION, naxes) if kind == KIND_DEFORMATION else (KIND_SCALAR, 1)
    if (kind, components) != expected:
        raise VolumeFormatError(
            f"{path}: kind {kind} with {components} components is inconsistent"
        )
    return kind, dims, components, header_size(naxes)


def read_volume(path):
    """Read a volume into memory; returns ``(array, kind)``.

    Scalars come back with shape ``dims``; deformations with shape
    ``dims + (components,)`` and their boundary cells pinned to zero.
    """
    kind, dims, components, offset = read_header(path)
    count = int(np.prod(dims)) * components
    with open(path, "rb") as fh:
        fh.seek(offset)
        raw = fh.read()
    if len(raw) != 4 * count:
        raise VolumeFormatError(
            f"{path}: payload holds {len(raw)} bytes, expected {4 * count}"
        )
    flat = np.frombuffer(raw, dtype="<f4")
    if kind == KIND_DEFORMATION:
        arr = flat.reshape(dims + (components,), order="F").copy()
        for ax in range(len(dims)):
            face = [slice(None)] * arr.ndim
            face[ax] = 0
            arr[tuple(face)] = 0.0
            face[ax] = -1
            arr[tuple(face)] = 0.0
        if not np.all(np.isfinite(arr)):
            raise VolumeFormatError(f"{path}: non-finite deformation components")
        return arr, kind
    return flat.reshape(dims, order="F").copy(), kind


def open_scalar_memmap(path):
    """Memory-map a scalar volume for windowed slab reads."""
    kind, dims, _, offset = read_header(path)
    if kind != KIND_SCALAR:
        raise VolumeFormatError(f"{path}: expected a scalar volume")
    return np.memmap(path, dtype="<f4", mode="r", offset=offset, shape=dims, order="F")


@dataclass
class DatasetManifest:
    """On-disk description binding volumes to a parameter point.

    ``volume`` is the assembled space-time data volume the deformations are
    applied to; ``sdf_volume`` is the matching SDF assembly used for
    registration (the same file for liquids).
    """

    name: str
    r: list
    frames: int
    spatial_dims: list
    kind: str
    volume: str
    sdf_volume: str
    frames_repeated: int = 0
    margin: float = 0.0
    gamma_max: float = 40.0
    masses: list | None = None
    density_max: float | None = None

    def __post_init__(self):
        if self.kind == "smoke-density":
            if self.masses is None or len(self.masses) != self.frames:
                raise VolumeFormatError(
                    "smoke dataset needs one mass entry per frame"
                )

    def save(self, path):
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**data)

    def resolve(self, key, base):
        return (Path(base).parent / getattr(self, key)).resolve()

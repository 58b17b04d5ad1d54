"""Parameter-space runtime: loads manifests, deformations and data volumes,
and serves interpolated slabs.

Data volumes stay memory-mapped; slab synthesis touches only the time window
the deformations actually reach (a fifth of the sequence covers the largest
offsets in practice), and recently used windows are kept in a small LRU
cache. Deformations are loaded once and upsampled to the data grid on first
use.
"""

import json
from collections import OrderedDict
from pathlib import Path

import numpy as np

from .. import grid
from ..interpolation import (
    KIND_LIQUID,
    KIND_SMOKE,
    ParameterSpace,
    SpaceSample,
    synthesize_slab,
    temporal_filter,
)
from . import io


class _WindowCache:
    """LRU cache of materialized time windows, keyed per volume and range."""

    def __init__(self, capacity_slabs):
        self.capacity = max(4, int(capacity_slabs))
        self._store = OrderedDict()
        self._held = 0

    def get(self, key, lo, hi, fetch):
        cache_key = (key, lo, hi)
        if cache_key in self._store:
            self._store.move_to_end(cache_key)
            return self._store[cache_key]
        window = fetch()
        self._store[cache_key] = window
        self._held += hi - lo + 1
        while self._held > self.capacity and len(self._store) > 1:
            _, evicted = self._store.popitem(last=False)
            self._held -= evicted.shape[-1]
        return window


class _WindowedVolume:
    """ndarray-like facade over a memmap that caches sliced time windows."""

    def __init__(self, memmap, cache, key):
        self._mm = memmap
        self._cache = cache
        self._key = key
        self.shape = memmap.shape
        self.ndim = memmap.ndim
        self.dtype = memmap.dtype

    def __getitem__(self, index):
        time_index = None
        if isinstance(index, tuple) and len(index) == 2 and index[0] is Ellipsis:
            time_index = index[1]
        elif (
            isinstance(index, tuple)
            and len(index) == self.ndim
            and all(i == slice(None) for i in index[:-1])
        ):
            time_index = index[-1]
        if isinstance(time_index, slice) and time_index.step in (None, 1):
            lo = time_index.start or 0
            hi = (time_index.stop if time_index.stop is not None else self.shape[-1]) - 1
            return self._cache.get(
                self._key, lo, hi, lambda: np.array(self._mm[..., lo : hi + 1])
            )
        if isinstance(time_index, (int, np.integer)):
            return np.array(self._mm[..., time_index])
        return self._mm[index]

    def __array__(self, dtype=None, copy=None):
        arr = np.asarray(self._mm)
        return arr.astype(dtype) if dtype is not None else arr


def _upsample_to(defo, target_dims):
    u = defo
    while u.shape[:-1] != tuple(target_dims):
        step = tuple(min(f, 2 * c) for f, c in zip(target_dims, u.shape[:-1]))
        u = grid.upsample(u, target_dims=step)
    return u


class SpaceRuntime:
    """A loaded parameter space ready to synthesize frames."""

    def __init__(self, space_path):
        self.path = Path(space_path)
        description = json.loads(self.path.read_text(encoding="utf-8"))
        base = self.path

        self.manifests = []
        samples = []
        window_fraction = 0.2
        for entry in description["samples"]:
            manifest_path = (base.parent / entry["dataset"]).resolve()
            manifest = io.DatasetManifest.load(manifest_path)
            self.manifests.append(manifest)
            mm = io.open_scalar_memmap(manifest.resolve("volume", manifest_path))
            time_extent = mm.shape[-1]
            cache = _WindowCache(window_fraction * time_extent)
            volume = _WindowedVolume(mm, cache, manifest.name)
            masses = None
            if manifest.kind == KIND_SMOKE:
                rep = manifest.frames_repeated
                masses = np.asarray(
                    [manifest.masses[0]] * rep + list(manifest.masses), dtype=np.float64
                )
            samples.append(
                SpaceSample(
                    r=np.asarray(entry.get("r", manifest.r), dtype=np.float64),
                    name=entry.get("name", manifest.name),
                    volume=volume,
                    kind=manifest.kind,
                    frame_masses=masses,
                )
            )

        self._edge_paths = {}
        for edge in description["edges"]:
            key = (int(edge["src"]), int(edge["dst"]))
            self._edge_paths[key] = (base.parent / edge["path"]).resolve()

        self._data_dims = samples[0].volume.shape
        edges = _LazyEdges(self._edge_paths, self._data_dims)
        self.space = ParameterSpace(
            samples=samples, simplices=description["simplices"], edges=edges
        )
        self.frames_repeated = self.manifests[0].frames_repeated
        self.frames = self.manifests[0].frames
        self.kind = self.manifests[0].kind

    @property
    def modes(self):
        if self.kind == KIND_LIQUID:
            return ["linear", "union", "nearest"]
        return ["linear", "nearest"]

    def describe(self):
        return {
            "samples": [
                {"r": s.r.tolist(), "name": s.name} for s in self.space.samples
            ],
            "simplices": [list(s) for s in self.space.simplices],
            "modes": self.modes,
            "frames": self.frames,
            "kind": self.kind,
        }

    def synthesize(self, x_tilde, t, mode="linear", filter_time=False):
        """Interpolated spatial slab at original-frame coordinate ``t``."""
        if not 0 <= t <= self.frames - 1:
            raise ValueError(f"frame {t} outside [0, {self.frames - 1}]")
        t_assembled = t + self.frames_repeated
        slab, report = synthesize_slab(self.space, x_tilde, t_assembled, mode)
        if filter_time and self.kind == KIND_LIQUID and t + 1 <= self.frames - 1:
            nxt, _ = synthesize_slab(self.space, x_tilde, t_assembled + 1, mode)
            slab = temporal_filter(slab, nxt)
        return slab, report


class _LazyEdges:
    """Deformation fields loaded from disk and upsampled on first access."""

    def __init__(self, paths, data_dims):
        self._paths = dict(paths)
        self._data_dims = tuple(data_dims)
        self._loaded = {}

    def __contains__(self, key):
        return key in self._paths

    def __getitem__(self, key):
        if key not in self._loaded:
            arr, kind = io.read_volume(self._paths[key])
            if kind != io.KIND_DEFORMATION:
                raise io.VolumeFormatError(f"edge {key} is not a deformation volume")
            self._loaded[key] = _upsample_to(
                np.asarray(arr, dtype=np.float64), self._data_dims
            )
        return self._loaded[key]


def render_png(slab, kind, density_max=None):
    """Rasterize a slab to grayscale PNG bytes.

    SDF slabs fill the zero set with a one-cell linear ramp for
    anti-aliasing; density slabs map linearly against ``density_max``. 3D
    slabs show their middle slice along the last spatial axis. Presentation
    only, never used in metrics.
    """
    from io import BytesIO

    from PIL import Image

    arr = np.asarray(slab, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[:, :, arr.shape[2] // 2]
    if arr.ndim != 2:
        raise ValueError(f"cannot rasterize a {arr.ndim}-dimensional slab")
    if kind == KIND_LIQUID:
        shade = np.clip(0.5 - 0.5 * arr, 0.0, 1.0)
    else:
        scale = density_max if density_max else max(float(arr.max()), 1e-12)
        shade = np.clip(arr / scale, 0.0, 1.0)
    # array axis 0 is x; image rows run top to bottom, so put y on rows, flipped
    img = (255.0 * shade.T[::-1]).astype(np.uint8)
    buf = BytesIO()
    Image.fromarray(img, mode="L").save(buf, format="PNG")
    return buf.getvalue()

"""Token tensor data model, configuration types, and the KTK1 container format.

A video arrives as a stack of visual-token embeddings: ``T`` frames, ``M``
tokens per frame, ``D`` dimensions per token, float32.  Token ``(t, i)`` lives
at flat index ``M*t + i`` (0-based everywhere in this package).

On disk the stack is stored in the "KTK1" container:

====================  =====================================================
bytes 0..3            magic ``b"KTOK"``
bytes 4..7            u32 version, little-endian (1 = float32 token tensor,
                      2 = float64 table, used by diversity profile dumps)
bytes 8..15           reserved, zero
bytes 16..27          u32 T, u32 M, u32 D, little-endian
bytes 28..            T*M*D little-endian IEEE-754 values, row-major
                      (t outer, i middle, d inner)
====================  =====================================================

An optional JSON sidecar ``<name>.meta.json`` next to the tensor may carry a
token-grid layout (see :class:`LayoutSpec`) and free-form provenance strings;
its absence is valid.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

MAGIC = b"KTOK"
VERSION_TENSOR = 1
VERSION_TABLE = 2
HEADER_SIZE = 28

SELECTION_MODES = ("pivotal", "multinomial", "topk")
MERGE_MODES = ("none", "uniform", "weighted")


class FormatError(ValueError):
    """Raised when a file does not conform to the KTK1 container format."""


def _readonly_view(arr: np.ndarray) -> np.ndarray:
    view = arr.view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True)
class TokenTensor:
    """Immutable ``(T, M, D)`` float32 stack of visual-token embeddings.

    The underlying array is exposed read-only; construction validates shape,
    dtype, and finiteness (NaN/Inf payloads are always rejected, never passed
    through silently).
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"token tensor must be 3-d (T, M, D), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"all tensor dimensions must be >= 1, got shape {arr.shape}")
        finite = np.isfinite(arr)
        if not finite.all():
            t, i, d = np.argwhere(~finite)[0]
            raise ValueError(
                f"non-finite value {arr[t, i, d]!r} at frame {t}, token {i}, dim {d}"
            )
        object.__setattr__(self, "data", _readonly_view(arr))

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def tokens_per_frame(self) -> int:
        return self.data.shape[1]

    @property
    def dims(self) -> int:
        return self.data.shape[2]

    @property
    def n_tokens(self) -> int:
        return self.data.shape[0] * self.data.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """The same data viewed as an ``(N, D)`` matrix, N = T*M."""
        return self.data.reshape(self.n_tokens, self.dims)

    def token(self, t: int, i: int) -> np.ndarray:
        """Embedding of token ``i`` of frame ``t``; equals ``matrix[M*t + i]``."""
        return self.data[t, i]


@dataclass(frozen=True)
class LayoutSpec:
    """Per-frame token grid: ``rows_per_frame`` rows of ``cols_per_row`` tokens.

    Some backbones insert a newline marker token after each row; the mask
    produced by the merge stage records which of those markers survive
    compression.  Layouts are optional sidecar metadata, not tensor payload.
    """

    rows_per_frame: int
    cols_per_row: int
    newline_after_row: bool = True

    def __post_init__(self):
        if self.rows_per_frame < 1 or self.cols_per_row < 1:
            raise ValueError("layout rows/cols must be >= 1")

    @property
    def tokens_per_frame(self) -> int:
        return self.rows_per_frame * self.cols_per_row


@dataclass(frozen=True)
class RetentionConfig:
    """Knobs of one compression run.

    ``gamma`` is the fraction of tokens kept: the budget is
    ``K = floor(gamma * N)`` and must be at least 1 for the tensor at hand.
    ``alpha`` is the Gaussian kernel bandwidth in squared-distance units.
    ``tau_diff``, ``tau_dev``, ``tau_rel`` gate temporal boundary detection
    (absolute change, absolute deviation, relative deviation).  Defaults are
    the cross-backbone setting used throughout: alpha=800 and
    thresholds 110 / 70 / 0.40.
    """

    gamma: float
    alpha: float = 800.0
    tau_diff: float = 110.0
    tau_dev: float = 70.0
    tau_rel: float = 0.40
    selection_mode: str = "pivotal"
    merge_mode: str = "weighted"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        for name in ("tau_diff", "tau_dev", "tau_rel"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.selection_mode not in SELECTION_MODES:
            raise ValueError(
                f"unknown selection_mode {self.selection_mode!r}, "
                f"expected one of {SELECTION_MODES}"
            )
        if self.merge_mode not in MERGE_MODES:
            raise ValueError(
                f"unknown merge_mode {self.merge_mode!r}, expected one of {MERGE_MODES}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def budget(self, n_tokens: int) -> int:
        """Token budget K = floor(gamma * N); errors if the budget is empty."""
        k = math.floor(self.gamma * n_tokens)
        if k < 1:
            raise ValueError(
                f"budget floor(gamma*N) = floor({self.gamma}*{n_tokens}) is zero; "
                "raise gamma or supply more tokens"
            )
        return k

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "alpha": self.alpha,
            "tau_diff": self.tau_diff,
            "tau_dev": self.tau_dev,
            "tau_rel": self.tau_rel,
            "selection_mode": self.selection_mode,
            "merge_mode": self.merge_mode,
            "seed": int(self.seed),
        }


def _write_header(f, version: int, t: int, m: int, d: int) -> None:
    f.write(MAGIC)
    f.write(int(version).to_bytes(4, "little"))
    f.write(b"\x00" * 8)
    for dim in (t, m, d):
        if not 0 < dim < 2**32:
            raise ValueError(f"dimension {dim} does not fit the u32 header field")
        f.write(int(dim).to_bytes(4, "little"))


def _read_header(f, path: str | os.PathLike) -> tuple[int, int, int, int]:
    header = f.read(HEADER_SIZE)
    if len(header) < HEADER_SIZE:
        raise FormatError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    if header[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {header[:4]!r}, expected {MAGIC!r}")
    version = int.from_bytes(header[4:8], "little")
    t = int.from_bytes(header[16:20], "little")
    m = int.from_bytes(header[20:24], "little")
    d = int.from_bytes(header[24:28], "little")
    if min(t, m, d) < 1:
        raise FormatError(f"{path}: zero dimension in header (T={t}, M={m}, D={d})")
    return version, t, m, d


def _read_payload(f, path, count: int, dtype) -> np.ndarray:
    itemsize = np.dtype(dtype).itemsize
    raw = f.read(count * itemsize)
    if len(raw) < count * itemsize:
        raise FormatError(
            f"{path}: truncated payload, expected {count * itemsize} bytes, "
            f"got {len(raw)}"
        )
    if f.read(1):
        raise FormatError(f"{path}: trailing bytes after {count}-element payload")
    return np.frombuffer(raw, dtype=dtype)


def save_tensor(tensor: TokenTensor, path: str | os.PathLike) -> None:
    """Write ``tensor`` to ``path`` in the KTK1 container format."""
    with open(path, "wb") as f:
        _write_header(
            f, VERSION_TENSOR, tensor.frames, tensor.tokens_per_frame, tensor.dims
        )
        f.write(tensor.data.tobytes())


def load_tensor(path: str | os.PathLike) -> TokenTensor:
    """Read a KTK1 tensor file; the payload round-trips bit-exactly.

    Raises
    ------
    FormatError
        Malformed header, version mismatch, truncated or oversized payload.
    ValueError
        Non-finite payload values (reported with the offending index).
    """
    with open(path, "rb") as f:
        version, t, m, d = _read_header(f, path)
        if version != VERSION_TENSOR:
            raise FormatError(
                f"{path}: version {version} is not a token tensor "
                f"(expected {VERSION_TENSOR})"
            )
        flat = _read_payload(f, path, t * m * d, "<f4")
    return TokenTensor(flat.reshape(t, m, d))


def sidecar_path(path: str | os.PathLike) -> str:
    """Path of the JSON sidecar next to a tensor file (``<name>.meta.json``)."""
    base, _ = os.path.splitext(os.fspath(path))
    return base + ".meta.json"


def save_sidecar(
    path: str | os.PathLike,
    layout: LayoutSpec | None = None,
    provenance: dict | None = None,
) -> None:
    """Write the sidecar for the tensor at ``path``; no-op when both are None."""
    if layout is None and provenance is None:
        return
    doc: dict = {}
    if layout is not None:
        doc["layout"] = {
            "rows_per_frame": layout.rows_per_frame,
            "cols_per_row": layout.cols_per_row,
            "newline_after_row": layout.newline_after_row,
        }
    if provenance is not None:
        doc["provenance"] = provenance
    with open(sidecar_path(path), "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_sidecar(path: str | os.PathLike) -> LayoutSpec | None:
    """Layout from the tensor's sidecar, or None when absent or layout-free."""
    meta = sidecar_path(path)
    if not os.path.exists(meta):
        return None
    with open(meta, "r", encoding="utf-8") as f:
        doc = json.load(f)
    layout = doc.get("layout")
    if layout is None:
        return None
    return LayoutSpec(
        rows_per_frame=int(layout["rows_per_frame"]),
        cols_per_row=int(layout["cols_per_row"]),
        newline_after_row=bool(layout.get("newline_after_row", True)),
    )

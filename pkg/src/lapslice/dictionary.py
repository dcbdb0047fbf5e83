"""Filtered-signal dictionary: per-band slicer outputs of (R || X), column
concatenated in bank order, plus a binary file format so the filtering step
can be computed once and reused.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .graph import Graph, SparseSymmetricMatrix, normalized_laplacian
from .slicers import RandomSignals, SlicerBank, apply_slicer

__all__ = ["Dictionary", "build_dictionary", "save_dictionary", "load_dictionary"]

_MAGIC = b"LSDC"
_VERSION = 1


@dataclass(frozen=True)
class Dictionary:
    """Node-by-column matrix of band-filtered signals.

    gamma        : (N, B * (eta + F)) matrix, B = band count
    band_ranges  : per-band (start, end) column slices into gamma
    eta          : random-signal column count per band
    feature_cols : node-feature column count per band (0 when absent)
    """

    gamma: np.ndarray
    band_ranges: tuple[tuple[int, int], ...]
    eta: int
    feature_cols: int

    def __post_init__(self):
        g = np.ascontiguousarray(np.asarray(self.gamma, dtype=np.float64))
        g.flags.writeable = False
        object.__setattr__(self, "gamma", g)
        object.__setattr__(
            self, "band_ranges", tuple((int(s), int(e)) for s, e in self.band_ranges)
        )
        width = self.eta + self.feature_cols
        for s, e in self.band_ranges:
            if e - s != width:
                raise DataError("band ranges inconsistent with eta + feature_cols")
        if self.band_ranges and self.band_ranges[-1][1] != g.shape[1]:
            raise DataError("band ranges do not cover the dictionary columns")

    @property
    def num_nodes(self) -> int:
        return int(self.gamma.shape[0])

    @property
    def num_columns(self) -> int:
        return int(self.gamma.shape[1])

    @property
    def num_bands(self) -> int:
        return len(self.band_ranges)

    def band_block(self, index: int) -> np.ndarray:
        s, e = self.band_ranges[index]
        return self.gamma[:, s:e]


def build_dictionary(
    g: Graph,
    bank: SlicerBank,
    signals: RandomSignals,
    p: int | None = None,
    lap: SparseSymmetricMatrix | None = None,
) -> Dictionary:
    """Filter (R || X) through every slicer in the bank and concatenate.

    X is omitted when the graph has no features. `lap` may be supplied to
    reuse a precomputed Laplacian.
    """
    if signals.num_nodes != g.num_nodes:
        raise DataError(
            f"random signals have {signals.num_nodes} rows, graph has {g.num_nodes}"
        )
    if lap is None:
        lap = normalized_laplacian(g)
    base = signals.matrix
    if g.features is not None:
        base = np.hstack([signals.matrix, g.features])
    width = base.shape[1]
    blocks = []
    ranges = []
    start = 0
    for params in bank:
        blocks.append(apply_slicer(lap, params, base, p=p))
        ranges.append((start, start + width))
        start += width
    return Dictionary(
        gamma=np.hstack(blocks),
        band_ranges=tuple(ranges),
        eta=signals.eta,
        feature_cols=width - signals.eta,
    )


def save_dictionary(path, d: Dictionary) -> None:
    """Binary layout: magic, version, N, columns, eta, feature_cols, band
    count, per-band (start, end), float64 row-major payload."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(
            struct.pack(
                "<IQQQQI",
                _VERSION,
                d.num_nodes,
                d.num_columns,
                d.eta,
                d.feature_cols,
                d.num_bands,
            )
        )
        for s, e in d.band_ranges:
            fh.write(struct.pack("<QQ", s, e))
        fh.write(np.ascontiguousarray(d.gamma).tobytes())


def load_dictionary(path) -> Dictionary:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise DataError(f"{path}: not a dictionary file (bad magic {magic!r})")
        header = fh.read(struct.calcsize("<IQQQQI"))
        version, n, cols, eta, fcols, bands = struct.unpack("<IQQQQI", header)
        if version != _VERSION:
            raise DataError(f"{path}: unsupported dictionary version {version}")
        ranges = [
            struct.unpack("<QQ", fh.read(16)) for _ in range(bands)
        ]
        payload = fh.read(8 * n * cols)
        if len(payload) != 8 * n * cols:
            raise DataError(f"{path}: truncated dictionary payload")
        gamma = np.frombuffer(payload, dtype=np.float64).reshape(n, cols)
    return Dictionary(
        gamma=gamma,
        band_ranges=tuple(ranges),
        eta=int(eta),
        feature_cols=int(fcols),
    )

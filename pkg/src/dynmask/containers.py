"""Dense matrix and bit-packed binary mask containers.

Both containers are row-major. A ``BitMask`` packs its rows*cols logical
bits into a contiguous little-endian bit stream: logical bit ``k`` (with
``k = i*cols + j``) lives in byte ``k // 8`` at bit position ``k % 8``.
Padding bits in the final byte are always zero, so the popcount of the
byte buffer equals the number of set cells.
"""

from __future__ import annotations

import numpy as np


class DenseMap:
    """A 2-D real-valued map (attention weights, logits, or transforms).

    Values are held as float64 for analysis precision; the on-disk format
    stores 32-bit floats (see ``tensorfile``).
    """

    __slots__ = ("data",)

    def __init__(self, data) -> None:
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"DenseMap needs a 2-D array, got ndim={arr.ndim}")
        self.data = np.ascontiguousarray(arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        # Bit-level equality, not approximate: two maps compare equal only
        # if every float is identical.
        if not isinstance(other, DenseMap):
            return NotImplemented
        return (
            self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )

    def __repr__(self) -> str:
        return f"DenseMap({self.rows}x{self.cols})"


def _packed_size(rows: int, cols: int) -> int:
    return (rows * cols + 7) // 8


class BitMask:
    """A bit-packed binary matrix, used for attention masks and patterns."""

    __slots__ = ("rows", "cols", "bits")

    def __init__(self, rows: int, cols: int, bits: np.ndarray | None = None) -> None:
        if rows < 1 or cols < 1:
            raise ValueError("BitMask dimensions must be >= 1")
        self.rows = rows
        self.cols = cols
        nbytes = _packed_size(rows, cols)
        if bits is None:
            self.bits = np.zeros(nbytes, dtype=np.uint8)
        else:
            buf = np.asarray(bits, dtype=np.uint8)
            if buf.shape != (nbytes,):
                raise ValueError(
                    f"expected {nbytes} packed bytes for {rows}x{cols}, got {buf.shape}"
                )
            self.bits = buf.copy()
            self._clear_padding()

    def _clear_padding(self) -> None:
        tail = (self.rows * self.cols) % 8
        if tail:
            self.bits[-1] &= (1 << tail) - 1

    @classmethod
    def from_bool(cls, arr) -> "BitMask":
        a = np.asarray(arr, dtype=bool)
        if a.ndim != 2:
            raise ValueError("from_bool needs a 2-D boolean array")
        m = cls(a.shape[0], a.shape[1])
        m.bits = np.packbits(a.ravel(), bitorder="little")
        return m

    def to_bool(self) -> np.ndarray:
        flat = np.unpackbits(self.bits, count=self.rows * self.cols, bitorder="little")
        return flat.reshape(self.rows, self.cols).astype(bool)

    def _index(self, i: int, j: int) -> tuple[int, int]:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) out of range for {self.rows}x{self.cols}")
        k = i * self.cols + j
        return k >> 3, k & 7

    def get(self, i: int, j: int) -> bool:
        byte, bit = self._index(i, j)
        return bool((self.bits[byte] >> bit) & 1)

    def set(self, i: int, j: int, value: bool = True) -> None:
        byte, bit = self._index(i, j)
        if value:
            self.bits[byte] |= np.uint8(1 << bit)
        else:
            self.bits[byte] &= np.uint8(~(1 << bit) & 0xFF)

    def popcount(self) -> int:
        # Padding bits are zero by construction, so counting the whole
        # buffer is exact.
        return int(np.unpackbits(self.bits).sum())

    def is_causal(self) -> bool:
        """True when every set bit (i, j) satisfies j <= i."""
        dense = self.to_bool()
        upper = ~np.tri(self.rows, self.cols, dtype=bool)
        return not bool((dense & upper).any())

    def is_subset(self, other: "BitMask") -> bool:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("subset check needs equal shapes")
        return not bool(np.any(self.bits & ~other.bits))

    def submask(self, n: int) -> "BitMask":
        """Leading principal n x n sub-mask."""
        if not (1 <= n <= min(self.rows, self.cols)):
            raise ValueError(f"submask size {n} out of range")
        return BitMask.from_bool(self.to_bool()[:n, :n])

    def copy(self) -> "BitMask":
        return BitMask(self.rows, self.cols, self.bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMask):
            return NotImplemented
        return (
            (self.rows, self.cols) == (other.rows, other.cols)
            and self.bits.tobytes() == other.bits.tobytes()
        )

    def __repr__(self) -> str:
        return f"BitMask({self.rows}x{self.cols}, nnz={self.popcount()})"


def causal_region(rows: int, cols: int) -> np.ndarray:
    """Boolean selector for the causal cells j <= i of a rows x cols map."""
    return np.tri(rows, cols, dtype=bool)

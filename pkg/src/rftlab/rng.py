"""Deterministic, replica-indexed random streams.

Every source of randomness in the package is an :class:`RngStream`: a
counter-based Philox generator keyed by ``(master_seed, replica_index)``.
The same pair always yields the same stream of raw 64-bit words, on any
machine and regardless of how many worker threads are running, because
each replica owns a disjoint stream and never shares state.

Draw discipline
---------------
One *logical draw* consumes exactly one raw uint64, mapped as:

* ``label(n)``  -> ``1 + raw % n``           (uniform vertex label in [1, n])
* ``index(n)``  -> ``raw % n``               (uniform index in [0, n))
* ``unit()``    -> ``(raw >> 11) * 2**-53``  (uniform float in [0, 1))

The modulo reductions carry a bias of at most n / 2**64, far below any
tolerance used in this package. Growth models consume a fixed number of
draws per step, so a tree is a pure function of its stream.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 8192
_UINT64_HIGH = 1 << 64
_INV_2_53 = 2.0 ** -53


class RngStream:
    """Deterministic uint64 stream for one replica.

    ``position`` counts raw words handed out so far, which lets tests pin
    the exact number of draws an operation consumes.
    """

    __slots__ = ("master_seed", "replica_index", "position", "_gen", "_buf", "_cursor")

    def __init__(self, master_seed: int, replica_index: int = 0):
        if master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        if replica_index < 0:
            raise ValueError("replica_index must be non-negative")
        self.master_seed = master_seed
        self.replica_index = replica_index
        self.position = 0
        seq = np.random.SeedSequence(master_seed, spawn_key=(replica_index,))
        self._gen = np.random.Generator(np.random.Philox(seq))
        self._buf = np.empty(0, dtype=np.uint64)
        self._cursor = 0

    def raw(self) -> int:
        """Next raw uint64 as a Python int."""
        if self._cursor >= self._buf.shape[0]:
            self._buf = self._gen.integers(0, _UINT64_HIGH, size=_BLOCK, dtype=np.uint64)
            self._cursor = 0
        v = int(self._buf[self._cursor])
        self._cursor += 1
        self.position += 1
        return v

    def raw_block(self, k: int) -> np.ndarray:
        """Next ``k`` raw words as a uint64 array (for bulk kernels).

        Continues the exact same stream as :meth:`raw`; interleaving scalar
        and block draws is well defined.
        """
        if k < 0:
            raise ValueError("k must be non-negative")
        left = self._buf.shape[0] - self._cursor
        if k <= left:
            out = self._buf[self._cursor : self._cursor + k].copy()
            self._cursor += k
        else:
            out = np.empty(k, dtype=np.uint64)
            out[:left] = self._buf[self._cursor :]
            out[left:] = self._gen.integers(0, _UINT64_HIGH, size=k - left, dtype=np.uint64)
            self._buf = np.empty(0, dtype=np.uint64)
            self._cursor = 0
        self.position += k
        return out

    def label(self, n: int) -> int:
        """Uniform vertex label in [1, n]; one draw."""
        return 1 + self.raw() % n

    def index(self, n: int) -> int:
        """Uniform index in [0, n); one draw."""
        return self.raw() % n

    def unit(self) -> float:
        """Uniform float in [0, 1); one draw."""
        return (self.raw() >> 11) * _INV_2_53


def unit_from_raw(raw: int) -> float:
    """The float in [0,1) that :meth:`RngStream.unit` derives from ``raw``."""
    return (raw >> 11) * _INV_2_53

"""Windowed containers over a monotonically growing index space.

``SlidingArray`` keeps the elements whose indexes lie in ``[first, next)``
in a short directory of fixed-capacity chunks; leading chunks are released
as ``first`` moves past them. ``SlidingMap`` and ``IdxSlidingMap`` layer a
hash map on top so elements can be removed by key, leaving holes that the
``first`` index skips over.

Every structure keeps a ``steps`` counter of elementary operations (chunk
allocations, slot scans, map probes) so callers can check amortized cost.
"""

from __future__ import annotations

from typing import Generic, Hashable, Iterator, Optional, TypeVar

E = TypeVar("E")
K = TypeVar("K", bound=Hashable)

CHUNK_SIZE = 256


class SlidingArray(Generic[E]):
    """Append at ``next``, remove at ``first``, random access in between."""

    __slots__ = ("_shift", "_mask", "_cap", "_chunks", "_base", "first", "next",
                 "steps", "chunks_allocated")

    def __init__(self, chunk_size: int = CHUNK_SIZE) -> None:
        if chunk_size <= 0 or chunk_size & (chunk_size - 1):
            raise ValueError("chunk_size must be a power of two")
        self._cap = chunk_size
        self._shift = chunk_size.bit_length() - 1
        self._mask = chunk_size - 1
        self._chunks: list[list] = []
        self._base = 0  # logical index of self._chunks[0][0]
        self.first = 0
        self.next = 0
        self.steps = 0
        self.chunks_allocated = 0

    def __len__(self) -> int:
        return self.next - self.first

    @property
    def size(self) -> int:
        return self.next - self.first

    @property
    def chunk_count(self) -> int:
        """Number of chunks currently held (memory accounting)."""
        return len(self._chunks)

    def add(self, e: E) -> int:
        k = self.next
        off = k - self._base
        c = off >> self._shift
        if c == len(self._chunks):
            self._chunks.append([None] * self._cap)
            self.chunks_allocated += 1
            self.steps += 1
        self._chunks[c][off & self._mask] = e
        self.next = k + 1
        self.steps += 1
        return k

    def remove(self) -> E:
        """Remove and return the element at ``first``."""
        if self.first == self.next:
            raise IndexError("remove from empty SlidingArray")
        off = self.first - self._base
        chunk = self._chunks[off >> self._shift]
        e = chunk[off & self._mask]
        chunk[off & self._mask] = None
        self.first += 1
        self.steps += 1
        if self.first - self._base == self._cap:
            del self._chunks[0]
            self._base += self._cap
        return e

    def peek(self) -> E:
        if self.first == self.next:
            raise IndexError("peek on empty SlidingArray")
        off = self.first - self._base
        return self._chunks[off >> self._shift][off & self._mask]

    def __getitem__(self, k: int) -> E:
        if not self.first <= k < self.next:
            raise IndexError(f"index {k} outside window [{self.first}, {self.next})")
        off = k - self._base
        return self._chunks[off >> self._shift][off & self._mask]

    def __setitem__(self, k: int, e: E) -> None:
        if not self.first <= k < self.next:
            raise IndexError(f"index {k} outside window [{self.first}, {self.next})")
        off = k - self._base
        self._chunks[off >> self._shift][off & self._mask] = e

    def get(self, k: int) -> E:
        return self[k]

    def __iter__(self) -> Iterator[E]:
        for k in range(self.first, self.next):
            off = k - self._base
            yield self._chunks[off >> self._shift][off & self._mask]

    def __repr__(self) -> str:
        return f"SlidingArray(first={self.first}, next={self.next})"


class SlidingMap(Generic[K]):
    """Elements registered at increasing indexes and removed by key.

    Presence is a sliding bit-array with a set sentinel bit kept at ``next``,
    so advancing ``first`` past cleared bits needs no bound check.
    """

    __slots__ = ("_bits", "_index", "_probes")

    def __init__(self, chunk_size: int = CHUNK_SIZE) -> None:
        self._bits: SlidingArray[bool] = SlidingArray(chunk_size)
        self._bits.add(True)  # sentinel
        self._index: dict[K, int] = {}
        self._probes = 0

    @property
    def first(self) -> int:
        return self._bits.first

    @property
    def next(self) -> int:
        return self._bits.next - 1

    @property
    def steps(self) -> int:
        return self._bits.steps + self._probes

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, e: K) -> bool:
        self._probes += 1
        return e in self._index

    def __iter__(self) -> Iterator[K]:
        # dict order is insertion order, which is index order
        return iter(self._index)

    def add(self, e: K) -> int:
        self._probes += 1
        if e in self._index:
            raise KeyError(f"duplicate key {e!r}")
        k = self._bits.next - 1
        self._index[e] = k
        self._bits.add(True)  # old sentinel becomes the presence bit of e
        return k

    def remove(self, e: K) -> bool:
        """Remove ``e`` if present; absent keys are a no-op returning False."""
        self._probes += 1
        k = self._index.pop(e, None)
        if k is None:
            return False
        bits = self._bits
        bits[k] = False
        if k == bits.first:
            while not bits.peek():
                bits.remove()
        return True

    def index(self, e: K) -> Optional[int]:
        self._probes += 1
        return self._index.get(e)

    def __repr__(self) -> str:
        return f"SlidingMap(first={self.first}, next={self.next}, size={len(self)})"


_SENTINEL = object()


class IdxSlidingMap(Generic[K]):
    """A sliding map whose positions are also readable by index.

    ``self[k]`` returns the element added at ``k`` or ``None`` once removed.
    """

    __slots__ = ("_slots", "_index", "_probes")

    def __init__(self, chunk_size: int = CHUNK_SIZE) -> None:
        self._slots: SlidingArray = SlidingArray(chunk_size)
        self._slots.add(_SENTINEL)
        self._index: dict[K, int] = {}
        self._probes = 0

    @property
    def first(self) -> int:
        return self._slots.first

    @property
    def next(self) -> int:
        return self._slots.next - 1

    @property
    def steps(self) -> int:
        return self._slots.steps + self._probes

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, e: K) -> bool:
        self._probes += 1
        return e in self._index

    def __iter__(self) -> Iterator[K]:
        return iter(self._index)

    def __getitem__(self, k: int) -> Optional[K]:
        if not self.first <= k < self.next:
            raise IndexError(f"index {k} outside window [{self.first}, {self.next})")
        self._probes += 1
        return self._slots[k]

    def get(self, k: int) -> Optional[K]:
        return self[k]

    def peek(self) -> Optional[K]:
        """Element at ``first``, or None when empty."""
        e = self._slots.peek()
        return None if e is _SENTINEL else e

    def add(self, e: K) -> int:
        self._probes += 1
        if e in self._index:
            raise KeyError(f"duplicate key {e!r}")
        slots = self._slots
        k = slots.next - 1
        slots[k] = e
        slots.add(_SENTINEL)
        self._index[e] = k
        return k

    def remove(self, e: K) -> bool:
        self._probes += 1
        k = self._index.pop(e, None)
        if k is None:
            return False
        slots = self._slots
        slots[k] = None
        if k == slots.first:
            while slots.peek() is None:
                slots.remove()
        return True

    def index(self, e: K) -> Optional[int]:
        self._probes += 1
        return self._index.get(e)

    def __repr__(self) -> str:
        return f"IdxSlidingMap(first={self.first}, next={self.next}, size={len(self)})"

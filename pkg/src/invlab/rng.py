"""Counter-based random streams with documented 64-bit splitting.

Every random quantity in this package is a pure function of
``(master_seed, stream_index, counter)``, so any path can be regenerated
bit-exactly in isolation and parallel runs draw the same variates as
sequential ones.

The primitive is the SplitMix64 output function applied at an arbitrary
counter position::

    raw(seed, k) = mix64(seed + GOLDEN * (k + 1))        (mod 2**64)

where ``GOLDEN = 0x9E3779B97F4A7C15`` and ``mix64`` is the SplitMix64
finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

Stream splitting uses the same primitive: stream ``i`` of a master seed
draws from ``raw(raw(master, i), k)``, i.e. ``stream_seed(master, i) =
mix64(master + GOLDEN*(i+1))``.

Uniforms map the top 53 bits into the open interval (0, 1)::

    u = ((raw >> 11) + 0.5) * 2**-53

which never returns 0.0 or 1.0, so logarithms are always safe.  Normal
deviates come from Box-Muller pairs: with uniforms (u1, u2),

    r = sqrt(-2 ln u1),  z0 = r cos(2 pi u2),  z1 = r sin(2 pi u2)

and ``normals(n)`` returns the interleaved pairs truncated to n values,
always consuming ``2 * ceil(n / 2)`` counters.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)
_U_ONE = np.uint64(1)

_TO_UNIT = 2.0 ** -53


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a Python integer (mod 2**64)."""
    z = x & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _U_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U_MIX2
    return z ^ (z >> np.uint64(31))


def raw64(seed: int, start: int, count: int) -> np.ndarray:
    """Raw 64-bit outputs at counters start .. start+count-1."""
    counters = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = np.uint64(seed & _MASK) + _U_GOLDEN * (counters + _U_ONE)
        return _mix64_vec(state)


def stream_seed(master_seed: int, index: int) -> int:
    """Seed of substream `index`: mix64(master + GOLDEN*(index+1))."""
    return mix64((master_seed + GOLDEN * (index + 1)) & _MASK)


class Stream:
    """Stateful view over one counter-based stream.

    Only the counter is mutable; the draw at a given counter never
    depends on previous calls, so call-pattern changes cannot silently
    shift unrelated variates.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self.counter = 0

    @classmethod
    def substream(cls, master_seed: int, index: int) -> "Stream":
        return cls(stream_seed(master_seed, index))

    def raw(self, count: int) -> np.ndarray:
        out = raw64(self.seed, self.counter, count)
        self.counter += count
        return out

    def uniforms(self, count: int) -> np.ndarray:
        """Uniforms in the open interval (0, 1)."""
        bits = self.raw(count)
        return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _TO_UNIT

    def normals(self, count: int) -> np.ndarray:
        """Standard normals via Box-Muller; consumes 2*ceil(count/2) counters."""
        pairs = (count + 1) // 2
        u = self.uniforms(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:count]


def path_stream(master_seed: int, path_index: int) -> Stream:
    """The stream that drives simulated path `path_index`."""
    return Stream.substream(master_seed, path_index)


# ---------------------------------------------------------------------------
# batched access: one row per stream, bit-identical to the Stream class
# ---------------------------------------------------------------------------

def stream_seeds(master_seed: int, start: int, count: int) -> np.ndarray:
    """Seeds of substreams start .. start+count-1 as a uint64 array."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_vec(np.uint64(master_seed & _MASK) + _U_GOLDEN * (idx + _U_ONE))


def uniforms_matrix(seeds: np.ndarray, cols: int, start: int = 0) -> np.ndarray:
    """Row j holds uniforms at counters start..start+cols-1 of stream seeds[j]."""
    counters = np.arange(start, start + cols, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = seeds[:, None] + _U_GOLDEN * (counters[None, :] + _U_ONE)
        bits = _mix64_vec(state)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _TO_UNIT


def normals_matrix(seeds: np.ndarray, cols: int, start: int = 0) -> np.ndarray:
    """Row-wise Box-Muller normals; row j matches Stream(seeds[j]).normals(cols)
    when the stream's counter stands at `start`."""
    pairs = (cols + 1) // 2
    u = uniforms_matrix(seeds, 2 * pairs, start=start)
    u1, u2 = u[:, 0::2], u[:, 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    out = np.empty((len(seeds), 2 * pairs))
    out[:, 0::2] = r * np.cos(theta)
    out[:, 1::2] = r * np.sin(theta)
    return out[:, :cols]

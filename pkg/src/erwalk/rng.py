"""Deterministic random number generation for path simulation.

Every simulated path draws from its own xoshiro256++ stream whose state is
expanded from a 64-bit seed by splitmix64.  Replica r of an ensemble gets the
seed ``derive_seed(base_seed, r)``, so the stream attached to a replica index
never depends on the total replica count or on how work is scheduled across
workers.  All arithmetic is unsigned 64-bit with wraparound, giving identical
bit streams on every platform and thread count.

Algorithms (both are published, fixed constants):

* splitmix64: state += 0x9E3779B97F4A7C15, output = mix64(state) where mix64
  is the xor-shift/multiply finalizer (shifts 30/27/31).
* xoshiro256++: 256-bit state, output = rotl(s0 + s3, 23) + s0.

Doubles are built as ``(x >> 11) * 2**-53`` (53 high bits, uniform on [0, 1)).
Gaussians use the Box-Muller transform on two uniforms.
"""

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_DNORM = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def mix64(z):
    """splitmix64 finalizer: avalanche a 64-bit value."""
    z = np.uint64(z)
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def derive_seed(base_seed, replica):
    """Per-replica seed: finalize base_seed advanced replica+1 splitmix steps.

    Stable in the sense required by ensembles: the seed of replica r is a
    function of (base_seed, r) alone.
    """
    z = np.uint64(base_seed) + (np.uint64(replica) + np.uint64(1)) * GOLDEN
    return mix64(z)


@njit(cache=True)
def init_state(seed):
    """Expand a 64-bit seed into a 4-word xoshiro256++ state via splitmix64."""
    s = np.empty(4, dtype=np.uint64)
    z = np.uint64(seed)
    for i in range(4):
        z = z + GOLDEN
        s[i] = mix64(z)
    if s[0] | s[1] | s[2] | s[3] == np.uint64(0):
        s[0] = GOLDEN  # all-zero state is the one fixed point; dodge it
    return s


@njit(cache=True)
def next_u64(s):
    """Advance a xoshiro256++ state in place and return the next word."""
    s0, s1, s2, s3 = s[0], s[1], s[2], s[3]
    x = s0 + s3
    out = ((x << np.uint64(23)) | (x >> np.uint64(41))) + s0
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
    s[0], s[1], s[2], s[3] = s0, s1, s2, s3
    return out


@njit(cache=True)
def next_double(s):
    """Uniform double on [0, 1) from the high 53 bits of the next word."""
    return float(next_u64(s) >> np.uint64(11)) * _DNORM


@njit(cache=True)
def next_gauss_pair(s):
    """Two independent standard Gaussians by Box-Muller."""
    u1 = (float(next_u64(s) >> np.uint64(11)) + 1.0) * _DNORM  # (0, 1]
    u2 = float(next_u64(s) >> np.uint64(11)) * _DNORM
    r = np.sqrt(-2.0 * np.log(u1))
    th = 2.0 * np.pi * u2
    return r * np.cos(th), r * np.sin(th)


@njit(cache=True)
def gaussian_batch(seed, count):
    """count standard Gaussians from one seeded stream (calibration aid)."""
    s = init_state(seed)
    out = np.empty(count)
    i = 0
    while i < count:
        g1, g2 = next_gauss_pair(s)
        out[i] = g1
        if i + 1 < count:
            out[i + 1] = g2
        i += 2
    return out

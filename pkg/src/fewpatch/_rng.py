"""Counter-based random number generation shared by both backends.

The generator is Philox4x32 with 10 rounds.  A 128-bit counter is split
into a 64-bit block index (words 0..1) and a 64-bit trial prefix (words
2..3), so every Monte Carlo trial owns a disjoint counter range and can be
generated independently of scheduling order.  The 64-bit key is derived
from ``(root, stream, domain)`` with a splitmix64-style finalizer chain.

The compiled backend re-implements the same arithmetic in C; the functions
here are the reference the parity tests compare against.
"""

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85

GOLDEN64 = 0x9E3779B97F4A7C15

# Domain tags keep draws for unrelated purposes on disjoint key schedules
# even when the caller reuses one (root, stream) pair.
DOMAIN_SAMPLE = 1
DOMAIN_SPHERE = 2
DOMAIN_UNIFORM = 3
DOMAIN_QUASI_ORTH = 4
DOMAIN_CENTERING = 5
DOMAIN_LEARN_FEW = 6
DOMAIN_LEARN_FROM_FEW = 7

DOUBLE_SCALE = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit avalanche permutation."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_key(root: int, stream: int, domain: int) -> tuple[int, int]:
    """Derive the two 32-bit Philox key words for (root, stream, domain).

    Chains the finalizer so that any single-bit change in any input yields
    an unrelated key.
    """
    h = mix64((root ^ GOLDEN64) & MASK64)
    h = mix64(h ^ (stream & MASK64))
    h = mix64(h ^ (domain & MASK64))
    return h & MASK32, h >> 32


def philox_block(c0: int, c1: int, c2: int, c3: int, k0: int, k1: int):
    """One Philox4x32-10 block: four counter words -> four output words."""
    for _ in range(10):
        lo0 = (PHILOX_M0 * c0) & MASK32
        hi0 = (PHILOX_M0 * c0) >> 32
        lo1 = (PHILOX_M1 * c2) & MASK32
        hi1 = (PHILOX_M1 * c2) >> 32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = (k0 + PHILOX_W0) & MASK32
        k1 = (k1 + PHILOX_W1) & MASK32
    return c0, c1, c2, c3

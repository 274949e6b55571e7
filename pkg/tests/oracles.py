"""Independent reference computations used by the tests.

Nothing here imports the package: field arithmetic is shift-and-reduce,
polynomial division is schoolbook on coefficient lists, partitions come from
subset enumeration.
"""

import itertools
import math


def gf_mul(a, b, poly=0x171):
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= poly
    return r


def gf_pow(a, e, poly=0x171):
    r = 1
    for _ in range(e):
        r = gf_mul(r, a, poly)
    return r


def poly_eval(bits, x, poly=0x171):
    """sum_i bits[i] x^i over GF(2^8) by Horner's rule."""
    acc = 0
    for b in reversed(list(bits)):
        acc = gf_mul(acc, x, poly) ^ int(b)
    return acc


def gf2_remainder(bits, den):
    """Remainder of sum_i bits[i] x^i divided by the binary polynomial ``den``."""
    num = [int(b) for b in bits]
    d = [(den >> i) & 1 for i in range(den.bit_length())]
    for i in range(len(num) - 1, len(d) - 2, -1):
        if num[i]:
            for j, dj in enumerate(d):
                num[i - len(d) + 1 + j] ^= dj
    return num[: len(d) - 1]


def distinct_partitions_bruteforce(w):
    """All sets of distinct positive integers summing to ``w``."""
    out = []
    for r in range(1, w + 1):
        for combo in itertools.combinations(range(1, w + 1), r):
            if sum(combo) == w:
                out.append(combo)
    return out


def q_function(w):
    return len(distinct_partitions_bruteforce(w))


def gaussian_tail(x):
    return 0.5 * math.erfc(x / math.sqrt(2))

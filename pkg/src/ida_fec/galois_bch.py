"""GF(2^8) arithmetic and the binary BCH(255, 239, 2) codec.

Bit vectors are ``uint8`` numpy arrays where index ``i`` holds the coefficient
of ``x**i``.  Systematic codewords carry the message in indices ``n-k .. n-1``
and the parity (remainder of ``x**(n-k) m(x)`` modulo ``g(x)``) below it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

FIELD_POLY = 0x171
GEN_POLY = 0x18DED


class FieldError(ValueError):
    pass


def _degree(poly: int) -> int:
    return poly.bit_length() - 1


@dataclass(frozen=True)
class FieldTables:
    """Exponent/log tables for GF(2^8).

    ``exp`` has 510 entries (two periods) so products can index
    ``exp[log a + log b]`` without a modulo.  ``log[0]`` is unused (-1).
    """

    field_poly: int
    exp: np.ndarray = field(repr=False)
    log: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return 255

    def alpha(self, k: int) -> int:
        return int(self.exp[k % 255])

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("division by zero in GF(2^8)")
        if a == 0:
            return 0
        return int(self.exp[(self.log[a] - self.log[b]) % 255])

    def inv(self, a: int) -> int:
        return self.div(1, a)

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        return int(self.exp[(self.log[a] * e) % 255])

    @cached_property
    def half_trace_roots(self) -> np.ndarray:
        """``roots[c]`` = smallest ``u`` with ``u*u + u == c``, or -1 if none."""
        roots = np.full(256, -1, dtype=np.int32)
        for u in range(255, -1, -1):
            roots[self.mul(u, u) ^ u] = u
        return roots


def build_field(field_poly: int = FIELD_POLY) -> FieldTables:
    if _degree(field_poly) != 8:
        raise FieldError(f"field polynomial {field_poly:#x} has degree {_degree(field_poly)}, expected 8")
    exp = np.zeros(510, dtype=np.int32)
    log = np.full(256, -1, dtype=np.int32)
    x = 1
    for k in range(255):
        if log[x] != -1:
            raise FieldError(
                f"field polynomial {field_poly:#x} is not primitive: "
                f"cycle length check failed (alpha^{k} repeats alpha^{log[x]})"
            )
        exp[k] = x
        log[x] = k
        x <<= 1
        if x & 0x100:
            x ^= field_poly
    if x != 1:
        raise FieldError(f"field polynomial {field_poly:#x} is not primitive: cycle length check failed")
    exp[255:] = exp[:255]
    exp.setflags(write=False)
    log.setflags(write=False)
    return FieldTables(field_poly, exp, log)


def poly_mod2(num: int, den: int) -> int:
    """Remainder of binary polynomial division (integer bit masks)."""
    dd = _degree(den)
    while num and _degree(num) >= dd:
        num ^= den << (_degree(num) - dd)
    return num


@dataclass(frozen=True)
class CodeSpec:
    n: int = 255
    k: int = 239
    t: int = 2
    gen_poly: int = GEN_POLY
    field_poly: int = FIELD_POLY

    def __post_init__(self):
        if _degree(self.gen_poly) != self.n - self.k:
            raise ValueError(
                f"generator {self.gen_poly:#x} has degree {_degree(self.gen_poly)}, expected n-k={self.n - self.k}"
            )
        if poly_mod2((1 << self.n) | 1, self.gen_poly) != 0:
            raise ValueError(f"generator {self.gen_poly:#x} does not divide x^{self.n} - 1")
        if self.t != 2:
            raise ValueError("only the t=2 decoder is implemented")

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def parity_rows(self) -> np.ndarray:
        """``rows[j]`` = parity bits contributed by message bit ``j``."""
        r = self.n - self.k
        rows = np.zeros((self.k, r), dtype=np.uint8)
        for j in range(self.k):
            rem = poly_mod2(1 << (r + j), self.gen_poly)
            rows[j] = [(rem >> b) & 1 for b in range(r)]
        return rows

    @classmethod
    def from_config(cls, cfg: dict) -> "CodeSpec":
        def hexint(v):
            return int(v, 16) if isinstance(v, str) else int(v)

        return cls(
            n=int(cfg.get("n", 255)),
            k=int(cfg.get("k", 239)),
            t=int(cfg.get("t", 2)),
            gen_poly=hexint(cfg.get("gen_poly", GEN_POLY)),
            field_poly=hexint(cfg.get("field_poly", FIELD_POLY)),
        )


def encode(msg, spec: CodeSpec) -> np.ndarray:
    msg = np.asarray(msg, dtype=np.uint8)
    if msg.shape != (spec.k,):
        raise ValueError(f"message must have {spec.k} bits, got shape {msg.shape}")
    word = np.empty(spec.n, dtype=np.uint8)
    word[spec.n - spec.k:] = msg
    word[: spec.n - spec.k] = (msg.astype(np.int64) @ spec.parity_rows) & 1
    return word


def encode_batch(msgs: np.ndarray, spec: CodeSpec) -> np.ndarray:
    msgs = np.asarray(msgs, dtype=np.uint8)
    words = np.empty((msgs.shape[0], spec.n), dtype=np.uint8)
    words[:, spec.n - spec.k:] = msgs
    words[:, : spec.n - spec.k] = (msgs.astype(np.int32) @ spec.parity_rows) & 1
    return words


def message_bits(word, spec: CodeSpec) -> np.ndarray:
    return np.asarray(word, dtype=np.uint8)[spec.n - spec.k:]


def syndromes(word, tables: FieldTables) -> tuple[int, int]:
    pos = np.flatnonzero(np.asarray(word))
    s1 = np.bitwise_xor.reduce(tables.exp[pos % 255]) if pos.size else 0
    s3 = np.bitwise_xor.reduce(tables.exp[(3 * pos) % 255]) if pos.size else 0
    return int(s1), int(s3)


def is_codeword(word, spec: CodeSpec) -> bool:
    word = np.asarray(word)
    if word.shape != (spec.n,):
        raise ValueError(f"word must have {spec.n} bits")
    return poly_mod2(bits_to_int(word), spec.gen_poly) == 0


def bits_to_int(word) -> int:
    return int.from_bytes(np.packbits(np.asarray(word, dtype=np.uint8), bitorder="little").tobytes(), "little")


class BdStatus(Enum):
    CORRECTED = "corrected"
    FAILURE = "failure"


@dataclass(frozen=True)
class BdOutcome:
    status: BdStatus
    word: np.ndarray | None = None
    num_flips: int | None = None

    @property
    def corrected(self) -> bool:
        return self.status is BdStatus.CORRECTED


BD_FAILURE = BdOutcome(BdStatus.FAILURE)


def locate_errors(s1: int, s3: int, tables: FieldTables) -> list[int] | None:
    """Peterson locator for t=2 plus Chien search over all 255 positions.

    Returns the error positions (possibly empty) or ``None`` when the
    syndrome pair matches no pattern of weight <= 2.
    """
    if s1 == 0:
        return [] if s3 == 0 else None
    s1_cubed = tables.pow(s1, 3)
    if s3 == s1_cubed:
        return [int(tables.log[s1])]
    sigma1 = s1
    sigma2 = tables.div(s3 ^ s1_cubed, s1)
    # sigma(x) = 1 + sigma1 x + sigma2 x^2 vanishes at x = alpha^-i for an error at i
    roots = []
    l1, l2 = int(tables.log[sigma1]), int(tables.log[sigma2])
    for i in range(255):
        v = 1 ^ int(tables.exp[(l1 - i) % 255]) ^ int(tables.exp[(l2 - 2 * i) % 255])
        if v == 0:
            roots.append(i)
    if len(roots) != 2:
        return None
    return roots


def bd_decode(word, spec: CodeSpec, tables: FieldTables) -> BdOutcome:
    word = np.asarray(word, dtype=np.uint8)
    if word.shape != (spec.n,):
        raise ValueError(f"word must have {spec.n} bits")
    positions = locate_errors(*syndromes(word, tables), tables)
    if positions is None:
        return BD_FAILURE
    out = word.copy()
    out[positions] ^= 1
    return BdOutcome(BdStatus.CORRECTED, out, len(positions))


def word_to_hex(word) -> str:
    """Hex string, least-significant coefficient first (byte 0 = bits 0..7)."""
    return np.packbits(np.asarray(word, dtype=np.uint8), bitorder="little").tobytes().hex()


def word_from_hex(text: str, n: int = 255) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")
    if bits.size < n or bits[n:].any():
        raise ValueError(f"hex string does not encode a {n}-bit word")
    return bits[:n].copy()

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ida_fec.galois_bch import (
    CodeSpec,
    FieldError,
    bd_decode,
    build_field,
    encode,
    encode_batch,
    is_codeword,
    locate_errors,
    message_bits,
    syndromes,
    word_from_hex,
    word_to_hex,
)

from oracles import gf2_remainder, gf_mul, gf_pow, poly_eval

messages = st.lists(st.integers(0, 1), min_size=239, max_size=239).map(lambda b: np.array(b, dtype=np.uint8))


def test_field_anchors(tables):
    assert tables.alpha(1) == 0x02
    assert tables.alpha(8) == 0x71 == gf_pow(2, 8)
    assert tables.alpha(255) == 0x01 == gf_pow(2, 255)
    assert tables.exp[0] == 1


def test_field_tables_are_a_bijection(tables):
    assert sorted(tables.exp[:255].tolist()) == list(range(1, 256))
    for k in range(255):
        assert tables.log[tables.exp[k]] == k


def test_field_matches_shift_and_reduce(tables):
    for a in range(1, 256, 7):
        for b in range(1, 256, 11):
            assert tables.mul(a, b) == gf_mul(a, b)


@given(st.integers(1, 255), st.integers(1, 255))
def test_field_log_and_inverse(a, b):
    t = build_field()
    assert t.log[t.mul(a, b)] == (t.log[a] + t.log[b]) % 255
    assert t.mul(a, t.inv(a)) == 1


@pytest.mark.parametrize("poly", [0x11B, 0x100, 0x1FF, 0x71])
def test_non_primitive_polynomials_rejected(poly):
    # 0x11B (AES) is irreducible but not primitive; 0x71 has the wrong degree
    with pytest.raises(FieldError, match="cycle length|degree"):
        build_field(poly)


def test_code_spec_invariants(spec):
    assert spec.gen_poly.bit_length() - 1 == 16
    assert not any(gf2_remainder([1] + [0] * 254 + [1], spec.gen_poly))
    with pytest.raises(ValueError):
        CodeSpec(gen_poly=0x18DEF)


def test_encode_zero_and_unit(spec):
    assert not encode(np.zeros(239, np.uint8), spec).any()
    msg = np.zeros(239, np.uint8)
    msg[0] = 1
    word = encode(msg, spec)
    expected_parity = gf2_remainder([0] * 16 + [1], spec.gen_poly)
    assert word[:16].tolist() == expected_parity
    assert sum(b << i for i, b in enumerate(expected_parity)) == 0x8DED
    assert word[16] == 1 and not word[17:].any()


def test_encode_rejects_bad_length(spec):
    with pytest.raises(ValueError):
        encode(np.zeros(238, np.uint8), spec)


def test_random_encodes_divisible(spec, rng):
    msgs = rng.integers(0, 2, (1000, 239), dtype=np.uint8)
    words = encode_batch(msgs, spec)
    for m, w in zip(msgs[:50], words[:50]):
        assert np.array_equal(encode(m, spec), w)
    for w in words:
        assert not any(gf2_remainder(w, spec.gen_poly))
        assert is_codeword(w, spec)


@settings(max_examples=50, deadline=None)
@given(messages, st.integers(0, 254))
def test_cyclic_shift_and_round_trip(msg, shift):
    spec = CodeSpec()
    word = encode(msg, spec)
    assert np.array_equal(message_bits(word, spec), msg)
    assert is_codeword(np.roll(word, shift), spec)


def test_syndromes(spec, tables, rng):
    assert syndromes(np.zeros(255, np.uint8), tables) == (0, 0)
    word = encode(rng.integers(0, 2, 239, dtype=np.uint8), spec)
    assert syndromes(word, tables) == (0, 0)
    for i in (0, 1, 37, 128, 254):
        e = word.copy()
        e[i] ^= 1
        assert syndromes(e, tables) == (gf_pow(2, i), gf_pow(2, 3 * i % 255))
    r = rng.integers(0, 2, 255, dtype=np.uint8)
    assert syndromes(r, tables) == (poly_eval(r, 2), poly_eval(r, gf_pow(2, 3)))


def test_is_codeword_single_flip(spec, rng):
    word = encode(rng.integers(0, 2, 239, dtype=np.uint8), spec)
    assert is_codeword(np.zeros(255, np.uint8), spec)
    word[100] ^= 1
    assert not is_codeword(word, spec)


def test_bd_decode_exhaustive_single_errors(spec, tables, rng):
    word = encode(rng.integers(0, 2, 239, dtype=np.uint8), spec)
    out = bd_decode(word, spec, tables)
    assert out.corrected and out.num_flips == 0 and np.array_equal(out.word, word)
    for i in range(255):
        r = word.copy()
        r[i] ^= 1
        out = bd_decode(r, spec, tables)
        assert out.corrected and out.num_flips == 1 and np.array_equal(out.word, word)


def test_bd_decode_sampled_double_errors(spec, tables, rng):
    word = encode(rng.integers(0, 2, 239, dtype=np.uint8), spec)
    r = word.copy()
    r[[10, 200]] ^= 1
    out = bd_decode(r, spec, tables)
    assert out.corrected and out.num_flips == 2 and np.array_equal(out.word, word)
    # 10^4 sampled position pairs through the locator (word-independent by linearity)
    pairs = set()
    while len(pairs) < 10_000:
        i, j = sorted(rng.choice(255, 2, replace=False).tolist())
        pairs.add((i, j))
    for i, j in pairs:
        s1 = tables.alpha(i) ^ tables.alpha(j)
        s3 = tables.alpha(3 * i) ^ tables.alpha(3 * j)
        assert locate_errors(s1, s3, tables) == [i, j]


def test_bd_decode_three_errors(spec, tables, rng):
    for _ in range(200):
        word = encode(rng.integers(0, 2, 239, dtype=np.uint8), spec)
        r = word.copy()
        r[rng.choice(255, 3, replace=False)] ^= 1
        out = bd_decode(r, spec, tables)
        if out.corrected:
            assert out.num_flips <= 2
            assert not np.array_equal(out.word, word)
            assert is_codeword(out.word, spec)
            assert np.count_nonzero(out.word != r) == out.num_flips


def test_s1_zero_s3_nonzero_is_failure(tables):
    assert locate_errors(0, 5, tables) is None


def test_hex_round_trip(spec, rng):
    word = encode(rng.integers(0, 2, 239, dtype=np.uint8), spec)
    text = word_to_hex(word)
    assert len(text) == 64
    assert np.array_equal(word_from_hex(text), word)
    one = np.zeros(255, np.uint8)
    one[0] = 1
    assert word_to_hex(one).startswith("01")
    with pytest.raises(ValueError):
        word_from_hex("ff" * 32)

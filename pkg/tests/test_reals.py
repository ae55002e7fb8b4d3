import pytest

from ittm.reals import (Real, ZERO, and_not, from_support, join,
                        or_real, parse_real, shift_union)


def test_canonical_forms_identify_equal_sequences():
    assert Real((1, 0, 1, 0), (1, 0)) == Real((), (1, 0))
    assert Real((0, 0, 0), (0,)) == ZERO
    assert Real((1,), (0, 0)) == Real((1,), (0,))
    assert Real((0, 1), (0, 1)) == Real((), (0, 1))
    assert Real((0, 1), (1, 0, 1)) == Real((), (0, 1, 1))


def test_tail_must_be_nonempty_and_binary():
    with pytest.raises(ValueError):
        Real((0,), ())
    with pytest.raises(ValueError):
        Real((2,), (0,))


def test_bit_indexing_and_suffix():
    r = parse_real("1101(10)*")
    assert [r.bit(i) for i in range(8)] == [1, 1, 0, 1, 1, 0, 1, 0]
    assert r.suffix(2) == parse_real("01(10)*")
    assert r.suffix(5) == parse_real("(01)*")
    assert r.suffix(0) == r


def test_with_bit_and_truncated():
    r = ZERO.with_bit(3, 1)
    assert r.render() == "0001(0)*"
    assert r.with_bit(3, 0).is_zero()
    periodic = parse_real("(01)*")
    assert periodic.truncated(4) == periodic
    spiky = parse_real("0001(0)*")
    assert spiky.truncated(2).is_zero()


def test_parse_render_round_trip():
    for text in ["(0)*", "1(0)*", "0001(0)*", "(01)*", "11(010)*"]:
        assert parse_real(text).render() == text
    with pytest.raises(ValueError):
        parse_real("10(")
    with pytest.raises(ValueError):
        parse_real("2(0)*")
    with pytest.raises(ValueError):
        parse_real("1()*")


def test_join_positionally_for_eight_bits():
    a = parse_real("10000000(0)*")
    b = parse_real("01000000(0)*")
    j = join(a, b)
    for n in range(8):
        assert j.bit(2 * n) == a.bit(n)
        assert j.bit(2 * n + 1) == b.bit(n)
    assert join(ZERO, ZERO).is_zero()


def test_join_injective_and_position_exact_on_grid():
    pool = [ZERO, parse_real("1(0)*"), parse_real("(01)*"), parse_real("011(1)*")]
    seen = {}
    for a in pool:
        for b in pool:
            j = join(a, b)
            for n in range(12):
                assert j.bit(2 * n) == a.bit(n)
                assert j.bit(2 * n + 1) == b.bit(n)
            assert j not in seen or seen[j] == (a, b)
            seen[j] = (a, b)
    assert len(seen) == len(pool) ** 2


def test_combiners():
    a = parse_real("1100(10)*")
    b = parse_real("1010(01)*")
    for n in range(24):
        assert or_real(a, b).bit(n) == (a.bit(n) | b.bit(n))
        assert and_not(a, b).bit(n) == (a.bit(n) & (1 - b.bit(n)))
    assert or_real(ZERO, ZERO).is_zero()


def test_support_bound():
    assert ZERO.support_bound() == 0
    assert parse_real("00101(0)*").support_bound() == 5
    assert parse_real("(01)*").support_bound() is None


def test_from_support():
    r = from_support({0, 3})
    assert r.render() == "1001(0)*"
    assert from_support(set()).is_zero()


def test_shift_union_against_brute_force():
    cases = [
        (parse_real("0110(0)*"), 1, 2),
        (parse_real("1(0)*"), 0, 1),
        (parse_real("001(100)*"), 2, 3),
        (parse_real("0001001(10)*"), 3, 2),
        (parse_real("(001)*"), 0, 2),
    ]
    for base, offset, delta in cases:
        got = shift_union(base, offset, delta)
        for x in range(160):
            want = any(x - k * delta >= offset and base.bit(x - k * delta)
                       for k in range(x // delta + 1))
            assert got.bit(x) == (1 if want else 0), (base, offset, delta, x)

import random

import pytest
from hypothesis import given, settings, strategies as st

from maurer.bignat import BigNat
from maurer.bta import STOP_HANDLE, residuals
from maurer.errors import InvalidParams, MilestoneError, NonContiguousDomain, ParseError, SizeExceeded
from maurer.isa import DmSpec, build_isa, dm_table, validate_dm_regions
from maurer.machine import RR, check_coincidence, computed_regions, data, ld, ou
from maurer.tpfc import (
    CompletenessWitness, ExtTransformation, TpfcParams, all_transformations, bn,
    computation_lengths, count_transformations, format_transformation, incompleteness_check,
    parse_transformation, synthesize_complete, synthesize_zero_ou, trace_invariant_check,
    verify_membership, witness_params,
)

P_11 = TpfcParams(1, 1, 4, 5, 8, False)


# --- bn and counting -----------------------------------------------------------

def test_bn_examples():
    assert bn({ou(0): 0}) == 0
    assert bn({ou(2): 1, ou(3): 1}) == 3
    assert bn({ou(5): 1}) == 1
    assert bn({}) == 0
    with pytest.raises(NonContiguousDomain):
        bn({ou(0): 1, ou(2): 1})
    with pytest.raises(NonContiguousDomain):
        bn({data(0): 1})


@given(st.integers(0, 10), st.lists(st.integers(0, 1), min_size=1, max_size=12))
def test_bn_is_binary_value(lo, bits):
    value = bn({ou(lo + i): b for i, b in enumerate(bits)})
    assert value == int("".join(map(str, reversed(bits))), 2)


def test_count_examples():
    assert count_transformations(1, 1) == 256
    assert count_transformations(0, 1) == 4


@pytest.mark.parametrize("aw", range(5))
@pytest.mark.parametrize("wl", range(1, 5))
def test_count_closed_form(aw, wl):
    states = (2**wl) ** (2**aw)
    assert count_transformations(aw, wl) == BigNat.of(states) ** states


def test_count_matches_enumeration():
    for aw, wl in [(0, 1), (1, 1), (0, 2)]:
        cells = 2**aw
        assert count_transformations(aw, wl) == sum(1 for _ in all_transformations(cells, wl))


@given(st.integers(0, 2**80), st.integers(0, 300), st.integers(0, 2**80), st.integers(0, 300))
def test_bignat_agrees_with_int(m1, e1, m2, e2):
    a, b = BigNat(m1, e1), BigNat(m2, e2)
    x, y = m1 << e1, m2 << e2
    assert int(a) == x and int(a * b) == x * y
    assert (a < b) == (x < y) and (a == b) == (x == y)
    assert (a < y) == (x < y)


def test_bignat_huge():
    big = BigNat.pow2(2**70)
    assert big < BigNat.pow2(2**70 - 1) * 3
    assert big > BigNat.pow2(2**70 - 2) * 3
    assert str(big) == f"2^{2**70}"
    assert str(BigNat(3, 5000)) == f"3*2^5000"
    assert str(BigNat(5)) == "5"


# --- transformations ---------------------------------------------------------------

def test_transformation_roundtrip():
    t = ExtTransformation.random(2, 2, 7)
    text = format_transformation(1, 2, False, t)
    assert text.splitlines()[0] == "1 2 F"
    assert parse_transformation(text) == (1, 2, False, t)


@pytest.mark.parametrize("text", [
    "", "1 1\n", "1 1 F\n0 0 -> 0 0\n",
    "1 1 F\n0 0 -> 0 0\n0 1 -> 0 0\n1 0 -> 0 0\n1 1 -> 0 2\n",
    "1 1 F\n0 0 -> 0 0\n0 0 -> 0 0\n1 0 -> 0 0\n1 1 -> 0 0\n",
    "1 1 F\n0 0 0 -> 0 0\n",
])
def test_transformation_parse_errors(text):
    with pytest.raises(ParseError):
        parse_transformation(text)


def test_families():
    assert ExtTransformation.swap(2, 1)((0, 1)) == (1, 0)
    assert ExtTransformation.increment(2, 2)((3, 1)) == (0, 2)
    assert ExtTransformation.constant(2, 1)((1, 1)) == (0, 0)
    with pytest.raises(ValueError):
        ExtTransformation.family("nope", 2, 1)


# --- the completeness witness --------------------------------------------------------

def test_identity_witness():
    w = synthesize_complete(1, 1, False, ExtTransformation.identity(2, 1))
    v = verify_membership(P_11, w)
    assert v and v.detail == "2048 states"
    assert witness_params(w) == P_11


def test_swap_constant_length():
    w = synthesize_complete(1, 1, False, ExtTransformation.swap(2, 1))
    assert verify_membership(P_11, w)
    # init, three steps per loaded cell, the failing prel, trf, two steps
    # per stored cell and the failing pres
    n = 2
    assert computation_lengths(w) == {1 + 3 * n + 1 + 1 + 2 * n + 1}


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32))
def test_witness_shape_independent_of_target(seed):
    t = ExtTransformation.random(2, 1, seed)
    w = synthesize_complete(1, 1, False, t)
    assert len(w.isa.dm) == 5 and len(residuals(w.thread)) == 8
    assert w.isa.params.nrpl == w.isa.params.nrps == 1


def test_witness_regions_are_strict():
    w = synthesize_complete(1, 1, False, ExtTransformation.swap(2, 1))
    assert validate_dm_regions(w.isa)
    m = w.isa.machine
    for name, (ireg, oreg) in computed_regions(m).items():
        assert check_coincidence(m, m.operations[name], ireg, oreg)


def test_membership_residual_bound():
    w = synthesize_complete(1, 1, False, ExtTransformation.swap(2, 1))
    v = verify_membership(TpfcParams(1, 1, 4, 5, 7, False), w)
    assert not v and "8" in v.detail
    assert not verify_membership(TpfcParams(1, 1, 4, 4, 8, False), w)
    assert not verify_membership(TpfcParams(1, 1, 3, 5, 8, False), w)


def test_membership_stop_thread_fails():
    t = ExtTransformation.swap(2, 1)
    w = synthesize_complete(1, 1, False, t)
    bad = CompletenessWitness(w.isa, STOP_HANDLE, t, False)
    v = verify_membership(P_11, bad)
    assert not v
    m = w.isa.machine
    s = v.counterexample
    assert m.restrict(s, [data(0), data(1)]) != t(m.restrict(s, [data(0), data(1)]))


def test_membership_wrong_target_fails():
    w = synthesize_complete(1, 1, False, ExtTransformation.swap(2, 1))
    assert not verify_membership(P_11, w, ExtTransformation.identity(2, 1))


def test_working_area_variant():
    for seed in range(3):
        t = ExtTransformation.random(2, 1, seed)
        w = synthesize_complete(2, 1, True, t)
        assert w.isa.params.ous == 4
        assert verify_membership(TpfcParams(2, 1, 4, 5, 8, True), w)


def test_guards():
    with pytest.raises(InvalidParams):
        synthesize_complete(1, 1, False, ExtTransformation.identity(1, 1))
    with pytest.raises(InvalidParams):
        synthesize_complete(0, 1, True, ExtTransformation.identity(1, 1))
    with pytest.raises(SizeExceeded):
        synthesize_complete(2, 2, False, ExtTransformation.identity(4, 2), max_table=1000)


# --- milestones ------------------------------------------------------------------

def test_milestones_all_states_identity():
    w = synthesize_complete(1, 1, False, ExtTransformation.identity(2, 1))
    for s in w.isa.machine.states():
        v = trace_invariant_check(w, s)
        assert v and v.detail == "8 milestones, 14 steps"


def test_milestones_garbage_registers():
    w = synthesize_complete(1, 1, False, ExtTransformation.increment(2, 1))
    m = w.isa.machine
    rng = random.Random(5)
    for _ in range(200):
        assert trace_invariant_check(w, m.random_state(rng))


def test_sabotaged_postl_fails_in_load_loop():
    t = ExtTransformation.swap(2, 1)
    w = synthesize_complete(1, 1, False, t)
    lay, params = w.layout, w.isa.params
    ctr = lay.counter()
    data_bits = [ou(j) for j in range(lay.data_bits)]

    def postl(v):
        # writes the slot the counter points at, one too far
        c = bn({e: v[e] for e in ctr})
        out = {e: v[e] for e in data_bits}
        if c < lay.cells:
            out[lay.slot(c)[0]] = v[ld(0)]
        return {**out, RR: True}

    writes = tuple(data_bits) + (RR,)
    dm = [d if d.name != "postl" else DmSpec("postl", writes, dm_table(params, writes, postl))
          for d in w.isa.dm]
    bad = CompletenessWitness(build_isa(params, dm), w.thread, t, False, lay)
    failures = 0
    for s in bad.isa.machine.states():
        try:
            trace_invariant_check(bad, s)
        except MilestoneError as exc:
            failures += 1
            assert 2 <= exc.index <= 2**1 + 2
    assert failures > 0


# --- zero operating unit -----------------------------------------------------------

@pytest.mark.parametrize("t", [ExtTransformation.increment(1, 1), ExtTransformation.identity(1, 1),
                               ExtTransformation.constant(1, 1, 1)])
def test_zero_ou(t):
    z = synthesize_zero_ou(0, 1, False, t)
    assert z.passed
    assert len(z.isa.dm) <= 5 * 4**2
    assert len(z.selector) <= 4
    assert all(len(residuals(h)) <= 8 * 6**2 for h in z.selector.values())
    assert z.isa.params.ous == 0


def test_zero_ou_guard():
    with pytest.raises(SizeExceeded):
        synthesize_zero_ou(1, 1, False, ExtTransformation.identity(2, 1))


# --- counting certificates ----------------------------------------------------------

def test_certificate_small_example():
    c = incompleteness_check(TpfcParams(2, 3, 3, 4, 1, True))
    assert c.ems == 6
    assert c.applicable_threads_bound == 8 and c.thread_majorant == 8
    assert c.achievable_bound == BigNat.pow2(198)
    assert c.total_transformations == BigNat.pow2(384)
    assert c.per_instruction_ops == (2**3) ** (2**3)
    assert c.verdict == "INCOMPLETE"
    assert all(c.chain.values())


def test_certificate_second_example():
    c = incompleteness_check(TpfcParams(3, 4, 8, 12, 2, True))
    assert c.ems == 16 and c.verdict == "INCOMPLETE"
    assert all(c.chain.values())
    assert c.applicable_threads_bound == (14 * 4 + 2) ** 2
    assert c.thread_majorant == (16 * 4) ** 2


def test_certificate_parameter_domain():
    with pytest.raises(InvalidParams):
        TpfcParams(2, 3, 3, 4, 0, True)
    assert incompleteness_check(TpfcParams(1, 1, 0, 1, 1, True)).verdict == "NOT-APPLICABLE"
    assert incompleteness_check(TpfcParams(2, 3, 3, 4, 1, False)).verdict == "NOT-APPLICABLE"
    c = incompleteness_check(TpfcParams(2, 3, 4, 4, 1, True))
    assert c.verdict == "NOT-APPLICABLE" and c.achievable_bound == BigNat.pow2(198)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6), st.integers(1, 6), st.integers(1, 40), st.integers(1, 8),
       st.integers(0, 3), st.integers(0, 3))
def test_certificate_bounds_monotone(aw, wl, iss, ssb, d_iss, d_ssb):
    ems = 2 ** (aw - 1) * wl
    a = incompleteness_check(TpfcParams(aw, wl, ems // 2, iss, ssb, True))
    b = incompleteness_check(TpfcParams(aw, wl, ems // 2, iss + d_iss, ssb + d_ssb, True))
    assert a.applicable_threads_bound <= b.applicable_threads_bound
    assert a.achievable_bound <= b.achievable_bound
    assert a.total_transformations == b.total_transformations
    assert a.applicable_threads_bound <= a.thread_majorant


def test_certificate_against_direct_formulas():
    for aw in range(2, 5):
        for wl in range(1, 4):
            ems = 2 ** (aw - 1) * wl
            h = ems // 2
            iss, ssb = 3, 2
            c = incompleteness_check(TpfcParams(aw, wl, h, iss, ssb, True))
            assert int(c.total_transformations) == (2**ems) ** (2**ems)
            assert int(c.per_instruction_ops) == (2**h) ** (2**h)
            assert int(c.per_thread_bound) == ((2**h) ** (2**h)) ** (2**h)
            threads = ((iss + 2) * ssb**2 + 2) ** ssb
            route = 2**ems if threads <= 2**ems else threads
            assert int(c.achievable_bound) == int(c.per_thread_bound) * route

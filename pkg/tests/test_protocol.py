import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batmodel.protocol import (
    OGM,
    ConfigError,
    Interpretation,
    NodeState,
    OriginatorEntry,
    ProtocolParams,
    best_next_hops,
    classify,
    create_own_ogm,
    empty_entry,
    handle_next,
    initial_state,
    is_bidirectional,
    is_duplicate,
    newer_than,
    process_5_3,
    process_5_5,
    receive,
    shift_and_record,
    window_entries,
    window_offset,
)

LIT = ProtocolParams(n_nodes=4)
ALT = ProtocolParams(n_nodes=4, interpretation=Interpretation.ALTERNATIVE)
A, B, C, D = range(4)


def mask(last, sqns, w=5, r=16):
    """Bitmask with flags for the given absolute sequence numbers."""
    m = 0
    for s in sqns:
        m |= 1 << ((last - s) % r)
    assert m < 1 << w
    return m


def with_entry(state, oid, entry):
    table = list(state.table)
    table[oid] = entry
    return state._replace(table=tuple(table))


# --- parameters -------------------------------------------------------------

@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(window_size=0), "window_size"),
        (dict(max_sqn=7, window_size=5), "max_sqn"),
        (dict(bi_link_timeout=0), "bi_link_timeout"),
        (dict(bi_link_timeout=9), "bi_link_timeout"),
        (dict(ttl_max=1), "ttl_max"),
        (dict(buffer_capacity=0), "buffer_capacity"),
        (dict(n_nodes=0), "n_nodes"),
    ],
)
def test_invalid_params_name_the_field(kwargs, field):
    args = dict(n_nodes=4)
    args.update(kwargs)
    with pytest.raises(ConfigError) as info:
        ProtocolParams(**args)
    assert info.value.field == field


def test_interpretation_accepts_string():
    assert ProtocolParams(n_nodes=2, interpretation="alternative").interpretation is Interpretation.ALTERNATIVE


# --- modular arithmetic -----------------------------------------------------

def _steps_forward(b, a, r):
    """Count increments from b until a is reached, the slow way."""
    x, k = b, 0
    while x != a:
        x = (x + 1) % r
        k += 1
    return k


def test_newer_than_exhaustive_against_stepping():
    r = LIT.sqn_range
    for a in range(r):
        assert newer_than(a, None, LIT)
        for b in range(r):
            ahead = _steps_forward(b, a, r)
            assert newer_than(a, b, LIT) == (1 <= ahead <= r // 2), (a, b)


def test_newer_than_antisymmetry_exhaustive():
    r = LIT.sqn_range
    for a in range(r):
        assert not newer_than(a, a, LIT)
        for b in range(r):
            dist = (a - b) % r
            if dist == r // 2:
                # the half-range boundary is inclusive, so both directions count as newer
                assert newer_than(a, b, LIT) and newer_than(b, a, LIT)
            elif dist:
                assert newer_than(a, b, LIT) != newer_than(b, a, LIT)


@pytest.mark.parametrize("a, b, expected", [(2, 14, True), (3, 3, False), (6, 14, True), (7, 14, False)])
def test_newer_than_examples(a, b, expected):
    assert newer_than(a, b, LIT) is expected


def test_window_offset_exhaustive_against_stepping():
    r, w = LIT.sqn_range, LIT.window_size
    for last in range(r):
        # walk backwards from last, one slot at a time
        expected = {}
        x = last
        for k in range(w):
            expected[x] = k
            x = (x - 1) % r
        for s in range(r):
            assert window_offset(s, last, LIT) == expected.get(s), (s, last)
        assert window_offset(last, None, LIT) is None


def test_window_offset_examples():
    assert window_offset(8, 10, LIT) == 2
    assert window_offset(10, 10, LIT) == 0
    # a window spanning the wrap: 13 .. 1
    assert window_offset(15, 1, LIT) == 2
    assert window_offset(13, 1, LIT) == 4
    assert window_offset(12, 1, LIT) is None


def test_window_entries_is_oldest_first():
    assert window_entries(0b00001, 5) == (False, False, False, False, True)
    assert window_entries(0b10000, 5) == (True, False, False, False, False)


# --- sliding window ---------------------------------------------------------

def test_shift_moves_window_and_records_sender():
    before = empty_entry(LIT)._replace(
        last_sqn=10, last_ttl=9,
        windows=(0, mask(10, [8, 9, 10]), mask(10, [6, 7, 8]), mask(10, [9])),
    )
    after = shift_and_record(before, OGM(C, D, 12, 7), LIT)
    assert after.last_sqn == 12 and after.last_ttl == 7
    assert [bin(m).count("1") for m in after.windows] == [0, 3, 1, 2]
    assert after.windows[D] & 1
    # sqn 6 and 7 are gone: the oldest slot is now 8
    assert window_entries(after.windows[C], 5) == (True, False, False, False, False)


def test_first_contact_sets_single_newest_flag():
    e = shift_and_record(empty_entry(LIT), OGM(C, B, 7, 8), LIT)
    assert e.last_sqn == 7 and e.last_ttl == 8
    assert e.windows == (0, 1, 0, 0)


def test_shift_beyond_window_clears_everything():
    e = empty_entry(LIT)._replace(last_sqn=3, last_ttl=9, windows=(0, 0b11111, 0b1, 0))
    e = shift_and_record(e, OGM(C, D, 9, 9), LIT)
    assert e.windows == (0, 0, 0, 1)


def test_in_window_record_keeps_last_fields():
    e = empty_entry(LIT)._replace(last_sqn=10, last_ttl=9, windows=(0, 1, 0, 0))
    e = shift_and_record(e, OGM(C, D, 8, 4), LIT)
    assert e.last_sqn == 10 and e.last_ttl == 9
    assert e.windows[D] == 0b100


def test_shift_rejects_stale_out_of_window():
    e = empty_entry(LIT)._replace(last_sqn=10, last_ttl=9)
    with pytest.raises(ValueError):
        shift_and_record(e, OGM(C, D, 5, 9), LIT)


def test_duplicate_detection():
    e = empty_entry(LIT)._replace(last_sqn=10, last_ttl=9, windows=(0, mask(10, [9]), 0, 0))
    assert is_duplicate(e, OGM(C, B, 9, 9), LIT)
    assert not is_duplicate(e, OGM(C, D, 9, 9), LIT)
    assert not is_duplicate(e, OGM(C, B, 11, 9), LIT)


def test_literal_keeps_sticky_best_and_breaks_ties_low():
    e = shift_and_record(empty_entry(LIT), OGM(C, D, 1, 9), LIT)
    assert e.designated_best == D
    e = shift_and_record(e, OGM(C, B, 1, 9), LIT)
    assert e.designated_best == D  # tie, previous holder stays
    e = shift_and_record(e, OGM(C, B, 2, 9), LIT)
    assert e.designated_best == B
    fresh = shift_and_record(empty_entry(LIT)._replace(last_sqn=1, windows=(0, 1, 0, 1)), OGM(C, B, 1, 9), LIT)
    assert fresh.designated_best == B


def test_alternative_does_not_designate():
    e = shift_and_record(empty_entry(ALT), OGM(C, D, 1, 9), ALT)
    assert e.designated_best is None


# brute-force recorder: absolute (unwrapped) sequence numbers, every accepted
# (sid, sqn) pair kept forever, membership re-derived on demand
class Recorder:
    def __init__(self):
        self.seen = set()
        self.last = None

    def accept(self, sid, abs_sqn):
        if self.last is None or abs_sqn > self.last:
            self.last = abs_sqn
        self.seen.add((sid, abs_sqn))

    def flags(self, sid, w):
        return [(sid, self.last - k) in self.seen for k in range(w)]


@st.composite
def streams(draw):
    """Accepted OGMs for one originator: each either jumps ahead by up to
    half the range or lands inside the current window."""
    events = []
    last = None
    for _ in range(draw(st.integers(1, 40))):
        sid = draw(st.integers(0, 3))
        if last is None or draw(st.booleans()):
            step = draw(st.integers(1, 8))
            s = (last or 0) + step if last is not None else draw(st.integers(0, 30))
        else:
            s = last - draw(st.integers(0, 4))
        last = s if last is None else max(last, s)
        events.append((sid, s))
    return events


@settings(max_examples=1500, deadline=None)
@given(streams())
def test_window_matches_recorder_oracle(events):
    r, w = LIT.sqn_range, LIT.window_size
    entry = empty_entry(LIT)
    oracle = Recorder()
    for sid, s in events:
        entry = shift_and_record(entry, OGM(C, sid, s % r, 5), LIT)
        oracle.accept(sid, s)
        assert entry.last_sqn == oracle.last % r
        for n in range(4):
            got = [bool(entry.windows[n] >> k & 1) for k in range(w)]
            assert got == oracle.flags(n, w), (n, events)


@settings(max_examples=300, deadline=None)
@given(streams())
def test_flags_only_for_presented_pairs(events):
    r = LIT.sqn_range
    entry = empty_entry(LIT)
    presented = set()
    for sid, s in events:
        entry = shift_and_record(entry, OGM(C, sid, s % r, 5), LIT)
        presented.add((sid, s % r))
        for n, m in enumerate(entry.windows):
            for k in range(LIT.window_size):
                if m >> k & 1:
                    assert (n, (entry.last_sqn - k) % r) in presented


# --- bidirectional check ----------------------------------------------------

def test_is_bidirectional_examples():
    s = initial_state(A, LIT)
    assert not is_bidirectional(s, B, LIT)
    s = with_entry(s, B, empty_entry(LIT)._replace(bidirectional_sqn=0))
    assert is_bidirectional(s, B, LIT)
    s = with_entry(s._replace(own_sqn=2), B, empty_entry(LIT)._replace(bidirectional_sqn=14))
    assert is_bidirectional(s, B, LIT)
    s = with_entry(s._replace(own_sqn=3), B, empty_entry(LIT)._replace(bidirectional_sqn=14))
    assert not is_bidirectional(s, B, LIT)


def test_process_5_3_updates_echoing_neighbour():
    s = initial_state(A, LIT)._replace(own_sqn=2)
    assert process_5_3(s, OGM(A, B, 2, 9, True)).table[B].bidirectional_sqn == 2
    assert process_5_3(s, OGM(A, B, 2, 9, False)) == s
    assert process_5_3(s, OGM(A, B, 1, 9, True)) == s


# --- ranking ----------------------------------------------------------------

def _fig1_state(params, windows):
    entry = empty_entry(params)._replace(last_sqn=10, last_ttl=9, windows=windows)
    return with_entry(initial_state(A, params), C, entry)


def test_best_next_hops_tie_and_after_update():
    before = (0, mask(10, [8, 9, 10]), mask(10, [6, 7, 8]), mask(10, [9]))
    assert best_next_hops(_fig1_state(ALT, before), C, ALT) == {B, C}
    after_entry = shift_and_record(_fig1_state(ALT, before).table[C], OGM(C, D, 12, 7), ALT)
    s = with_entry(initial_state(A, ALT), C, after_entry)
    assert best_next_hops(s, C, ALT) == {B}
    lit_entry = shift_and_record(empty_entry(LIT)._replace(last_sqn=10, windows=before, designated_best=B), OGM(C, D, 12, 7), LIT)
    assert best_next_hops(with_entry(initial_state(A, LIT), C, lit_entry), C, LIT) == {B}


def test_empty_entry_has_no_best_hop():
    assert best_next_hops(initial_state(A, LIT), C, LIT) == frozenset()
    assert best_next_hops(initial_state(A, ALT), C, ALT) == frozenset()


# --- classification -----------------------------------------------------------

def test_echo_is_r524_only():
    s = initial_state(A, LIT)._replace(own_sqn=1)
    assert classify(s, OGM(A, B, 1, 9, True), LIT) == (True, False, False)


@pytest.mark.parametrize("params", [LIT, ALT])
def test_first_contact_over_unconfirmed_link(params):
    rules = classify(initial_state(A, params), OGM(B, B, 1, 10), params)
    assert rules == (False, False, True)
    out = process_5_5(initial_state(A, params), OGM(B, B, 1, 10), params)
    assert out == OGM(B, A, 1, 9, True, True)


def _duplicate_setup(params):
    # link to B confirmed, B is best for C, (C, B, 9) already recorded with ttl 6
    s = initial_state(A, params)._replace(own_sqn=1)
    s = with_entry(s, B, empty_entry(params)._replace(bidirectional_sqn=1))
    entry = empty_entry(params)._replace(last_sqn=9, last_ttl=6, windows=(0, 1, 0, 0), designated_best=B if params.literal else None)
    return with_entry(s, C, entry)


def test_duplicate_with_equal_ttl_differs_between_readings():
    ogm = OGM(C, B, 9, 6)
    assert classify(_duplicate_setup(LIT), ogm, LIT).r527
    assert not classify(_duplicate_setup(ALT), ogm, ALT).r527
    assert not classify(_duplicate_setup(LIT), ogm, LIT).r526


def test_in_window_fresh_is_recorded_only_by_alternative():
    ogm = OGM(C, D, 8, 5)
    for params in (LIT, ALT):
        s = _duplicate_setup(params)
        s = with_entry(s, D, s.table[D]._replace(bidirectional_sqn=1))
        assert classify(s, ogm, params).r526 is (not params.literal)


def test_process_5_5_examples():
    s = initial_state(A, LIT)
    assert process_5_5(s, OGM(C, B, 5, 5), LIT) == OGM(C, A, 5, 4, False, True)
    s = with_entry(s._replace(own_sqn=1), B, empty_entry(LIT)._replace(bidirectional_sqn=1))
    assert process_5_5(s, OGM(B, B, 5, 10), LIT) == OGM(B, A, 5, 9, True, False)
    with pytest.raises(ValueError):
        process_5_5(s, OGM(B, B, 5, 1), LIT)


# --- handle_next / receive / create -----------------------------------------

def test_handle_next_both_rules():
    s = initial_state(A, LIT)._replace(own_sqn=1)
    s = with_entry(s, B, empty_entry(LIT)._replace(bidirectional_sqn=1))
    s = s._replace(buffer=(OGM(B, B, 3, 10),))
    rules = classify(s, s.buffer[0], LIT)
    assert rules.r526 and rules.r527
    after, out = handle_next(s, LIT)
    assert out == OGM(B, A, 3, 9, True, False)
    assert after.table[B].last_sqn == 3 and after.buffer == ()


def test_handle_next_drop_only_pops():
    s = _duplicate_setup(ALT)
    s = s._replace(buffer=(OGM(C, B, 9, 6), OGM(D, D, 1, 10)))
    after, out = handle_next(s, ALT)
    assert out is None
    assert after == s._replace(buffer=s.buffer[1:])


def test_handle_next_r526_only():
    s = _duplicate_setup(ALT)
    s = with_entry(s, D, s.table[D]._replace(bidirectional_sqn=1))
    s = s._replace(buffer=(OGM(C, D, 8, 1),))
    after, out = handle_next(s, ALT)
    assert out is None
    assert after.table[C].windows[D] == 0b10


def test_receive_rules():
    s = initial_state(A, LIT)
    assert receive(s, OGM(B, B, 1, 10, False, True), LIT) == s
    assert len(receive(s, OGM(B, B, 1, 10), LIT).buffer) == 1
    # an echo of our own OGM is kept even when flagged unidirectional
    assert len(receive(s, OGM(A, B, 1, 9, True, True), LIT).buffer) == 1


def test_receive_overflow_counts_and_drops_incoming():
    small = ProtocolParams(n_nodes=4, buffer_capacity=2)
    s = initial_state(A, small)
    for k in range(3):
        s = receive(s, OGM(B, B, k, 10), small)
    assert [o.sqn for o in s.buffer] == [0, 1]
    assert s.buffer_error == 1


def test_create_own_ogm():
    s, ogm = create_own_ogm(initial_state(A, LIT), LIT)
    assert ogm == OGM(A, A, 1, 10, False, False) and s.own_sqn == 1
    s, ogm = create_own_ogm(s._replace(own_sqn=15), LIT)
    assert s.own_sqn == 0 and ogm.sqn == 0


# --- properties ---------------------------------------------------------------

sqns = st.integers(0, 15)
opt_sqn = st.none() | sqns
masks = st.integers(0, 31)


@st.composite
def node_and_ogm(draw):
    entries = []
    for _ in range(4):
        entries.append(OriginatorEntry(draw(opt_sqn), draw(opt_sqn), draw(st.none() | st.integers(1, 10)),
                                       tuple(draw(masks) for _ in range(4)), None))
    # keep literal nominations consistent with the windows they came from
    table = tuple(e._replace(windows=e.windows if e.last_sqn is not None else (0,) * 4) for e in entries)
    state = NodeState(A, draw(sqns), table, ())
    ogm = OGM(draw(st.integers(1, 3)), draw(st.integers(1, 3)), draw(sqns), draw(st.integers(1, 10)),
              draw(st.booleans()), False)
    return state, ogm


def _nominated(state):
    from batmodel.protocol import _nominate
    table = tuple(e._replace(designated_best=_nominate(e.windows, None)) for e in state.table)
    return state._replace(table=table)


@settings(max_examples=500, deadline=None)
@given(node_and_ogm())
def test_literal_r526_implies_alternative_r526(case):
    state, ogm = case
    if classify(_nominated(state), ogm, LIT).r526:
        assert classify(state, ogm, ALT).r526


@settings(max_examples=300, deadline=None)
@given(node_and_ogm())
def test_designated_best_is_in_alternative_set(case):
    state = _nominated(case[0])
    for oid in range(4):
        hop = state.table[oid].designated_best
        if hop is not None:
            assert hop in best_next_hops(state, oid, ALT)


@settings(max_examples=300, deadline=None)
@given(node_and_ogm(), st.sampled_from([LIT, ALT]))
def test_classify_is_pure_and_rebroadcast_decrements_ttl(case, params):
    state, ogm = case
    if params.literal:
        state = _nominated(state)
    assert classify(state, ogm, params) == classify(state, ogm, params)
    after, out = handle_next(state._replace(buffer=(ogm,)), params)
    if out is not None:
        assert out.ttl == ogm.ttl - 1 >= 1
    assert len(after.table) == 4
    assert all(m < 1 << params.window_size for e in after.table for m in e.windows)

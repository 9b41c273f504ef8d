import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from tflkit.corpus import fixture_names, fixture_path, fixture_text, load_fixture
from tflkit.errors import ParseError
from tflkit.formats import format_es, format_net, format_tsi, load_model, parse_es, parse_net, parse_tsi
from tflkit.models import net_to_tsi, validate_tsi


@pytest.mark.parametrize("name", [n for n in fixture_names() if n.endswith(".tsi")])
def test_tsi_round_trip(name):
    t = load_fixture(name)
    assert parse_tsi(format_tsi(t)) == t


@pytest.mark.parametrize("name", [n for n in fixture_names() if n.endswith(".net")])
def test_net_round_trip(name):
    n = load_fixture(name)
    again = parse_net(format_net(n))
    assert (again.places, again.actions, again.pre, again.post, again.initial) == \
        (n.places, n.actions, n.pre, n.post, n.initial)


def test_es_round_trip_keeps_conflict_marks():
    es = load_fixture("choice_then_c.es")
    assert parse_es(format_es(es)) == es


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_random_net_round_trip(seed):
    net, tsi = oracles.random_net_tsi(random.Random(seed))
    assert net_to_tsi(parse_net(format_net(net))) == tsi
    assert parse_tsi(format_tsi(tsi)) == tsi


def test_comments_and_blank_lines():
    t = parse_tsi("# header\n\nstate s init   # the start\nstate q\ntrans t s a q # step\n")
    assert t.states == ("s", "q") and len(t.transitions) == 1


def test_error_reports_line_and_column():
    with pytest.raises(ParseError) as e:
        parse_tsi("state s init\n  trans t s a\n", "m.tsi")
    assert (e.value.line, e.value.col) == (2, 3)
    assert str(e.value).startswith("m.tsi:2:3:")


def test_unknown_keyword():
    with pytest.raises(ParseError) as e:
        parse_net("place p marked\nplaec q\n")
    assert e.value.line == 2


def test_missing_initial_state():
    with pytest.raises(ParseError):
        parse_tsi("state s\n")


def test_unknown_state_in_transition():
    with pytest.raises(ParseError) as e:
        parse_tsi("state s init\ntrans t s a nowhere\n")
    assert e.value.line == 2


def test_es_bad_conflict_line():
    with pytest.raises(ParseError):
        parse_es("event a a\nevent b b\nconflict a b\n")


def test_load_model_dispatch(tmp_path):
    assert load_model(fixture_path("diamond.tsi"))[0] == "tsi"
    assert load_model(fixture_path("ce2_a.net"))[0] == "net"
    assert load_model(fixture_path("choice_then_c.es"))[0] == "es"
    assert load_model(fixture_path("loop.ccs"))[0] == "ccs"
    bad = tmp_path / "x.txt"
    bad.write_text("")
    with pytest.raises(ParseError):
        load_model(bad)


def test_fixture_text_readable():
    assert "state" in fixture_text("diamond.tsi")
    assert validate_tsi(load_fixture("diamond.tsi")).ok

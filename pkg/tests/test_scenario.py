import math

import pytest
from hypothesis import given, strategies as st

from repeaterlab.errors import ScenarioError
from repeaterlab.scenario import Scenario, SweepAxis, parse_scenario, serialize_scenario

CHAIN_TEXT = """\
# minimal chain scenario
[chain]
L = 1000   # km
n = 4
eta_m = 1

[link]
L_att = 22
p = 1
eta_d = 1
"""


def test_minimal_chain_scenario():
    s = parse_scenario(CHAIN_TEXT)
    assert s.sections["chain"] == {"L": 1000.0, "n": 4, "eta_m": 1.0}
    assert s.sections["link"] == {"L_att": 22.0, "p": 1.0, "eta_d": 1.0}
    assert isinstance(s.sections["chain"]["n"], int)
    assert s.default_command() == "chain"
    assert s.name == "scenario"


def test_empty_document():
    with pytest.raises(ScenarioError, match="missing required section"):
        parse_scenario("")
    with pytest.raises(ScenarioError, match="missing required section"):
        parse_scenario("# only a comment\n[scenario]\nname = x\n")


def test_range_violation_reports_line():
    with pytest.raises(ScenarioError, match="out of range") as info:
        parse_scenario("[link]\nL0 = 10\neta_d = 1.5\n")
    assert info.value.line == 3


@pytest.mark.parametrize("text, fragment, line", [
    ("[link]\nL0 = 1\nfoo = 2\n", "unknown key", 3),
    ("[links]\nL0 = 1\n", "unknown section", 1),
    ("[link]\nL0 1\n", "expected 'key = value'", 2),
    ("L0 = 1\n", "outside of any section", 1),
    ("[link]\nL0 = ten\n", "cannot read", 2),
    ("[chain]\nL = 10\nn = 1.5\n", "cannot read", 3),
    ("[link\nL0 = 1\n", "malformed section", 1),
    ("[link]\nL0 = 1\nL0 = 2\n", "duplicate key", 3),
    ("[link]\nL0 = 1\n[link]\n", "duplicate section", 3),
    ("[link]\nL0 = 1\ndlcz = maybe\n", "cannot read", 3),
    ("[chain]\nL = 100\n", "missing required key 'n'", 1),
    ("[phase]\nsigma = 1\nkind = white\n", "must be one of", 3),
])
def test_parse_errors(text, fragment, line):
    with pytest.raises(ScenarioError, match=fragment) as info:
        parse_scenario(text)
    assert info.value.line == line


def test_cross_section_rules():
    with pytest.raises(ScenarioError, match="needs"):
        parse_scenario("[block]\nN = 10\n")
    with pytest.raises(ScenarioError, match="not both"):
        parse_scenario("[block]\npreset = rb87-paper\n[rates]\nG = 1\nchi = 1\nk = 1\n")
    with pytest.raises(ScenarioError, match="sigma_t"):
        parse_scenario("[rates]\nG = 1\nchi = 1\nk = 1\n[pulse]\nkind = gaussian\n")


def test_sweep_axes():
    s = parse_scenario(CHAIN_TEXT + "[sweep]\ntarget = chain\naxis1 = chain.n 2 4 3\naxis2 = link.eta_d 0.5 1 2 log\n")
    assert s.sweep[0] == SweepAxis("chain", "n", 2.0, 4.0, 3, "linear")
    assert s.sweep[0].values() == [2, 3, 4]
    assert s.sweep[1].values() == pytest.approx([0.5, 1.0])
    assert s.default_command() == "chain"


@pytest.mark.parametrize("axis, fragment", [
    ("chain.bogus 1 2 3", "unknown sweep parameter"),
    ("chain.include_comm_delay 0 1 2", "not numeric"),
    ("link.eta_d 0.5 2 3", "out of range"),
    ("chain.n 1 2", "needs"),
    ("phase.sigma 0 1 2", "missing section"),
    ("chain.L 0 10 3 log", "log sweep"),
])
def test_bad_sweep(axis, fragment):
    with pytest.raises(ScenarioError, match=fragment):
        parse_scenario(CHAIN_TEXT + f"[sweep]\naxis1 = {axis}\n")


def test_empty_sweep_axis_allowed():
    s = parse_scenario(CHAIN_TEXT + "[sweep]\naxis1 = chain.n 2 4 0\n")
    assert s.sweep[0].values() == []


def test_round_trip_examples():
    texts = [
        CHAIN_TEXT,
        CHAIN_TEXT + "[sweep]\ntarget = compare-dlcz\naxis1 = chain.L 100 1000 4 log\n",
        "[scenario]\nname = c\n[rates]\nG = 0.5\nchi = 1\nk = 1\n[pulse]\nkind = square\nduration = 40\n"
        "[solver]\nmethod = rk4\nn_grid = 11\n",
        "[block]\npreset = rb87-paper\nN = 14920\n",
        "[phase]\nkind = gaussian_timing\nsigma = 1e-15\nwavelength = 8e-07\n",
    ]
    for text in texts:
        s = parse_scenario(text)
        assert parse_scenario(serialize_scenario(s)) == s


reals = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)
probs = st.floats(min_value=0, max_value=1)


@given(L=reals, n=st.integers(0, 10), eta_m=probs, eta_d=probs, p=probs, L_att=reals,
       comm=st.booleans(), name=st.from_regex(r"[a-z][a-z0-9-]{0,12}", fullmatch=True))
def test_round_trip_property(L, n, eta_m, eta_d, p, L_att, comm, name):
    s = Scenario(
        name,
        {"chain": {"L": L, "n": n, "eta_m": eta_m, "include_comm_delay": comm},
         "link": {"L_att": L_att, "eta_d": eta_d, "p": p}},
    )
    assert parse_scenario(serialize_scenario(s)) == s


def test_with_values_revalidates():
    s = parse_scenario(CHAIN_TEXT)
    assert s.with_values({("chain", "n"): 2}).sections["chain"]["n"] == 2
    with pytest.raises(ScenarioError):
        s.with_values({("link", "p"): 2.0})


def test_infinite_memory_round_trips():
    s = parse_scenario(CHAIN_TEXT.replace("eta_m = 1", "tau_mem = inf"))
    assert math.isinf(s.sections["chain"]["tau_mem"])
    assert parse_scenario(serialize_scenario(s)) == s

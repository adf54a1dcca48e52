from __future__ import annotations

import itertools
import json
import sys

import pytest

from conftest import fixture_tree
from rtlseek.sim import (
    FAIL,
    PASS,
    SIM_ERROR,
    ElaborationError,
    Reset,
    Step,
    VectorError,
    VectorSuite,
    elaborate,
    run,
    run_external,
    simulate,
    suite_from_json,
)
from rtlseek.verilog import parse_source

AND_GATE = "module g(input a, input b, output y); assign y = a & b; endmodule"


def settle_suite(rows):
    return VectorSuite(tuple(Step(i, o, settle_only=True) for i, o in rows))


# -- combinational ------------------------------------------------------------


def test_and_gate_truth_table_passes():
    rows = [({"a": a, "b": b}, {"y": a & b}) for a in (0, 1) for b in (0, 1)]
    assert simulate(parse_source(AND_GATE), settle_suite(rows)).verdict == PASS


def test_wrong_expectation_reports_first_failure():
    rows = [({"a": a, "b": b}, {"y": a & b}) for a in (0, 1) for b in (0, 1)]
    rows[2] = (rows[2][0], {"y": 1})
    out = simulate(parse_source(AND_GATE), settle_suite(rows))
    assert out.verdict == FAIL
    assert out.first_failure == {"step": 2, "signal": "y", "expected": 1, "actual": 0}


def test_combinational_design_has_no_clocked_processes():
    design = elaborate(parse_source(AND_GATE))
    assert len(design.clocked) == 0


@pytest.mark.parametrize(
    "src, fragment",
    [
        ("module m(output a); wire b; assign a = b; assign b = a; endmodule", "combinational cycle"),
        ("module m(input a, output y); m u(a, y); endmodule", "recursive"),
        ("module m(input a, output y); nothere u(a, y); endmodule", "unresolved module"),
        ("module m(input a, output y); assign y = a; assign y = ~a; endmodule", "multiple drivers"),
    ],
)
def test_elaboration_errors(src, fragment):
    with pytest.raises(ElaborationError) as info:
        elaborate(parse_source(src))
    assert fragment in str(info.value)


def test_elaboration_failure_is_a_sim_error_outcome():
    out = simulate(parse_source("module m(input a, output y); nothere u(a, y); endmodule"), settle_suite([]))
    assert out.verdict == SIM_ERROR


def test_settle_cap_overflow_is_sim_error():
    src = "module m(input a, output reg [3:0] y); always @(*) y = y + 4'd1; endmodule"
    out = simulate(parse_source(src), settle_suite([({"a": 1}, {})]))
    assert out.verdict == SIM_ERROR
    assert "settle" in out.message


def test_blocking_order_is_visible_within_one_block():
    src = """module m(input [3:0] x, output reg [3:0] a, output reg [3:0] b);
      always @(*) begin a = x; b = a; end
    endmodule"""
    rows = [({"x": v}, {"a": v, "b": v}) for v in range(16)]
    assert simulate(parse_source(src), settle_suite(rows)).verdict == PASS


def test_width_rules_truncate_and_extend():
    src = """module m(input [7:0] a, output [3:0] lo, output [11:0] wide, output [8:0] carry);
      assign lo = a;
      assign wide = a;
      assign carry = a + 8'd255;
    endmodule"""
    rows = [({"a": v}, {"lo": v & 15, "wide": v, "carry": v + 255}) for v in range(256)]
    assert simulate(parse_source(src), settle_suite(rows)).verdict == PASS


def test_operators_match_python_reference():
    src = """module ops(input [3:0] a, input [3:0] b, output [3:0] s, output [3:0] d, output [7:0] p,
                      output [3:0] sl, output [3:0] sr, output lt, output eq, output land, output rand,
                      output rxor, output [3:0] n, output [7:0] cat, output [7:0] rep, output [1:0] ps,
                      output bs, output [3:0] mux);
      assign s = a + b;
      assign d = a - b;
      assign p = a * b;
      assign sl = a << b[1:0];
      assign sr = a >> b[1:0];
      assign lt = a < b;
      assign eq = a == b;
      assign land = a && b;
      assign rand = &a;
      assign rxor = ^b;
      assign n = ~a;
      assign cat = {a, b};
      assign rep = {2{b}};
      assign ps = a[2:1];
      assign bs = b[3];
      assign mux = a > b ? a : b;
    endmodule"""
    rows = []
    for a, b in itertools.product(range(16), repeat=2):
        rows.append(({"a": a, "b": b}, {
            "s": (a + b) & 15, "d": (a - b) & 15, "p": a * b, "sl": (a << (b & 3)) & 15, "sr": a >> (b & 3),
            "lt": int(a < b), "eq": int(a == b), "land": int(bool(a) and bool(b)), "rand": int(a == 15),
            "rxor": bin(b).count("1") & 1, "n": ~a & 15, "cat": (a << 4) | b, "rep": (b << 4) | b,
            "ps": (a >> 1) & 3, "bs": b >> 3, "mux": max(a, b),
        }))
    out = simulate(parse_source(src), settle_suite(rows))
    assert out.verdict == PASS, out.first_failure


def test_ripple_adder_from_instances_exhaustive():
    tree = fixture_tree("seq", "ripple8.v")
    design = elaborate(tree, "ripple8")
    assert len(design.clocked) == 0
    steps = tuple(
        Step({"a": a, "b": b, "cin": c}, {"sum": (a + b + c) & 255, "cout": (a + b + c) >> 8}, True)
        for a in range(256) for b in range(256) for c in (0, 1)
    )
    assert run(design, VectorSuite(steps)).verdict == PASS


# -- sequential --------------------------------------------------------------------


def reference_counter(rows):
    count = 0
    out = []
    for en in rows:
        if en:
            count = (count + 1) & 15
        out.append(count)
    return out


def test_counter_matches_reference_with_wrap():
    enables = [1] * 17 + [0, 1, 1]
    expected = reference_counter(enables)
    suite = VectorSuite(
        tuple(Step({"en": e, "rst": 0}, {"count": c}) for e, c in zip(enables, expected)),
        clock="clk",
        reset=Reset("rst", 1, 2),
    )
    out = simulate(fixture_tree("seq", "counter4.v"), suite)
    assert out.verdict == PASS, out.first_failure
    assert 0 in expected[15:]  # wrapped


def test_shift_register_takes_two_edges():
    pattern = [1, 0, 0, 1, 1, 0, 1, 0, 0, 0]
    steps = []
    q1 = q2 = 0
    for d in pattern:
        q1, q2 = d, q1
        steps.append(Step({"d": d}, {"q1": q1, "q2": q2}))
    suite = VectorSuite(tuple(steps), clock="clk", reset=Reset("rst", 1, 1))
    assert simulate(fixture_tree("seq", "shift2.v"), suite).verdict == PASS
    # an injected 1 reaches q2 on exactly the second edge
    single = VectorSuite(
        (Step({"d": 1}, {"q1": 1, "q2": 0}), Step({"d": 0}, {"q1": 0, "q2": 1}), Step({"d": 0}, {"q2": 0})),
        clock="clk",
    )
    assert simulate(fixture_tree("seq", "shift2.v"), single).verdict == PASS


def test_negedge_process_fires_on_falling_clock():
    src = "module ff(input clk, input d, output reg q); always @(negedge clk) q <= d; endmodule"
    # the falling edge opens each step (with that step's inputs applied); the clock starts low,
    # so step 0 has none
    suite = VectorSuite((Step({"d": 1}, {"q": 0}), Step({"d": 1}, {"q": 1}), Step({"d": 0}, {"q": 0})), clock="clk")
    assert simulate(parse_source(src), suite).verdict == PASS


def test_trace_is_deterministic():
    suite = VectorSuite(tuple(Step({"en": 1}, {}) for _ in range(8)), clock="clk", reset=Reset("rst"))
    tree = fixture_tree("seq", "counter4.v")
    a = simulate(tree, suite, trace=True)
    b = simulate(tree, suite, trace=True)
    assert a.trace == b.trace and len(a.trace) == 8
    assert [s["count"] for s in a.trace] == list(range(1, 9))


# -- binding and vector files -----------------------------------------------------


@pytest.mark.parametrize(
    "suite",
    [
        settle_suite([({"nope": 1}, {})]),
        settle_suite([({"a": 2}, {})]),
        settle_suite([({"y": 1}, {})]),
        VectorSuite((Step({"a": 1}, {}),), clock="clk"),
    ],
)
def test_bind_failures_are_sim_errors(suite):
    assert simulate(parse_source(AND_GATE), suite).verdict == SIM_ERROR


def test_vector_json_round_trip_and_hex_values():
    doc = {"schema": "tv/1", "clock": "clk", "reset": {"signal": "rst", "active": 1, "cycles": 2},
           "steps": [{"in": {"a": "0x1F"}, "out": {"y": 3}}, {"in": {}, "out": {}, "settle": True}]}
    suite = suite_from_json(doc)
    assert suite.steps[0].inputs["a"] == 31
    assert suite.steps[1].settle_only
    assert suite_from_json(json.loads(json.dumps(suite.to_json()))) == suite


@pytest.mark.parametrize(
    "doc",
    [
        {"schema": "tv/2", "steps": []},
        {"schema": "tv/1", "steps": [{"in": {"a": True}}]},
        {"schema": "tv/1", "steps": [{"in": {"a": -1}}]},
        {"schema": "tv/1", "steps": [{"in": {"a": "zz"}}]},
    ],
)
def test_bad_vector_files_are_rejected(doc):
    with pytest.raises(VectorError):
        suite_from_json(doc)


# -- external hook -----------------------------------------------------------------


def test_external_true_passes():
    assert run_external("module m(); endmodule", "true {design}").verdict == PASS


def test_external_false_fails():
    assert run_external("module m(); endmodule", "false {design}").verdict == FAIL


def test_external_sees_the_design_and_output_is_captured():
    out = run_external("module m(); endmodule", "cat {design}")
    assert out.verdict == PASS and "module m" in out.stdout


def test_external_missing_command_is_sim_error():
    assert run_external("", "definitely-not-a-simulator-xyz {design}").verdict == SIM_ERROR


def test_external_timeout_is_sim_error():
    cmd = f"{sys.executable} -c 'import time; time.sleep(5)' {{design}}"
    out = run_external("", cmd, timeout=0.3)
    assert out.verdict == SIM_ERROR and "timed out" in out.message


def test_external_template_needs_placeholder():
    with pytest.raises(ValueError):
        run_external("", "true")

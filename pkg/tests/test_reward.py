from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, fixture_text
from rtlseek.reward import (
    HistoryWindow,
    RewardConfig,
    Verification,
    extract_modules,
    parse_response,
    score,
    score_context,
    score_diversity,
    score_function,
    score_syntax,
)
from rtlseek.sim import load_suite

AND_SUITE = load_suite(FIXTURES / "vectors" / "and2.json")
ADDER_SUITE = load_suite(FIXTURES / "vectors" / "adder4.json")
STAGE3 = RewardConfig(stage=3, verification=Verification(suite=AND_SUITE))

AND_OK = "module and2(input a, input b, output y); assign y = a & b; endmodule"
AND_DM = "module and2(input a, input b, output y); assign y = ~(~a | ~b); endmodule"
AND_RENAMED = "module conj(input a, input b, output y); wire t; assign t = a & b; assign y = t; endmodule"
OR_WRONG = "module and2(input a, input b, output y); assign y = a | b; endmodule"
XOR_WRONG = "module and2(input a, input b, output y); assign y = a ^ b; endmodule"
BROKEN = "module and2(input a, input b, output y); assign y = a & ; endmodule"


def wrap(candidates, think="plan"):
    return f"<think>{think}</think><total_design>" + "\n".join(candidates) + "</total_design>"


# -- parse_response ------------------------------------------------------------


def test_tags_and_single_candidate():
    r = parse_response("<think>plan</think><total_design>module m(); endmodule</total_design>")
    assert r.think == "plan"
    assert r.candidates == ("module m(); endmodule",)
    assert r.well_formatted


def test_untagged_text_falls_back_to_whole_response():
    r = parse_response(fixture_text("responses", "no_tags.txt"))
    assert r.think_span is None and r.design_span is None
    assert len(r.candidates) == 2
    assert not r.well_formatted


def test_endmodule_inside_string_is_not_a_split_point():
    src = 'module a(); initial $display("endmodule module"); endmodule\nmodule b(); endmodule'
    assert extract_modules(src) == ['module a(); initial $display("endmodule module"); endmodule',
                                    "module b(); endmodule"]


def test_module_keyword_in_comments_is_ignored():
    src = "// module fake\n/* endmodule */ module a(); endmodule // endmodule"
    assert extract_modules(src) == ["module a(); endmodule"]


def test_identifiers_containing_keyword_do_not_count():
    src = "module my_module_x(); wire endmodule_flag; endmodule"
    assert extract_modules(src) == [src]


def test_nested_module_keywords_stay_in_one_block():
    src = "module a(); module b(); endmodule endmodule module c(); endmodule"
    assert extract_modules(src) == ["module a(); module b(); endmodule endmodule", "module c(); endmodule"]


def test_unbalanced_blocks_are_dropped():
    assert extract_modules("endmodule module a(); endmodule module b(") == ["module a(); endmodule"]


def test_design_before_think_is_not_well_formatted():
    r = parse_response("<total_design>module m(); endmodule</total_design><think>late</think>")
    assert r.think == "late" and r.candidates
    assert not r.well_formatted


def test_design_tags_inside_think_are_skipped():
    raw = "<think>maybe <total_design>x</total_design></think><total_design>module m(); endmodule</total_design>"
    r = parse_response(raw)
    assert r.design.startswith("module m")
    assert r.well_formatted
    t0, t1 = r.think_span
    d0, d1 = r.design_span
    assert t1 <= d0 or d1 <= t0


def test_no_candidates_is_fine():
    assert parse_response("just words").candidates == ()


# -- component scores -------------------------------------------------------------


def test_syntax_any_candidate():
    assert score_syntax([AND_OK, BROKEN])[0] == 1
    assert score_syntax([])[0] == 0
    assert score_syntax([BROKEN, BROKEN])[0] == 0


def test_function_any_candidate_passes():
    right = fixture_text("adders", "behavioral.v")
    wrong = right.replace("a + b + cin", "a - b + cin")
    _, syn = score_syntax([right, wrong])
    r_func, outcomes = score_function([right, wrong], syn, Verification(suite=ADDER_SUITE))
    assert r_func == 1
    assert [o.verdict for o in outcomes] == ["pass", "fail"]


def test_function_without_verification_is_all_skipped():
    _, syn = score_syntax([AND_OK, OR_WRONG])
    r_func, outcomes = score_function([AND_OK, OR_WRONG], syn, None)
    assert r_func == 0 and outcomes == [None, None]


def test_function_skips_invalid_candidates():
    _, syn = score_syntax([BROKEN])
    assert score_function([BROKEN], syn, Verification(suite=AND_SUITE)) == (0, [None])


def test_sim_error_counts_as_failure_without_aborting():
    bad_port = "module and2(input p, input q, output r); assign r = p & q; endmodule"
    cands = [bad_port, AND_OK]
    _, syn = score_syntax(cands)
    r_func, outcomes = score_function(cands, syn, Verification(suite=AND_SUITE))
    assert r_func == 1
    assert [o.verdict for o in outcomes] == ["sim_error", "pass"]


def test_external_command_binding():
    _, syn = score_syntax([AND_OK])
    r_func, outcomes = score_function([AND_OK], syn, Verification(command="grep -q 'a & b' {design}"))
    assert r_func == 1 and outcomes[0].passed
    r_func, _ = score_function([AND_OK], syn, Verification(command="grep -q 'a | b' {design}"))
    assert r_func == 0


def test_candidate_can_instantiate_a_sibling():
    cands = fixture_text("bench", "responses", "adder4", "sample_2.txt")
    resp = parse_response(cands)
    _, syn = score_syntax(resp.candidates)
    r_func, outcomes = score_function(resp.candidates, syn, Verification(suite=ADDER_SUITE))
    assert r_func == 1
    assert [o.verdict for o in outcomes] == ["sim_error", "pass"]


def diversity_of(cands, suite=AND_SUITE):
    _, syn = score_syntax(cands)
    _, outcomes = score_function(cands, syn, Verification(suite=suite))
    return score_diversity(syn, outcomes)


def test_diversity_three_classes_two_passing():
    r_div, n_c, n_s, ids = diversity_of([AND_OK, AND_DM, OR_WRONG])
    assert (r_div, n_c, n_s) == (5, 3, 2)
    assert ids == [0, 1, 2]


def test_diversity_renamed_quadruple():
    # one design under four spellings; only the first keeps the suite's port names
    cands = [
        AND_OK,
        "module g1(input p, input q, output r); assign r = p & q; endmodule",
        "module g2(input u, input v, output w);\n  // same gate\n  assign w = u & v;\nendmodule",
        "module g3(input i0, input i1, output o); assign o = i0 & i1; endmodule",
    ]
    r_div, n_c, n_s, _ = diversity_of(cands)
    assert (n_c, n_s, r_div) == (1, 1, 2)


def test_diversity_with_nothing_valid():
    assert diversity_of([BROKEN])[:3] == (0, 0, 0)


# -- context reward -----------------------------------------------------------------


def response_with_think(length, tags=True):
    think = "x" * length
    return parse_response(wrap([AND_OK], think) if tags else think)


def test_context_first_branch():
    h = HistoryWindow([1000, 1000])
    r_cont, l_t, i_f, length = score_context(response_with_think(1000), h, 1)
    assert (r_cont, l_t, i_f, length) == (1.0, 1.0, 1, 1000)
    assert h.lengths == (1000, 1000, 1000)


def test_context_second_branch():
    r_cont, l_t, _, _ = score_context(response_with_think(1000), HistoryWindow([1000]), 0)
    assert (r_cont, l_t) == (0.0, 1.0)


def test_context_missing_tags():
    h = HistoryWindow([10])
    resp = parse_response("x" * 20)
    r_cont, l_t, i_f, length = score_context(resp, h, 1)
    assert i_f == -1 and length == 20 and l_t == 0.5
    assert r_cont == 0.5 * 0.5 - 0.5


def test_context_cold_start_and_partial_history():
    assert score_context(response_with_think(7), HistoryWindow(), 1)[1] == 1.0
    assert score_context(response_with_think(10), HistoryWindow([10, 30]), 1)[1] == 2.0


def test_context_empty_think_uses_length_one():
    h = HistoryWindow([2])
    _, l_t, _, length = score_context(response_with_think(0), h, 1)
    assert length == 1 and l_t == 2.0
    assert h.lengths[-1] == 1


def test_context_ratio_is_clamped():
    assert score_context(response_with_think(1), HistoryWindow([1000]), 1)[1] == 4.0


def test_history_keeps_four_most_recent(tmp_path):
    h = HistoryWindow()
    for v in range(1, 7):
        h.append(v)
    assert h.lengths == (3, 4, 5, 6)
    path = tmp_path / "hist.jsonl"
    for v in range(1, 7):
        HistoryWindow.append_to_file(path, v)
    assert HistoryWindow.load(path).lengths == (3, 4, 5, 6)
    assert HistoryWindow.load(tmp_path / "absent.jsonl").lengths == ()
    path.write_text("1\n-2\n")
    with pytest.raises(ValueError):
        HistoryWindow.load(path)


# -- composition ----------------------------------------------------------------


def test_full_score_eight():
    raw = fixture_text("responses", "three_classes_two_pass.txt")
    think_len = len(parse_response(raw).think)
    b = score(raw, STAGE3, HistoryWindow([think_len, think_len]))
    got = (b.r_syn, b.r_func, b.n_c, b.n_s, b.r_div, b.i_s, b.i_f, b.l_t, b.r_cont, b.r_total)
    assert got == (1, 1, 3, 2, 5, 1, 1, 1.0, 1.0, 8.0)


def test_empty_response():
    b = score("", STAGE3, HistoryWindow())
    assert (b.r_syn, b.r_func, b.r_div, b.i_s, b.i_f, b.l_t) == (0, 0, 0, 0, -1, 1.0)
    assert b.r_total == -0.5 * b.l_t - 0.5 == -1.0


def test_stage_two_three_classes_sits_on_threshold():
    raw = fixture_text("responses", "stage2_three_classes.txt")
    b = score(raw, RewardConfig(stage=2, verification=Verification(suite=AND_SUITE)), HistoryWindow())
    assert (b.r_syn, b.r_func, b.r_div, b.i_s) == (1, 0, 3, 0)
    assert b.r_cont == -0.5 * b.l_t + 0.5 * b.i_f == 0.0
    assert b.r_total == 1 + 0 + 3 + b.r_cont
    assert all(c.sim == "skipped" for c in b.per_candidate)


@pytest.mark.parametrize("name, total, i_s", [("sum_four.txt", 4, 0), ("sum_five.txt", 5, 1)])
def test_threshold_is_strict(name, total, i_s):
    b = score(fixture_text("responses", name), STAGE3, HistoryWindow())
    assert b.r_syn + b.r_func + b.r_div == total
    assert b.i_s == i_s


def test_weights_scale_components_and_threshold():
    raw = fixture_text("responses", "sum_four.txt")
    cfg = RewardConfig(stage=3, verification=Verification(suite=AND_SUITE),
                       weights={"syn": 1.0, "func": 1.0, "div": 2.0, "cont": 0.5})
    b = score(raw, cfg, HistoryWindow())
    assert b.i_s == 1  # 1 + 1 + 2*2 = 6 > 4
    assert b.r_total == 1 + 1 + 2.0 * b.r_div + 0.5 * b.r_cont


def test_schedule_hook_overrides_static_weights():
    raw = fixture_text("responses", "sum_five.txt")
    cfg = RewardConfig(stage=3, verification=Verification(suite=AND_SUITE), schedule=lambda step: {"div": step / 10})
    early = score(raw, cfg, HistoryWindow(), step=0)
    assert early.weights["div"] == 0.0 and early.i_s == 0
    late = score(raw, cfg, HistoryWindow(), step=10)
    assert late.weights["div"] == 1.0 and late.i_s == 1


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        RewardConfig(stage=1)
    with pytest.raises(ValueError):
        RewardConfig(weights={"style": 1.0})
    with pytest.raises(ValueError):
        Verification()


def test_json_fields_are_exact():
    b = score(fixture_text("responses", "three_classes_two_pass.txt"), STAGE3, HistoryWindow())
    doc = json.loads(json.dumps(b.to_json()))
    assert doc["schema"] == "reward/1"
    for key in ("r_syn", "r_func", "r_div", "r_cont", "r_total", "n_c", "n_s", "i_s", "i_f", "l_t", "per_candidate"):
        assert key in doc
    assert doc["per_candidate"][0] == {"syntax": "pass", "diagnostic": None, "sim": "pass", "sim_message": "",
                                       "class_id": 0}
    assert doc["per_candidate"][2]["sim"] == "fail"


# -- properties --------------------------------------------------------------------

POOL = [AND_OK, AND_DM, AND_RENAMED, OR_WRONG, XOR_WRONG, BROKEN]


def check_invariants(b, n_candidates):
    assert b.r_total == b.r_syn + b.r_func + b.r_div + b.r_cont
    assert b.r_div == b.n_c + b.n_s
    assert b.n_s <= b.n_c <= n_candidates
    assert b.i_s == int(b.r_syn + b.r_func + b.r_div > 4)
    assert 0.0 <= b.l_t <= 4.0
    assert b.i_f in (1, -1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(POOL), max_size=6), st.randoms(use_true_random=False),
       st.lists(st.integers(1, 400), max_size=4), st.integers(0, 300))
def test_reordering_invariance_and_invariants(cands, rng, hist, think_len):
    raw = wrap(cands, "t" * think_len)
    b = score(raw, STAGE3, HistoryWindow(hist))
    check_invariants(b, len(cands))
    shuffled = list(cands)
    rng.shuffle(shuffled)
    b2 = score(wrap(shuffled, "t" * think_len), STAGE3, HistoryWindow(hist))
    assert b2.r_total == b.r_total
    assert (b2.n_c, b2.n_s) == (b.n_c, b.n_s)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(POOL), min_size=1, max_size=5))
def test_renamed_duplicate_never_raises_diversity(cands):
    base = score(wrap(cands), STAGE3, HistoryWindow())
    copy = cands[0].replace("module and2", "module dup_copy").replace("module conj", "module dup_copy")
    more = score(wrap(cands + [copy]), STAGE3, HistoryWindow())
    assert more.r_div == base.r_div


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(POOL), max_size=5))
def test_new_distinct_candidate_adds_one_class(cands):
    novel = "module nand2(input a, input b, output y); assign y = ~(a & b) & (a | ~a); endmodule"
    base = score(wrap(cands), STAGE3, HistoryWindow())
    more = score(wrap(cands + [novel]), STAGE3, HistoryWindow())
    assert more.n_c == base.n_c + 1
    assert more.r_syn >= base.r_syn and more.r_func >= base.r_func and more.r_div >= base.r_div


def test_score_is_deterministic():
    raw = fixture_text("responses", "three_classes_two_pass.txt")
    a = score(raw, STAGE3, HistoryWindow([50, 60]))
    b = score(raw, STAGE3, HistoryWindow([50, 60]))
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())

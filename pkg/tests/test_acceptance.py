"""One test per acceptance criterion. Each prints a single PASS/FAIL line."""

from __future__ import annotations

import contextlib
import itertools
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from conftest import FIXTURES, equiv_pairs, fixture_text, fixture_tree
from rtlseek import canon
from rtlseek.grpo import (
    GroupBatch,
    GrpoConfig,
    ToyPolicy,
    advantages,
    diversity,
    expected_distinct,
    gradient,
    log_softmax,
    near_degenerate_logits,
    policy_objective,
    single_best,
    train_demo,
)
from rtlseek.metrics import METRICS, evaluate, load_manifest, pass_at_k
from rtlseek.reward import HistoryWindow, RewardConfig, Verification, parse_response, score
from rtlseek.sim import PASS, Reset, Step, VectorSuite, load_suite, simulate
from rtlseek.verilog import parse_source


@contextlib.contextmanager
def criterion(number, label):
    ok = False
    try:
        yield
        ok = True
    finally:
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {label}")


def test_criterion_1_reward_exactness():
    with criterion(1, "reward breakdown 1/1/3/2/5/1/1.0/1.0/8.0 in under 1 s"):
        start = time.perf_counter()
        raw = fixture_text("responses", "three_classes_two_pass.txt")
        length = len(parse_response(raw).think)
        cfg = RewardConfig(stage=3, verification=Verification(suite=load_suite(FIXTURES / "vectors" / "and2.json")))
        b = score(raw, cfg, HistoryWindow([length, length, length]))
        elapsed = time.perf_counter() - start
        got = (b.r_syn, b.r_func, b.n_c, b.n_s, b.r_div, b.i_s, b.l_t, b.r_cont, b.r_total)
        assert got == (1, 1, 3, 2, 5, 1, 1.0, 1.0, 8.0)
        assert elapsed < 1.0


def test_criterion_2_threshold_boundary():
    with criterion(2, "component sum 4 gives i_s=0, sum 5 gives i_s=1"):
        cfg = RewardConfig(stage=3, verification=Verification(suite=load_suite(FIXTURES / "vectors" / "and2.json")))
        four = score(fixture_text("responses", "sum_four.txt"), cfg, HistoryWindow())
        five = score(fixture_text("responses", "sum_five.txt"), cfg, HistoryWindow())
        assert four.r_syn + four.r_func + four.r_div == 4 and four.i_s == 0
        assert five.r_syn + five.r_func + five.r_div == 5 and five.i_s == 1


def test_criterion_3_equivalence_suite():
    with criterion(3, "20/20 hand-authored equivalence pairs classified correctly"):
        right = 0
        superficial, substantive = equiv_pairs("superficial"), equiv_pairs("substantive")
        assert len(superficial) == len(substantive) == 10
        for _, a, b in superficial:
            right += canon.structurally_equivalent(parse_source(a.read_text()), parse_source(b.read_text()))
        for _, a, b in substantive:
            right += not canon.structurally_equivalent(parse_source(a.read_text()), parse_source(b.read_text()))
        assert right == 20


COMBINATIONAL = {
    "and2": ("module and2(input a, input b, output y); assign y = a & b; endmodule",
             {"a": 1, "b": 1}, lambda v: {"y": v["a"] & v["b"]}),
    "mux4": ("""module mux4(input [3:0] d, input [1:0] s, output y);
                  reg r; always @(*) case (s) 2'd0: r = d[0]; 2'd1: r = d[1]; 2'd2: r = d[2]; default: r = d[3]; endcase
                  assign y = r; endmodule""",
             {"d": 4, "s": 2}, lambda v: {"y": (v["d"] >> v["s"]) & 1}),
    "alu": ("""module alu(input [3:0] a, input [3:0] b, input [1:0] op, output reg [3:0] y, output z);
                 always @(*) begin
                   if (op == 2'd0) y = a + b; else if (op == 2'd1) y = a - b;
                   else if (op == 2'd2) y = a & b; else y = a ^ b;
                 end
                 assign z = y == 4'd0; endmodule""",
            {"a": 4, "b": 4, "op": 2},
            lambda v: (lambda y: {"y": y, "z": int(y == 0)})(
                [(v["a"] + v["b"]) & 15, (v["a"] - v["b"]) & 15, v["a"] & v["b"], v["a"] ^ v["b"]][v["op"]])),
}


def adder_oracle(v):
    total = v["a"] + v["b"] + v["cin"]
    return {"sum": total & 15, "cout": total >> 4}


def exhaustive(widths, oracle):
    names = list(widths)
    steps = []
    for values in itertools.product(*(range(1 << widths[n]) for n in names)):
        inputs = dict(zip(names, values))
        steps.append(Step(inputs, oracle(inputs), settle_only=True))
    return VectorSuite(tuple(steps))


def test_criterion_4_simulator_oracle():
    with criterion(4, "exhaustive truth tables plus 50-step counter and shift register in under 10 s"):
        start = time.perf_counter()
        designs = [(parse_source(src), widths, oracle) for src, widths, oracle in COMBINATIONAL.values()]
        adder_widths = {"a": 4, "b": 4, "cin": 1}
        for name in ("behavioral", "conditional_sum", "gate_level", "carry_lookahead"):
            designs.append((fixture_tree("adders", f"{name}.v"), adder_widths, adder_oracle))
        for tree, widths, oracle in designs:
            assert sum(widths.values()) <= 10
            out = simulate(tree, exhaustive(widths, oracle))
            assert out.verdict == PASS, out.first_failure

        rng = random.Random(4)
        enables = [rng.randint(0, 1) for _ in range(50)]
        resets = [int(rng.random() < 0.08) for _ in range(50)]
        count, steps = 0, []
        for en, rst in zip(enables, resets):
            count = 0 if rst else (count + en) & 15
            steps.append(Step({"en": en, "rst": rst}, {"count": count}))
        out = simulate(fixture_tree("seq", "counter4.v"), VectorSuite(tuple(steps), clock="clk", reset=Reset("rst", 1, 1)))
        assert out.verdict == PASS, out.first_failure

        q1 = q2 = 0
        steps = []
        for _ in range(50):
            d = rng.randint(0, 1)
            q1, q2 = d, q1
            steps.append(Step({"d": d}, {"q1": q1, "q2": q2}))
        out = simulate(fixture_tree("seq", "shift2.v"), VectorSuite(tuple(steps), clock="clk", reset=Reset("rst", 1, 1)))
        assert out.verdict == PASS, out.first_failure
        assert time.perf_counter() - start < 10.0


def test_criterion_5_gradient_check():
    with criterion(5, "analytic vs finite-difference gradient, 100 configs, rel err < 1e-5, under 5 s"):
        start = time.perf_counter()
        rng = np.random.default_rng(5)
        worst, checked = 0.0, 0
        while checked < 100:
            vocab, group = int(rng.integers(3, 9)), int(rng.integers(2, 9))
            policy = ToyPolicy(rng.normal(size=vocab), rng.normal(size=vocab))
            outputs = rng.integers(0, vocab, group)
            lp_old = log_softmax(policy.logits + rng.normal(scale=0.2, size=vocab))[outputs]
            cfg = GrpoConfig(group, float(rng.uniform(0.05, 0.5)), float(rng.uniform(0, 1)))
            batch = GroupBatch(outputs, np.zeros(group), advantages(rng.normal(size=group)), lp_old, lp_old,
                               policy.ref_logprob(outputs))
            ratio = np.exp(policy.logprob(outputs) - lp_old)
            if np.any(np.abs(np.abs(ratio - 1) - cfg.clip_eps) < 1e-3):
                continue
            numeric = np.zeros(vocab)
            for k in range(vocab):
                h = np.zeros(vocab)
                h[k] = 1e-6
                up = policy_objective(ToyPolicy(policy.logits + h, policy.ref_logits), batch, cfg)
                down = policy_objective(ToyPolicy(policy.logits - h, policy.ref_logits), batch, cfg)
                numeric[k] = (up - down) / 2e-6
            analytic = gradient(policy, batch, cfg)
            err = np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), 1e-8)
            worst = max(worst, float(err))
            checked += 1
        print(f"\nworst relative error {worst:.2e}")
        assert worst < 1e-5
        assert time.perf_counter() - start < 5.0


def test_criterion_6_grpo_dynamics():
    with criterion(6, "single-best p>0.9; diversity entropy rises in >=9/10 seeds and reward trends up"):
        start = time.perf_counter()
        policy = ToyPolicy(np.zeros(8))
        train_demo(single_best(3), GrpoConfig(group_size=8), 500, policy, lr=0.1, seed=0)
        assert policy.probs()[3] > 0.9

        valid = [True] * 6 + [False] * 2
        rises, curves = 0, []
        for seed in range(10):
            policy = ToyPolicy(near_degenerate_logits(8))
            curve = train_demo(diversity(valid), GrpoConfig(group_size=8), 500, policy, lr=0.1, seed=seed)
            rises += curve.entropy[-1] > curve.entropy[0]
            curves.append(curve.mean_reward)
        mean_curve = np.mean(curves, axis=0)
        quarter = len(mean_curve) // 4
        first, last = mean_curve[:quarter].mean(), mean_curve[-quarter:].mean()
        print(f"\nentropy rose in {rises}/10 seeds; reward quartiles {first:.3f} -> {last:.3f}; "
              f"final expected distinct {expected_distinct(policy.probs(), valid, 8):.2f}")
        assert rises >= 9
        assert last > first
        assert time.perf_counter() - start < 60.0


def test_criterion_7_pass_at_k_oracle():
    with criterion(7, "pass@k equals subset enumeration for all n <= 10"):
        for n in range(1, 11):
            for c in range(n + 1):
                for k in range(1, n + 1):
                    subsets = list(itertools.combinations(range(n), k))
                    exact = Fraction(sum(any(i < c for i in s) for s in subsets), len(subsets))
                    assert abs(pass_at_k(n, c, k) - float(exact)) < 1e-12


def test_criterion_8_metrics_consistency():
    with criterion(8, "OPMO >= OPOO, fun <= syn <= gen, success_rate = fun/gen on the bench fixture"):
        report = evaluate(load_manifest(FIXTURES / "bench" / "bench.json"), FIXTURES / "bench" / "responses")
        assert report.complete
        for item in report.items + [None]:
            m = report.aggregate() if item is None else item.metrics
            for name in METRICS:
                if "opoo" in name:
                    assert m[name.replace("opoo", "opmo")] >= m[name]
            assert m["fun_num"] <= m["syn_num"] <= m["gen_num"]
            if item is not None:
                gen = sum(v.generated for v in item.verdicts)
                fun = sum(sum(v.function) for v in item.verdicts)
                assert m["success_rate"] == fun / gen


def cli(*argv):
    proc = subprocess.run([sys.executable, "-m", "rtlseek.cli", *map(str, argv)], capture_output=True)
    return proc.returncode, proc.stdout


def test_criterion_9_end_to_end_determinism():
    with criterion(9, "score and eval emit byte-identical JSON over 3 runs"):
        score_cmd = ("score", FIXTURES / "responses" / "three_classes_two_pass.txt",
                     "--vectors", FIXTURES / "vectors" / "and2.json")
        eval_cmd = ("eval", "--manifest", FIXTURES / "bench" / "bench.json",
                    "--responses", FIXTURES / "bench" / "responses")
        for cmd in (score_cmd, eval_cmd):
            runs = [cli(*cmd) for _ in range(3)]
            assert all(code == 0 for code, _ in runs)
            assert runs[0][1] and runs[0][1] == runs[1][1] == runs[2][1]

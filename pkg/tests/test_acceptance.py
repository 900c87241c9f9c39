"""Acceptance suite: one test per criterion, each at its stated tolerance,
printing one PASS line per criterion (visible with -s or -rA)."""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from teachmind.domain import (
    DomainConfig,
    NoiseConfig,
    Scenario,
    build_student_ipomdp,
    game_spaces,
    level0_teacher_policy,
    scenario_decision_state,
    scenario_library,
)
from teachmind.episodes import (
    compute_metrics,
    questions_before_threshold,
    run_episode,
    stream,
)
from teachmind.errors import ParticleCollapse, ZeroNormalizer
from teachmind.formats import (
    domain_config_from_json,
    domain_config_to_json,
    interactive_beliefs_equal,
    joint_model_from_json,
    joint_model_to_json,
    joint_models_equal,
    metrics_from_csv,
    metrics_to_csv,
    model_from_json,
    model_to_json,
    pomdp_models_equal,
    scenario_from_json,
    scenario_to_json,
    trace_from_jsonl,
    trace_to_jsonl,
)
from teachmind.micro import random_belief, random_pomdp, two_door_model, two_door_prior
from teachmind.nested import (
    BranchConfig,
    expected_partner_physical_belief,
    interactive_belief_update,
    physical_marginal,
    solve_level_k,
    teacher_action_distribution,
)
from teachmind.oracle import brute_force_expectimax, enumerate_update
from teachmind.particles import pf_init, pf_marginal, pf_update
from teachmind.planning import PlanConfig, expected_utility, select_action
from teachmind.pomdp import Belief, belief_update, entropy_bits, utility_eval

from conftest import golden_scenario, noiseless_config

GOLDEN_DIR = Path(__file__).parent / "golden"
EXACT_LOSSLESS = BranchConfig(prune_epsilon=0.0, merge_l1=0.0)
# Merging at 1e-12 never moves the physical marginal (merges are
# weight-preserving); it only contains branch growth over long drives.
EXACT_MERGED = BranchConfig(prune_epsilon=0.0, merge_l1=1e-12)


def _passed(name: str) -> None:
    print(f"ACCEPTANCE: {name} PASS")


def test_belief_update_oracle_equivalence():
    """500 random POMDPs: belief_update vs independent joint enumeration,
    max abs error <= 1e-12, under 10 s."""
    started = time.time()
    worst = 0.0
    rng = np.random.default_rng(1001)
    for _ in range(500):
        n_s = int(rng.integers(2, 6))
        n_a = int(rng.integers(1, 4))
        n_o = int(rng.integers(2, 4))
        model = random_pomdp(rng, n_s, n_a, n_o)
        b = random_belief(rng, n_s)
        a = int(rng.integers(n_a))
        o = int(rng.integers(n_o))
        joint = [0.0] * n_s
        for s in range(n_s):
            for sp in range(n_s):
                joint[sp] += (
                    b.probs[s] * model.transition[s, a, sp] * model.observation_model[sp, o]
                )
        total = sum(joint)
        if total <= 0.0:
            with pytest.raises(ZeroNormalizer):
                belief_update(model, b, a, o)
            continue
        expected = np.array(joint) / total
        got = belief_update(model, b, a, o).probs
        worst = max(worst, float(np.abs(got - expected).max()))
    elapsed = time.time() - started
    assert worst <= 1e-12, f"worst deviation {worst:.2e}"
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    _passed(f"belief-update oracle equivalence (worst {worst:.1e}, {elapsed:.1f}s)")


def test_planner_oracle_agreement():
    """100 random models at horizons 1..3: uncapped q-values equal the
    brute-force oracle within 1e-12; the two-door domain picks the accurate
    listening action at every horizon; under 60 s."""
    started = time.time()
    rng = np.random.default_rng(1002)
    worst = 0.0
    for index in range(100):
        n_s = int(rng.integers(2, 5))
        n_a = int(rng.integers(1, 4))
        n_o = int(rng.integers(2, 4))
        kind = "expected_state_reward" if index % 3 == 0 else "neg_entropy"
        model = random_pomdp(rng, n_s, n_a, n_o, utility_kind=kind)
        b = random_belief(rng, n_s)
        horizon = 1 + index % 3
        oracle_q = brute_force_expectimax(model, b, horizon)
        planner_q = select_action(model, b, PlanConfig(horizon=horizon)).q_values
        for action, value in oracle_q.items():
            worst = max(worst, abs(planner_q[action] - value))
    assert worst <= 1e-12, f"worst q deviation {worst:.2e}"

    door = two_door_model()
    prior = two_door_prior()
    for horizon in (1, 2, 3, 4, 5):
        chosen = select_action(door, prior, PlanConfig(horizon=horizon)).chosen_action
        assert chosen == "listen-good", f"horizon {horizon} chose {chosen}"
    elapsed = time.time() - started
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    _passed(f"planner-oracle agreement (worst {worst:.1e}, {elapsed:.1f}s)")


def test_terminal_and_zero_discount_structure():
    """Horizon-0 expected utility equals R(b) exactly; zero discount gives
    all-equal q-values and the lowest-index action on every test model."""
    rng = np.random.default_rng(1003)
    for _ in range(50):
        n_s = int(rng.integers(2, 6))
        n_a = int(rng.integers(1, 4))
        n_o = int(rng.integers(2, 4))
        model = random_pomdp(rng, n_s, n_a, n_o)
        b = random_belief(rng, n_s)
        cfg = PlanConfig(horizon=3)
        assert expected_utility(model, b, cfg, 0) == utility_eval(model.utility, b)
        result = select_action(model, b, PlanConfig(horizon=3, discount_override=0.0))
        values = list(result.q_values.values())
        assert max(values) == min(values)
        assert result.chosen_action == model.actions[0]
    _passed("terminal/zero-discount structure checks")


def test_expected_entropy_contraction():
    """No counterexample to the expected-entropy contraction on identity-
    transition models across the random suite."""
    rng = np.random.default_rng(1004)
    for _ in range(200):
        n_s = int(rng.integers(2, 6))
        n_a = int(rng.integers(1, 4))
        n_o = int(rng.integers(2, 4))
        model = random_pomdp(rng, n_s, n_a, n_o, identity_transition=True)
        b = random_belief(rng, n_s)
        prior_entropy = entropy_bits(b)
        for a in range(n_a):
            predicted = b.probs @ model.transition[:, a, :]
            obs_probs = predicted @ model.observation_model
            expected = 0.0
            for o in range(n_o):
                if obs_probs[o] <= 0.0:
                    continue
                expected += obs_probs[o] * entropy_bits(belief_update(model, b, a, o))
            assert expected <= prior_entropy + 1e-9
    _passed("expected-entropy contraction (identity transitions)")


def test_nested_update_enumeration_equivalence():
    """Objects game at nesting depth 2 (level-1 teacher): the engine's nested
    update matches the full (a_j, s', o_j) enumeration within 1e-9 over 10
    random steps x 20 seeds, under 120 s."""
    started = time.time()
    cfg = DomainConfig(
        teacher_level=1,
        include_object_questions=False,
        include_clarify=False,
        noise=NoiseConfig(0.15, 0.05, 0.05, 0.02, 0.1),
        horizon=10,
    )
    jm, ib0 = build_student_ipomdp(cfg)
    sp = game_spaces(cfg)
    assert len(jm.states) <= 32
    student_moves = ("listen", "ask_color", "ask_shape")
    worst = 0.0
    for seed in range(20):
        ib = ib0
        theta = int(stream(seed, 0, 0).integers(cfg.n_hypotheses))
        state = sp.state_index(theta, 0, "none")
        from teachmind.domain import initial_teacher_model

        sim_teacher = initial_teacher_model(cfg, sp, state)
        for step in range(10):
            _, turn, _ = sp.split_state(state)
            if turn == 0:
                dist = teacher_action_distribution(jm, sim_teacher, state, EXACT_MERGED)
                aj = int(stream(seed, step, 1).choice(len(dist), p=dist / dist.sum()))
                ai = sp.student_actions.index("wait")
            else:
                ai = sp.student_actions.index(
                    student_moves[int(stream(seed, step, 1).integers(len(student_moves)))]
                )
                aj = sp.teacher_actions.index("wait")
            row = jm.transition[state, ai, aj]
            state_next = int(stream(seed, step, 2).choice(len(row), p=row))
            obs_row = jm.student_obs[state_next, aj]
            oi = int(stream(seed, step, 3).choice(len(obs_row), p=obs_row))
            oj_row = jm.teacher_obs[state_next, ai]
            oj = int(stream(seed, step, 4).choice(len(oj_row), p=oj_row))

            engine = interactive_belief_update(jm, ib, ai, oi, EXACT_MERGED)
            oracle = enumerate_update(jm, ib, ai, oi)
            phys_gap = np.abs(
                physical_marginal(engine, len(jm.states))
                - physical_marginal(oracle, len(jm.states))
            ).max()
            nested_engine = expected_partner_physical_belief(engine, len(jm.states))
            nested_oracle = expected_partner_physical_belief(oracle, len(jm.states))
            nested_gap = float(np.abs(nested_engine - nested_oracle).max())
            worst = max(worst, float(phys_gap), nested_gap)

            ib = engine
            from teachmind.nested import advance_model

            sim_teacher = advance_model(jm, sim_teacher, aj, oj, EXACT_MERGED)
            state = state_next
    elapsed = time.time() - started
    assert worst <= 1e-9, f"worst marginal gap {worst:.2e}"
    assert elapsed < 120.0, f"took {elapsed:.1f}s"
    _passed(f"nested-update enumeration equivalence (worst {worst:.1e}, {elapsed:.1f}s)")


def test_emergent_behavior_suite():
    """Clarification, interruption, correction, and silence each pick the
    oracle-verified action deterministically; whole suite under 10 min."""
    started = time.time()
    results = {}
    for scenario in scenario_library():
        jm, ib = scenario_decision_state(scenario, EXACT_LOSSLESS)
        assert len(jm.states) <= 32
        plan = solve_level_k(
            jm, ib, PlanConfig(horizon=scenario.assert_horizon), EXACT_LOSSLESS
        )
        oracle_q = brute_force_expectimax(jm, ib, scenario.assert_horizon)
        oracle_best = max(oracle_q, key=lambda k: oracle_q[k])
        assert plan.chosen_action in scenario.expected_actions, (
            f"{scenario.name}: planner chose {plan.chosen_action}"
        )
        assert oracle_best in scenario.expected_actions, (
            f"{scenario.name}: oracle argmax {oracle_best}"
        )
        for action, value in oracle_q.items():
            assert plan.q_values[action] == pytest.approx(value, abs=1e-9)
        results[scenario.name] = plan.chosen_action
    elapsed = time.time() - started
    assert elapsed < 600.0, f"took {elapsed:.1f}s"
    _passed(f"emergent behaviors {results} ({elapsed:.1f}s)")


def _pf_drive(seed: int, particle_counts: tuple[int, ...]) -> dict[int, list[float]]:
    """Drive exact and particle beliefs through 10 steps of the default
    objects game; returns per-M L1 errors of the full-state marginal."""
    cfg = DomainConfig()
    jm, ib0 = build_student_ipomdp(cfg)
    sp = game_spaces(cfg)
    policy = level0_teacher_policy(cfg, sp)
    student_moves = ("listen", "ask_color", "ask_shape")

    theta = int(stream(seed, 0, 10).integers(cfg.n_hypotheses))
    state = sp.state_index(theta, 0, "none")
    sets = {m: pf_init(jm, ib0, m, seed=seed * 1000 + m) for m in particle_counts}
    errors: dict[int, list[float]] = {m: [] for m in particle_counts}
    ib = ib0
    for step in range(10):
        _, turn, _ = sp.split_state(state)
        if turn == 0:
            row = policy.rows()[state]
            aj = int(stream(seed, step, 11).choice(len(row), p=row))
            ai = sp.student_actions.index("wait")
        else:
            ai = sp.student_actions.index(student_moves[step % len(student_moves)])
            aj = sp.teacher_actions.index("wait")
        trans = jm.transition[state, ai, aj]
        state = int(stream(seed, step, 12).choice(len(trans), p=trans))
        obs_row = jm.student_obs[state, aj]
        oi = int(stream(seed, step, 13).choice(len(obs_row), p=obs_row))

        ib = interactive_belief_update(jm, ib, ai, oi)
        exact = physical_marginal(ib, len(jm.states))
        for m in particle_counts:
            try:
                sets[m] = pf_update(sets[m], jm, ai, oi)
            except ParticleCollapse:
                # documented fallback: reseed the cloud from the exact belief
                sets[m] = pf_init(jm, ib, m, seed=seed * 7919 + m + step)
            errors[m].append(float(np.abs(pf_marginal(sets[m]).probs - exact).sum()))
    return errors


def test_particle_filter_convergence():
    """Mean L1 error strictly decreases across M in {100, 1000, 10000} and at
    M=10000 stays within 0.05; 20 seeds x 10 steps, under 5 min."""
    started = time.time()
    counts = (100, 1000, 10000)
    sums = {m: [] for m in counts}
    for seed in range(20):
        errors = _pf_drive(seed, counts)
        for m in counts:
            sums[m].extend(errors[m])
    means = {m: float(np.mean(sums[m])) for m in counts}
    elapsed = time.time() - started
    assert means[100] > means[1000] > means[10000], f"means {means}"
    assert means[10000] <= 0.05, f"mean L1 at M=10000 is {means[10000]:.4f}"
    assert elapsed < 300.0, f"took {elapsed:.1f}s"
    _passed(
        "particle-filter convergence "
        f"(L1 means {means[100]:.3f} > {means[1000]:.3f} > {means[10000]:.3f}, {elapsed:.1f}s)"
    )


def test_teaching_efficacy():
    """Noiseless default play certifies the concept within |H|-1 questions on
    all 200 seeds; under default noise, the two-step-lookahead student is at
    least as fast on average as the myopic one under common random numbers
    (times censored at the horizon for the mean)."""
    started = time.time()
    noiseless = Scenario(name="noiseless", config=noiseless_config())
    for seed in range(200):
        trace = run_episode(noiseless, seed)
        metrics = compute_metrics(trace)
        assert metrics.time_to_threshold < math.inf, f"seed {seed} never certain"
        questions = questions_before_threshold(trace)
        assert questions <= len(noiseless.config.hypotheses) - 1, (
            f"seed {seed} needed {questions} questions"
        )

    def censored_mean(scenario: Scenario) -> float:
        cap = float(scenario.config.horizon)
        times = []
        for seed in range(200):
            t = compute_metrics(run_episode(scenario, seed)).time_to_threshold
            times.append(min(t, cap))
        return float(np.mean(times))

    lookahead = Scenario(name="h2", config=DomainConfig(plan_horizon=2))
    myopic = Scenario(name="h1", config=DomainConfig(plan_horizon=1))
    mean_h2 = censored_mean(lookahead)
    mean_h1 = censored_mean(myopic)
    elapsed = time.time() - started
    assert mean_h2 <= mean_h1, f"h2 mean {mean_h2:.2f} > h1 mean {mean_h1:.2f}"
    _passed(
        f"teaching efficacy (noiseless OK; h2 mean {mean_h2:.2f} <= h1 mean {mean_h1:.2f}, "
        f"{elapsed:.0f}s)"
    )


def test_determinism_and_round_trips():
    """Byte-identical traces for fixed (scenario, seed); parse(serialize(x))
    identity across every format."""
    golden = golden_scenario()
    for seed in (7, 42):
        a = trace_to_jsonl(run_episode(golden, seed))
        b = trace_to_jsonl(run_episode(golden, seed))
        assert a == b
        assert a == (GOLDEN_DIR / f"golden_seed{seed}.jsonl").read_text()

    noisy = Scenario(name="noisy", config=DomainConfig(horizon=8))
    assert trace_to_jsonl(run_episode(noisy, 5)) == trace_to_jsonl(run_episode(noisy, 5))

    trace = run_episode(noisy, 5)
    assert trace_from_jsonl(trace_to_jsonl(trace)) == trace

    from teachmind.episodes import run_batch

    _, per_seed = run_batch(Scenario(name="b", config=noiseless_config(horizon=6)), 3)
    assert metrics_from_csv(metrics_to_csv(per_seed)) == per_seed

    model = two_door_model()
    assert pomdp_models_equal(model, model_from_json(model_to_json(model)))

    cfg = DomainConfig(teacher_level=1, include_object_questions=False,
                       include_clarify=False)
    jm, ib = build_student_ipomdp(cfg)
    jm2, ib2 = joint_model_from_json(joint_model_to_json(jm, ib))
    assert joint_models_equal(jm, jm2)
    assert interactive_beliefs_equal(ib, ib2)

    assert domain_config_from_json(domain_config_to_json(cfg)) == cfg
    for scenario in scenario_library():
        assert scenario_from_json(scenario_to_json(scenario)) == scenario
    _passed("determinism and round-trips")


def test_secondary_protocol_conformance():
    """[SECONDARY] A scripted client replaying the golden scenario receives
    state frames matching the golden trace step-for-step (<= 1e-9); wrong-turn
    and malformed frames yield their documented codes without corrupting the
    session."""
    from fastapi.testclient import TestClient

    from teachmind.domain import TeacherSignal
    from teachmind.formats import domain_config_to_obj
    from teachmind.service import create_app

    scenario = golden_scenario()
    committed = trace_from_jsonl((GOLDEN_DIR / "golden_seed42.jsonl").read_text())
    student_records = [r for r in committed.steps if r.agent == "student"]

    client = TestClient(create_app())
    with client.websocket_connect("/session") as ws:
        ws.send_text(json.dumps({
            "v": 1, "type": "create_session",
            "config": domain_config_to_obj(scenario.config),
        }))
        created = json.loads(ws.receive_text())
        assert created["type"] == "session_created"
        sid = created["session_id"]

        for event, expected in zip(scenario.script, student_records):
            signal = TeacherSignal.from_action_label(event.action)
            ws.send_text(json.dumps({
                "v": 1, "type": "signal", "session_id": sid,
                "signal": {"kind": signal.kind, "payload": signal.payload},
            }))
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "state"
            gap = np.abs(
                np.asarray(frame["belief"]) - np.asarray(expected.theta_belief)
            ).max()
            assert gap <= 1e-9, f"belief gap {gap:.2e}"
            assert frame["chosen_action"]["label"] == expected.action

        # malformed frame: error, session intact
        ws.send_text("not json at all")
        assert json.loads(ws.receive_text())["code"] == "parse"
        ws.send_text(json.dumps({"v": 1, "type": "snapshot_request", "session_id": sid}))
        snap = json.loads(ws.receive_text())
        assert snap["seq"] == len(scenario.script)

        # exhausted session: the turn error, state unchanged
        ws.send_text(json.dumps({
            "v": 1, "type": "signal", "session_id": sid,
            "signal": {"kind": "wait"},
        }))
        assert json.loads(ws.receive_text())["code"] == "turn"
        ws.send_text(json.dumps({"v": 1, "type": "snapshot_request", "session_id": sid}))
        assert json.loads(ws.receive_text()) == snap
    _passed("secondary protocol conformance")

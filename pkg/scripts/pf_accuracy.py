"""Particle-filter accuracy against the exact nested update, swept over M.

Drives the default objects game and reports the mean L1 distance between the
filter's full-state marginal and the exact interactive belief per particle
count.
"""

import argparse
import csv
import sys

import numpy as np

from teachmind.domain import DomainConfig, build_student_ipomdp, game_spaces, level0_teacher_policy
from teachmind.episodes import stream
from teachmind.errors import ParticleCollapse
from teachmind.nested import interactive_belief_update, physical_marginal
from teachmind.particles import pf_init, pf_marginal, pf_update


def drive(seed: int, counts: list[int], steps: int) -> dict[int, list[float]]:
    cfg = DomainConfig()
    jm, ib = build_student_ipomdp(cfg)
    sp = game_spaces(cfg)
    policy = level0_teacher_policy(cfg, sp)
    moves = ("listen", "ask_color", "ask_shape")

    theta = int(stream(seed, 0, 10).integers(cfg.n_hypotheses))
    state = sp.state_index(theta, 0, "none")
    sets = {m: pf_init(jm, ib, m, seed=seed * 1000 + m) for m in counts}
    errors: dict[int, list[float]] = {m: [] for m in counts}
    for step in range(steps):
        _, turn, _ = sp.split_state(state)
        if turn == 0:
            row = policy.rows()[state]
            aj = int(stream(seed, step, 11).choice(len(row), p=row))
            ai = sp.student_actions.index("wait")
        else:
            ai = sp.student_actions.index(moves[step % len(moves)])
            aj = sp.teacher_actions.index("wait")
        trans = jm.transition[state, ai, aj]
        state = int(stream(seed, step, 12).choice(len(trans), p=trans))
        obs_row = jm.student_obs[state, aj]
        oi = int(stream(seed, step, 13).choice(len(obs_row), p=obs_row))

        ib = interactive_belief_update(jm, ib, ai, oi)
        exact = physical_marginal(ib, len(jm.states))
        for m in counts:
            try:
                sets[m] = pf_update(sets[m], jm, ai, oi)
            except ParticleCollapse:
                sets[m] = pf_init(jm, ib, m, seed=seed * 7919 + m + step)
            errors[m].append(float(np.abs(pf_marginal(sets[m]).probs - exact).sum()))
    return errors


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--counts", type=int, nargs="+", default=[100, 1000, 10000])
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--steps", type=int, default=10)
    parser.add_argument("--out", default="pf_accuracy.csv")
    args = parser.parse_args()

    collected: dict[int, list[float]] = {m: [] for m in args.counts}
    for seed in range(args.seeds):
        for m, values in drive(seed, args.counts, args.steps).items():
            collected[m].extend(values)

    with open(args.out, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["particles", "mean_l1", "max_l1"])
        for m in args.counts:
            writer.writerow([m, np.mean(collected[m]), np.max(collected[m])])
    for m in args.counts:
        print(f"M={m:>6}: mean L1 {np.mean(collected[m]):.4f}  max {np.max(collected[m]):.4f}")
    print(f"wrote {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()

"""Horizon sweep on the two-door diagnostic domain.

Prints planner q-values against the brute-force oracle per horizon; a quick
way to eyeball that deeper lookahead keeps preferring the accurate channel.
"""

import argparse

from teachmind.micro import two_door_model, two_door_prior
from teachmind.oracle import brute_force_expectimax
from teachmind.planning import PlanConfig, select_action


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-horizon", type=int, default=4)
    parser.add_argument("--discount", type=float, default=0.9)
    args = parser.parse_args()

    model = two_door_model(discount=args.discount)
    prior = two_door_prior()
    print(f"{'horizon':>7} {'chosen':>12} {'q(good)':>10} {'q(cheap)':>10} {'oracle gap':>11}")
    for horizon in range(1, args.max_horizon + 1):
        result = select_action(model, prior, PlanConfig(horizon=horizon))
        gap = ""
        if horizon <= 4:
            oracle_q = brute_force_expectimax(model, prior, horizon)
            gap = f"{max(abs(oracle_q[a] - result.q_values[a]) for a in oracle_q):.1e}"
        print(
            f"{horizon:>7} {result.chosen_action:>12} "
            f"{result.q_values['listen-good']:>10.4f} "
            f"{result.q_values['listen-cheap']:>10.4f} {gap:>11}"
        )


if __name__ == "__main__":
    main()

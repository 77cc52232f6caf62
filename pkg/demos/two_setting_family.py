"""Detection thresholds of the two-setting family as the dimension grows.

Prints, for d = 2..7, the quantum value on the registry phases, the threshold
from the closed form and the threshold from the every-lambda LP, then the
large-d limit from the closed form alone.

    python3 demos/two_setting_family.py
"""

from bellgate.lhv import eta_threshold_forall_lambda
from bellgate.registry import chsh_d_eta, lookup

print(f"{'d':>6} {'violation':>10} {'closed form':>12} {'LP':>8}")
for d in range(2, 8):
    e = lookup("chsh_d", d)
    lp = eta_threshold_forall_lambda(e.scenario, e.optimal_phases).eta_star
    print(f"{d:>6} {e.expected_violation:>10.4f} {chsh_d_eta(d):>12.4f} {lp:>8.4f}")
for d in (100, 10_000):
    print(f"{d:>6} {'':>10} {chsh_d_eta(d):>12.4f}")

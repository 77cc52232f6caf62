"""From measurement phases to a certified Bell inequality, for qutrits with
two settings on one side and three on the other.

1. every-lambda threshold by a single LP (expect 9/11);
2. a check with exact rational arithmetic just below and just above it;
3. the inequality supporting the local polytope at that point, with its
   classical bound certified by enumeration.

    python3 demos/qutrit_pipeline.py
"""

from fractions import Fraction

from bellgate.exact import verify_threshold
from bellgate.facet import extract
from bellgate.lhv import eta_threshold_forall_lambda
from bellgate.registry import lookup

entry = lookup("i_2x3_d3_universal")
s, ph = entry.scenario, entry.optimal_phases

report = eta_threshold_forall_lambda(s, ph)
print(f"LP threshold      {report.eta_star:.10f}  (9/11 = {9 / 11:.10f})")

check = verify_threshold(s, ph, report.eta_star)
print(f"exact check       local at {float(check['eta_below']):.6f}: {check['feasible_below']}, "
      f"local at {float(check['eta_above']):.6f}: {check['feasible_above']}")

x = extract(s, ph, report)
print(f"extracted bound   {x.certified_bound}   residual {x.max_residual:.1e}   "
      f"face dimension {x.face.affine_dim} of {x.face.ambient_dim}")
print(f"its threshold     {x.eta_extracted:.10f}")
print("nonzero coefficients (setting i, setting j, outcome K, outcome L; 3 = no result):")
for (i, j, k, l), c in sorted(x.inequality.coeffs.items()):
    if c:
        print(f"  P({k},{l}|{i},{j}) x {Fraction(c)}")

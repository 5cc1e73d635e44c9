#!/usr/bin/env python3
"""Walk through the subjective-logic opinion algebra.

Shows how evidence shapes opinions, how trust discounting and consensus
fusion move them, and what vacuity maximization does for a conflicted,
low-uncertainty opinion.
"""

import numpy as np

from drim.opinion import (
    HOM,
    NOM,
    UOM,
    Evidence,
    apply_uom_refresh,
    dissonance,
    fuse,
    opinion_from_evidence,
    project,
    trust_coefficient,
    vacuity_maximize,
)


def show(label, op):
    pb, pd = project(op)
    print(f"{label:32s} b={op.b:.4f} d={op.d:.4f} u={op.u:.4f} a={op.a:.2f}"
          f"   P(b)={pb:.4f} diss={dissonance(op):.4f}")


print("== Evidence to opinions ==")
fresh = opinion_from_evidence(Evidence(1, 1, 101), a=0.5)
tip = opinion_from_evidence(Evidence(100, 1, 2), a=1.0)
fip = opinion_from_evidence(Evidence(1, 100, 2), a=0.0)
show("legitimate user (1,1,101)", fresh)
show("true propagator (100,1,2)", tip)
show("false propagator (1,100,2)", fip)

print("\n== One contact with a true propagator, per trust model ==")
for model, name in ((UOM, "UOM"), (HOM, "HOM"), (NOM, "NOM")):
    c = trust_coefficient(model, fresh, tip)
    fused = fuse(fresh, tip, c)
    show(f"{name}: trust c={c:.4f}", fused)

print("\n== Repeated contacts under UOM: trust grows with certainty ==")
op = fresh
for contact in range(1, 9):
    c = trust_coefficient(UOM, op, tip)
    op = fuse(op, tip, c)
    if contact in (1, 2, 4, 6, 8):
        show(f"after contact {contact} (c={c:.3f})", op)

print("\n== A conflicted user: both parties keep getting through ==")
op = fresh
for _ in range(9):
    op = fuse(op, tip, trust_coefficient(UOM, op, tip))
    op = fuse(op, fip, trust_coefficient(UOM, op, fip))
show("after 9 alternating contacts", op)
print(f"   low vacuity ({op.u:.4f} < 0.01) but high dissonance "
      f"({dissonance(op):.3f} > 0.6):")
refreshed = apply_uom_refresh(op, UOM)
show("UOM refresh (vacuity maximized)", refreshed)
print("   projection preserved, mind reopened: new evidence can bite again")

print("\n== Vacuity maximization preserves decisions ==")
op = opinion_from_evidence(Evidence(8, 4, 2), a=0.5)
show("evidence (8,4,2)", op)
show("vacuity-maximized", vacuity_maximize(op))

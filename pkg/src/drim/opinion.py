"""Binomial subjective-logic opinion algebra.

An opinion is a tuple ω = (b, d, u, a): belief in true information,
disbelief (belief in false information), vacuity (uncertainty from lack
of evidence), and base rate (prior probability favoring belief). The
simplex constraint b + d + u = 1 holds throughout, with every component
in [0, 1].

Operators implemented here:

    opinion_from_evidence   evidence counts (r, s, W) -> opinion
    project                 decision probabilities P(b) = b + a·u, P(d) = d + (1-a)·u
    dissonance              conflict-driven uncertainty (b+d)·Bal(b, d)
    trust_coefficient       UOM / HOM / NOM discount coefficient
    discount                scale an opinion by a trust coefficient
    fuse                    consensus of a receiver with a trust-discounted sender
    vacuity_maximize        re-express an opinion with maximal u, projection preserved
    apply_uom_refresh       conditional vacuity maximization (low u, high dissonance)

All functions are pure and operate on plain floats; they are safe to call
from any number of concurrent simulation replicas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

SIMPLEX_TOL = 1e-9

# Drift beyond this after fusion triggers renormalization of (b, d, u).
_RENORM_TOL = 1e-12

# Denominators smaller than this are treated as degenerate.
_DEGENERATE_TOL = 1e-12


class Opinion(NamedTuple):
    """A binomial subjective-logic opinion (b, d, u, a)."""

    b: float
    d: float
    u: float
    a: float

    def validate(self) -> "Opinion":
        """Return self if the simplex and range invariants hold, else raise."""
        for name, x in zip("bdua", self):
            if not (-SIMPLEX_TOL <= x <= 1.0 + SIMPLEX_TOL):
                raise ValueError(f"opinion component {name}={x} outside [0, 1]")
        total = self.b + self.d + self.u
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"opinion components sum to {total}, expected 1")
        return self


VACUOUS = Opinion(0.0, 0.0, 1.0, 0.5)


class Evidence(NamedTuple):
    """Evidence counts: r supports belief, s supports disbelief, W is the
    non-informative prior weight."""

    r: float
    s: float
    W: float


class TrustVariant(Enum):
    UOM = "uom"
    HOM = "hom"
    NOM = "nom"


@dataclass(frozen=True)
class TrustModel:
    """A trust-coefficient model plus its thresholds.

    xi:  vacuity threshold below which the UOM refresh may fire.
    t_d: dissonance threshold above which the UOM refresh fires.
    t_u: freeze threshold; a user whose vacuity drops to t_u or below
         stops updating (unless the UOM refresh rescues it).
    """

    variant: TrustVariant
    xi: float = 0.01
    t_d: float = 0.6
    t_u: float = 0.01

    def __post_init__(self) -> None:
        for name in ("xi", "t_d", "t_u"):
            x = getattr(self, name)
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"{name}={x} outside [0, 1]")


UOM = TrustModel(TrustVariant.UOM)
HOM = TrustModel(TrustVariant.HOM)
NOM = TrustModel(TrustVariant.NOM)


def opinion_from_evidence(ev: Evidence, a: float) -> Opinion:
    """Map evidence counts to an opinion.

    b = r/(r+s+W), d = s/(r+s+W), u = W/(r+s+W).

    Parameters
    ----------
    ev : Evidence
        Nonnegative support/refute counts and positive prior weight W.
    a : float
        Base rate in [0, 1].
    """
    r, s, W = ev
    if W <= 0.0:
        raise ValueError(f"prior weight W must be positive, got {W}")
    if r < 0.0 or s < 0.0:
        raise ValueError(f"evidence counts must be nonnegative, got r={r}, s={s}")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"base rate a={a} outside [0, 1]")
    total = r + s + W
    return Opinion(r / total, s / total, W / total, a)


def project(op: Opinion) -> tuple[float, float]:
    """Projected belief and disbelief: P(b) = b + a·u, P(d) = d + (1-a)·u.

    The pair sums to 1 for any valid opinion.
    """
    pb = op.b + op.a * op.u
    pd = op.d + (1.0 - op.a) * op.u
    return pb, pd


def dissonance(op: Opinion) -> float:
    """Uncertainty mass caused by conflicting evidence.

    (b + d) · Bal(b, d) with Bal(b, d) = 1 - |b - d| / (b + d).
    A vacuous opinion (b + d = 0) carries no conflict, so returns 0.
    """
    mass = op.b + op.d
    if mass <= 0.0:
        return 0.0
    bal = 1.0 - abs(op.b - op.d) / mass
    return mass * bal


def trust_coefficient(model: TrustModel, op_i: Opinion, op_j: Opinion) -> float:
    """Trust of user i in user j under the given model.

    UOM: (1 - u_i)(1 - u_j) — mutual certainty.
    HOM: cosine similarity of the (b, d) vectors; 0 if either side has
         expressed no stance (b = d = 0).
    NOM: 1 — no trust filter.
    """
    variant = model.variant
    if variant is TrustVariant.NOM:
        return 1.0
    if variant is TrustVariant.UOM:
        return (1.0 - op_i.u) * (1.0 - op_j.u)
    # HOM
    denom = math.hypot(op_i.b, op_i.d) * math.hypot(op_j.b, op_j.d)
    if denom <= 0.0:  # also covers underflow of the norm product
        return 0.0
    cos = (op_i.b * op_j.b + op_i.d * op_j.d) / denom
    return min(1.0, max(0.0, cos))


def discount(op_j: Opinion, c: float) -> Opinion:
    """Scale sender opinion by trust c: (c·b, c·d, 1 - c(1 - u), a)."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"trust coefficient c={c} outside [0, 1]")
    if c == 1.0:  # keep the identity exact
        return op_j
    return Opinion(c * op_j.b, c * op_j.d, 1.0 - c * (1.0 - op_j.u), op_j.a)


def fuse(op_i: Opinion, op_j: Opinion, c: float) -> Opinion:
    """Consensus of receiver op_i with sender op_j discounted by trust c.

    With u_x = 1 - c(1 - u_j) (the discounted sender's vacuity) and
    β = 1 - c(1 - u_i)(1 - u_j):

        b' = (b_i·u_x + c·b_j·u_i) / β
        d' = (d_i·u_x + c·d_j·u_i) / β
        u' = u_i·u_x / β
        a' = [(a_i - (a_i + a_j)·u_i)·u_x + a_j·u_i] / (β - u_i·u_x)

    Vacuity never increases: u' <= u_i. When the a-denominator vanishes
    (receiver fully vacuous against a fully vacuous discounted sender)
    the receiver's base rate is kept. Raises when β = 0, which happens
    only for c = 1 with two dogmatic opinions; callers must pre-apply
    vacuity maximization or freeze such users.
    """
    b_i, d_i, u_i, a_i = op_i
    b_j, d_j, u_j, a_j = op_j
    u_x = 1.0 - c * (1.0 - u_j)
    beta = 1.0 - c * (1.0 - u_i) * (1.0 - u_j)
    if beta <= _DEGENERATE_TOL:
        raise ValueError(
            "degenerate fusion: both opinions dogmatic under full trust (beta = 0)"
        )
    b = (b_i * u_x + c * b_j * u_i) / beta
    d = (d_i * u_x + c * d_j * u_i) / beta
    u = (u_i * u_x) / beta

    a_den = beta - u_i * u_x
    if abs(a_den) <= _DEGENERATE_TOL:
        a = a_i
    else:
        a = ((a_i - (a_i + a_j) * u_i) * u_x + a_j * u_i) / a_den
        a = min(1.0, max(0.0, a))

    total = b + d + u
    if abs(total - 1.0) > _RENORM_TOL:
        b, d, u = b / total, d / total, u / total
    return Opinion(b, d, u, a)


def vacuity_maximize(op: Opinion) -> Opinion:
    """Re-express an opinion with maximal vacuity, preserving its projection.

    Interior base rate: ü = min(P(b)/a, P(d)/(1-a)), b̈ = P(b) - a·ü,
    d̈ = P(d) - (1-a)·ü. At least one of b̈, d̈ is zero. At the boundaries
    a = 0 and a = 1 the maximal vacuity is P(d) and P(b) respectively.
    """
    pb, pd = project(op)
    a = op.a
    if a <= 0.0:
        return Opinion(pb, 0.0, pd, a)
    if a >= 1.0:
        return Opinion(0.0, pd, pb, a)
    u = min(pb / a, pd / (1.0 - a))
    b = max(0.0, pb - a * u)
    d = max(0.0, pd - (1.0 - a) * u)
    return Opinion(b, d, u, a)


def apply_uom_refresh(op: Opinion, model: TrustModel) -> Opinion:
    """Vacuity-maximize a low-vacuity, high-dissonance opinion.

    Fires only under the UOM variant, when u < xi and dissonance > t_d;
    otherwise returns the opinion unchanged. Applied to a receiver
    immediately before each fusion so that users stuck on conflicting
    evidence can absorb new information.
    """
    if model.variant is not TrustVariant.UOM:
        return op
    if op.u < model.xi and dissonance(op) > model.t_d:
        return vacuity_maximize(op)
    return op

"""Community quality metrics and closed-form structural bounds."""
from __future__ import annotations

import math
from fractions import Fraction

from .errors import DomainError
from .graph import SubgraphView

INF = math.inf


def layer_densities(graph, S, schemas=None) -> list[float]:
    """|E_l[S]| / |S| for every layer (optionally counting only ``schemas``)."""
    S = frozenset(S)
    if not S:
        raise DomainError("density of an empty set")
    counts = SubgraphView(graph, S, schemas).layer_edge_counts()
    return [c / len(S) for c in counts]


def density(graph, S, beta: float = 0.0, schemas=None) -> float:
    """max over j of (j-th largest layer density) * j**beta.

    Choosing the best layer subset of size j always means taking the j
    densest layers, so scanning prefixes of the sorted list is enough.
    """
    if beta < 0:
        raise DomainError("beta must be non-negative")
    dens = sorted(layer_densities(graph, S, schemas), reverse=True)
    if not dens:
        return 0.0
    return max(d * (j ** beta) for j, d in enumerate(dens, 1))


def density_lower_bound(k: int, lam: int, num_layers: int, beta: float = 0.0) -> float:
    if not 1 <= lam <= num_layers:
        raise DomainError("lambda outside 1..|L|")
    best = max((lam - xi) * (xi + 1) ** beta for xi in range(lam))
    return (k - 1) / (2 * num_layers) * best


def diameter_upper_bound(k: int, lam: int, num_layers: int, n: int) -> int:
    """floor(T * floor((2n - 2) / k)) with T = 1 + 1/floor(|L| / (|L| - lam)).

    T is 1 when lam = |L|; exact rational arithmetic avoids float rounding.
    """
    if k < 2:
        raise DomainError("k must be >= 2")
    if not 1 <= lam <= num_layers:
        raise DomainError("lambda outside 1..|L|")
    base = (2 * n - 2) // k
    if lam == num_layers:
        return base
    t = Fraction(1) + Fraction(1, num_layers // (num_layers - lam))
    return math.floor(t * base)


def edge_connectivity_bound(k: int, lam: int) -> int:
    return lam * (k - 1)


def generalized_mean(values, p: float) -> float:
    """Power mean M_p; p = 0 is the geometric mean, +/-inf give max/min.

    For p <= 0 a zero entry forces the mean to 0 (its limiting value).
    """
    vals = [float(x) for x in values]
    if not vals:
        raise DomainError("mean of no values")
    if any(x < 0 for x in vals):
        raise DomainError("values must be non-negative")
    if p == INF:
        return max(vals)
    if p == -INF:
        return min(vals)
    if p <= 0 and any(x == 0 for x in vals):
        return 0.0
    if p == 0:
        return math.exp(math.fsum(math.log(x) for x in vals) / len(vals))
    m = math.fsum(x ** p for x in vals) / len(vals)
    return m ** (1.0 / p)


def f1_score(found, truth) -> float:
    found, truth = set(found), set(truth)
    if not truth:
        raise DomainError("ground truth must be nonempty")
    hit = len(found & truth)
    if not found or hit == 0:
        return 0.0
    pre = hit / len(found)
    rec = hit / len(truth)
    return 2 * pre * rec / (pre + rec)

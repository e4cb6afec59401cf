"""
Monomials P(x) = prod_i <x, u_i> over unit directions, their divisors and
their integrals over the unit ball [-1/2, 1/2]^d.
"""

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from ..errors import KernelError

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class Monomial:
    d: int
    directions: tuple = ()

    def __post_init__(self):
        dirs = []
        for u in self.directions:
            u = tuple(float(c) for c in u)
            if len(u) != self.d:
                raise KernelError(f"direction {u} does not have dimension {self.d}")
            if abs(math.fsum(c * c for c in u) - 1.0) > UNIT_TOL:
                raise KernelError(f"direction {u} is not a unit vector")
            dirs.append(u)
        object.__setattr__(self, "directions", tuple(sorted(dirs)))

    @classmethod
    def one(cls, d):
        return cls(d, ())

    @classmethod
    def coordinate(cls, powers):
        """x_1^{k_1} ... x_d^{k_d}"""
        d = len(powers)
        dirs = []
        for axis, k in enumerate(powers):
            e = [0.0] * d
            e[axis] = 1.0
            dirs += [tuple(e)] * int(k)
        return cls(d, tuple(dirs))

    @property
    def degree(self):
        return len(self.directions)

    def __mul__(self, other):
        return Monomial(self.d, self.directions + other.directions)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for u in self.directions:
            out = out * (x @ np.asarray(u))
        return out

    def coefficients(self):
        """Expansion into coordinate monomials: {multi-index: coefficient}"""
        poly = {(0,) * self.d: 1.0}
        for u in self.directions:
            nxt = {}
            for k, c in poly.items():
                for axis, w in enumerate(u):
                    if w == 0.0:
                        continue
                    kk = k[:axis] + (k[axis] + 1,) + k[axis + 1:]
                    nxt[kk] = nxt.get(kk, 0.0) + c * w
            poly = nxt
        return poly

    def expectation(self, moment):
        """E[P(X)] given the coordinate moment function moment(multi-index)"""
        return math.fsum(c * moment(k) for k, c in self.coefficients().items())

    def to_list(self):
        return [list(u) for u in self.directions]


class Divisor(NamedTuple):
    divisor: Monomial
    multiplicity: int
    quotient: Monomial


def divisors(P: Monomial):
    """All subset-induced divisors Q of P with multiplicity N(Q|P) and quotient P/Q"""
    if P.degree > 8:
        raise KernelError(f"divisor enumeration is capped at degree 8, got {P.degree}")
    counts = Counter()
    quotients = {}
    idx = range(P.degree)
    for size in range(P.degree + 1):
        for subset in combinations(idx, size):
            q = tuple(P.directions[i] for i in subset)
            key = tuple(sorted(q))
            counts[key] += 1
            if key not in quotients:
                quotients[key] = tuple(P.directions[i] for i in idx if i not in subset)
    return [
        Divisor(Monomial(P.d, key), n, Monomial(P.d, quotients[key]))
        for key, n in sorted(counts.items(), key=lambda item: (len(item[0]), item[0]))
    ]


def coordinate_ball_moment(k):
    """integral of x^k over [-1/2, 1/2]^d: prod (1/2)^{k_i}/(k_i+1), zero if some k_i is odd"""
    if any(ki % 2 for ki in k):
        return 0.0
    return math.prod(0.5 ** ki / (ki + 1) for ki in k)


def ball_moment(Q: Monomial):
    return Q.expectation(coordinate_ball_moment)


def multi_indices(d, degree):
    """All multi-indices of total degree `degree` in d variables"""
    if d == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in multi_indices(d - 1, degree - first):
            yield (first,) + rest


def multi_factorial(k):
    return math.prod(math.factorial(ki) for ki in k)

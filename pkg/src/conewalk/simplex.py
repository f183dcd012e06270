"""Projective geometry of the nonnegative part of the l1 unit sphere.

Provides the ratio functional ``m``, the bounded projective metric
``d(x, y) = (1 - m(x,y)m(y,x)) / (1 + m(x,y)m(y,x))`` (diameter 1), and
the closed-form contraction coefficient of a nonnegative matrix acting
projectively on the simplex.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SimplexPoint",
    "barycenter",
    "m_ratio",
    "hilbert_distance",
    "contraction_coefficient",
    "sample_point",
]

NORMALIZATION_TOL = 1e-12


class SimplexPoint:
    """A nonnegative vector with unit l1 norm.

    Inputs are renormalized once on construction; afterwards the sum of
    coordinates is 1 to within :data:`NORMALIZATION_TOL` and the vector
    is immutable.
    """

    __slots__ = ("_coords",)

    def __init__(self, coords):
        c = np.array(coords, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("a simplex point needs a 1-d vector with d >= 2")
        if not np.all(np.isfinite(c)):
            raise ValueError("simplex point coordinates must be finite")
        if np.any(c < 0):
            raise ValueError("simplex point coordinates must be nonnegative")
        total = c.sum()
        if not total > 0:
            raise ValueError("simplex point must have positive l1 norm")
        c /= total
        c.flags.writeable = False
        self._coords = c

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def d(self) -> int:
        return self._coords.size

    @property
    def interior(self) -> bool:
        """True exactly when every coordinate is strictly positive."""
        return bool(np.all(self._coords > 0))

    def __iter__(self):
        return iter(self._coords)

    def __repr__(self) -> str:
        return f"SimplexPoint({self._coords.tolist()})"


def barycenter(d: int) -> SimplexPoint:
    """The point (1/d, ..., 1/d)."""
    return SimplexPoint(np.full(d, 1.0 / d))


def point_coords(x) -> np.ndarray:
    """Coordinates of a SimplexPoint or validated array-like."""
    if isinstance(x, SimplexPoint):
        return x.coords
    return SimplexPoint(x).coords


def m_ratio(u, v) -> float:
    """Infimum of u_i / v_i over the support of v.

    Lies in [0, d]; vanishes exactly when u has a zero on the support of
    v, and m(u, v) * m(v, u) <= 1.
    """
    uc, vc = point_coords(u), point_coords(v)
    if uc.size != vc.size:
        raise ValueError("dimension mismatch")
    mask = vc > 0
    with np.errstate(over="ignore"):  # subnormal v_i: that ratio never attains the min
        return float(np.min(uc[mask] / vc[mask]))


def _phi(s: float) -> float:
    return (1.0 - s) / (1.0 + s)


def hilbert_distance(x, y) -> float:
    """Projective distance on the simplex, with values in [0, 1].

    Equals 0 iff x == y, and 1 iff the supports differ.
    """
    s = m_ratio(x, y) * m_ratio(y, x)
    s = min(max(s, 0.0), 1.0)
    return _phi(s)


def contraction_coefficient(g) -> float:
    """Worst projective distortion of the action of ``g`` on the simplex.

    Evaluated in closed form as the maximum over index quadruples
    (i, j, k, l) of |g_ij g_kl - g_il g_kj| / (g_ij g_kl + g_il g_kj),
    with 0/0 quadruples contributing 0 (a vanishing pair imposes no
    distortion, which keeps the coefficient continuous and makes it 0
    for rank-one matrices).  The value lies in [0, 1] and is < 1 exactly
    when all entries are strictly positive.  Direct enumeration is
    O(d^4); fine at desk scale.
    """
    from .posmat import AllowableMatrix

    if isinstance(g, AllowableMatrix):
        a = g.entries
    else:
        a = AllowableMatrix(g).entries
    a = a / a.max()  # guards the entry products against overflow
    d = a.shape[0]
    best = 0.0
    for i in range(d - 1):
        for k in range(i + 1, d):
            p = np.outer(a[i], a[k])  # p[j, l] = a_ij * a_kl
            q = p.T                   # q[j, l] = a_il * a_kj
            den = p + q
            num = np.abs(p - q)
            nz = den > 0
            if np.any(nz):
                best = max(best, float(np.max(num[nz] / den[nz])))
    return min(best, 1.0)


def sample_point(d: int, rng: np.random.Generator, zeros: int = 0) -> SimplexPoint:
    """Dirichlet(1, ..., 1) sample; ``zeros`` coordinates forced to 0."""
    if not 0 <= zeros < d:
        raise ValueError("zeros must leave at least one positive coordinate")
    c = rng.dirichlet(np.ones(d - zeros))
    if zeros:
        out = np.zeros(d)
        idx = rng.permutation(d)[: d - zeros]
        out[np.sort(idx)] = c
        return SimplexPoint(out)
    return SimplexPoint(c)

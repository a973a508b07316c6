"""Rototranslation symmetries of torus fields.

The group is O(3,Z) x T^3 (semidirect product) acting by push-forward.  Only
translations on the quarter-period lattice {0, pi/2, pi, 3pi/2}^3 are
representable, because only those produce Gaussian-rational phases
e^{-i a.k}; every symmetry listed for the shipped data lives on the
half-period sublattice {0, pi}^3.  Translations are stored as integer triples
in units of pi/2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

from .fields import TimeField
from .rationals import GaussianRational

__all__ = [
    "GroupElement",
    "SymmetryData",
    "octahedral_matrices",
    "identity_element",
    "compose",
    "inverse",
    "push_forward",
    "find_symmetries",
    "orbit_partition",
    "propagate_coefficient",
]


class GroupElement(NamedTuple):
    """A signed-permutation matrix with a quarter-period-lattice translation.

    S is a 3x3 tuple-of-tuples over {-1,0,1} with S^T S = 1; a is a triple of
    integers mod 4, each unit worth pi/2.
    """

    S: tuple
    a: tuple


def _mat_vec(S, k):
    return (
        S[0][0] * k[0] + S[0][1] * k[1] + S[0][2] * k[2],
        S[1][0] * k[0] + S[1][1] * k[1] + S[1][2] * k[2],
        S[2][0] * k[0] + S[2][1] * k[1] + S[2][2] * k[2],
    )


def _mat_mul(S, U):
    return tuple(
        tuple(sum(S[i][m] * U[m][j] for m in range(3)) for j in range(3)) for i in range(3)
    )


def _transpose(S):
    return tuple(tuple(S[j][i] for j in range(3)) for i in range(3))


_IDENTITY = ((1, 0, 0), (0, 1, 0), (0, 0, 1))

# e^{-i (pi/2) n} for n mod 4
_PHASES = (
    GaussianRational(1, 0),
    GaussianRational(0, -1),
    GaussianRational(-1, 0),
    GaussianRational(0, 1),
)


def _phase(a, k):
    return _PHASES[(a[0] * k[0] + a[1] * k[1] + a[2] * k[2]) % 4]


def octahedral_matrices():
    """All 48 signed permutation matrices of O(3,Z)."""
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            S = tuple(
                tuple(signs[i] if j == perm[i] else 0 for j in range(3)) for i in range(3)
            )
            mats.append(S)
    return mats


def identity_element():
    return GroupElement(_IDENTITY, (0, 0, 0))


def compose(g, h):
    """Group law (S,a)(U,b) = (SU, a + S b), translations mod 2 pi."""
    Sb = _mat_vec(g.S, h.a)
    a = tuple((g.a[i] + Sb[i]) % 4 for i in range(3))
    return GroupElement(_mat_mul(g.S, h.S), a)


def inverse(g):
    St = _transpose(g.S)
    mSta = _mat_vec(St, tuple(-x for x in g.a))
    return GroupElement(St, tuple(x % 4 for x in mSta))


def _transform_vec(S, vec):
    """(S v)_i for a 3-vector of TimePoly; each row of S has one entry +-1."""
    out = []
    for i in range(3):
        row = S[i]
        for j in range(3):
            if row[j] == 1:
                out.append(vec[j])
                break
            if row[j] == -1:
                out.append(-vec[j])
                break
    return tuple(out)


def push_forward(g, v):
    """The field with Fourier coefficients e^{-i a.k} S v_{S^T k}.

    The stored canonical coefficient at k0 lands at S k0 (folded back to the
    canonical half by conjugation when needed); Sobolev norms are preserved
    exactly.
    """
    S, a = g.S, g.a
    full = {}
    for k0, vec in v.coeffs.items():
        k = _mat_vec(S, k0)
        out = _transform_vec(S, vec)
        ph = _phase(a, k)
        if ph.re != 1 or ph.im != 0:
            out = tuple(p.scale(ph) for p in out)
        full[k] = out
    return TimeField.from_full(full)


@dataclass(frozen=True)
class SymmetryData:
    """Symmetry group H+ and pseudo-symmetry set H- of a datum, with the
    reduced (matrix-only) projections."""

    plus: frozenset
    minus: frozenset
    reduced_plus: frozenset
    reduced_minus: frozenset

    @property
    def reduced_union(self):
        return self.reduced_plus | self.reduced_minus

    def transform_table(self):
        """Map S -> (a, sigma) choosing one witness translation per reduced
        matrix; sigma is +1 for H+ elements and -1 for H-."""
        table = {}
        for g in self.plus:
            table.setdefault(g.S, (g.a, 1))
        for g in self.minus:
            table.setdefault(g.S, (g.a, -1))
        return table

    @classmethod
    def trivial(cls):
        e = identity_element()
        return cls(
            plus=frozenset([e]),
            minus=frozenset(),
            reduced_plus=frozenset([e.S]),
            reduced_minus=frozenset(),
        )


_HALF_LATTICE = tuple(itertools.product((0, 2), repeat=3))
_QUARTER_LATTICE = tuple(itertools.product((0, 1, 2, 3), repeat=3))


def find_symmetries(u, lattice="half"):
    """Brute-force search of all (S, a) with push-forward equal to +-u.

    lattice selects the translation candidates: 'half' is the 384-element
    search over {0, pi}^3 (enough for the shipped data), 'quarter' widens to
    {0, pi/2, pi, 3pi/2}^3 for user data.
    """
    if u.is_zero():
        raise ValueError("symmetry search needs a nonzero field")
    if lattice == "half":
        translations = _HALF_LATTICE
    elif lattice == "quarter":
        translations = _QUARTER_LATTICE
    else:
        raise ValueError("lattice must be 'half' or 'quarter', got %r" % (lattice,))
    neg_u = -u
    plus = []
    minus = []
    for S in octahedral_matrices():
        for a in translations:
            g = GroupElement(S, a)
            pf = push_forward(g, u)
            if pf == u:
                plus.append(g)
            elif pf == neg_u:
                minus.append(g)
    return SymmetryData(
        plus=frozenset(plus),
        minus=frozenset(minus),
        reduced_plus=frozenset(g.S for g in plus),
        reduced_minus=frozenset(g.S for g in minus),
    )


def orbit_partition(keys, matrices):
    """Partition keys into orbits under k -> S k.

    Orbits are restricted to the given key set; with the symmetric supports
    produced by the recursion the set is closed under the action, so the
    restriction is vacuous there.
    """
    if not matrices:
        raise ValueError("need at least one matrix")
    keys = set(keys)
    orbits = []
    assigned = set()
    for k in sorted(keys):
        if k in assigned:
            continue
        orbit = {k}
        frontier = [k]
        while frontier:
            cur = frontier.pop()
            for S in matrices:
                nxt = _mat_vec(S, cur)
                if nxt in keys and nxt not in orbit:
                    orbit.add(nxt)
                    frontier.append(nxt)
        orbits.append(orbit)
        assigned |= orbit
    return orbits


def propagate_coefficient(coeff, k, g, sigma, j):
    """Exact coefficient of u_j at S k, given the one at k:
    u_{j,Sk} = sigma^{j+1} e^{-i a.(Sk)} S u_{j,k}.

    Returns the pair (Sk, coefficient)."""
    Sk = _mat_vec(g.S, k)
    out = _transform_vec(g.S, coeff)
    ph = _phase(g.a, Sk)
    if sigma == -1 and (j + 1) % 2 == 1:
        ph = -ph
    if ph.re != 1 or ph.im != 0:
        out = tuple(p.scale(ph) for p in out)
    return Sk, out

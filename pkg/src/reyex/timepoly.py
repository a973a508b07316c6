"""Exact algebra of time functions t^a e^{-bt}.

Every Fourier coefficient produced by the expansion recursion lives in the
closed algebra spanned by the basis functions B_{a,b}(t) = t^a e^{-bt} with
nonnegative integer exponents and Gaussian-rational coefficients.  Sums,
products, derivatives and the heat-kernel convolution integral

    int_0^t e^{-ksq (t-s)} B_{a,b}(s) ds

all stay inside the algebra, so no rounding happens before numeric
evaluation.
"""

from __future__ import annotations

from math import factorial

import mpmath

from .rationals import GR_ZERO, GaussianRational, mpq

__all__ = ["TimePoly", "tp_basis", "TP_ZERO", "TP_ONE"]

DEFAULT_EVAL_PRECISION = 256


class TimePoly:
    """Sparse sum of C_{a,b} t^a e^{-bt} with exact complex-rational C.

    The term map is canonical: no stored coefficient is zero.  Instances are
    immutable by convention; every operation returns a fresh poly.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        if terms is None:
            terms = {}
        clean = {}
        for (a, b), c in terms.items():
            if a < 0 or b < 0:
                raise ValueError("exponents must be nonnegative, got (%s, %s)" % (a, b))
            if c:
                clean[(a, b)] = c
        self.terms = clean

    # -- ring structure -------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, TimePoly):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "TimePoly(0)"
        bits = []
        for (a, b) in sorted(self.terms):
            c = self.terms[(a, b)]
            bits.append("(%s+%si)*B[%d,%d]" % (c.re, c.im, a, b))
        return "TimePoly(" + " + ".join(bits) + ")"

    def __add__(self, other):
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for key, c in other.terms.items():
            prev = out.get(key)
            if prev is None:
                out[key] = c
            else:
                s = prev + c
                if s:
                    out[key] = s
                else:
                    del out[key]
        return _tp(out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return _tp({key: -c for key, c in self.terms.items()})

    def __mul__(self, other):
        # B_{a,b} * B_{a',b'} = B_{a+a', b+b'}
        if not self.terms or not other.terms:
            return TP_ZERO
        xs = self.terms
        ys = other.terms
        if len(xs) > len(ys):
            xs, ys = ys, xs
        out = {}
        for (a1, b1), c1 in xs.items():
            for (a2, b2), c2 in ys.items():
                key = (a1 + a2, b1 + b2)
                p = c1 * c2
                prev = out.get(key)
                if prev is None:
                    out[key] = p
                else:
                    s = prev + p
                    if s:
                        out[key] = s
                    else:
                        del out[key]
        return _tp(out)

    def scale(self, c):
        """Multiply by a GaussianRational (or exact rational) scalar."""
        if not isinstance(c, GaussianRational):
            c = GaussianRational(c)
        if not c:
            return TP_ZERO
        return _tp({key: x * c for key, x in self.terms.items()})

    def scale_rational(self, q):
        if not q:
            return TP_ZERO
        return _tp({key: x.scale(q) for key, x in self.terms.items()})

    def conj(self):
        return _tp({key: c.conj() for key, c in self.terms.items()})

    def mul_minus_i(self):
        return _tp({key: c.mul_minus_i() for key, c in self.terms.items()})

    # -- calculus --------------------------------------------------------

    def derivative(self):
        """d/dt, using d/dt B_{a,b} = a B_{a-1,b} - b B_{a,b}."""
        out = {}
        for (a, b), c in self.terms.items():
            if a:
                key = (a - 1, b)
                add = c.scale(mpq(a))
                prev = out.get(key)
                s = add if prev is None else prev + add
                if s:
                    out[key] = s
                elif prev is not None:
                    del out[key]
            if b:
                key = (a, b)
                add = c.scale(mpq(-b))
                prev = out.get(key)
                s = add if prev is None else prev + add
                if s:
                    out[key] = s
                elif prev is not None:
                    del out[key]
        return _tp(out)

    def heat_convolve(self, ksq):
        """Exact value of int_0^t e^{-ksq (t-s)} * self(s) ds.

        Termwise: for B_{a,b} the integral is B_{a+1,ksq}/(a+1) in the
        resonant case b == ksq, and otherwise

            a! * ( B_{0,ksq}/(b-ksq)^{a+1}
                   - sum_{l=0}^{a} B_{l,b} / ((b-ksq)^{a+1-l} l!) ).
        """
        if ksq < 1:
            raise ValueError("ksq must be a positive integer, got %s" % (ksq,))
        out = {}

        def add(key, c):
            prev = out.get(key)
            s = c if prev is None else prev + c
            if s:
                out[key] = s
            elif prev is not None:
                del out[key]

        for (a, b), c in self.terms.items():
            if b == ksq:
                add((a + 1, ksq), c.scale(mpq(1, a + 1)))
            else:
                d = b - ksq
                fact_a = factorial(a)
                add((0, ksq), c.scale(mpq(fact_a, d ** (a + 1))))
                for ell in range(a + 1):
                    q = mpq(fact_a, d ** (a + 1 - ell) * factorial(ell))
                    add((ell, b), c.scale(-q))
        return _tp(out)

    # -- numeric evaluation ----------------------------------------------

    def evaluate(self, t, precision=DEFAULT_EVAL_PRECISION):
        """Value at time t >= 0 as an mpmath mpc, at the given bit precision."""
        if precision < 53:
            raise ValueError("precision must be at least 53 bits")
        with mpmath.workprec(precision):
            tt = mpmath.mpf(t) if not isinstance(t, mpmath.mpf) else t
            x = mpmath.e ** (-tt)
            re = mpmath.mpf(0)
            im = mpmath.mpf(0)
            tpow = {}
            xpow = {}
            for (a, b), c in self.terms.items():
                ta = tpow.get(a)
                if ta is None:
                    ta = tpow[a] = tt ** a
                xb = xpow.get(b)
                if xb is None:
                    xb = xpow[b] = x ** b
                w = ta * xb
                re += _to_mpf(c.re) * w
                im += _to_mpf(c.im) * w
            return mpmath.mpc(re, im)

    # -- structure -------------------------------------------------------

    def degree_t(self):
        """Max exponent of t, or -1 for the zero poly."""
        return max((a for a, _ in self.terms), default=-1)

    def degree_exp(self):
        """Max exponent of e^{-t}, or -1 for the zero poly."""
        return max((b for _, b in self.terms), default=-1)

    def num_terms(self):
        return len(self.terms)

    # -- exact textual serialization --------------------------------------

    def to_records(self):
        """List of 'a b re_num/re_den im_num/im_den' records, sorted."""
        recs = []
        for (a, b) in sorted(self.terms):
            re_s, im_s = self.terms[(a, b)].to_strings()
            recs.append("%d %d %s %s" % (a, b, re_s, im_s))
        return recs

    @classmethod
    def from_records(cls, records):
        terms = {}
        for rec in records:
            parts = rec.split()
            if len(parts) != 4:
                raise ValueError("malformed TimePoly record: %r" % (rec,))
            a, b = int(parts[0]), int(parts[1])
            if (a, b) in terms:
                raise ValueError("duplicate exponent pair in records: %s" % ((a, b),))
            terms[(a, b)] = GaussianRational.from_strings(parts[2], parts[3])
        return cls(terms)


def _to_mpf(q):
    return mpmath.mpf(q.numerator) / mpmath.mpf(q.denominator)


def _tp(terms):
    """Internal fast constructor: terms must already be canonical."""
    p = TimePoly.__new__(TimePoly)
    p.terms = terms
    return p


def tp_basis(a, b, c=None):
    """The poly c * B_{a,b}; c defaults to 1."""
    if c is None:
        c = GaussianRational(1)
    elif not isinstance(c, GaussianRational):
        c = GaussianRational(c)
    return TimePoly({(a, b): c})


TP_ZERO = TimePoly()
TP_ONE = tp_basis(0, 0)

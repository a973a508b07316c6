"""Growth estimators D_m(t) and error estimators eps_m(t).

Three variants are supported:

  tautological    D_m = ||u^N||_m exactly, eps_m = exact m-norm of the
                  residual d u^N/dt - Lap u^N - R P(u^N, u^N);
  rough           D_m = sum_j R^j ||u_j||_m, eps_m through the product bound
                  with the constant K_m;
  intermediate(M) D_m = ||sum_{j<=M} R^j u_j||_m + sum_{j>M} R^j ||u_j||_m,
                  eps_m as in the rough variant.

Sampling shares work across Reynolds parameters: the cross Gram tables
<u_j, u_l>_m on the time grid depend only on the expansion, so one
EstimatorTables instance serves every R probed during a bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import mpmath
from scipy.interpolate import PchipInterpolator

from .fields import canonical_key, sobolev_norm, wave_norm_sq
from .symmetry import _mat_vec
from .expansion import residual_tail
from .rationals import mpq
from .timepoly import DEFAULT_EVAL_PRECISION

__all__ = [
    "ConstantsTable",
    "MissingConstantError",
    "EstimatorTables",
    "EstimatorSet",
    "default_grid",
    "parse_variant",
    "growth_rough",
    "growth_intermediate",
    "error_rough",
    "error_tautological",
    "error_tame",
    "build_estimator_set",
    "export_csv",
]

DEFAULT_K3 = 0.323
DEFAULT_G3 = 0.438


class MissingConstantError(KeyError):
    """A Sobolev-order constant was requested but never supplied."""


@dataclass(frozen=True)
class ConstantsTable:
    """Bound constants by Sobolev order.

    Only K_3 and G_3 ship as defaults; other orders must be supplied
    explicitly, there is no extrapolation.
    """

    K: dict = dc_field(default_factory=lambda: {3: DEFAULT_K3})
    G: dict = dc_field(default_factory=lambda: {3: DEFAULT_G3})
    K_pn: dict = dc_field(default_factory=dict)
    G_pn: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        for table in (self.K, self.G, self.K_pn, self.G_pn):
            for key, val in table.items():
                if not val > 0:
                    raise ValueError("constant for %s must be positive, got %s" % (key, val))

    def K_of(self, m):
        try:
            return self.K[m]
        except KeyError:
            raise MissingConstantError("K_%s not configured; supply it explicitly" % (m,))

    def G_of(self, m):
        try:
            return self.G[m]
        except KeyError:
            raise MissingConstantError("G_%s not configured; supply it explicitly" % (m,))

    def K_pn_of(self, p, n):
        if p == n:
            # K_n = K_{nn}
            try:
                return self.K_pn[(p, n)]
            except KeyError:
                return self.K_of(n)
        try:
            return self.K_pn[(p, n)]
        except KeyError:
            raise MissingConstantError("K_{%s,%s} not configured" % (p, n))

    def G_pn_of(self, p, n):
        try:
            return self.G_pn[(p, n)]
        except KeyError:
            raise MissingConstantError("G_{%s,%s} not configured" % (p, n))


def default_grid(num=400, t_max=20.0, t_split=0.5, t_first=1e-3):
    """Time grid starting at 0: geometric on (0, t_split], uniform after.

    The estimators vary fastest near t = 0 and decay exponentially later, so
    half of the budget goes below t_split.
    """
    if num < 4:
        raise ValueError("grid needs at least 4 points")
    if not 0 < t_first < t_split < t_max:
        raise ValueError("need 0 < t_first < t_split < t_max")
    n_geo = (num - 1) // 2
    n_lin = num - 1 - n_geo
    ratio = (t_split / t_first) ** (1.0 / (n_geo - 1))
    geo = [t_first * ratio**i for i in range(n_geo)]
    geo[-1] = t_split
    step = (t_max - t_split) / n_lin
    lin = [t_split + step * (i + 1) for i in range(n_lin)]
    lin[-1] = t_max
    return [0.0] + geo + lin


def parse_variant(variant):
    """Normalize a variant spec to ('tautological'|'rough'|'intermediate', M)."""
    if isinstance(variant, tuple):
        kind, M = variant
        if kind != "intermediate":
            raise ValueError("tuple variants must be ('intermediate', M)")
        return ("intermediate", int(M))
    if variant in ("tautological", "rough"):
        return (variant, None)
    if isinstance(variant, str) and variant.startswith("intermediate"):
        _, _, M = variant.partition(":")
        if not M:
            raise ValueError("intermediate variant needs an order, e.g. 'intermediate:5'")
        return ("intermediate", int(M))
    raise ValueError("unknown estimator variant %r" % (variant,))


def variant_label(variant):
    kind, M = parse_variant(variant)
    return kind if M is None else "%s:%d" % (kind, M)


# -- exact single-time operations -----------------------------------------------


def _as_mpq(R):
    return mpq(R) if not isinstance(R, float) else mpq(*R.as_integer_ratio())


def _norm_at(field, m, t, precision):
    return sobolev_norm(field, m, t, precision)


def growth_rough(exp, R, m, t, precision=DEFAULT_EVAL_PRECISION):
    """sum_{j=0}^{N} R^j ||u_j(t)||_m."""
    if m < 0:
        raise ValueError("m must be >= 0")
    with mpmath.workprec(precision):
        Rf = mpmath.mpf(R)
        total = mpmath.mpf(0)
        for j, u in enumerate(exp.coeffs):
            total += Rf**j * _norm_at(u, m, t, precision)
        return total


def growth_intermediate(exp, R, m, M, t, precision=DEFAULT_EVAL_PRECISION):
    """||sum_{j<=M} R^j u_j(t)||_m + sum_{j>M} R^j ||u_j(t)||_m."""
    if not 0 <= M <= exp.N:
        raise ValueError("need 0 <= M <= N")
    Rq = _as_mpq(R)
    head = None
    power = mpq(1)
    for j in range(M + 1):
        term = exp.coeffs[j].scale_rational(power)
        head = term if head is None else head + term
        power = power * Rq
    with mpmath.workprec(precision):
        Rf = mpmath.mpf(R)
        total = _norm_at(head, m, t, precision)
        for j in range(M + 1, exp.N + 1):
            total += Rf**j * _norm_at(exp.coeffs[j], m, t, precision)
        return total


def error_rough(exp, R, m, t, constants, precision=DEFAULT_EVAL_PRECISION):
    """K_m sum_{j=N+1}^{2N+1} R^j sum_l ||u_l(t)||_m ||u_{j-l-1}(t)||_{m+1}."""
    K = constants.K_of(m)
    N = exp.N
    with mpmath.workprec(precision):
        Rf = mpmath.mpf(R)
        norms_m = [_norm_at(u, m, t, precision) for u in exp.coeffs]
        norms_m1 = [_norm_at(u, m + 1, t, precision) for u in exp.coeffs]
        total = mpmath.mpf(0)
        for j in range(N + 1, 2 * N + 2):
            inner = mpmath.mpf(0)
            for l in range(j - N - 1, N + 1):
                inner += norms_m[l] * norms_m1[j - l - 1]
            total += Rf**j * inner
        return mpmath.mpf(K) * total


def error_tame(exp, R, p, n, t, constants, precision=DEFAULT_EVAL_PRECISION):
    """(1/2) K_pn sum_j R^j sum_l (||u_l||_p ||u_{j-l-1}||_{n+1}
    + ||u_l||_n ||u_{j-l-1}||_{p+1})."""
    K = constants.K_pn_of(p, n)
    N = exp.N
    with mpmath.workprec(precision):
        Rf = mpmath.mpf(R)
        norms = {
            m: [_norm_at(u, m, t, precision) for u in exp.coeffs]
            for m in {p, n, p + 1, n + 1}
        }
        total = mpmath.mpf(0)
        for j in range(N + 1, 2 * N + 2):
            inner = mpmath.mpf(0)
            for l in range(j - N - 1, N + 1):
                r = j - l - 1
                inner += norms[p][l] * norms[n + 1][r] + norms[n][l] * norms[p + 1][r]
            total += Rf**j * inner
        return mpmath.mpf(K) / 2 * total


def error_tautological(exp, R, m, t, precision=DEFAULT_EVAL_PRECISION):
    """Exact m-norm of the residual sum_{j=N+1}^{2N+1} R^j tail_j at time t."""
    tails = residual_tail(exp)
    Rq = _as_mpq(R)
    power = Rq ** (exp.N + 1)
    res = None
    for tail in tails:
        term = tail.scale_rational(power)
        res = term if res is None else res + term
        power = power * Rq
    return _norm_at(res, m, t, precision)


# -- shared sampling tables -------------------------------------------------------


def _orbit_classes(keys, matrices):
    """Partition canonical keys into classes under k -> canonical(S k).

    Returns (rep, size) pairs; each class is closed for every field sharing
    the symmetry, so Gram sums may be evaluated at reps and weighted.
    """
    keys = set(keys)
    classes = []
    assigned = set()
    for k in sorted(keys):
        if k in assigned:
            continue
        orbit = {k}
        frontier = [k]
        while frontier:
            cur = frontier.pop()
            for S in matrices:
                nxt = canonical_key(_mat_vec(S, cur))
                if nxt in keys and nxt not in orbit:
                    orbit.add(nxt)
                    frontier.append(nxt)
        classes.append((k, len(orbit)))
        assigned |= orbit
    return classes


def _compile_vec(vec):
    """Pre-convert a TimePoly 3-vector to mpf term lists for fast grid reuse."""
    out = []
    for p in vec:
        terms = []
        for (a, b), c in p.terms.items():
            re = mpmath.mpf(c.re.numerator) / mpmath.mpf(c.re.denominator)
            im = mpmath.mpf(c.im.numerator) / mpmath.mpf(c.im.denominator)
            terms.append((a, b, re, im))
        out.append(terms)
    return out


def _eval_compiled(compiled, tpow, xpow):
    vals = []
    for terms in compiled:
        re = mpmath.mpf(0)
        im = mpmath.mpf(0)
        for a, b, cre, cim in terms:
            w = tpow[a] * xpow[b]
            re += cre * w
            im += cim * w
        vals.append((re, im))
    return vals


def _power_cache(base, exponents):
    cache = {}
    for e in exponents:
        if e not in cache:
            cache[e] = base**e
    return cache


def sample_gram_tables(fields, orders, grid, precision, matrices=None):
    """Cross Gram tables <f_i(t), f_j(t)>_m on the grid, full lattice,
    without the (2 pi)^3 volume factor.

    Returns dict[(i, j, m)] -> list of mpf over the grid, for i <= j.  With
    matrices given, only one representative per orbit class is evaluated.
    """
    with mpmath.workprec(precision):
        support = set()
        for f in fields:
            support |= set(f.coeffs)
        if matrices:
            classes = _orbit_classes(support, matrices)
        else:
            classes = [(k, 1) for k in sorted(support)]

        nf = len(fields)
        pairs = [(i, j) for i in range(nf) for j in range(i, nf)]
        tables = {(i, j, m): [mpmath.mpf(0)] * len(grid) for i, j in pairs for m in orders}

        exps_a = set()
        exps_b = set()
        compiled = []
        for rep, size in classes:
            per_field = []
            for f in fields:
                vec = f.coeffs.get(rep)
                if vec is None:
                    per_field.append(None)
                    continue
                cv = _compile_vec(vec)
                for terms in cv:
                    for a, b, _, _ in terms:
                        exps_a.add(a)
                        exps_b.add(b)
                per_field.append(cv)
            compiled.append(per_field)

        for ig, t in enumerate(grid):
            tt = mpmath.mpf(t)
            x = mpmath.e ** (-tt)
            tpow = _power_cache(tt, exps_a)
            xpow = _power_cache(x, exps_b)
            for (rep, size), per_field in zip(classes, compiled):
                ksq = wave_norm_sq(rep)
                weights = {m: mpmath.mpf(size * ksq**m if m >= 0 else size) for m in orders}
                if any(m < 0 for m in orders):
                    for m in orders:
                        if m < 0:
                            weights[m] = mpmath.mpf(size) / mpmath.mpf(ksq ** (-m))
                vals = [
                    _eval_compiled(cv, tpow, xpow) if cv is not None else None
                    for cv in per_field
                ]
                for i, j in pairs:
                    vi, vj = vals[i], vals[j]
                    if vi is None or vj is None:
                        continue
                    dot = mpmath.mpf(0)
                    for (ar, ai), (br, bi) in zip(vi, vj):
                        dot += ar * br + ai * bi
                    dot += dot  # conj pair at -k doubles the real part
                    for m in orders:
                        tables[(i, j, m)][ig] += weights[m] * dot
        return tables


class EstimatorTables:
    """Sampled Gram tables for one expansion on one grid.

    Building the tables costs the grid evaluation once; assembling the per-R
    estimator values afterwards is cheap arithmetic, so bisections reuse one
    instance across all probed Reynolds parameters.
    """

    def __init__(self, exp, n, grid=None, precision=DEFAULT_EVAL_PRECISION):
        self.exp = exp
        self.n = n
        self.grid = list(grid) if grid is not None else default_grid()
        if self.grid[0] != 0 or any(
            b <= a for a, b in zip(self.grid, self.grid[1:])
        ):
            raise ValueError("grid must be strictly increasing and start at 0")
        self.precision = precision
        sym = exp.symmetry
        self._matrices = list(sym.reduced_plus) if sym is not None else None
        self._coeff_tables = None
        self._tail_tables = None

    def coeff_tables(self):
        """Cross Grams <u_i, u_j>_m for m in {n, n+1}."""
        if self._coeff_tables is None:
            self._coeff_tables = sample_gram_tables(
                self.exp.coeffs, (self.n, self.n + 1), self.grid, self.precision,
                self._matrices,
            )
        return self._coeff_tables

    def tail_tables(self):
        """Cross Grams <tail_i, tail_j>_n for the residual orders."""
        if self._tail_tables is None:
            tails = residual_tail(self.exp)
            self._tail_tables = sample_gram_tables(
                tails, (self.n,), self.grid, self.precision, self._matrices
            )
        return self._tail_tables

    # -- per-R assembly; everything below returns lists of mpf over the grid --

    def _vol(self):
        return (2 * mpmath.pi) ** 3

    def _sqrt_clamped(self, x):
        # tiny negatives are cancellation noise from exact zeros
        return mpmath.sqrt(x) if x > 0 else mpmath.mpf(0)

    def growth_samples(self, R, m, variant):
        kind, M = parse_variant(variant)
        if kind == "rough":
            return self._growth_intermediate_samples(R, m, -1)
        if kind == "tautological":
            return self._growth_intermediate_samples(R, m, self.exp.N)
        if M > self.exp.N:
            raise ValueError("intermediate order M exceeds N")
        return self._growth_intermediate_samples(R, m, M)

    def _growth_intermediate_samples(self, R, m, M):
        tables = self.coeff_tables()
        N = self.exp.N
        with mpmath.workprec(self.precision):
            Rf = mpmath.mpf(R)
            vol = self._vol()
            Rpow = [Rf**j for j in range(N + 1)]
            out = []
            for ig in range(len(self.grid)):
                head = mpmath.mpf(0)
                for i in range(M + 1):
                    for j in range(i, M + 1):
                        term = Rpow[i] * Rpow[j] * tables[(i, j, m)][ig]
                        head += term if i == j else 2 * term
                total = self._sqrt_clamped(vol * head)
                for j in range(M + 1, N + 1):
                    total += Rpow[j] * self._sqrt_clamped(vol * tables[(j, j, m)][ig])
                out.append(total)
            return out

    def error_samples(self, R, variant, constants):
        kind, _ = parse_variant(variant)
        if kind == "tautological":
            return self._error_tautological_samples(R)
        return self._error_rough_samples(R, constants)

    def _error_tautological_samples(self, R):
        tables = self.tail_tables()
        N = self.exp.N
        nt = N + 1
        with mpmath.workprec(self.precision):
            Rf = mpmath.mpf(R)
            vol = self._vol()
            Rpow = [Rf ** (N + 1 + i) for i in range(nt)]
            out = []
            for ig in range(len(self.grid)):
                acc = mpmath.mpf(0)
                for i in range(nt):
                    for j in range(i, nt):
                        term = Rpow[i] * Rpow[j] * tables[(i, j, self.n)][ig]
                        acc += term if i == j else 2 * term
                out.append(self._sqrt_clamped(vol * acc))
            return out

    def _error_rough_samples(self, R, constants):
        K = constants.K_of(self.n)
        tables = self.coeff_tables()
        N = self.exp.N
        with mpmath.workprec(self.precision):
            Rf = mpmath.mpf(R)
            vol = self._vol()
            Kf = mpmath.mpf(K)
            out = []
            for ig in range(len(self.grid)):
                norms_n = [
                    self._sqrt_clamped(vol * tables[(j, j, self.n)][ig])
                    for j in range(N + 1)
                ]
                norms_n1 = [
                    self._sqrt_clamped(vol * tables[(j, j, self.n + 1)][ig])
                    for j in range(N + 1)
                ]
                total = mpmath.mpf(0)
                for j in range(N + 1, 2 * N + 2):
                    inner = mpmath.mpf(0)
                    for l in range(j - N - 1, N + 1):
                        inner += norms_n[l] * norms_n1[j - l - 1]
                    total += Rf**j * inner
                out.append(Kf * total)
            return out


# -- the per-R estimator set -----------------------------------------------------


def _clamped_pchip(grid, values):
    """Monotone-shape-preserving positive interpolant.

    The estimators decay exponentially, so the cubic is fitted to the
    logarithm: a pure exponential is then reproduced exactly and the result
    can never dip below zero between nodes.  Exact zeros are pushed to a
    floor far below any meaningful estimator value.
    """
    floor = 1e-300
    logs = [math.log(max(v, floor)) for v in values]
    interp = PchipInterpolator(grid, logs, extrapolate=False)
    top = grid[-1]
    first = max(values[0], 0.0)
    last = max(values[-1], 0.0)

    def f(t):
        if t <= 0:
            return first
        if t >= top:
            return last
        v = math.exp(float(interp(t)))
        return 0.0 if v <= 1e-290 else v

    return f


@dataclass
class EstimatorSet:
    """Sampled + interpolated (D_n, D_{n+1}, eps_n) for one Reynolds value."""

    R: float
    n: int
    variant: str
    N: int
    grid: list
    D_n: list  # float samples
    D_n1: list
    eps_n: list
    precision: int
    D_n_f: object = None
    D_n1_f: object = None
    eps_n_f: object = None

    def __post_init__(self):
        self.D_n_f = _clamped_pchip(self.grid, self.D_n)
        self.D_n1_f = _clamped_pchip(self.grid, self.D_n1)
        self.eps_n_f = _clamped_pchip(self.grid, self.eps_n)

    @property
    def t_max(self):
        return self.grid[-1]


def build_estimator_set(
    exp,
    R,
    n,
    variant="tautological",
    grid=None,
    precision=DEFAULT_EVAL_PRECISION,
    constants=None,
    tables=None,
):
    """Sample D_n, D_{n+1} and eps_n on the grid and wrap them as clamped
    monotone-cubic interpolants.

    The rough and intermediate variants use the rough error formula (the
    constant K_n must be configured); the tautological variant needs the
    residual tails.  Pass a prebuilt EstimatorTables to share sampling work
    across R values.
    """
    kind, M = parse_variant(variant)
    if constants is None:
        constants = ConstantsTable()
    if tables is None:
        tables = EstimatorTables(exp, n, grid=grid, precision=precision)
    elif tables.n != n:
        raise ValueError("tables were built for order %d, not %d" % (tables.n, n))
    if R < 0:
        raise ValueError("R must be nonnegative")

    D_n = tables.growth_samples(R, n, variant)
    D_n1 = tables.growth_samples(R, n + 1, variant)
    eps = tables.error_samples(R, variant, constants)

    def lower(vals):
        return [float(v) for v in vals]

    est = EstimatorSet(
        R=float(R),
        n=n,
        variant=variant_label(variant),
        N=exp.N,
        grid=list(tables.grid),
        D_n=lower(D_n),
        D_n1=lower(D_n1),
        eps_n=lower(eps),
        precision=tables.precision,
    )
    _check_invariants(est, exp)
    return est


def _check_invariants(est, exp):
    for name, vals in (("D_n", est.D_n), ("D_n+1", est.D_n1), ("eps_n", est.eps_n)):
        for v in vals:
            if not math.isfinite(v) or v < 0:
                raise ValueError("estimator sample %s = %s is invalid" % (name, v))
    if exp.N >= 1 and est.eps_n[0] != 0.0:
        if est.eps_n[0] > 1e-30 * max(est.eps_n):
            raise ValueError("eps_n(0) = %s should vanish for N >= 1" % (est.eps_n[0],))
        est.eps_n[0] = 0.0


def export_csv(est, path):
    """Write (t, D_n, D_{n+1}, eps_n) rows with a configuration header."""
    import csv

    with open(path, "w", newline="") as fh:
        fh.write(
            "# R=%.17g N=%d n=%d variant=%s precision=%d\n"
            % (est.R, est.N, est.n, est.variant, est.precision)
        )
        writer = csv.writer(fh)
        writer.writerow(["t", "D_%d" % est.n, "D_%d" % (est.n + 1), "eps_%d" % est.n])
        for t, a, b, c in zip(est.grid, est.D_n, est.D_n1, est.eps_n):
            writer.writerow(["%.17g" % t, "%.17g" % a, "%.17g" % b, "%.17g" % c])

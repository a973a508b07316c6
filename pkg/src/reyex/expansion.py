"""The Reynolds-expansion recursion.

u_0(t) = e^{t Delta} u_*,  u_j(t) = sum_{l=0}^{j-1} Duhamel(P(u_l, u_{j-l-1})),

computed either plainly (pair convolution over full supports) or with
symmetry pruning: only one representative wave vector per orbit of the
reduced symmetry group (extended by complex conjugation) is convolved, and
the rest of the orbit is materialized through the coefficient-propagation
identity.  Both paths produce symbolically identical coefficients.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field as dc_field

from .fields import (
    TimeField,
    bilinear_P,
    convolution_coefficient,
    heat_apply,
    is_canonical,
    project_mode,
    wave_norm_sq,
)
from .symmetry import (
    GroupElement,
    SymmetryData,
    _mat_vec,
    find_symmetries,
    orbit_partition,
    propagate_coefficient,
)
from .timepoly import TP_ZERO

__all__ = [
    "Expansion",
    "ResourceLimitError",
    "CacheError",
    "expand",
    "residual_tail",
    "cache_store",
    "cache_load",
]

CACHE_FORMAT = "reyex-cache/1"
DEFAULT_TERM_CEILING = 10_000_000


class ResourceLimitError(RuntimeError):
    """Raised when an expansion exceeds the configured term ceiling; carries
    the completed orders as .partial."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CacheError(RuntimeError):
    pass


@dataclass
class Expansion:
    datum_id: str
    N: int
    coeffs: list  # TimeField, u_0 .. u_N
    symmetry: SymmetryData | None
    meta: list = dc_field(default_factory=list)
    tails: list | None = None  # residual tail fields, j = N+1 .. 2N+1

    def order_stats(self, j):
        u = self.coeffs[j]
        polys = [p for vec in u.coeffs.values() for p in vec]
        return {
            "order": j,
            "nonzero_coefficients": u.num_modes(),
            "canonical_modes": len(u.coeffs),
            "orbits": self._orbit_count(u),
            "terms": sum(p.num_terms() for p in polys),
            "degree_t": max((p.degree_t() for p in polys), default=-1),
            "degree_exp": max((p.degree_exp() for p in polys), default=-1),
        }

    def _orbit_count(self, u):
        if self.symmetry is None:
            return None
        mats = list(self.symmetry.reduced_union)
        if not mats:
            return None
        full = set()
        for k in u.coeffs:
            full.add(k)
            full.add((-k[0], -k[1], -k[2]))
        return len(orbit_partition(full, mats))


def _neg(k):
    return (-k[0], -k[1], -k[2])


def _zero_vec(vec):
    return vec[0].is_zero() and vec[1].is_zero() and vec[2].is_zero()


def _term_count(field):
    return sum(p.num_terms() for vec in field.coeffs.values() for p in vec)


def _candidate_support(full_a, full_b):
    out = set()
    for h in full_a:
        for h2 in full_b:
            k = (h[0] + h2[0], h[1] + h2[1], h[2] + h2[2])
            if k != (0, 0, 0):
                out.add(k)
    return out


def _orbits_full(keys, elements):
    """Orbits of a full-lattice key set under the group matrices plus
    negation (reality supplies -k for free)."""
    orbits = []
    assigned = set()
    mats = [g.S for g, _ in elements]
    for k in sorted(keys):
        if k in assigned:
            continue
        orbit = {k, _neg(k)}
        frontier = [k, _neg(k)]
        while frontier:
            cur = frontier.pop()
            for S in mats:
                nxt = _mat_vec(S, cur)
                if nxt not in orbit:
                    orbit.add(nxt)
                    orbit.add(_neg(nxt))
                    frontier.extend((nxt, _neg(nxt)))
        orbit &= keys | {x for x in orbit if x in keys}
        orbit = {x for x in orbit if x in keys}
        orbits.append(orbit)
        assigned |= orbit
    return orbits


def _materialize_orbit(rep, rep_vec, orbit, elements, j):
    """Spread the representative coefficient over its orbit.

    Returns a map of canonical wave vectors to coefficient 3-vectors.
    BFS from the representative; each step is either a group propagation or
    a conjugation (k -> -k).
    """
    known = {rep: rep_vec}
    queue = [rep]
    while queue:
        cur = queue.pop()
        vec = known[cur]
        nk = _neg(cur)
        if nk in orbit and nk not in known:
            known[nk] = (vec[0].conj(), vec[1].conj(), vec[2].conj())
            queue.append(nk)
        for g, sigma in elements:
            k2, vec2 = propagate_coefficient(vec, cur, g, sigma, j)
            if k2 in orbit and k2 not in known:
                known[k2] = vec2
                queue.append(k2)
    if len(known) != len(orbit):
        raise RuntimeError("orbit not reachable from representative %s" % (rep,))
    return {k: v for k, v in known.items() if is_canonical(k)}


def _duhamel_vec(k, vec):
    ksq = wave_norm_sq(k)
    return tuple(p.heat_convolve(ksq) for p in vec)


def _sum_convolutions(fulls, pairs, k):
    """sum over (l, m) in pairs of the raw convolution of u_l, u_m at k."""
    acc = None
    for l, m in pairs:
        raw = convolution_coefficient(fulls[l], fulls[m], k)
        if raw is None:
            continue
        if acc is None:
            acc = list(raw)
        else:
            acc[0] = acc[0] + raw[0]
            acc[1] = acc[1] + raw[1]
            acc[2] = acc[2] + raw[2]
    return acc


def _bilinear_order_field(fulls, pairs, elements, j, heat=True):
    """The field sum_{(l,m) in pairs} P(u_l, u_m), optionally Duhamel'd,
    computed at orbit representatives only and propagated."""
    cand = set()
    for l, m in pairs:
        cand |= _candidate_support(fulls[l], fulls[m])
    coeffs = {}
    for orbit in _orbits_full(cand, elements):
        rep = min(k for k in orbit if is_canonical(k))
        raw = _sum_convolutions(fulls, pairs, rep)
        if raw is None:
            continue
        vec = project_mode(rep, raw)
        if _zero_vec(vec):
            continue
        if heat:
            vec = _duhamel_vec(rep, vec)
        coeffs.update(_materialize_orbit(rep, vec, orbit, elements, j))
    return TimeField(coeffs, validate=False)


def _bilinear_order_field_plain(coeff_fields, pairs, heat=True):
    total = None
    for l, m in pairs:
        p = bilinear_P(coeff_fields[l], coeff_fields[m])
        total = p if total is None else total + p
    if total is None:
        total = TimeField({}, validate=False)
    if heat:
        total = total.map_coeffs(lambda k, vec: _duhamel_vec(k, vec))
    return total


def expand(
    datum,
    N,
    use_symmetry=True,
    symmetry=None,
    datum_id="",
    term_ceiling=DEFAULT_TERM_CEILING,
    progress=None,
):
    """Compute the expansion coefficients u_0 .. u_N for a static datum.

    datum is a TimeField with constant coefficients.  With use_symmetry the
    datum's symmetry group is discovered (or taken from the symmetry
    argument) and the recursion only convolves orbit representatives.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    datum.validate()
    sym = None
    if use_symmetry:
        sym = symmetry if symmetry is not None else (
            find_symmetries(datum) if datum else SymmetryData.trivial()
        )
    u0 = heat_apply(datum)
    coeffs = [u0]
    meta = []
    total_terms = _term_count(u0)
    exp = Expansion(datum_id=datum_id, N=N, coeffs=coeffs, symmetry=sym, meta=meta)
    meta.append(exp.order_stats(0))

    elements = None
    fulls = [u0.full_coeffs()] if sym is not None else None
    if sym is not None:
        elements = [(GroupElement(S, a), s) for S, (a, s) in sym.transform_table().items()]

    for j in range(1, N + 1):
        t0 = time.monotonic()
        pairs = [(l, j - 1 - l) for l in range(j)]
        if sym is not None:
            uj = _bilinear_order_field(fulls, pairs, elements, j, heat=True)
            fulls.append(uj.full_coeffs())
        else:
            uj = _bilinear_order_field_plain(coeffs, pairs, heat=True)
        coeffs.append(uj)
        total_terms += _term_count(uj)
        exp.N = j
        stats = exp.order_stats(j)
        stats["wall_seconds"] = round(time.monotonic() - t0, 3)
        meta.append(stats)
        if progress is not None:
            progress(stats)
        if total_terms > term_ceiling:
            exp.N = j
            raise ResourceLimitError(
                "term ceiling exceeded at order %d (%d terms > %d)"
                % (j, total_terms, term_ceiling),
                partial=exp,
            )
    exp.N = N
    return exp


def residual_tail(exp):
    """The tail coefficients of d u^N/dt - Delta u^N - R P(u^N, u^N):

    tail_j = - sum_{l=j-N-1}^{N} P(u_l, u_{j-l-1}),   j = N+1 .. 2N+1.

    Cached on the expansion after the first call.
    """
    if exp.tails is not None:
        return exp.tails
    N = exp.N
    tails = []
    if exp.symmetry is not None:
        elements = [
            (GroupElement(S, a), s) for S, (a, s) in exp.symmetry.transform_table().items()
        ]
        fulls = [u.full_coeffs() for u in exp.coeffs]
        for j in range(N + 1, 2 * N + 2):
            pairs = [(l, j - 1 - l) for l in range(j - N - 1, N + 1)]
            tails.append(-_bilinear_order_field(fulls, pairs, elements, j, heat=False))
    else:
        for j in range(N + 1, 2 * N + 2):
            pairs = [(l, j - 1 - l) for l in range(j - N - 1, N + 1)]
            tails.append(-_bilinear_order_field_plain(exp.coeffs, pairs, heat=False))
    exp.tails = tails
    return tails


# -- persistent cache ----------------------------------------------------------


def _symmetry_payload(sym):
    if sym is None:
        return None

    def enc(gs):
        return sorted([list(g.S[0]), list(g.S[1]), list(g.S[2]), list(g.a)] for g in gs)

    return {"plus": enc(sym.plus), "minus": enc(sym.minus)}


def _symmetry_from_payload(payload):
    if payload is None:
        return None

    def dec(items):
        out = []
        for row in items:
            S = (tuple(row[0]), tuple(row[1]), tuple(row[2]))
            out.append(GroupElement(S, tuple(row[3])))
        return frozenset(out)

    plus = dec(payload["plus"])
    minus = dec(payload["minus"])
    return SymmetryData(
        plus=plus,
        minus=minus,
        reduced_plus=frozenset(g.S for g in plus),
        reduced_minus=frozenset(g.S for g in minus),
    )


def _field_digest(field):
    payload = json.dumps(field.to_payload(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def cache_store(exp, path):
    """Write an expansion to a cache directory; exact textual round trip."""
    os.makedirs(path, exist_ok=True)
    manifest = {
        "format": CACHE_FORMAT,
        "datum_id": exp.datum_id,
        "N": exp.N,
        "symmetry": _symmetry_payload(exp.symmetry),
        "orders": exp.meta,
        "datum_hash": _field_digest(exp.coeffs[0]),
        "has_tails": exp.tails is not None,
    }
    for j, u in enumerate(exp.coeffs):
        with open(os.path.join(path, "u_%03d.json" % j), "w") as fh:
            json.dump(u.to_payload(name=exp.datum_id, j=j), fh)
    if exp.tails is not None:
        for i, tail in enumerate(exp.tails):
            j = exp.N + 1 + i
            with open(os.path.join(path, "tail_%03d.json" % j), "w") as fh:
                json.dump(tail.to_payload(name=exp.datum_id, j=j), fh)
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    return manifest


def cache_load(path):
    """Load an expansion cache; re-validates every field invariant."""
    manifest_path = os.path.join(path, "manifest.json")
    if not os.path.exists(manifest_path):
        raise CacheError("no manifest.json in %s" % (path,))
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != CACHE_FORMAT:
        raise CacheError("unsupported cache format %r" % (manifest.get("format"),))
    N = manifest["N"]
    coeffs = []
    for j in range(N + 1):
        fpath = os.path.join(path, "u_%03d.json" % j)
        try:
            with open(fpath) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CacheError("unreadable cache file %s: %s" % (fpath, exc)) from exc
        try:
            coeffs.append(TimeField.from_payload(payload))
        except ValueError as exc:
            raise CacheError("invalid field in %s: %s" % (fpath, exc)) from exc
    tails = None
    if manifest.get("has_tails"):
        tails = []
        for j in range(N + 1, 2 * N + 2):
            fpath = os.path.join(path, "tail_%03d.json" % j)
            try:
                with open(fpath) as fh:
                    payload = json.load(fh)
                tails.append(TimeField.from_payload(payload))
            except (OSError, json.JSONDecodeError, ValueError) as exc:
                raise CacheError("invalid tail in %s: %s" % (fpath, exc)) from exc
    exp = Expansion(
        datum_id=manifest.get("datum_id", ""),
        N=N,
        coeffs=coeffs,
        symmetry=_symmetry_from_payload(manifest.get("symmetry")),
        meta=manifest.get("orders", []),
        tails=tails,
    )
    if _field_digest(exp.coeffs[0]) != manifest.get("datum_hash"):
        raise CacheError("datum hash mismatch; cache does not match its manifest")
    return exp

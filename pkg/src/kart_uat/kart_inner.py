"""Sprecher-type inner system: weights lambda_q and monotone inner functions h_p.

The generator psi is the monotone Koeppen variant of Sprecher's function,
evaluated on the base-gamma lattice of the chosen depth and interpolated
linearly in between.  With gamma = 2d + 2 and beta(r) = (d^r - 1)/(d - 1) the
lattice values satisfy a two-term recursion: if A, B are the values at a level
r - 1 lattice point and its right neighbour, the level r digit i gives

    A' = A + i * g^-beta(r)                       (i < gamma - 1)
    A' = (A + (gamma - 2) g^-beta(r) + B) / 2     (i = gamma - 1)

and B' is A' of the next digit (or B after the last digit).  The recursion
works on exact rationals and on numpy arrays alike.

Branch p (p' = p - 1 = 0..2d) uses the shifted generator psi(x + p' a) and is
offset and rescaled into its own slice of [0, 1]:

    h_p(x) = (p' S + psi(x + p' a)) / ((2d + 1) S),   S = 1 + psi(2d a)

so every h_p is nondecreasing from [0, 1] into [0, 1] and the branches occupy
disjoint key ranges.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .ratpoly import format_rational, parse_rational

log = logging.getLogger(__name__)


def _beta(d: int, r: int) -> int:
    return (d ** r - 1) // (d - 1)


@dataclass(frozen=True)
class KartBasis:
    d: int
    gamma: int
    depth: int
    lam: tuple
    shift_a: Fraction
    normalization: Fraction

    def __post_init__(self):
        if self.d < 2 or self.depth < 2:
            raise ValidationError("basis needs d >= 2 and depth >= 2")
        if len(self.lam) != self.d or any(l <= 0 for l in self.lam):
            raise ValidationError("lambda must hold d positive rationals")
        if sum(self.lam) != 1:
            raise ValidationError("lambda must sum to exactly 1")

    @property
    def branches(self) -> int:
        return 2 * self.d + 1

    @cached_property
    def h_scale(self) -> Fraction:
        """S = 1 + psi(2d a), the width of one branch slice before rescaling."""
        return 1 + psi_exact(self, 2 * self.d * self.shift_a)

    @cached_property
    def lam_float(self) -> np.ndarray:
        return np.array([float(l) for l in self.lam])

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "gamma": self.gamma,
            "depth": self.depth,
            "lambda": [format_rational(l) for l in self.lam],
            "shift_a": format_rational(self.shift_a),
            "normalization": format_rational(self.normalization),
        }

    @classmethod
    def from_json(cls, obj) -> "KartBasis":
        try:
            basis = cls(int(obj["d"]), int(obj["gamma"]), int(obj["depth"]),
                        tuple(parse_rational(s) for s in obj["lambda"]),
                        parse_rational(obj["shift_a"]), parse_rational(obj["normalization"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed basis: {exc}") from exc
        ref = make_basis(basis.d, basis.depth)
        if ref != basis:
            raise ValidationError("basis fields are inconsistent with make_basis(d, depth)")
        return basis


def make_basis(d: int, depth: int = 8) -> KartBasis:
    """Truncated Sprecher weights, normalized to sum exactly to 1."""
    if d < 2:
        raise ValidationError(f"d must be >= 2, got {d}")
    if depth < 2:
        raise ValidationError(f"depth {depth} too small: the branch shift vanishes below depth 2")
    gamma = 2 * d + 2
    raw = [Fraction(1)]
    for q in range(2, d + 1):
        raw.append(sum(Fraction(1, gamma ** ((q - 1) * _beta(d, r))) for r in range(1, depth + 1)))
    total = sum(raw)
    norm = 1 / total
    lam = tuple(l * norm for l in raw)
    a = sum(Fraction(1, gamma ** r) for r in range(2, depth + 1))
    return KartBasis(d, gamma, depth, lam, a, norm)


def lambda_tail_bound(basis: KartBasis) -> Fraction:
    """Bound on the omitted series terms sum_{r > depth} gamma^-((q-1) beta(r)), q >= 2."""
    g, d, k = basis.gamma, basis.d, basis.depth
    return Fraction(2, g ** _beta(d, k + 1))


def _digits(j: int, gamma: int, depth: int) -> list:
    out = []
    for _ in range(depth):
        j, r = divmod(j, gamma)
        out.append(r)
    return out[::-1]


def psi_exact(basis: KartBasis, x) -> Fraction:
    """Generator psi at a rational x >= 0 (psi(1 + y) = 1 + psi(y))."""
    g, k, d = basis.gamma, basis.depth, basis.d
    x = Fraction(x)
    ip = math.floor(x)
    scaled = (x - ip) * g ** k
    j = math.floor(scaled)
    w = scaled - j
    digs = _digits(j, g, k)
    A, B = Fraction(digs[0], g), Fraction(digs[0] + 1, g)
    for level in range(2, k + 1):
        i = digs[level - 1]
        inc = Fraction(1, g ** _beta(d, level))
        mid = (A + (g - 2) * inc + B) / 2
        A, B = (A + i * inc if i < g - 1 else mid,
                A + (i + 1) * inc if i < g - 2 else (mid if i == g - 2 else B))
    return ip + A + w * (B - A)


def psi_float(basis: KartBasis, x) -> np.ndarray:
    """Vectorized float version of psi_exact."""
    g, k, d = basis.gamma, basis.depth, basis.d
    x = np.asarray(x, dtype=float)
    ip = np.floor(x)
    scaled = (x - ip) * float(g) ** k
    j = np.minimum(np.floor(scaled).astype(np.int64), g ** k - 1)
    w = scaled - j
    digs = []
    jj = j.copy()
    for _ in range(k):
        digs.append(jj % g)
        jj //= g
    digs = digs[::-1]
    A = digs[0] / g
    B = (digs[0] + 1) / g
    for level in range(2, k + 1):
        i = digs[level - 1]
        inc = float(g) ** (-_beta(d, level))
        mid = 0.5 * (A + (g - 2) * inc + B)
        A, B = (np.where(i < g - 1, A + i * inc, mid),
                np.where(i < g - 2, A + (i + 1) * inc, np.where(i == g - 2, mid, B)))
    return ip + A + w * (B - A)


_clamp_events = {"count": 0}


def clamp_events() -> int:
    """How often eval_h had to clamp into [0, 1] (should stay 0)."""
    return _clamp_events["count"]


def _check_branch(basis: KartBasis, p: int):
    if not 1 <= p <= basis.branches:
        raise ValidationError(f"branch index must be in 1..{basis.branches}, got {p}")


def eval_h(basis: KartBasis, p: int, x) -> Fraction:
    """Exact value of the p-th inner function (p = 1..2d+1) at x in [0, 1]."""
    _check_branch(basis, p)
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise ValidationError(f"x must lie in [0, 1], got {x}")
    q = p - 1
    S = basis.h_scale
    v = (q * S + psi_exact(basis, x + q * basis.shift_a)) / (basis.branches * S)
    if not 0 <= v <= 1:
        _clamp_events["count"] += 1
        log.warning("inner function clamped at p=%d x=%s", p, x)
        v = min(max(v, Fraction(0)), Fraction(1))
    return v


def eval_h_float(basis: KartBasis, p: int, x) -> np.ndarray:
    _check_branch(basis, p)
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    q = p - 1
    S = float(basis.h_scale)
    v = (q * S + psi_float(basis, x + q * float(basis.shift_a))) / (basis.branches * S)
    if np.any((v < 0) | (v > 1)):
        _clamp_events["count"] += 1
        log.warning("inner function clamped on branch %d", p)
        v = np.clip(v, 0.0, 1.0)
    return v


def inner_key(basis: KartBasis, p: int, x) -> Fraction:
    """sum_q lambda_q h_p(x_q), exact."""
    if len(x) != basis.d:
        raise ValidationError(f"point must have {basis.d} coordinates")
    return sum((l * eval_h(basis, p, xq) for l, xq in zip(basis.lam, x)), Fraction(0))


def inner_keys_float(basis: KartBasis, X) -> np.ndarray:
    """Keys of all branches at the rows of X; shape (2d+1, n)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != basis.d:
        raise ValidationError(f"points must have shape (n, {basis.d})")
    lam = basis.lam_float
    return np.array([sum(lam[q] * eval_h_float(basis, p, X[:, q]) for q in range(basis.d))
                     for p in range(1, basis.branches + 1)])


def separation(basis: KartBasis, lattice: int) -> dict:
    """How many branches give each lattice cell centre a key no other centre shares.

    Logged as an empirical property; the outer construction needs most
    branches to separate cells.
    """
    c = (np.arange(lattice) + 0.5) / lattice
    X = np.array(np.meshgrid(*[c] * basis.d, indexing="ij")).reshape(basis.d, -1).T
    K = inner_keys_float(basis, X)
    counts = np.zeros(X.shape[0], dtype=int)
    for row in K:
        _, inv, cnt = np.unique(row, return_inverse=True, return_counts=True)
        counts += cnt[inv] == 1
    out = {"points": int(X.shape[0]), "min_separating_branches": int(counts.min()),
           "required": basis.d + 1}
    log.info("separation: %s", out)
    return out

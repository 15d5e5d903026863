"""Rational-coefficient polynomials: canonical form, enumeration codec, evaluation,
and certified approximation of continuous functions on [0, 1].

Enumeration (codec_version 1)
-----------------------------
Every natural number is read as a word in two bijective numeration systems:

* bijective base 2 maps naturals to binary words: 0 -> "", 1 -> "0", 2 -> "1",
  3 -> "00", 4 -> "01", ...
* bijective base 3 maps naturals to ternary words in the same way.

A non-empty sequence of naturals is coded by writing each entry as a binary
word, joining the words with the letter "2" and reading the resulting ternary
word in bijective base 3.  This is a bijection between non-empty sequences and
the naturals, and both directions cost O(bit-length) big-integer operations.

A rational q is coded through its canonical continued fraction
[a0; a1, ..., ak] (ak >= 2 when k >= 1) as the sequence
(zigzag(a0), a1 - 1, ..., a(k-1) - 1, ak - 2).  Zero is [0] and gets code 0.

A polynomial with coefficients c0..cn (cn != 0) gets the internal code
1 + seq(r(c0), ..., r(c(n-1)), r(cn) - 1), and the zero polynomial gets 0.
The public 1-based index is internal code + 1, so the zero polynomial is p_1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import gmpy2
import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import CertificationError, ValidationError

CODEC_VERSION = 1
INDEX_OFFSET = 1  # public index = internal code + INDEX_OFFSET


# ---------------------------------------------------------------- rationals

def format_int(n: int) -> str:
    # gmpy2 avoids the interpreter's int/str digit limit for huge shifts
    return gmpy2.digits(gmpy2.mpz(n))


def parse_int(s: str) -> int:
    s = s.strip()
    if not s or not (s.lstrip("+-").isdigit()):
        raise ValidationError(f"not an integer: {s!r}")
    return int(gmpy2.mpz(s))


def format_rational(q) -> str:
    """Canonical text form ``"num/den"`` (denominator always written)."""
    q = Fraction(q)
    return f"{format_int(q.numerator)}/{format_int(q.denominator)}"


def parse_rational(s) -> Fraction:
    """Parse ``"num/den"`` or an integer string; reject non-reduced input."""
    if isinstance(s, bool):
        raise ValidationError(f"not a rational: {s!r}")
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, Fraction):
        return s
    if not isinstance(s, str):
        raise ValidationError(f"not a rational: {s!r}")
    if "/" in s:
        a, b = s.split("/", 1)
        num, den = parse_int(a), parse_int(b)
        if den <= 0:
            raise ValidationError(f"denominator must be positive: {s!r}")
        if math.gcd(num, den) != 1 and not (num == 0 and den == 1):
            raise ValidationError(f"rational not in lowest terms: {s!r}")
        return Fraction(num, den)
    return Fraction(parse_int(s))


def rational_from_cli(s: str) -> Fraction:
    """Lenient parse for command-line values: accepts "3/4", "2", "0.25", "1e-2"."""
    try:
        if "/" in s:
            a, b = s.split("/", 1)
            return Fraction(parse_int(a), parse_int(b))
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"not a number: {s!r}") from exc


# ---------------------------------------------------------------- polynomials

@dataclass(frozen=True)
class RationalPoly:
    """Polynomial with exact rational coefficients, ascending powers.

    Canonical form: the last coefficient is nonzero, or there are no
    coefficients at all (the zero polynomial).
    """

    coeffs: tuple = field(default=())

    def __post_init__(self):
        cs = []
        for c in self.coeffs:
            if isinstance(c, bool) or not isinstance(c, (int, Fraction)):
                raise ValidationError(f"coefficient must be int or Fraction, got {type(c).__name__}")
            cs.append(Fraction(c))
        if cs and cs[-1] == 0:
            raise ValidationError("non-canonical polynomial: trailing zero coefficient")
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def canonical(cls, coeffs) -> "RationalPoly":
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        return cls(tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def derivative(self) -> "RationalPoly":
        return RationalPoly.canonical([k * c for k, c in enumerate(self.coeffs)][1:])

    def to_json(self) -> list:
        return [format_rational(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, items) -> "RationalPoly":
        if not isinstance(items, list):
            raise ValidationError("polynomial must be a JSON array of rationals")
        return cls(tuple(parse_rational(s) for s in items))

    def __repr__(self):
        return f"RationalPoly([{', '.join(map(str, self.coeffs))}])"


def eval_poly(p: RationalPoly, t) -> Fraction:
    """Exact Horner evaluation at a rational point."""
    t = Fraction(t)
    acc = Fraction(0)
    for c in reversed(p.coeffs):
        acc = acc * t + c
    return acc


@lru_cache(maxsize=4096)
def _cheb_form(p: RationalPoly) -> np.ndarray:
    """Float coefficients of p in the basis T_k(2t - 1).

    The change of basis is done exactly, so evaluation through Clenshaw stays
    well conditioned even when the monomial coefficients are huge and cancel.
    """
    if p.is_zero:
        return np.zeros(1)
    c = [p.coeffs[-1]]
    for a in reversed(p.coeffs[:-1]):
        # multiply by t = (1 + u)/2 with u*T_k = (T_{k+1} + T_{|k-1|})/2
        n = len(c)
        out = [Fraction(0)] * (n + 1)
        for k, ck in enumerate(c):
            if ck == 0:
                continue
            out[k] += ck / 2
            if k == 0:
                out[1] += ck / 2
            else:
                out[k + 1] += ck / 4
                out[k - 1] += ck / 4
        out[0] += a
        c = out
    return np.array([float(x) for x in c])


def eval_poly_float(p: RationalPoly, t) -> np.ndarray:
    """Fast float evaluation (Clenshaw in the shifted Chebyshev basis)."""
    t = np.asarray(t, dtype=float)
    return C.chebval(2.0 * t - 1.0, _cheb_form(p))


def eval_poly_rounded(p: RationalPoly, t) -> np.ndarray:
    """Correctly rounded values of p at float points, via exact rational arithmetic."""
    t = np.asarray(t, dtype=float)
    cs = [gmpy2.mpq(c.numerator, c.denominator) for c in p.coeffs]
    out = np.empty(t.shape)
    flat = out.reshape(-1)
    for i, x in enumerate(t.reshape(-1)):
        xq = gmpy2.mpq(float(x))
        acc = gmpy2.mpq(0)
        for c in reversed(cs):
            acc = acc * xq + c
        flat[i] = float(acc)
    return out


# ---------------------------------------------------------------- codec

def _nat_to_bits(n: int) -> str:
    length = (n + 1).bit_length() - 1
    if length == 0:
        return ""
    return format(n - ((1 << length) - 1), "b").zfill(length)


def _bits_to_nat(s: str) -> int:
    if not s:
        return 0
    return (1 << len(s)) - 1 + int(s, 2)


def _nat_to_tern(n: int) -> str:
    m = gmpy2.mpz(2 * n + 1)
    length = int(m.num_digits(3))
    while gmpy2.mpz(3) ** length > m:
        length -= 1
    if length == 0:
        return ""
    v = gmpy2.mpz(n) - (gmpy2.mpz(3) ** length - 1) // 2
    return gmpy2.digits(v, 3).zfill(length)


def _tern_to_nat(s: str) -> int:
    if not s:
        return 0
    return int((gmpy2.mpz(3) ** len(s) - 1) // 2 + gmpy2.mpz(s, 3))


def encode_seq(seq) -> int:
    """Code a non-empty sequence of naturals as one natural."""
    seq = list(seq)
    if not seq or any(x < 0 for x in seq):
        raise ValidationError("sequence must be non-empty and non-negative")
    return _tern_to_nat("2".join(_nat_to_bits(x) for x in seq))


def decode_seq(n: int) -> list:
    return [_bits_to_nat(part) for part in _nat_to_tern(n).split("2")]


def _zigzag(a: int) -> int:
    return 2 * a if a >= 0 else -2 * a - 1


def _unzigzag(z: int) -> int:
    return z // 2 if z % 2 == 0 else -(z + 1) // 2


def continued_fraction(q: Fraction) -> list:
    """Canonical continued fraction [a0; a1, ..., ak] with ak >= 2 when k >= 1."""
    num, den = q.numerator, q.denominator
    out = []
    while True:
        a, r = divmod(num, den)
        out.append(a)
        if r == 0:
            return out
        num, den = den, r


def from_continued_fraction(terms) -> Fraction:
    h0, h1, k0, k1 = 1, terms[0], 0, 1
    for a in terms[1:]:
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
    return Fraction(h1, k1)


def encode_rational(q) -> int:
    q = Fraction(q)
    cf = continued_fraction(q)
    if len(cf) == 1:
        return encode_seq([_zigzag(cf[0])])
    seq = [_zigzag(cf[0])] + [a - 1 for a in cf[1:-1]] + [cf[-1] - 2]
    return encode_seq(seq)


def decode_rational(n: int) -> Fraction:
    seq = decode_seq(n)
    if len(seq) == 1:
        return Fraction(_unzigzag(seq[0]))
    terms = [_unzigzag(seq[0])] + [s + 1 for s in seq[1:-1]] + [seq[-1] + 2]
    return from_continued_fraction(terms)


def _check_index(n) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, type(gmpy2.mpz(0)))):
        raise ValidationError(f"polynomial index must be an integer, got {n!r}")
    n = int(n)
    if n < INDEX_OFFSET:
        raise ValidationError(f"polynomial index must be >= {INDEX_OFFSET}, got {n}")
    return n


def encode_poly(p: RationalPoly) -> int:
    """Public (1-based) index of a canonical polynomial."""
    if not isinstance(p, RationalPoly):
        raise ValidationError("encode_poly expects a RationalPoly")
    if p.is_zero:
        return INDEX_OFFSET
    codes = [encode_rational(c) for c in p.coeffs]
    codes[-1] -= 1  # last coefficient is nonzero, so its code is >= 1
    return 1 + encode_seq(codes) + INDEX_OFFSET


def decode_poly(n) -> RationalPoly:
    """Inverse of encode_poly; total on indices >= 1."""
    k = _check_index(n) - INDEX_OFFSET
    if k == 0:
        return RationalPoly(())
    codes = decode_seq(k - 1)
    codes[-1] += 1
    return RationalPoly(tuple(decode_rational(c) for c in codes))


@lru_cache(maxsize=1024)
def decode_poly_cached(n: int) -> RationalPoly:
    return decode_poly(n)


# ---------------------------------------------------------------- approximation

@dataclass(frozen=True)
class ApproxConfig:
    """Settings for approx_by_rational_poly."""

    degree_cap: int = 64
    grid: int = 10_000

    def degrees(self):
        yield 0
        deg = 1
        while deg < self.degree_cap:
            yield deg
            deg *= 2
        yield self.degree_cap


@lru_cache(maxsize=None)
def _shifted_chebyshev(n: int) -> tuple:
    """Integer monomial coefficients of T_k(2t - 1) for k = 0..n."""
    rows = [[1], [-1, 2]]
    while len(rows) <= n:
        a, b = rows[-1], rows[-2]
        nxt = [0] * (len(a) + 1)
        for i, c in enumerate(a):  # 2(2t - 1) * a
            nxt[i] -= 2 * c
            nxt[i + 1] += 4 * c
        for i, c in enumerate(b):
            nxt[i] -= c
        rows.append(nxt)
    return tuple(tuple(r) for r in rows[: n + 1])


def _rationalize(cheb: np.ndarray, eps: float) -> RationalPoly:
    n = len(cheb) - 1
    rows = _shifted_chebyshev(n)
    mono = [Fraction(0)] * (n + 1)
    for k, ck in enumerate(cheb):
        ck = Fraction(float(ck))
        if ck == 0:
            continue
        for i, r in enumerate(rows[k]):
            mono[i] += ck * r
    while mono and mono[-1] == 0:
        mono.pop()
    bound = max(1, math.ceil(2 * len(mono) / eps))
    return RationalPoly.canonical([c.limit_denominator(bound) for c in mono])


def grid_error(f, p: RationalPoly, grid: int) -> float:
    """Sup of |f - p| on an equispaced grid of [0, 1].

    Float evaluation is used first; when it reports a value below 1e-12 the
    polynomial is re-evaluated with correct rounding so exact matches give 0.
    """
    t = np.linspace(0.0, 1.0, grid)
    fv = np.asarray(f(t), dtype=float)
    err = float(np.max(np.abs(fv - eval_poly_float(p, t))))
    if err < 1e-12:
        err = float(np.max(np.abs(fv - eval_poly_rounded(p, t))))
    return err


def approx_by_rational_poly(f, eps: float, config: ApproxConfig | None = None):
    """Rational polynomial p with sampled sup |f - p| < eps on [0, 1].

    Chebyshev interpolants of degree 0, 1, 2, 4, ... (up to the cap) are tried
    until the grid error drops below eps/2; the monomial coefficients are then
    rounded to rationals with denominator at most 2(deg+1)/eps, which moves the
    polynomial by less than eps/2 on [0, 1].  Returns ``(p, measured_error)``.
    """
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    config = config or ApproxConfig()
    t = np.linspace(0.0, 1.0, config.grid)
    fv = np.asarray(f(t), dtype=float)
    if not np.all(np.isfinite(fv)):
        raise ValidationError("function returned non-finite values on [0, 1]")
    best = None
    for deg in config.degrees():
        cheb = C.chebinterpolate(lambda u: np.asarray(f((u + 1.0) / 2.0), dtype=float), deg)
        est = float(np.max(np.abs(C.chebval(2.0 * t - 1.0, cheb) - fv)))
        if best is None or est < best[1]:
            best = (cheb, est)
        if est < eps / 2:
            break
    else:
        p = _rationalize(best[0], eps)
        raise CertificationError(
            f"degree cap {config.degree_cap} reached: error {best[1]:.3e} >= eps/2 = {eps / 2:.3e}",
            stage="polynomial", achieved=best[1], required=eps / 2, best=(p, grid_error(f, p, config.grid)))
    p = _rationalize(cheb, eps)
    err = grid_error(f, p, config.grid)
    if not err < eps:
        raise CertificationError(
            f"rationalized polynomial error {err:.3e} >= eps = {eps:.3e}",
            stage="polynomial", achieved=err, required=eps, best=(p, err))
    return p, err

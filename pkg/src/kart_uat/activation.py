"""The universal activation sigma_alpha.

On the coding interval [(2m-1)a, 2ma] the activation equals p_m, the m-th
enumerated polynomial, in the local coordinate t = x/a - (2m-1).  On the gap
(2ma, (2m+1)a) it blends the polynomial extensions of p_m and p_(m+1) with a
C-infinity step B, and left of a it is the extension of p_1 (the zero
polynomial).  Values are computed lazily: only the polynomials whose intervals
are actually visited get decoded.

Shifts produced by the single-neuron construction are astronomically large, so
every evaluation path goes through exact local coordinates; a shift is never
converted to a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError
from .ratpoly import (CODEC_VERSION, decode_poly_cached, eval_poly, eval_poly_float,
                      format_rational, parse_rational)


@dataclass(frozen=True)
class ActivationSpec:
    alpha: Fraction = Fraction(1)
    codec_version: int = CODEC_VERSION

    def __post_init__(self):
        a = Fraction(self.alpha)
        if a <= 0:
            raise ValidationError(f"alpha must be positive, got {a}")
        if self.codec_version != CODEC_VERSION:
            raise ValidationError(
                f"codec_version {self.codec_version} is not supported (this build uses {CODEC_VERSION})")
        object.__setattr__(self, "alpha", a)

    def to_json(self) -> dict:
        return {"alpha": format_rational(self.alpha), "codec_version": self.codec_version}

    @classmethod
    def from_json(cls, obj) -> "ActivationSpec":
        try:
            return cls(parse_rational(obj["alpha"]), int(obj["codec_version"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed activation spec: {exc}") from exc


@dataclass(frozen=True)
class AnchorPoint:
    """Exact location of a point relative to the coding layout.

    kind is "coding" (m, t in [0, 1]), "gap" (m, s in (0, 1)) or "head"
    (t < 0, the local coordinate of p_1).
    """

    kind: str
    m: int | None
    local: Fraction

    @property
    def t(self):
        return self.local

    @property
    def s(self):
        return self.local


def _classify(N: int, frac):
    """Anchor for u = N + frac with integer N and 0 <= frac < 1."""
    if N <= 0:
        return "head", 1, N - 1 + frac
    if N % 2 == 1:
        return "coding", (N + 1) // 2, frac
    if frac == 0:
        return "coding", N // 2, frac + 1
    return "gap", N // 2, frac


def anchor_of(spec: ActivationSpec, x) -> AnchorPoint:
    """Classify a rational x into head / coding / gap with its exact local coordinate."""
    u = Fraction(x) / spec.alpha
    N = math.floor(u)
    kind, m, local = _classify(N, u - N)
    return AnchorPoint(kind, None if kind == "head" else m, local)


def blend(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1, psi(s)/(psi(s)+psi(1-s)) between."""
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    inner = (s > 0) & (s < 1)
    if np.any(inner):
        si = s[inner]
        z = 1.0 / (1.0 - si) - 1.0 / si  # B = 1/(1 + exp(-z))
        ez = np.exp(-np.abs(z))
        out[inner] = np.where(z >= 0, 1.0 / (1.0 + ez), ez / (1.0 + ez))
    return out if out.ndim else float(out)


def _gap_value(m: int, s):
    """(1 - B(s)) P_m + B(s) P_(m+1) in local gap coordinates; s may be an array."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    b = blend(s)
    out = np.zeros(s.shape)
    left = b < 1.0
    right = b > 0.0
    # skip a term exactly when its weight is 0, so huge extensions never meet a 0 factor
    if np.any(left):
        out[left] += (1.0 - b[left]) * eval_poly_float(decode_poly_cached(m), 1.0 + s[left])
    if np.any(right):
        out[right] += b[right] * eval_poly_float(decode_poly_cached(m + 1), s[right] - 1.0)
    return out


def sigma_eval(spec: ActivationSpec, x):
    """sigma_alpha(x) for a single rational or float x.

    Coding and head points return an exact Fraction; gap points return a float.
    """
    a = anchor_of(spec, Fraction(x))
    if a.kind == "coding":
        return eval_poly(decode_poly_cached(a.m), a.local)
    if a.kind == "head":
        return eval_poly(decode_poly_cached(1), a.local)
    return float(_gap_value(a.m, float(a.local))[0])


def coding_side(spec: ActivationSpec, m: int, x):
    """The polynomial extension P_m(x) = p_m(x/alpha - 2m + 1), exact for rational x."""
    return eval_poly(decode_poly_cached(m), Fraction(x) / spec.alpha - (2 * m - 1))


def gap_side(spec: ActivationSpec, m: int, x):
    """The gap formula of gap m evaluated at any x (B is 0 left of the gap, 1 right of it)."""
    s = Fraction(x) / spec.alpha - 2 * m
    if s <= 0:
        return eval_poly(decode_poly_cached(m), 1 + s)
    if s >= 1:
        return eval_poly(decode_poly_cached(m + 1), s - 1)
    return float(_gap_value(m, float(s))[0])


def sigma_affine(spec: ActivationSpec, w, theta, x) -> np.ndarray:
    """Vectorized sigma_alpha(w*x - theta) for float x with exact w and theta.

    The integer part of -theta/alpha is kept as a Python int; only the
    fractional part and w*x/alpha are formed in floating point.
    """
    x = np.asarray(x, dtype=float)
    c = -Fraction(theta) / spec.alpha
    K = math.floor(c)
    r = float(c - K)
    v = r + float(Fraction(w) / spec.alpha) * x
    n = np.floor(v)
    frac = v - n
    out = np.empty(x.shape)
    for nv in np.unique(n):
        sel = n == nv
        N = K + int(nv)
        f = frac[sel]
        if N <= 0:
            p1 = decode_poly_cached(1)
            # p_1 is the zero polynomial; skipping it also avoids float(N) overflow
            out[sel] = 0.0 if p1.is_zero else eval_poly_float(p1, (N - 1) + f)
        elif N % 2 == 1:
            out[sel] = eval_poly_float(decode_poly_cached((N + 1) // 2), f)
        else:
            m = N // 2
            vals = _gap_value(m, f)
            at_edge = f == 0  # x = 2m*alpha exactly: coding convention t = 1
            if np.any(at_edge):
                vals[at_edge] = eval_poly_float(decode_poly_cached(m), 1.0)
            out[sel] = vals
    return out


def sigma_array(spec: ActivationSpec, x) -> np.ndarray:
    return sigma_affine(spec, 1, 0, x)


def sigma_derivative_probe(spec: ActivationSpec, x: float, order: int, h: float) -> float:
    """Central finite-difference estimate of the first or second derivative."""
    if not h > 0:
        raise ValidationError("h must be positive")
    if order not in (1, 2):
        raise ValidationError("order must be 1 or 2")
    pts = np.array([x - h, x, x + h])
    lo, mid, hi = sigma_array(spec, pts)
    if order == 1:
        return (hi - lo) / (2 * h)
    return (hi - 2 * mid + lo) / (h * h)

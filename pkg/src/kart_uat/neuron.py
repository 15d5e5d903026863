"""One-neuron approximation of univariate continuous functions.

For f on [a, b] the neuron x -> sigma_alpha(w x - theta) with
w = alpha/(b - a) and theta = alpha a/(b - a) - (2m - 1) alpha maps [a, b]
onto the m-th coding interval, where it reproduces p_m.  Choosing p_m close to
h(t) = f(a + (b - a) t) gives the approximation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np

from .activation import ActivationSpec, sigma_affine, sigma_eval
from .errors import CertificationError, ValidationError
from .ratpoly import (CODEC_VERSION, ApproxConfig, approx_by_rational_poly, decode_poly_cached,
                      encode_poly, eval_poly, format_int, format_rational, parse_int,
                      parse_rational)

MARGIN = 0.9


def neuron_params(spec: ActivationSpec, a, b, m: int):
    """Exact (w, theta) placing [a, b] on the m-th coding interval."""
    a, b = Fraction(a), Fraction(b)
    w = spec.alpha / (b - a)
    theta = spec.alpha * a / (b - a) - (2 * m - 1) * spec.alpha
    return w, theta


@dataclass(frozen=True)
class NeuronCert:
    w: Fraction
    theta: Fraction
    a: Fraction
    b: Fraction
    eps_target: float
    eps_measured: float
    poly_index: int
    spec: ActivationSpec

    def __post_init__(self):
        w, theta = neuron_params(self.spec, self.a, self.b, self.poly_index)
        if self.w != w or self.theta != theta:
            raise ValidationError("certificate parameters do not match its interval and index")

    @property
    def poly(self):
        return decode_poly_cached(self.poly_index)

    def affine_triple(self):
        """(c0, c1, theta) of the three-number form: here c0 = 0 and c1 = 1."""
        return Fraction(0), Fraction(1), self.theta

    def to_json(self) -> dict:
        return {
            "codec_version": self.spec.codec_version,
            "alpha": format_rational(self.spec.alpha),
            "a": format_rational(self.a),
            "b": format_rational(self.b),
            "w": format_rational(self.w),
            "theta": format_rational(self.theta),
            "poly_index": format_int(self.poly_index),
            "poly": self.poly.to_json(),
            "eps_target": self.eps_target,
            "eps_measured": self.eps_measured,
        }

    @classmethod
    def from_json(cls, obj) -> "NeuronCert":
        try:
            spec = ActivationSpec(parse_rational(obj["alpha"]), int(obj["codec_version"]))
            return cls(parse_rational(obj["w"]), parse_rational(obj["theta"]),
                       parse_rational(obj["a"]), parse_rational(obj["b"]),
                       float(obj["eps_target"]), float(obj["eps_measured"]),
                       parse_int(obj["poly_index"]), spec)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed neuron certificate: {exc}") from exc


def eval_neuron(cert: NeuronCert, x):
    """Neuron output at a rational x; exact on [a, b]."""
    x = Fraction(x)
    t = (x - cert.a) / (cert.b - cert.a)
    if 0 <= t <= 1:
        return eval_poly(cert.poly, t)
    return sigma_eval(cert.spec, cert.w * x - cert.theta)


def eval_neuron_array(cert: NeuronCert, x) -> np.ndarray:
    return sigma_affine(cert.spec, cert.w, cert.theta, x)


def _exact_outputs(cert: NeuronCert, x: np.ndarray) -> np.ndarray:
    """Correctly rounded neuron outputs on [a, b] (used to confirm exact matches)."""
    p = [gmpy2.mpq(c.numerator, c.denominator) for c in cert.poly.coeffs]
    a = gmpy2.mpq(cert.a.numerator, cert.a.denominator)
    span = gmpy2.mpq((cert.b - cert.a).numerator, (cert.b - cert.a).denominator)
    out = np.empty(len(x))
    for i, xi in enumerate(x):
        t = (gmpy2.mpq(float(xi)) - a) / span
        acc = gmpy2.mpq(0)
        for c in reversed(p):
            acc = acc * t + c
        out[i] = float(acc)
    return out


def measure_neuron(cert: NeuronCert, f, grid: int) -> float:
    """Sup error of the neuron against f on an equispaced grid of [a, b]."""
    x = float(cert.a) + float(cert.b - cert.a) * np.linspace(0.0, 1.0, grid)
    x[-1] = float(cert.b)
    fx = np.asarray(f(x), dtype=float)
    err = float(np.max(np.abs(fx - eval_neuron_array(cert, x))))
    if err < 1e-12:
        err = float(np.max(np.abs(fx - _exact_outputs(cert, x))))
    return err


def approx1d(f, a, b, eps: float, spec: ActivationSpec | None = None,
             config: ApproxConfig | None = None, margin: float = MARGIN) -> NeuronCert:
    """Certified single-neuron approximation of f on [a, b]."""
    spec = spec or ActivationSpec()
    a, b = Fraction(a), Fraction(b)
    if not a < b:
        raise ValidationError(f"need a < b, got [{a}, {b}]")
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    stride_error = getattr(f, "stride_error", None)
    if stride_error is not None and not stride_error < eps / 10:
        raise ValidationError(
            f"table stride too coarse: interpolation error estimate {stride_error:.3e} >= eps/10")
    config = config or ApproxConfig()
    fa, span = float(a), float(b - a)

    def h(t):
        return f(fa + span * np.asarray(t, dtype=float))

    p, _ = approx_by_rational_poly(h, margin * eps, config)
    m = encode_poly(p)
    w, theta = neuron_params(spec, a, b, m)
    cert = NeuronCert(w, theta, a, b, float(eps), 0.0, m, spec)
    measured = measure_neuron(cert, f, config.grid)
    if not measured < eps:
        raise CertificationError(
            f"neuron error {measured:.3e} >= eps {eps:.3e}", stage="neuron",
            achieved=measured, required=eps)
    return NeuronCert(w, theta, a, b, float(eps), measured, m, spec)


__all__ = ["NeuronCert", "approx1d", "eval_neuron", "eval_neuron_array", "measure_neuron",
           "neuron_params", "MARGIN", "CODEC_VERSION"]

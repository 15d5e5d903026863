"""Numerical outer function g for the superposition f(x) ~ sum_p g(key_p(x)).

g is stored as an exact constant plus a piecewise-linear variation on a
uniform knot grid of [0, 1].  Each stage of build_outer

1. moves the mean residual into the constant (mean / (2d + 1) per branch), so
   constant functions are absorbed exactly in one stage;
2. sweeps the branches once, fitting the remaining residual by damped
   least-squares hat-function deposits at the branch keys (Gauss-Seidel
   backfitting, each branch sees the residual left by the previous ones);
3. scales the whole update by the largest step in 1, 1/2, 1/4, ... that lowers
   the sup residual on the staggered lattice.  If no step helps, the stage is
   recorded as a stall (same residual, step 0).

f is sampled on a uniform lattice; the residual is measured on the staggered
lattice of cell centres.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConvergenceError, ValidationError
from .kart_inner import KartBasis, inner_keys_float
from .ratpoly import format_rational, parse_rational

log = logging.getLogger(__name__)

DEFAULT_KNOTS = 300
DEFAULT_DAMPING = 0.3
DEFAULT_RIDGE = 1e-3
MIN_STEP = 2.0 ** -10


@dataclass(frozen=True)
class OuterTable:
    """g(t) = constant + piecewise-linear interpolation of values on keys."""

    knots: int
    values: np.ndarray
    constant: Fraction = Fraction(0)
    stages_used: int = 0
    residual_history: tuple = ()
    steps: tuple = ()
    lattice: int = 0
    damping: float = DEFAULT_DAMPING
    interpolation: str = field(default="piecewise-linear")

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.knots + 1,):
            raise ValidationError(f"expected {self.knots + 1} values, got {vals.shape}")
        h = self.residual_history
        if any(b > a for a, b in zip(h[1:], h[2:])):
            raise ValidationError("residual history increases after stage 1")
        object.__setattr__(self, "values", vals)

    @property
    def keys(self) -> tuple:
        return tuple(Fraction(i, self.knots) for i in range(self.knots + 1))

    @property
    def key_grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.knots + 1)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > 1)):
            log.warning("outer key outside [0, 1]; clamped to the nearest breakpoint")
        return float(self.constant) + np.interp(t, self.key_grid, self.values)

    def to_json(self) -> dict:
        return {
            "keys": [format_rational(k) for k in self.keys],
            "constant": format_rational(self.constant),
            "values": [float(v) for v in self.values],
            "interpolation": self.interpolation,
            "stages_used": self.stages_used,
            "residual_history": [float(r) for r in self.residual_history],
            "steps": [float(s) for s in self.steps],
            "lattice": self.lattice,
            "damping": self.damping,
        }

    @classmethod
    def from_json(cls, obj) -> "OuterTable":
        try:
            keys = [parse_rational(k) for k in obj["keys"]]
            n = len(keys) - 1
            if n < 1 or keys != [Fraction(i, n) for i in range(n + 1)]:
                raise ValidationError("outer keys must be the uniform grid i/n of [0, 1]")
            return cls(n, np.array(obj["values"], dtype=float), parse_rational(obj["constant"]),
                       int(obj["stages_used"]), tuple(float(r) for r in obj["residual_history"]),
                       tuple(float(s) for s in obj.get("steps", [])), int(obj.get("lattice", 0)),
                       float(obj.get("damping", DEFAULT_DAMPING)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed outer table: {exc}") from exc


def lattice_points(d: int, n: int, staggered: bool = False) -> np.ndarray:
    """Uniform n^d lattice of [0,1]^d, or the (n-1)^d cell centres when staggered."""
    if staggered:
        ax = (np.arange(n - 1) + 0.5) / (n - 1)
    else:
        ax = np.linspace(0.0, 1.0, n)
    return np.array(np.meshgrid(*[ax] * d, indexing="ij")).reshape(d, -1).T


def _superpose(keys: np.ndarray, knots: np.ndarray, constant: Fraction, values: np.ndarray):
    total = float(keys.shape[0] * constant)
    return total + sum(np.interp(k, knots, values) for k in keys)


def eval_superposition(basis: KartBasis, table: OuterTable, X) -> np.ndarray:
    """sum_p g(key_p(x)) at the rows of X."""
    K = inner_keys_float(basis, X)
    return _superpose(K, table.key_grid, table.constant, table.values)


def _hat(keys: np.ndarray, knots: int):
    t = keys * knots
    i = np.minimum(np.floor(t).astype(np.int64), knots - 1)
    return i, t - i


def build_outer(f, basis: KartBasis, stages: int, lattice: int = 33, *,
                knots: int = DEFAULT_KNOTS, damping: float = DEFAULT_DAMPING,
                ridge: float = DEFAULT_RIDGE, target: float | None = None) -> OuterTable:
    """Run the stage iteration; stop early once the residual is below ``target``."""
    if stages < 0:
        raise ValidationError("stages must be >= 0")
    if lattice < 2:
        raise ValidationError("lattice must be >= 2")
    P, d = basis.branches, basis.d
    X = lattice_points(d, lattice)
    Xs = lattice_points(d, lattice, staggered=True)
    K = inner_keys_float(basis, X)
    Ks = inner_keys_float(basis, Xs)
    fx = np.asarray(f(X), dtype=float)
    fs = np.asarray(f(Xs), dtype=float)
    grid = np.linspace(0.0, 1.0, knots + 1)
    hats = [_hat(K[p], knots) for p in range(P)]
    weight = np.zeros(knots + 1)
    for i, w in hats:
        np.add.at(weight, i, (1 - w) ** 2)
        np.add.at(weight, i + 1, w ** 2)
    denom = weight + ridge * weight.max()

    constant = Fraction(0)
    values = np.zeros(knots + 1)
    resid = float(np.max(np.abs(fs)))
    history, steps = [resid], []
    for _ in range(stages):
        if target is not None and resid < target:
            break
        e = fx - _superpose(K, grid, constant, values)
        mean = float(e[0]) if np.all(e == e[0]) else float(np.mean(e))
        dconst = Fraction(mean) / P
        e = e - mean
        dvals = np.zeros(knots + 1)
        for i, w in hats:
            s = np.zeros(knots + 1)
            np.add.at(s, i, (1 - w) * e)
            np.add.at(s, i + 1, w * e)
            dg = damping * s / denom
            e = e - (dg[i] * (1 - w) + dg[i + 1] * w)
            dvals += dg
        tau = 1.0
        accepted = False
        while tau >= MIN_STEP:
            c_new = constant + Fraction(tau) * dconst
            v_new = values + tau * dvals
            r_new = float(np.max(np.abs(fs - _superpose(Ks, grid, c_new, v_new))))
            if not np.isfinite(r_new):
                raise ConvergenceError("non-finite residual", history=history)
            if r_new < resid:
                accepted = True
                break
            tau /= 2
        if accepted:
            constant, values, resid = c_new, v_new, r_new
            steps.append(tau)
        else:
            steps.append(0.0)
        if history and resid > history[-1]:
            raise ConvergenceError("residual increased", history=history + [resid])
        history.append(resid)
    log.info("outer residual history: %s", ", ".join(f"{r:.4g}" for r in history))
    return OuterTable(knots, values, constant, len(history) - 1, tuple(history), tuple(steps),
                      lattice, damping)


def decrease_factors(table: OuterTable) -> list:
    h = table.residual_history
    return [b / a if a else 0.0 for a, b in zip(h, h[1:])]

"""Two-hidden-layer networks with fixed coordinate first-layer weights.

The superposition network computes

    N(x) = sum_{p=1}^{2d+1} sigma( sum_q lambda_q sigma(x_q - theta_p) - zeta )

with one shift theta_p per branch and a single outer shift zeta: d neurons in
the first hidden layer feed 2d+1 in the second, 3d+1 hidden neurons in all.

Builder outline: g from the outer iteration; p_outer ~ g on the key axis,
placed on a coding interval by zeta; each h_p ~ sigma(x - theta_p).  The inner
values are squeezed into [dbar, 1 - dbar] so that inner errors up to dbar keep
the second-layer arguments inside the coding interval of p_outer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .activation import ActivationSpec, sigma_affine, sigma_eval
from .errors import CertificationError, ValidationError
from .harness import ErrorBudget, GridSpec, budget_split, modulus_of_continuity
from .kart_inner import KartBasis, eval_h_float, inner_keys_float
from .kart_outer import build_outer, eval_superposition
from .neuron import NeuronCert, approx1d, eval_neuron, eval_neuron_array, neuron_params
from .ratpoly import ApproxConfig, format_rational, parse_rational

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- shapes

@dataclass(frozen=True)
class ArchitectureShape:
    layer_sizes: tuple

    @property
    def hidden(self) -> int:
        return sum(self.layer_sizes[1:-1])


def kart_shape(n: int) -> ArchitectureShape:
    """Layer sizes of the network read off the superposition formula."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise ValidationError(f"n must be an integer >= 2, got {n!r}")
    return ArchitectureShape((n, n * (2 * n + 1), 2 * n + 1, 1))


def shallow_net(weights, shifts, coeffs, activation):
    """Single-hidden-layer form x -> sum_i c_i act(w_i . x - theta_i)."""
    W = np.asarray(weights, dtype=float)

    def net(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return sum(c * activation(X @ w - t) for w, t, c in zip(W, shifts, coeffs))
    return net


# ---------------------------------------------------------------- superposition net

@dataclass(frozen=True)
class SuperpositionNet:
    d: int
    spec: ActivationSpec
    lam: tuple
    theta: tuple
    zeta: Fraction
    budget: ErrorBudget | None = None

    def __post_init__(self):
        if len(self.lam) != self.d or len(self.theta) != 2 * self.d + 1:
            raise ValidationError("net needs d weights lambda and 2d+1 shifts theta")

    @property
    def hidden_layers(self) -> tuple:
        return (self.d, 2 * self.d + 1)

    @property
    def hidden_neurons(self) -> int:
        return sum(self.hidden_layers)

    @property
    def first_layer_weights(self) -> tuple:
        """The coordinate vectors e_1..e_d (implicit, never stored)."""
        return tuple(tuple(Fraction(int(i == q)) for i in range(self.d)) for q in range(self.d))

    def inner_cert(self, p: int) -> NeuronCert:
        m = (1 - self.theta[p - 1] / self.spec.alpha) / 2
        return _unit_cert(self.spec, int(m))

    def outer_cert(self) -> NeuronCert:
        return _unit_cert(self.spec, int((1 - self.zeta / self.spec.alpha) / 2))

    def to_json(self) -> dict:
        return {
            "kind": "superposition_net",
            "d": self.d,
            "alpha": format_rational(self.spec.alpha),
            "codec_version": self.spec.codec_version,
            "lambda": [format_rational(l) for l in self.lam],
            "theta": [format_rational(t) for t in self.theta],
            "zeta": format_rational(self.zeta),
            "budget": self.budget.to_json() if self.budget else None,
        }

    @classmethod
    def from_json(cls, obj) -> "SuperpositionNet":
        try:
            spec = ActivationSpec(parse_rational(obj["alpha"]), int(obj["codec_version"]))
            budget = ErrorBudget.from_json(obj["budget"]) if obj.get("budget") else None
            return cls(int(obj["d"]), spec, tuple(parse_rational(s) for s in obj["lambda"]),
                       tuple(parse_rational(s) for s in obj["theta"]),
                       parse_rational(obj["zeta"]), budget)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed network: {exc}") from exc


def _unit_cert(spec: ActivationSpec, m: int) -> NeuronCert:
    w, theta = neuron_params(spec, 0, 1, m)
    return NeuronCert(w, theta, Fraction(0), Fraction(1), float("inf"), 0.0, m, spec)


def inner_values(net: SuperpositionNet, X) -> np.ndarray:
    """First-layer aggregates sum_q lambda_q sigma(x_q - theta_p); shape (2d+1, n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    lam = [float(l) for l in net.lam]
    return np.array([sum(lam[q] * sigma_affine(net.spec, 1, th, X[:, q]) for q in range(net.d))
                     for th in net.theta])


def eval_net(net: SuperpositionNet, X) -> np.ndarray:
    """Network output at the rows of X (floats, anchored shifts)."""
    keys = inner_values(net, X)
    return sum(sigma_affine(net.spec, 1, net.zeta, k) for k in keys)


def eval_net_exact(net: SuperpositionNet, x):
    """Network output at a rational point; exact while every argument is on a coding interval."""
    x = [Fraction(v) for v in x]
    total = Fraction(0)
    for th in net.theta:
        key = sum((l * _as_exact(sigma_eval(net.spec, xq - th)) for l, xq in zip(net.lam, x)),
                  Fraction(0))
        total += _as_exact(sigma_eval(net.spec, key - net.zeta))
    return total


def _as_exact(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def eval_net_by_neurons(net: SuperpositionNet, x):
    """The same output assembled from single-neuron certificates."""
    x = [Fraction(v) for v in x]
    outer = net.outer_cert()
    total = Fraction(0)
    for p in range(1, 2 * net.d + 2):
        cert = net.inner_cert(p)
        key = sum((l * _as_exact(eval_neuron(cert, xq)) for l, xq in zip(net.lam, x)), Fraction(0))
        total += _as_exact(eval_neuron(outer, key))
    return total


# ---------------------------------------------------------------- general form

@dataclass(frozen=True)
class GeneralTwoLayerNet:
    """sum_{p=1}^{2d+2} e_p sigma( sum_q c_pq sigma(x_q - theta_pq) - zeta_p )."""

    d: int
    spec: ActivationSpec
    e: tuple
    c: tuple
    theta: tuple
    zeta: tuple

    def __post_init__(self):
        width = 2 * self.d + 2
        if not (len(self.e) == len(self.c) == len(self.theta) == len(self.zeta) == width):
            raise ValidationError(f"outer width must be 2d+2 = {width}")
        if any(len(r) != self.d for r in self.c) or any(len(r) != self.d for r in self.theta):
            raise ValidationError(f"inner width must be d = {self.d}")

    @property
    def outer_width(self) -> int:
        return len(self.e)

    @classmethod
    def from_superposition(cls, net: SuperpositionNet) -> "GeneralTwoLayerNet":
        """Embedding: e_p = 1 on the 2d+1 branches plus one zero branch."""
        P = 2 * net.d + 1
        e = (Fraction(1),) * P + (Fraction(0),)
        c = tuple(tuple(net.lam) for _ in range(P + 1))
        theta = tuple((th,) * net.d for th in net.theta) + ((net.theta[0],) * net.d,)
        zeta = (net.zeta,) * (P + 1)
        return cls(net.d, net.spec, e, c, theta, zeta)


def eval_general_net(net: GeneralTwoLayerNet, X, activation=None) -> np.ndarray:
    """Direct evaluation; ``activation(z, shift)`` returns sigma(z - shift) elementwise.

    The default routes through the anchored universal activation of ``net.spec``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if activation is None:
        def activation(z, shift):
            return sigma_affine(net.spec, 1, shift, z)
    out = np.zeros(X.shape[0])
    for e, cs, ths, z in zip(net.e, net.c, net.theta, net.zeta):
        if e == 0:
            continue
        inner = sum(float(c) * activation(X[:, q], th) for q, (c, th) in enumerate(zip(cs, ths)))
        out = out + float(e) * activation(inner, z)
    return out


def equal_coefficients_but_one(e) -> bool:
    vals = list(e)
    return any(len(set(vals[:i] + vals[i + 1:])) == 1 for i in range(len(vals)))


# ---------------------------------------------------------------- builder

@dataclass(frozen=True)
class BuildConfig:
    lattice: int = 33
    max_stages: int = 20
    knots: int = 300
    degree_cap: int = 64
    inner_degree_cap: int = 64
    delta_bar: float = 0.05
    min_delta: float = 1e-6
    grid: int = 129
    approx_grid: int = 10_000
    modulus_samples: int = 20_001


@dataclass
class BuildResult:
    net: SuperpositionNet
    budget: ErrorBudget
    outer: object = None
    inner_certs: list = field(default_factory=list)
    outer_cert: NeuronCert | None = None


def choose_delta(fn, target: float, branches: int, delta_bar: float, samples: int,
                 min_delta: float):
    """Largest delta in dbar, dbar/2, ... with branches * omega(delta) < target."""
    delta = delta_bar
    while delta >= min_delta:
        w = modulus_of_continuity(fn, (0.0, 1.0), delta, samples)
        if branches * w < target:
            return delta, w
        delta /= 2
    return None, None


def build_superposition_net(f, eps: float, basis: KartBasis, config: BuildConfig | None = None):
    """Assemble and certify the superposition network for f on [0, 1]^d."""
    config = config or BuildConfig()
    d, P = basis.d, basis.branches
    budget = budget_split(eps, d)
    spec = ActivationSpec(Fraction(1))
    dbar = config.delta_bar
    squeeze = 1 - 2 * dbar

    # stage 1: outer function
    table = build_outer(f, basis, config.max_stages, config.lattice, knots=config.knots,
                        target=budget.outer_residual)
    resid = table.residual_history[-1]
    budget.measured["outer_residual_lattice"] = resid
    budget.measured["outer_stages"] = table.stages_used
    if not resid < budget.outer_residual:
        raise CertificationError(
            f"outer residual {resid:.4g} >= required {budget.outer_residual:.4g} "
            f"after {table.stages_used} stages (history {', '.join(f'{r:.3g}' for r in table.residual_history)})",
            stage="outer_residual", achieved=resid, required=budget.outer_residual)

    # stage 2: outer polynomial on the squeezed key axis
    def g_squeezed(u):
        return table(np.clip((np.asarray(u, dtype=float) - dbar) / squeeze, 0.0, 1.0))

    outer_cfg = ApproxConfig(config.degree_cap, config.approx_grid)
    try:
        outer_cert = approx1d(g_squeezed, 0, 1, budget.outer_sigma_per_branch, spec, outer_cfg)
    except CertificationError as exc:
        raise CertificationError(f"outer sigma stage: {exc}", stage="outer_sigma",
                                 achieved=exc.achieved, required=exc.required) from exc
    budget.measured["outer_sigma_per_branch"] = outer_cert.eps_measured

    # stage 3: inner tolerance from the modulus of continuity of p_outer
    def p_outer(u):
        return eval_neuron_array(outer_cert, u)

    delta, omega = choose_delta(p_outer, budget.composition, P, dbar,
                                config.modulus_samples, config.min_delta)
    if delta is None:
        raise CertificationError(
            "composition stage: no delta >= min_delta keeps (2d+1) omega(delta) below "
            f"{budget.composition:.4g}; try a larger eps", stage="composition",
            required=budget.composition)
    budget.measured["delta"] = delta
    budget.measured["omega_delta"] = omega

    inner_cfg = ApproxConfig(config.inner_degree_cap, config.approx_grid)
    certs = []
    for p in range(1, P + 1):
        def h_squeezed(x, p=p):
            return dbar + squeeze * eval_h_float(basis, p, x)
        try:
            certs.append(approx1d(h_squeezed, 0, 1, delta, spec, inner_cfg))
        except CertificationError as exc:
            raise CertificationError(
                f"inner stage, branch {p}: {exc} (required delta {delta:.3g})", stage=f"inner_{p}",
                achieved=exc.achieved, required=delta) from exc
    budget.measured["inner_deviation"] = max(c.eps_measured for c in certs)

    net = SuperpositionNet(d, spec, basis.lam, tuple(c.theta for c in certs), outer_cert.theta, budget)

    # stage 4: end-to-end measurement with independently re-measured components
    grid = GridSpec((config.grid,) * d)
    X = grid.points()
    fx = np.asarray(f(X), dtype=float)
    keys = inner_keys_float(basis, X)
    squeezed = dbar + squeeze * keys
    approx_keys = inner_values(net, X)
    sup_g = np.abs(fx - eval_superposition(basis, table, X)).max()
    sup_sigma = np.abs(sum(g_squeezed(k) - p_outer(k) for k in squeezed)).max()
    sup_comp = np.abs(sum(p_outer(k) - p_outer(a) for k, a in zip(squeezed, approx_keys))).max()
    key_dev = float(np.abs(approx_keys - squeezed).max())
    out = eval_net(net, X)
    end = float(np.abs(fx - out).max())
    budget.measured.update({
        "outer_residual": float(sup_g),
        "outer_sigma_total": float(sup_sigma),
        "composition": float(sup_comp),
        "key_deviation": key_dev,
        "end_to_end": end,
        "grid": grid.label(),
    })
    if key_dev > budget.measured["inner_deviation"] * (1 + 1e-9) + 1e-12:
        raise CertificationError("inner key deviation exceeds the per-coordinate bound",
                                 stage="inner_keys", achieved=key_dev,
                                 required=budget.measured["inner_deviation"])
    if end > sup_g + sup_sigma + sup_comp + 1e-12:
        raise CertificationError("end-to-end error exceeds the sum of measured stage errors",
                                 stage="budget", achieved=end, required=sup_g + sup_sigma + sup_comp)
    if not end < eps:
        raise CertificationError(f"end-to-end error {end:.4g} >= eps {eps:.4g}",
                                 stage="end_to_end", achieved=end, required=eps)
    log.info("built net: %s", budget.measured)
    return BuildResult(net, budget, table, certs, outer_cert)


__all__ = ["ArchitectureShape", "kart_shape", "SuperpositionNet", "GeneralTwoLayerNet",
           "BuildConfig", "BuildResult", "build_superposition_net", "eval_net", "eval_net_exact",
           "eval_net_by_neurons", "eval_general_net", "inner_values", "shallow_net",
           "equal_coefficients_but_one", "choose_delta"]

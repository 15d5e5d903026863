"""Verification utilities, the test-function registry and JSON/CSV persistence."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .ratpoly import CODEC_VERSION, decode_poly, eval_poly_rounded

GRID_ENV = "KART_UAT_GRID"
CSV_COLUMNS = ["grid_axis_counts", "sup_error", "argmax", "mean_abs_error", "runtime_ms"]


# ---------------------------------------------------------------- grids and reports

@dataclass(frozen=True)
class GridSpec:
    """Per-axis counts on the unit box; staggered grids use cell centres."""

    counts: tuple
    staggered: bool = False

    @property
    def dims(self) -> int:
        return len(self.counts)

    def axes(self):
        out = []
        for n in self.counts:
            if self.staggered:
                out.append((np.arange(n) + 0.5) / n)
            else:
                out.append(np.linspace(0.0, 1.0, n))
        return out

    def points(self) -> np.ndarray:
        return np.array(np.meshgrid(*self.axes(), indexing="ij")).reshape(self.dims, -1).T

    def label(self) -> str:
        return "x".join(str(n) for n in self.counts) + ("s" if self.staggered else "")


def default_grid(fallback: int = 129) -> int:
    return int(os.environ.get(GRID_ENV, fallback))


@dataclass(frozen=True)
class ErrorReport:
    grid: GridSpec
    sup_error: float
    argmax_point: tuple
    mean_abs_error: float
    runtime_ms: int = 0

    def __post_init__(self):
        if not self.sup_error >= self.mean_abs_error >= 0:
            raise ValidationError("report needs sup_error >= mean_abs_error >= 0")

    def row(self, timing: bool = True) -> list:
        return [self.grid.label(), repr(self.sup_error),
                ";".join(repr(float(c)) for c in self.argmax_point),
                repr(self.mean_abs_error), str(self.runtime_ms if timing else 0)]


def _arity(fn):
    return getattr(fn, "d", None)


def sup_error_on_grid(f, g, grid: GridSpec) -> ErrorReport:
    """Sampled sup and mean of |f - g| over the grid.

    Both callables take an (n, dims) array; univariate callables take a flat
    array when dims == 1.
    """
    for fn in (f, g):
        a = _arity(fn)
        if a is not None and a != grid.dims:
            raise ValidationError(f"function of arity {a} used on a {grid.dims}-d grid")
    start = time.perf_counter()
    X = grid.points()
    arg = X[:, 0] if grid.dims == 1 else X
    diff = np.abs(np.asarray(f(arg), dtype=float) - np.asarray(g(arg), dtype=float))
    i = int(np.argmax(diff))
    ms = int(round((time.perf_counter() - start) * 1000))
    return ErrorReport(grid, float(diff[i]), tuple(float(c) for c in X[i]),
                       float(np.mean(diff)), ms)


def write_report_csv(path, reports, timing: bool = True):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.row(timing))
    Path(path).write_text(buf.getvalue())


def read_report_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def modulus_of_continuity(fn, interval, delta: float, samples: int = 20001) -> float:
    """Largest |fn(u) - fn(v)| over sampled pairs with |u - v| <= delta (a lower estimate)."""
    if not delta > 0:
        raise ValidationError("delta must be positive")
    if samples < 2:
        raise ValidationError("need at least 2 samples")
    a, b = float(interval[0]), float(interval[1])
    u = np.linspace(a, b, samples)
    v = np.asarray(fn(u), dtype=float)
    h = (b - a) / (samples - 1)
    lag = int(np.floor(delta / h + 1e-9))
    if lag < 1:
        return float(np.max(np.abs(np.asarray(fn(np.minimum(u + delta, b)), dtype=float) - v)))
    lag = min(lag, samples - 1)
    win = np.lib.stride_tricks.sliding_window_view(v, lag + 1)
    return float(np.max(win.max(axis=1) - win.min(axis=1)))


# ---------------------------------------------------------------- error budget

@dataclass
class ErrorBudget:
    """Allotted tolerances per stage and, after a build, the measured values."""

    eps: float
    d: int
    outer_residual: float
    outer_sigma_per_branch: float
    composition: float
    measured: dict = field(default_factory=dict)

    @property
    def branches(self) -> int:
        return 2 * self.d + 1

    @property
    def total(self) -> float:
        return self.outer_residual + self.branches * self.outer_sigma_per_branch + self.composition

    def to_json(self) -> dict:
        return {"eps": self.eps, "d": self.d, "outer_residual": self.outer_residual,
                "outer_sigma_per_branch": self.outer_sigma_per_branch,
                "composition": self.composition, "measured": dict(self.measured)}

    @classmethod
    def from_json(cls, obj) -> "ErrorBudget":
        try:
            return cls(float(obj["eps"]), int(obj["d"]), float(obj["outer_residual"]),
                       float(obj["outer_sigma_per_branch"]), float(obj["composition"]),
                       dict(obj.get("measured", {})))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed budget: {exc}") from exc


def budget_split(eps: float, d: int) -> ErrorBudget:
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if d < 2:
        raise ValidationError("d must be >= 2")
    return ErrorBudget(eps, d, eps / 4, eps / (2 * (2 * d + 1)), eps / 4)


# ---------------------------------------------------------------- registry

@dataclass(frozen=True)
class FunctionSpec:
    """A registered test function on the unit box of arity d (None: any arity).

    Multivariate functions take an (n, d) array, univariate ones a flat array.
    """

    name: str
    d: int | None
    fn: object = field(repr=False)
    definition: str = ""

    def __call__(self, x):
        return self.fn(x)


class SampledFunction:
    """Univariate table on [a, b] with linear interpolation."""

    d = 1

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 3 or np.any(np.diff(xs) <= 0):
            raise ValidationError("table needs >= 3 strictly increasing abscissae")
        self.xs, self.ys = xs, ys

    @property
    def stride_error(self) -> float:
        """Estimate of the linear-interpolation error: max |second difference| / 8."""
        return float(np.max(np.abs(np.diff(self.ys, 2)))) / 8

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.ys)

    @classmethod
    def from_csv(cls, path) -> "SampledFunction":
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ValidationError(f"cannot read table {path}: {exc}") from exc
        if data.shape[1] != 2:
            raise ValidationError("table must have two columns x,y")
        return cls(data[:, 0], data[:, 1])


def _poly_fn(m):
    p = decode_poly(m)
    return lambda t: eval_poly_rounded(p, t)


def _constant(c):
    def fn(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[0], c)
    return fn


def _build_registry() -> dict:
    reg = {}

    def add(name, d, fn, definition):
        if name in reg:
            raise ValueError(f"duplicate registry name {name}")
        reg[name] = FunctionSpec(name, d, fn, definition)

    add("exp", 1, np.exp, "exp(t)")
    add("sin", 1, lambda t: np.sin(np.pi * np.asarray(t)), "sin(pi t)")
    add("runge", 1, lambda t: 1.0 / (1.0 + 25.0 * (np.asarray(t) - 0.5) ** 2), "1/(1+25(t-1/2)^2)")
    for m in range(1, 11):
        add(f"p{m}", 1, _poly_fn(m), f"enumerated polynomial p_{m}")
    add("xy", 2, lambda X: X[:, 0] * X[:, 1], "x y")
    add("mean", 2, lambda X: (X[:, 0] + X[:, 1]) / 2, "(x+y)/2")
    add("sinsin", 2, lambda X: np.sin(np.pi * X[:, 0]) * np.sin(np.pi * X[:, 1]), "sin(pi x) sin(pi y)")
    add("xyz", 3, lambda X: X[:, 0] * X[:, 1] * X[:, 2], "x y z")
    add("half", None, _constant(0.5), "constant 1/2 (any arity)")
    return reg


REGISTRY = _build_registry()


def get_function(name: str, d: int | None = None) -> FunctionSpec:
    try:
        spec = REGISTRY[name]
    except KeyError:
        raise ValidationError(f"unknown function {name!r}; known: {', '.join(sorted(REGISTRY))}") from None
    if d is not None and spec.d is not None and spec.d != d:
        raise ValidationError(f"function {name!r} has arity {spec.d}, not {d}")
    if spec.d is None and d is not None:
        return FunctionSpec(spec.name, d, spec.fn, spec.definition)
    return spec


# ---------------------------------------------------------------- persistence

def dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def save_json(path, obj):
    Path(path).write_text(dump_json(obj))


def load_json(path, kind: str | None = None) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read JSON from {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    check_version(obj, path)
    if kind is not None and obj.get("kind", kind) != kind:
        raise ValidationError(f"{path}: expected a {kind} artifact, found {obj.get('kind')}")
    return obj


def check_version(obj: dict, where="artifact"):
    if "codec_version" in obj and obj["codec_version"] != CODEC_VERSION:
        raise ValidationError(
            f"{where}: codec_version {obj['codec_version']} does not match {CODEC_VERSION}")


# ---------------------------------------------------------------- plotting

def plot_error(path, grid: GridSpec, f, g):
    """Static SVG of |f - g|: a curve in 1-d, a heat map in 2-d."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "kart-uat"
    if grid.dims not in (1, 2):
        raise ValidationError("plots are available for 1-d and 2-d grids only")
    X = grid.points()
    arg = X[:, 0] if grid.dims == 1 else X
    err = np.abs(np.asarray(f(arg), dtype=float) - np.asarray(g(arg), dtype=float))
    fig, ax = plt.subplots(figsize=(5, 4))
    if grid.dims == 1:
        ax.plot(X[:, 0], err, lw=1)
        ax.set_xlabel("x")
        ax.set_ylabel("|error|")
    else:
        n0, n1 = grid.counts
        im = ax.imshow(err.reshape(n0, n1).T, origin="lower", extent=(0, 1, 0, 1), aspect="equal")
        fig.colorbar(im, ax=ax, label="|error|")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

"""Command-line interface.

Exit codes: 0 success, 2 validation error (bad input, unknown function,
malformed JSON, codec_version mismatch), 3 certification or convergence failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .activation import ActivationSpec, anchor_of, sigma_eval
from .errors import CertificationError, ValidationError
from .harness import (GridSpec, SampledFunction, default_grid, get_function, load_json, plot_error,
                      save_json, sup_error_on_grid, write_report_csv)
from .kart_inner import KartBasis, make_basis
from .kart_outer import build_outer
from .network import BuildConfig, SuperpositionNet, build_superposition_net, eval_net, kart_shape
from .neuron import approx1d
from .ratpoly import (ApproxConfig, RationalPoly, decode_poly, encode_poly, format_int,
                      format_rational, parse_int, rational_from_cli)


def _positive_float(s):
    v = float(rational_from_cli(s))
    if not v > 0:
        raise ValidationError(f"expected a positive number, got {s}")
    return v


def cmd_codec(args):
    if args.action == "encode":
        try:
            items = json.loads(args.poly)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"--poly must be a JSON array: {exc}") from exc
        print(format_int(encode_poly(RationalPoly.from_json(items))))
    else:
        print(json.dumps(decode_poly(parse_int(args.index)).to_json()))
    return 0


def cmd_sigma(args):
    spec = ActivationSpec(rational_from_cli(args.alpha))
    x = rational_from_cli(args.x)
    a = anchor_of(spec, x)
    v = sigma_eval(spec, x)
    value = format_rational(v) if isinstance(v, Fraction) else repr(v)
    print(json.dumps({"anchor": a.kind, "m": None if a.m is None else format_int(a.m),
                      "local": format_rational(a.local), "value": value,
                      "float": float(v)}, sort_keys=True))
    return 0


def cmd_approx1d(args):
    f = SampledFunction.from_csv(args.table) if args.table else get_function(args.fn, 1)
    spec = ActivationSpec(rational_from_cli(args.alpha))
    cert = approx1d(f, rational_from_cli(args.a), rational_from_cli(args.b),
                    _positive_float(args.eps), spec, ApproxConfig(args.degree_cap, args.approx_grid))
    save_json(args.out, {"kind": "neuron_cert", **cert.to_json()})
    print(f"poly_index digits={len(format_int(cert.poly_index))} eps_measured={cert.eps_measured!r}")
    return 0


def cmd_kart(args):
    if args.action == "basis":
        basis = make_basis(args.d, args.depth)
        save_json(args.out, {"kind": "kart_basis", **basis.to_json()})
        print(f"d={basis.d} gamma={basis.gamma} depth={basis.depth} branches={basis.branches}")
        return 0
    basis = KartBasis.from_json(load_json(args.basis, "kart_basis"))
    f = get_function(args.fn, basis.d)
    table = build_outer(f, basis, args.stages, args.lattice, knots=args.knots)
    save_json(args.out, {"kind": "outer_table", **table.to_json()})
    print("residual_history " + " ".join(f"{r:.6g}" for r in table.residual_history))
    return 0


def _build_config(args) -> BuildConfig:
    return BuildConfig(lattice=args.lattice, max_stages=args.max_stages, knots=args.knots,
                       degree_cap=args.degree_cap, inner_degree_cap=args.inner_degree_cap,
                       grid=args.grid)


def _report(net, f, n):
    grid = GridSpec((n,) * net.d)
    return sup_error_on_grid(f, lambda X: eval_net(net, X), grid)


def cmd_build(args):
    f = get_function(args.fn, args.d)
    basis = make_basis(args.d, args.depth)
    result = build_superposition_net(f, _positive_float(args.eps), basis, _build_config(args))
    save_json(args.out, result.net.to_json())
    rep = _report(result.net, f, args.grid)
    write_report_csv(args.report, [rep], timing=not args.no_timing)
    print(f"hidden_neurons={result.net.hidden_neurons} sup_error={rep.sup_error!r}")
    return 0


def cmd_verify(args):
    net = SuperpositionNet.from_json(load_json(args.net, "superposition_net"))
    f = get_function(args.fn, net.d)
    n = args.grid if args.grid is not None else default_grid()
    rep = _report(net, f, n)
    write_report_csv(args.out, [rep], timing=not args.no_timing)
    if args.plot:
        plot_error(args.plot, rep.grid, f, lambda X: eval_net(net, X))
    print(f"sup_error={rep.sup_error!r} argmax={rep.argmax_point}")
    return 0


def cmd_shape(args):
    print(",".join(str(s) for s in kart_shape(args.n).layer_sizes))
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kart-uat", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codec", help="polynomial enumeration")
    csub = p.add_subparsers(dest="action", required=True)
    e = csub.add_parser("encode")
    e.add_argument("--poly", required=True, help='JSON array of "num/den" coefficients, ascending')
    dcd = csub.add_parser("decode")
    dcd.add_argument("--index", required=True)
    p.set_defaults(func=cmd_codec)

    p = sub.add_parser("sigma", help="universal activation")
    ssub = p.add_subparsers(dest="action", required=True)
    s = ssub.add_parser("eval")
    s.add_argument("--alpha", default="1")
    s.add_argument("--x", required=True)
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("approx1d", help="single-neuron approximation")
    p.add_argument("--fn", default="exp")
    p.add_argument("--table", help="CSV file with x,y rows (used instead of --fn)")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--alpha", default="1")
    p.add_argument("--degree-cap", type=int, default=64)
    p.add_argument("--approx-grid", type=int, default=10_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_approx1d)

    p = sub.add_parser("kart", help="inner basis and outer function")
    ksub = p.add_subparsers(dest="action", required=True)
    kb = ksub.add_parser("basis")
    kb.add_argument("--d", type=int, required=True)
    kb.add_argument("--depth", type=int, default=8)
    kb.add_argument("--out", required=True)
    ko = ksub.add_parser("outer")
    ko.add_argument("--fn", required=True)
    ko.add_argument("--basis", required=True)
    ko.add_argument("--stages", type=int, required=True)
    ko.add_argument("--lattice", type=int, default=33)
    ko.add_argument("--knots", type=int, default=300)
    ko.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kart)

    p = sub.add_parser("build", help="build and certify a superposition network")
    p.add_argument("--fn", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--lattice", type=int, default=33)
    p.add_argument("--max-stages", type=int, default=20)
    p.add_argument("--knots", type=int, default=300)
    p.add_argument("--degree-cap", type=int, default=64)
    p.add_argument("--inner-degree-cap", type=int, default=64)
    p.add_argument("--grid", type=int, default=129)
    p.add_argument("--no-timing", action="store_true", help="write runtime_ms as 0")
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="re-measure a saved network")
    p.add_argument("--net", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--no-timing", action="store_true", help="write runtime_ms as 0")
    p.add_argument("--out", required=True)
    p.add_argument("--plot")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("shape", help="layer sizes of the superposition network")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_shape)
    return ap


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CertificationError as exc:
        print(f"certification failed [{exc.stage}]: {exc}", file=sys.stderr)
        return 3


def cli_run(argv) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())

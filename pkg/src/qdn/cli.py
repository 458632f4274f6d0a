"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import experiments as ex
from .errors import (
    ArgumentError,
    MissingRuleError,
    NetDefError,
    OutOfRangeError,
    QDNError,
    ValidationError,
)
from .netdef import FORMATS, compile_netdef, emit_results, parse_netdef, serialize_netdef, to_document
from .paths import oracle_amplitudes
from .stages import VALIDATION_TOL, NetworkProgram, random_program, run_program, validate_program

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2
PRESETS = ("sg", "pvm", "slit", "double-slit", "epr", "hsz", "product")


class UsageError(Exception):
    pass


def parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"expected a complex literal 're,im', got {text!r}")
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise UsageError(f"expected a complex literal 're,im', got {text!r}") from None


def parse_complex_list(text: str) -> list[complex]:
    return [parse_complex(p) for p in text.split(";") if p.strip()]


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _add_output_args(p):
    p.add_argument("--format", choices=FORMATS, default="json", help="results format")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--tol", type=float, default=VALIDATION_TOL, help="stage validation tolerance")
    p.add_argument("--oracle", action="store_true", help="cross-check amplitudes by brute force")
    p.add_argument("--oracle-tol", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdn", description="Quantized detector network simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="validate and run a .qdn.json document")
    p.add_argument("path")
    _add_output_args(p)

    p = sub.add_parser("validate", help="check semi-unitarity of every stage")
    p.add_argument("path")
    p.add_argument("--tol", type=float, default=VALIDATION_TOL)

    p = sub.add_parser("oracle", help="compare the simulator against brute-force amplitudes")
    p.add_argument("path", nargs="?", help="document to check (omit with --random)")
    p.add_argument("--random", action="store_true", help="check a seeded random semi-unitary program")
    p.add_argument("--stages", type=int, default=3, help="stage count for --random")
    p.add_argument("--max-rank", type=int, default=4, help="largest register rank for --random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=VALIDATION_TOL)
    p.add_argument("--oracle-tol", type=float, default=1e-12)

    p = sub.add_parser("preset", help="build (and run or emit) a standard experiment")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--emit", action="store_true", help="write the .qdn.json document instead of running")
    p.add_argument("--alpha", default="1,0", help="sg/product: up amplitude re,im")
    p.add_argument("--beta", default="0,0", help="sg/product: down amplitude re,im")
    p.add_argument("--gamma", default="1,0", help="product: second experiment up amplitude")
    p.add_argument("--delta", default="0,0", help="product: second experiment down amplitude")
    p.add_argument("--psi", help="pvm/slit: amplitudes 're,im;re,im;...'")
    p.add_argument("--sites", type=int, default=8, help="slit: number of cyclic sites M")
    p.add_argument("--slits", help="slit: open slit indices a,b,...")
    p.add_argument("--kernel", choices=sorted(ex.KERNELS), default="fresnel")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--beamsplitter", action="store_true", help="hsz: add balanced beamsplitters")
    _add_output_args(p)
    return parser


def _read_program(path):
    with open(path, "rb") as fh:
        data = fh.read()
    doc = parse_netdef(data)
    return doc, compile_netdef(doc)


def _write(args, payload: bytes):
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()


def _oracle_deviation(program: NetworkProgram, final) -> float:
    outcomes = sorted(final.amplitudes)
    reference = oracle_amplitudes(program, outcomes)
    worst = 0.0
    for o in outcomes:
        worst = max(worst, abs(final.amplitude(o) - reference[o]))
    return worst


def _run(program: NetworkProgram, args, queries=None) -> int:
    final, table = run_program(program, args.tol)
    if queries not in (None, "all"):
        table = table.restrict(queries)
    _write(args, emit_results(table, args.format))
    if args.oracle:
        dev = _oracle_deviation(program, final)
        print(f"oracle max deviation: {dev:.3e}", file=sys.stderr)
        if dev > args.oracle_tol:
            print(f"oracle check failed (tolerance {args.oracle_tol:g})", file=sys.stderr)
            return EXIT_INVALID
    return EXIT_OK


def cmd_run(args) -> int:
    doc, program = _read_program(args.path)
    return _run(program, args, doc.queries)


def cmd_validate(args) -> int:
    _, program = _read_program(args.path)
    report = validate_program(program, args.tol)
    for n, r in enumerate(report.stage_reports):
        status = "ok" if r.passed else "FAILED"
        print(f"stage {n}: {status} max Gram deviation {r.max_gram_deviation:.3e} "
              f"over {len(r.checked_domain)} monomials")
    print("passed" if report.passed else f"failed at stage {report.failing_stage}")
    return EXIT_OK if report.passed else EXIT_INVALID


def cmd_oracle(args) -> int:
    if args.random:
        program = random_program(args.stages, args.max_rank, args.seed)
    elif args.path:
        _, program = _read_program(args.path)
    else:
        raise UsageError("oracle needs a document path or --random")
    final, _ = run_program(program, args.tol)
    dev = _oracle_deviation(program, final)
    print(f"outcomes checked: {len(final.amplitudes)}")
    print(f"oracle max deviation: {dev:.3e}")
    return EXIT_OK if dev <= args.oracle_tol else EXIT_INVALID


def build_preset(args) -> NetworkProgram:
    name = args.name
    if name == "sg":
        return ex.stern_gerlach(parse_complex(args.alpha), parse_complex(args.beta))
    if name == "product":
        a = ex.stern_gerlach(parse_complex(args.alpha), parse_complex(args.beta))
        b = ex.stern_gerlach(parse_complex(args.gamma), parse_complex(args.delta))
        return ex.product_network(a, b)
    if name == "pvm":
        if not args.psi:
            raise UsageError("pvm needs --psi")
        return ex.pvm_network(parse_complex_list(args.psi))
    if name in ("slit", "double-slit"):
        m = args.sites
        if m < 2:
            raise UsageError("--sites must be at least 2")
        kernel = ex.KERNELS[args.kernel](m)
        if name == "double-slit":
            slits = parse_int_list(args.slits) if args.slits else [1, m - 1]
            if len(slits) != 2 or slits[1] % m != (-slits[0]) % m or slits[0] % m == slits[1] % m:
                raise UsageError("double-slit needs two mirror-image slits s,M-s")
        else:
            if not args.slits:
                raise UsageError("slit needs --slits")
            slits = parse_int_list(args.slits)
        if any(not 0 <= a < m for a in slits) or len(set(slits)) != len(slits):
            raise UsageError(f"slit indices must be distinct and in [0, {m})")
        geometry = ex.SlitGeometry(m, tuple(slits), tuple(kernel))
        if args.psi:
            by_slit = dict(zip(slits, parse_complex_list(args.psi)))
            if len(by_slit) != len(slits):
                raise UsageError("--psi needs one amplitude per slit")
            split = [by_slit[a] for a in geometry.open_slits]
        else:
            split = [1 / math.sqrt(len(slits))] * len(slits)
        return ex.slit_network(geometry, split)
    if name == "epr":
        return ex.epr_network(ex.EprSettings(args.theta, args.phi))
    if name == "hsz":
        downstream = [ex.balanced_beamsplitter_stage()] if args.beamsplitter else None
        return ex.hsz_network(args.theta, downstream)
    raise UsageError(f"unknown preset {name!r}")


def cmd_preset(args) -> int:
    program = build_preset(args)
    if args.emit:
        _write(args, serialize_netdef(to_document(program)).encode("utf-8"))
        return EXIT_OK
    return _run(program, args)


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "oracle": cmd_oracle, "preset": cmd_preset}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (MissingRuleError, OutOfRangeError) as exc:
        # structurally fine, but the program cannot be evolved
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NetDefError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ArgumentError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QDNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

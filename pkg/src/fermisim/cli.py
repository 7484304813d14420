"""Batch command-line front end.

Commands are thin shells over the library: evolve wavefunction files,
compute RDM tensors, run scaling benchmarks, verify against the oracle,
and inspect binary files.  JSON summaries go to stdout, data to files.

Exit codes: 0 ok, 1 verification failure, 2 usage/domain error, 3 format
error, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .evolve import (SeriesControl, SpectralWindow, evolve,
                     evolve_diagonal_coulomb, evolve_quadratic,
                     get_worker_threads, set_worker_threads)
from .apply import apply_dense
from .errors import (ConvergenceError, DomainError, FormatError, NumericError,
                     ResourceError)
from .operators import (DiagonalCoulomb, QuadraticHamiltonian, classify,
                        load_fcidump, parse_operator_string)
from .rdm import compute_rdm, hole_rdm
from .tensorio import write_tensor
from .verification import run_verification
from .wavefunction import Wavefunction
from .graph import sector_shape

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_CONVERGENCE = 4


def load_hamiltonian(path: str, kind: str = "auto"):
    """Detect and load a Hamiltonian file.

    auto recognizes FCIDUMP headers and operator text; .npy matrices are
    ambiguous between diagonal-coulomb W and quadratic A, so those require
    an explicit --ham-kind.
    """
    with open(path, "rb") as fh:
        head = fh.read(64)
    is_npy = head.startswith(b"\x93NUMPY")
    if kind == "auto":
        if is_npy:
            raise DomainError(
                ".npy matrices are ambiguous; pass --ham-kind "
                "diagonal-coulomb or quadratic")
        text = open(path).read()
        if text.lstrip().upper().startswith("&FCI"):
            kind = "fcidump"
        else:
            kind = "opstring"
    if kind == "fcidump":
        return load_fcidump(path)
    if kind == "opstring":
        return parse_operator_string(open(path).read())
    if kind in ("diagonal-coulomb", "quadratic"):
        if not is_npy:
            raise FormatError(f"--ham-kind {kind} expects a .npy matrix file")
        mat = np.load(path)
        return DiagonalCoulomb(mat) if kind == "diagonal-coulomb" \
            else QuadraticHamiltonian(mat)
    raise DomainError(f"unknown hamiltonian kind '{kind}'")


# -- evolve ---------------------------------------------------------------------

def cmd_evolve(args) -> int:
    wfn = Wavefunction.load(args.wfn)
    ham = load_hamiltonian(args.ham, args.ham_kind)
    if args.threads:
        set_worker_threads(args.threads)
    info: dict = {}
    if args.time == 0.0:
        out = wfn  # exact identity; skip kernels and renormalization
        info["method_used"] = "identity"
        info["terms_used"] = 0
    else:
        ctrl = SeriesControl(threshold=args.thresh,
                                        max_terms=args.max_terms)
        window = None
        if args.e_min is not None and args.e_max is not None:
            window = SpectralWindow(args.e_min, args.e_max)
        out = evolve(args.time, ham, wfn, method=args.method,
                                ctrl=ctrl, window=window, info=info)
    out.save(args.out)
    summary = {
        "method_used": info.get("method_used"),
        "terms_used": info.get("terms_used", 0),
        "norm_drift": abs(out.norm() - wfn.norm()),
    }
    print(json.dumps(summary))
    return EXIT_OK


# -- rdm ------------------------------------------------------------------------

def cmd_rdm(args) -> int:
    wfn = Wavefunction.load(args.wfn)
    flavor = args.flavor.replace("-", "_")
    if args.kind == "particle":
        tensor = compute_rdm(wfn, args.order, flavor)
    else:
        tensor = hole_rdm(wfn, args.order, flavor)
    write_tensor(args.out, tensor.data)
    k = tensor.order
    letters = "abcdefgh"[:k]
    trace = complex(np.einsum(f"{letters}{letters}->", tensor.data))
    dim = tensor.data.shape[0] ** k
    mat = tensor.data.reshape(dim, dim)
    herm = float(np.max(np.abs(mat - mat.conj().T)))
    print(json.dumps({
        "order": tensor.order, "flavor": tensor.flavor, "kind": tensor.kind,
        "trace_real": trace.real, "trace_imag": trace.imag,
        "hermiticity_residual": herm,
    }))
    return EXIT_OK


# -- bench ----------------------------------------------------------------------

def _bench_filling(m: int, filling: str) -> tuple[int, int]:
    frac = 2 if filling == "half" else 4
    per_spin = max(1, m // frac)
    return per_spin, per_spin


def _bench_setup(kind: str, m: int, filling: str, seed: int):
    rng = np.random.default_rng(seed)
    na, nb = _bench_filling(m, filling)
    wfn = Wavefunction([(na + nb, na - nb, m)]).set_random(seed=seed)
    if kind == "diagonal":
        w = rng.normal(size=(m, m))
        op = DiagonalCoulomb((w + w.T) / 2)
        run = lambda: evolve_diagonal_coulomb(0.05, op, wfn)
    elif kind == "quadratic":
        a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        op = QuadraticHamiltonian((a + a.conj().T) / 2)
        run = lambda: evolve_quadratic(0.05, op, wfn)
    elif kind == "apply-dense":
        from .operators import RestrictedHamiltonian
        h1 = rng.normal(size=(m, m))
        v = rng.normal(size=(m,) * 4)
        v = (v + v.transpose(2, 3, 0, 1)) / 2
        op = RestrictedHamiltonian((h1 + h1.T) / 2, v)
        run = lambda: apply_dense(op, wfn)
    else:
        raise DomainError(f"unknown bench kind '{kind}'")
    dim = int(np.prod(wfn.sectors[(na + nb, na - nb)].coeff.shape))
    return run, na, nb, dim


def _parse_orbital_range(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(spec)]


def cmd_bench(args) -> int:
    if args.threads:
        set_worker_threads(args.threads)
    rows = []
    for m in _parse_orbital_range(args.orbitals):
        run, na, nb, dim = _bench_setup(args.kind, m, args.filling, args.seed)
        run()  # warm-up, excluded from timing
        # average enough inner iterations for a stable reading
        t0 = time.perf_counter()
        run()
        est = max(time.perf_counter() - t0, 1e-7)
        inner = max(1, int(0.02 / est))
        for repeat in range(args.repeats):
            t0 = time.perf_counter()
            for _ in range(inner):
                run()
            seconds = (time.perf_counter() - t0) / inner
            rows.append({
                "kind": args.kind, "m": m, "n_alpha": na, "n_beta": nb,
                "threads": get_worker_threads(), "repeat": repeat,
                "seconds": f"{seconds:.9e}", "sector_dim": dim,
            })
    with open(args.csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(json.dumps({"rows": len(rows), "csv": args.csv}))
    return EXIT_OK


# -- verify ---------------------------------------------------------------------

def cmd_verify(args) -> int:
    results = run_verification(args.m, seed=args.seed,
                               progress=lambda r: print(r.line(), flush=True))
    failed = [r for r in results if not r.passed]
    print(json.dumps({
        "m": args.m, "seed": args.seed, "properties": len(results),
        "failed": len(failed),
        "worst_residual": max(r.residual for r in results),
    }))
    return EXIT_VERIFY if failed else EXIT_OK


# -- inspect --------------------------------------------------------------------

def cmd_inspect(args) -> int:
    with open(args.path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"FQEW":
        wfn = Wavefunction.load(args.path)
        sectors = {
            f"({n}, {sz})": list(sector_shape(n, sz, wfn.m))
            for (n, sz) in wfn.sector_keys()
        }
        print(json.dumps({"kind": "wavefunction", "m": wfn.m,
                          "sectors": sectors, "norm": wfn.norm()}))
    elif magic == b"FQET":
        from .tensorio import read_tensor
        tensor = read_tensor(args.path)
        print(json.dumps({"kind": "tensor", "shape": list(tensor.shape)}))
    else:
        raise FormatError(f"unrecognized file magic {magic!r}")
    return EXIT_OK


# -- argument wiring ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermisim",
        description="Sector-compressed fermionic statevector simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="time-evolve a wavefunction file")
    p.add_argument("--wfn", required=True)
    p.add_argument("--ham", required=True)
    p.add_argument("--ham-kind", default="auto",
                   choices=["auto", "fcidump", "opstring", "diagonal-coulomb",
                            "quadratic"])
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--method", default="auto",
                   choices=["auto", "excitation", "taylor", "chebyshev",
                            "diagonal", "quadratic"])
    p.add_argument("--thresh", type=float, default=1e-14)
    p.add_argument("--max-terms", type=int, default=64)
    p.add_argument("--e-min", type=float, default=None)
    p.add_argument("--e-max", type=float, default=None)
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("rdm", help="compute a reduced density matrix")
    p.add_argument("--wfn", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--flavor", default="spin-summed",
                   choices=["spin-summed", "spin-orbital"])
    p.add_argument("--kind", default="particle", choices=["particle", "hole"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rdm)

    p = sub.add_parser("bench", help="timing sweep writing CSV")
    p.add_argument("--kind", required=True,
                   choices=["diagonal", "quadratic", "apply-dense"])
    p.add_argument("--orbitals", required=True, help="range like 4..12")
    p.add_argument("--filling", default="half", choices=["half", "quarter"])
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="run the oracle-equivalence suite")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("inspect", help="summarize a binary file")
    p.add_argument("path")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ConvergenceError as exc:
        print(f"convergence error: {exc} (terms={exc.terms_used}, "
              f"last_norm={exc.last_norm:.3e})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DomainError, ResourceError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

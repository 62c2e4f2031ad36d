"""Command-line front end (``gaussrd``).

Exit codes: 0 success, 2 usage or input error, 3 infeasible target,
4 numerical failure.  Rates print in nats unless ``--bits`` is given.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import achievability, cyclic, duality, matching, rate_region, waterfill
from .errors import GaussRDError, Infeasible, InvalidInput, NumericalFailure
from .gauss_model import MatrixSpec, SourceModel, SumSpec, VectorSpec, conditional_covariance
from .modelfile import dump_model, load_model

__all__ = ["main", "run", "build_parser"]

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


class _Usage(Exception):
    pass


class _Out:
    def __init__(self, stream, bits: bool):
        self.stream = stream
        self.scale = 1.0 / math.log(2.0) if bits else 1.0
        self.unit = "bits" if bits else "nats"

    def line(self, text: str = "") -> None:
        self.stream.write(text + "\n")

    def rate(self, value: float) -> str:
        return f"{_g(value * self.scale)} {self.unit}"


def _g(x: float) -> str:
    return "%.6g" % (0.0 if x == 0 else x)


def _vec(v) -> str:
    return "(" + ", ".join(_g(float(x)) for x in np.ravel(v)) + ")"


def _matrix_lines(name: str, m: np.ndarray) -> list[str]:
    m = np.atleast_2d(m)
    rows = ["[" + ", ".join(_g(float(x)) for x in row) + "]" for row in m]
    pad = " " * (len(name) + 3)
    return [f"{name} = {rows[0]}"] + [pad + r for r in rows[1:]]


# argument parsing ----------------------------------------------------------

def _numbers(text: str) -> np.ndarray:
    text = text.strip()
    try:
        if text.startswith("["):
            return np.asarray(json.loads(text), dtype=float)
        return np.asarray([float(x) for x in text.split(",")], dtype=float)
    except (ValueError, json.JSONDecodeError):
        raise _Usage(f"cannot parse numbers from {text!r}") from None


def _square(text: str, k: int, name: str) -> np.ndarray:
    """Scalar -> multiple of I, comma list -> diagonal, JSON nested list -> matrix."""
    arr = _numbers(text)
    if arr.ndim == 1 and arr.size == 1:
        return arr[0] * np.eye(k)
    if arr.ndim == 1:
        if arr.size != k:
            raise _Usage(f"--{name} needs {k} diagonal entries, got {arr.size}")
        return np.diag(arr)
    if arr.shape != (k, k):
        raise _Usage(f"--{name} must be {k}x{k}, got shape {arr.shape}")
    return arr


def _vector(text: str, n: int, name: str) -> np.ndarray:
    arr = _numbers(text).ravel()
    if arr.size == 1 and n > 1:
        arr = np.full(n, arr[0])
    if arr.size != n:
        raise _Usage(f"--{name} needs {n} entries, got {arr.size}")
    return arr


def _dim(model) -> int:
    return model.k if isinstance(model, SourceModel) else model.l


def _spec(args, model):
    k = _dim(model)
    gamma = _square(args.gamma, k, "gamma") if args.gamma else np.eye(k)
    if getattr(args, "matrix", None) is not None:
        return MatrixSpec(_square(args.matrix, k, "matrix"))
    if getattr(args, "vector", None) is not None:
        return VectorSpec(gamma, _vector(args.vector, k, "vector"))
    if args.sum is not None:
        return SumSpec(gamma, float(args.sum))
    raise _Usage("one of --sum, --vector or --matrix is required")


def _remote(model, spec=None):
    """Remote model (and criterion) for either model kind."""
    if isinstance(model, duality.DirectModel):
        if spec is None:
            return duality.remote_model(model), None
        return duality.convert_spec(model, spec)
    return model, spec


def _add_spec(p, sum_only=False):
    p.add_argument("--gamma", help="weight matrix: scalar (times I), comma list (diagonal) or JSON matrix")
    grp = p.add_mutually_exclusive_group(required=sum_only)
    grp.add_argument("--sum", type=float, metavar="D", help="sum criterion trace(G E G^T) <= D")
    if not sum_only:
        grp.add_argument("--vector", metavar="D1,..", help="vector criterion diag(G E G^T) <= D")
        grp.add_argument("--matrix", metavar="M", help="matrix criterion E <= M (scalar, diagonal list or JSON)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaussrd", description="Gaussian multiterminal rate-distortion bounds.")
    p.add_argument("--bits", action="store_true", help="print rates in bits instead of nats")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("info", help="model summary and matching threshold")
    s.add_argument("model")
    s.add_argument("--gamma", help="weight matrix (default I)")

    s = sub.add_parser("sumrate", help="inner and outer sum-rate bounds")
    s.add_argument("model")
    _add_spec(s)

    s = sub.add_parser("member", help="classify a rate vector")
    s.add_argument("model")
    s.add_argument("--rates", required=True, metavar="R1,..", help="rate vector in nats")
    _add_spec(s)

    s = sub.add_parser("waterfill", help="water-filling solution at an allocation")
    s.add_argument("model")
    s.add_argument("-r", "--alloc", required=True, metavar="r1,..", help="rate allocation in nats")
    _add_spec(s, sum_only=True)

    s = sub.add_parser("match", help="sufficient matching report for a sum criterion")
    s.add_argument("model")
    _add_spec(s, sum_only=True)
    s.add_argument("--delta", type=float, help="noise split for the diagonal-gamma corollary (direct models)")
    s.add_argument("--grid", action="store_true", help="also scan the monotone-decrease condition (remote models)")

    s = sub.add_parser("convert", help="remote equivalent of a direct model and criterion")
    s.add_argument("model")
    _add_spec(s)

    s = sub.add_parser("curve", help="CSV of the cyclic sum-rate curve")
    s.add_argument("model")
    s.add_argument("--steps", type=int, default=20, help="number of intervals in r (default 20)")
    s.add_argument("--r-max", type=float, default=3.0, help="largest common rate r (default 3)")

    s = sub.add_parser("simulate", help="Monte-Carlo check of the test-channel distortion")
    s.add_argument("model")
    s.add_argument("-r", "--alloc", required=True, metavar="r1,..", help="rate allocation in nats")
    s.add_argument("-n", "--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    return p


# commands ------------------------------------------------------------------

def _cmd_info(args, model, out: _Out) -> None:
    remote, _ = _remote(model)
    if isinstance(model, duality.DirectModel):
        mats = duality.duality_matrices(model)
        out.line("kind = direct")
        out.line(f"L = {model.l}")
        for row in _matrix_lines("Sigma_Y", model.sigma_y):
            out.line(row)
        out.line(f"trace(B) = {_g(float(np.trace(mats.b)))}")
    else:
        out.line(f"K = {model.k}")
        out.line(f"L = {model.l}")
    gamma = _square(args.gamma, remote.k, "gamma") if args.gamma else np.eye(remote.k)
    for row in _matrix_lines("Sigma_X|Y", conditional_covariance(remote)):
        out.line(row)
    amax = matching.alpha_max_star(remote, gamma)
    out.line(f"alpha*_max = {_g(amax)}")
    out.line(f"trace lower bound = {_g(matching.trace_lower(remote, gamma))}")
    out.line(f"matching threshold = {_g((remote.k + 1) / amax)}")


def _cmd_sumrate(args, model, out: _Out) -> None:
    remote, spec = _remote(model, _spec(args, model))
    inner = rate_region.sum_rate_inner(remote, spec)
    outer = rate_region.sum_rate_outer(remote, spec)
    gap = max(inner.value - outer.value, 0.0)
    out.line(f"inner = {out.rate(inner.value)}")
    out.line(f"outer = {out.rate(outer.value)}")
    out.line(f"gap = {out.rate(gap)}")
    out.line(f"r = {_vec(inner.r)} nats")
    out.line(f"matched = {'yes' if gap <= 1e-6 * (1.0 + inner.value) else 'no'}")


def _cmd_member(args, model, out: _Out) -> None:
    remote, spec = _remote(model, _spec(args, model))
    rates = _vector(args.rates, remote.l, "rates")
    v = rate_region.membership_verdict(remote, rates, spec)
    r_txt = None if v.r is None else ("0" if not np.any(v.r) else f"{_vec(v.r)} nats")
    if v.kind == "InnerCertified":
        out.line(f"achievable (r={r_txt})")
    elif v.kind == "OuterCertified":
        out.line(f"in outer bound only (r={r_txt}, theta={_g(v.theta)})")
    elif v.kind == "ExcludedHeuristic":
        tag = "proved: target unreachable" if v.certifying else f"heuristic, margin {out.rate(v.margin)}"
        out.line(f"not achievable ({tag})")
    else:
        out.line(f"undetermined (margin {out.rate(v.margin)})")


def _cmd_waterfill(args, model, out: _Out) -> None:
    remote, spec = _remote(model, _spec(args, model))
    r = _vector(args.alloc, remote.l, "r")
    val, _, ws = waterfill.omega_solution(remote, spec.gamma, spec.d, r)
    out.line(f"alphas = {_vec(waterfill.alpha_spectrum(remote, spec.gamma, r))}")
    out.line(f"xi = {_g(ws.xi)}")
    out.line(f"levels = {_vec(ws.levels)}")
    out.line(f"omega = {_g(val)}")


def _cmd_match(args, model, out: _Out) -> None:
    k = _dim(model)
    gamma = _square(args.gamma, k, "gamma") if args.gamma else np.eye(k)
    if isinstance(model, duality.DirectModel):
        rep = duality.matching_direct(model, gamma, args.sum, args.delta)
    else:
        if args.delta is not None:
            raise _Usage("--delta applies to direct models only")
        rep = matching.sufficient_matching(model, gamma, args.sum)
    out.line(f"feasible lower = {_g(rep.feasible_lower)}")
    out.line(f"threshold = {_g(rep.threshold)}")
    out.line(f"verdict = {rep.verdict}")
    if rep.corollary is not None:
        c = rep.corollary
        out.line(f"corollary delta = {_g(c.delta)}")
        out.line(f"corollary bound = {_g(c.bound)}")
        out.line(f"corollary best bound = {_g(c.best_bound)}")
        out.line(f"corollary theorem threshold = {_g(c.theorem_threshold)}")
    if args.grid and isinstance(model, SourceModel) and rep.verdict != matching.INFEASIBLE:
        md = matching.md_condition_numeric(model, gamma, args.sum)
        out.line(f"md condition = {'holds on grid' if md.holds else 'fails'} ({md.checked} checks)")
        if not md.holds:
            out.line(f"md counterexample r = {_vec(md.r)} nats, encoder {md.i + 1}")


def _cmd_convert(args, model, out: _Out) -> None:
    if not isinstance(model, duality.DirectModel):
        raise _Usage("convert needs a direct model (kind: direct)")
    remote, spec = duality.convert_spec(model, _spec(args, model))
    out.line("# remote model")
    for row in dump_model(remote).splitlines():
        out.line(row)
    out.line("# remote criterion")
    if isinstance(spec, MatrixSpec):
        for row in _matrix_lines("sigma_d", spec.sigma_d):
            out.line(row)
        return
    for row in _matrix_lines("gamma", spec.gamma):
        out.line(row)
    out.line(f"d = {_vec(spec.d) if isinstance(spec, VectorSpec) else _g(spec.d)}")


def _csv(x: float) -> str:
    return "%.9g" % (0.0 if abs(x) < 1e-12 else x)


def _cmd_curve(args, model, out: _Out) -> None:
    if not isinstance(model, duality.DirectModel):
        raise _Usage("curve needs a direct model (kind: direct)")
    if args.steps < 1 or not args.r_max > 0:
        raise _Usage("--steps must be >= 1 and --r-max positive")
    inst = cyclic.cyclic_instance(model)
    out.line(f"r,R_{out.unit},D")
    lemma_ok = True
    for j in range(args.steps + 1):
        r = args.r_max * j / args.steps
        rate, dist = cyclic.parametric_curve(inst, r)
        lemma_ok &= cyclic.monotonicity_conditions(inst, r)[0]
        out.line(f"{_csv(r)},{_csv(rate * out.scale)},{_csv(dist)}")
    if not lemma_ok:
        sys.stderr.write("note: monotonicity condition fails at some r; the curve is a lower bound there\n")


def _cmd_simulate(args, model, out: _Out) -> None:
    remote, _ = _remote(model)
    r = _vector(args.alloc, remote.l, "r")
    res = achievability.monte_carlo_distortion(remote, r, args.samples, args.seed, args.workers)
    for row in _matrix_lines("analytic", res.analytic):
        out.line(row)
    for row in _matrix_lines("empirical", res.empirical):
        out.line(row)
    out.line(f"max deviation = {_g(float(np.max(np.abs(res.empirical - res.analytic))))}")
    out.line(f"max deviation / stderr = {_g(res.max_deviation_in_stderr())}")


COMMANDS = {
    "info": _cmd_info,
    "sumrate": _cmd_sumrate,
    "member": _cmd_member,
    "waterfill": _cmd_waterfill,
    "match": _cmd_match,
    "convert": _cmd_convert,
    "curve": _cmd_curve,
    "simulate": _cmd_simulate,
}


def run(argv: list[str], stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    path = Path(args.model)
    if not path.is_file():
        stderr.write(f"gaussrd: error: model file not found: {path}\n")
        return EXIT_USAGE
    try:
        model = load_model(path)
        COMMANDS[args.command](args, model, _Out(stdout, args.bits))
    except _Usage as exc:
        stderr.write(f"gaussrd: error: {exc}\n")
        return EXIT_USAGE
    except InvalidInput as exc:
        stderr.write(f"gaussrd: error: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE
    except Infeasible as exc:
        stderr.write(f"gaussrd: infeasible: {type(exc).__name__}: {exc}\n")
        return EXIT_INFEASIBLE
    except (NumericalFailure, GaussRDError, np.linalg.LinAlgError) as exc:
        stderr.write(f"gaussrd: numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL
    return 0


def main(argv: list[str] | None = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())

"""``cidk`` command line: JSON model/kernel specs in, CSV out.

Spec files look like ``{"v": 1, "family": "<tag>", "params": {...}}``.
Vectors are JSON arrays, matrices are row-major nested arrays. Unknown
keys are rejected. Exit codes: 0 ok, 2 schema, 3 numeric, 4 not conjugate
or unsupported, 5 characteristic certificate failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Any, Callable

import numpy as np

from . import embed as E
from . import ghdist, stablemd
from .errors import CidError, NotConjugateError, NumericError, SchemaError, UnsupportedMixingError
from .levy import CfGrid, GeneratingTriplet, LevyMeasureDiscrete, check_characteristic_certificate
from .recover import RecoveryProblem, recover_density
from .stable1d import StableKernelParams, StableParams, has_closed_form

SCHEMA_VERSION = 1
EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC, EXIT_NOT_CONJUGATE, EXIT_CERTIFICATE = 0, 2, 3, 4, 5


def fmt(v: float) -> str:
    return format(float(v), ".17g")


# ---------------------------------------------------------------- spec parsing

class _Fields:
    """Strict accessor over a params object: every key must be consumed."""

    def __init__(self, family: str, params: Any):
        if not isinstance(params, dict):
            raise SchemaError(f"{family}: params must be an object")
        self.family = family
        self.params = params
        self.used: set[str] = set()

    def get(self, key: str, default: Any = ..., kind: Callable = float):
        self.used.add(key)
        if key not in self.params:
            if default is ...:
                raise SchemaError(f"{self.family}: missing field {key!r}")
            return default
        raw = self.params[key]
        try:
            return kind(raw)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{self.family}: field {key!r} is malformed ({exc})") from exc

    def finish(self) -> None:
        extra = sorted(set(self.params) - self.used)
        if extra:
            raise SchemaError(f"{self.family}: unknown field(s) {', '.join(extra)}")


def _vec(v) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.ndim != 1:
        raise ValueError("expected a vector")
    return a


def _mat(v) -> np.ndarray:
    a = np.atleast_2d(np.asarray(v, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    return a


def _points(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("expected a list of points")
    return a


def _envelope(doc: Any, what: str) -> tuple[str, Any]:
    if not isinstance(doc, dict):
        raise SchemaError(f"{what} spec must be a JSON object")
    extra = sorted(set(doc) - {"v", "family", "params"})
    if extra:
        raise SchemaError(f"{what} spec: unknown top-level field(s) {', '.join(extra)}")
    if doc.get("v") != SCHEMA_VERSION:
        raise SchemaError(f"{what} spec: schema version must be {SCHEMA_VERSION}")
    family = doc.get("family")
    if not isinstance(family, str):
        raise SchemaError(f"{what} spec: 'family' must be a string")
    return family, doc.get("params", {})


def _stable_params(f: _Fields) -> StableParams:
    return StableParams(f.get("alpha"), f.get("sigma"), f.get("beta", 0.0), f.get("mu", 0.0))


def _triplet(f: _Fields) -> GeneratingTriplet:
    A = f.get("A", kind=_mat)
    d = A.shape[0]
    atoms = f.get("atoms", np.zeros((0, d)), kind=_points)
    masses = f.get("masses", np.zeros(0), kind=_vec)
    gamma = f.get("gamma", np.zeros(d), kind=_vec)
    return GeneratingTriplet(A, LevyMeasureDiscrete(atoms.reshape(-1, d), masses), gamma)


def _model_gaussian(f):
    return E.Gaussian(f.get("mu", kind=_vec), f.get("R", kind=_mat))


def _model_stable1d(f):
    return E.Stable1D(_stable_params(f))


def _model_stable_indep(f):
    coords = f.get("coordinates", kind=list)
    out = []
    for j, c in enumerate(coords):
        sub = _Fields(f"stable-indep.coordinates[{j}]", c)
        out.append(_stable_params(sub))
        sub.finish()
    return E.StableIndep(tuple(out))


def _model_stable_iid(f):
    return E.StableIID(_stable_params(f), f.get("dim", kind=int))


def _model_spectral(f):
    alpha = f.get("alpha")
    masses = f.get("masses", kind=_vec)
    if "angles" in f.params:
        gamma = stablemd.SpectralMeasure.from_angles(f.get("angles", kind=_vec), masses)
    else:
        gamma = stablemd.SpectralMeasure(f.get("points", kind=_points), masses)
    return E.SpectralStable(gamma, f.get("mu0", np.zeros(gamma.dim), kind=_vec), alpha)


def _model_subgaussian(f):
    R = f.get("R", kind=_mat)
    return E.SubGaussian(stablemd.SubGaussianParams(f.get("alpha"), R, f.get("mu0", np.zeros(R.shape[0]), kind=_vec)))


def _model_isotropic(f):
    mu0 = f.get("mu0", kind=_vec)
    return E.Isotropic(stablemd.IsotropicParams(f.get("alpha"), f.get("sigma"), mu0, mu0.size))


def _gh_common(f):
    mu = f.get("mu", np.zeros(1), kind=_vec)
    d = mu.size
    Delta = f.get("Delta", np.eye(d), kind=_mat)
    return mu, d, Delta


def _model_gh(f):
    mu, d, Delta = _gh_common(f)
    return E.GH(ghdist.GHParams(f.get("lambda"), f.get("alpha"), f.get("beta", np.zeros(d), kind=_vec),
                                f.get("delta"), mu, Delta))


def _model_nig(f):
    mu, d, Delta = _gh_common(f)
    return E.GH(ghdist.nig(f.get("alpha"), f.get("delta"), mu, Delta, f.get("beta", np.zeros(d), kind=_vec)))


def _model_vg(f):
    mu, d, Delta = _gh_common(f)
    return E.GH(ghdist.vg(f.get("lambda"), f.get("alpha"), mu, Delta, f.get("beta", np.zeros(d), kind=_vec)))


def _model_student_t(f):
    mu, _, Delta = _gh_common(f)
    return E.GH(ghdist.student_t(f.get("lambda"), f.get("delta"), mu, Delta))


def _model_triplet(f):
    return E.TripletCPG(_triplet(f))


def _model_point(f):
    return E.PointMass(f.get("location", kind=_vec))


def _model_empirical(f):
    pts = f.get("points", kind=_points)
    w = f.get("weights", None, kind=_vec)
    return E.Empirical.uniform(pts) if w is None else E.Empirical(pts, w)


MODEL_PARSERS: dict[str, Callable[[_Fields], E.Model]] = {
    "gaussian": _model_gaussian,
    "stable1d": _model_stable1d,
    "stable-indep": _model_stable_indep,
    "stable-iid": _model_stable_iid,
    "stable-spectral": _model_spectral,
    "subgaussian": _model_subgaussian,
    "isotropic": _model_isotropic,
    "gh": _model_gh,
    "nig": _model_nig,
    "vg": _model_vg,
    "student-t": _model_student_t,
    "triplet": _model_triplet,
    "point": _model_point,
    "empirical": _model_empirical,
}


def _kernel_gaussian(f):
    return E.GaussianK(f.get("R0", kind=_mat))


def _kernel_laplace(f):
    return E.LaplaceK(f.get("lambda"))


def _kernel_stable1d(f):
    return E.Stable1DK(StableKernelParams(f.get("alpha"), f.get("sigma0")))


def _kernel_subgaussian(f):
    R0 = f.get("R0", kind=_mat)
    return E.SubGaussianK(stablemd.SubGaussianParams(f.get("alpha"), R0, np.zeros(R0.shape[0])))


def _kernel_isotropic(f):
    return E.IsotropicK(f.get("alpha"), f.get("sigma"), f.get("dim", kind=int))


def _gh_kernel_shape(f):
    d = f.get("dim", 1, kind=int)
    return d, f.get("Delta", np.eye(d), kind=_mat)


def _kernel_snig(f):
    d, Delta = _gh_kernel_shape(f)
    return E.GHK(ghdist.snig_kernel(f.get("alpha"), f.get("delta"), d, Delta))


def _kernel_svg(f):
    d, Delta = _gh_kernel_shape(f)
    return E.GHK(ghdist.svg_kernel(f.get("lambda"), f.get("alpha"), d, Delta))


def _kernel_st(f):
    d, Delta = _gh_kernel_shape(f)
    return E.GHK(ghdist.st_kernel(f.get("lambda"), f.get("delta"), d, Delta))


def _kernel_sgh(f):
    _, Delta = _gh_kernel_shape(f)
    return E.GHK(ghdist.SGHKernel(f.get("lambda"), f.get("alpha"), f.get("delta"), Delta))


def _kernel_triplet(f):
    return E.TripletK(_triplet(f))


def _kernel_tensor(f):
    factors = f.get("factors", kind=list)
    return E.TensorK(tuple(parse_kernel(doc) for doc in factors))


KERNEL_PARSERS: dict[str, Callable[[_Fields], E.Kernel]] = {
    "gaussian": _kernel_gaussian,
    "laplace": _kernel_laplace,
    "stable1d": _kernel_stable1d,
    "subgaussian": _kernel_subgaussian,
    "isotropic": _kernel_isotropic,
    "snig": _kernel_snig,
    "svg": _kernel_svg,
    "st": _kernel_st,
    "sgh": _kernel_sgh,
    "triplet": _kernel_triplet,
    "tensor": _kernel_tensor,
}


def _parse(doc: Any, what: str, table: dict) -> Any:
    family, params = _envelope(doc, what)
    if family not in table:
        raise SchemaError(f"unknown {what} family {family!r}; known: {', '.join(sorted(table))}")
    f = _Fields(family, params)
    try:
        obj = table[family](f)
    except SchemaError as exc:
        raise SchemaError(f"{family}: {exc}") from exc
    f.finish()
    return obj


def parse_model(doc: Any) -> E.Model:
    return _parse(doc, "model", MODEL_PARSERS)


def parse_kernel(doc: Any) -> E.Kernel:
    return _parse(doc, "kernel", KERNEL_PARSERS)


def _load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror}") from exc


def load_model(path: str) -> E.Model:
    return parse_model(_load_json(path))


def load_kernel(path: str) -> E.Kernel:
    return parse_kernel(_load_json(path))


def load_candidates(path: str) -> list[E.Model]:
    doc = _load_json(path)
    if not isinstance(doc, list) or not doc:
        raise SchemaError(f"{path}: candidates file must be a non-empty JSON array of model specs")
    return [parse_model(d) for d in doc]


def load_samples_csv(path: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror}") from exc
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        rows = rows[1:]  # header row
    try:
        pts = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric sample ({exc})") from exc
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise SchemaError(f"{path}: no samples")
    return pts


# ---------------------------------------------------------------- evaluation points

def parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        lo_f, hi_f, n_i = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise SchemaError(f"--grid expects lo:hi:n, got {text!r}") from exc
    if n_i < 1 or not hi_f >= lo_f:
        raise SchemaError("--grid needs n >= 1 and hi >= lo")
    return np.linspace(lo_f, hi_f, n_i)[:, None]


def parse_points(values: list[str], dim: int) -> np.ndarray:
    out = []
    for v in values:
        try:
            p = [float(c) for c in v.split(",")]
        except ValueError as exc:
            raise SchemaError(f"--x value {v!r} is not numeric") from exc
        if len(p) != dim:
            raise SchemaError(f"--x value {v!r} has {len(p)} coordinates, expected {dim}")
        out.append(p)
    return np.array(out, dtype=float).reshape(-1, dim)


def _eval_points(args, dim: int) -> np.ndarray:
    if args.grid is not None:
        if dim != 1:
            raise SchemaError("--grid is available for one-dimensional models only; use --x")
        return parse_grid(args.grid)
    if not args.x:
        raise SchemaError("give evaluation points with --x or --grid")
    return parse_points(args.x, dim)


def _coord_header(dim: int) -> list[str]:
    return ["x"] if dim == 1 else [f"x{j + 1}" for j in range(dim)]


def density_method(model: E.Model) -> str:
    if isinstance(model, (E.Gaussian, E.GH)):
        return "closed-form"
    if isinstance(model, E.Stable1D):
        return "closed-form" if has_closed_form(model.params) else "numeric-cf"
    if isinstance(model, (E.StableIndep, E.StableIID)):
        ps = model.as_indep().params if isinstance(model, E.StableIID) else model.params
        return "closed-form" if all(has_closed_form(p) for p in ps) else "numeric-cf"
    return "numeric-cf"


# ---------------------------------------------------------------- commands

def _writer(out) -> csv.writer:
    return csv.writer(out, lineterminator="\n")


def cmd_density(args, out) -> int:
    model = load_model(args.model)
    pts = _eval_points(args, model.dim)
    vals = np.atleast_1d(model.density(pts if model.dim > 1 else pts[:, 0]))
    method = density_method(model)
    w = _writer(out)
    w.writerow(_coord_header(model.dim) + ["density", "method"])
    for p, v in zip(pts, vals):
        w.writerow([fmt(c) for c in p] + [fmt(v), method])
    return EXIT_OK


def cmd_kernel_mean(args, out) -> int:
    model, kernel = load_model(args.model), load_kernel(args.kernel)
    mean = E.kernel_mean(model, kernel)
    pts = _eval_points(args, kernel.dim)
    vals = np.atleast_1d(mean.evaluate(pts if kernel.dim > 1 else pts[:, 0]))
    if isinstance(mean, E.ClosedForm):
        header = json.dumps(mean.model.describe(), sort_keys=True)
    else:
        header = json.dumps({"method": mean.method, "kernel": kernel.describe(), "model": model.describe()}, sort_keys=True)
    out.write(f"# mean: {header}\n")
    w = _writer(out)
    w.writerow(_coord_header(kernel.dim) + ["value", "method"])
    for p, v in zip(pts, vals):
        w.writerow([fmt(c) for c in p] + [fmt(v), mean.method])
    return EXIT_OK


def _two_models(args) -> tuple[E.Model, E.Model]:
    if not args.model or len(args.model) != 2:
        raise SchemaError("give exactly two --model files")
    return load_model(args.model[0]), load_model(args.model[1])


def _result_row(out, value: float, method: str, est_error: float | None) -> None:
    w = _writer(out)
    w.writerow(["value", "method", "est_error"])
    w.writerow([fmt(value), method, "" if est_error is None else fmt(est_error)])


def cmd_inner(args, out) -> int:
    p, q = _two_models(args)
    kernel = load_kernel(args.kernel)
    ip = E.inner_product(E.kernel_mean(p, kernel), E.kernel_mean(q, kernel), args.tol)
    _result_row(out, ip.value, ip.method, ip.est_error)
    return EXIT_OK


def cmd_mmd(args, out) -> int:
    p, q = _two_models(args)
    kernel = load_kernel(args.kernel)
    mp, mq = E.kernel_mean(p, kernel), E.kernel_mean(q, kernel)
    terms = [(1.0, E.inner_product(mp, mp, args.tol)), (1.0, E.inner_product(mq, mq, args.tol)),
             (2.0, E.inner_product(mp, mq, args.tol))]
    value = E.mmd2(p, q, kernel, args.tol)
    methods = {ip.method for _, ip in terms}
    method = "numeric-cf" if "numeric-cf" in methods else "empirical" if "empirical" in methods else "closed-form"
    errs = [c * ip.est_error for c, ip in terms if ip.est_error is not None]
    _result_row(out, value, method, sum(errs) if errs else None)
    return EXIT_OK


def cmd_recover(args, out) -> int:
    kernel = load_kernel(args.kernel)
    candidates = load_candidates(args.candidates)
    if (args.target is None) == (args.samples is None):
        raise SchemaError("give exactly one of --target or --samples")
    target_model = load_model(args.target) if args.target else E.Empirical.uniform(load_samples_csv(args.samples))
    problem = RecoveryProblem(E.kernel_mean(target_model, kernel), candidates, kernel, ridge=args.ridge)
    sol = recover_density(problem, tol=args.tol, max_iter=args.max_iter)
    w = _writer(out)
    w.writerow(["candidate", "family", "weight"])
    for j, (c, a) in enumerate(zip(candidates, sol.weights)):
        w.writerow([j, c.family, fmt(a)])
    out.write(f"# objective={fmt(sol.objective)} gap={fmt(sol.kkt_residual)} "
              f"iterations={sol.iterations} converged={str(sol.converged).lower()}\n")
    return EXIT_OK


def cmd_check_characteristic(args, out) -> int:
    kernel = load_kernel(args.kernel)
    grid = CfGrid(args.theta_max, args.n_points)
    report = check_characteristic_certificate(kernel.log_cf, kernel.dim, grid, log_scale=True)
    out.write(f"kernel: {json.dumps(kernel.describe(), sort_keys=True)}\n{report.summary()}\n")
    return EXIT_OK if report.passed else EXIT_CERTIFICATE


def cmd_sample(args, out) -> int:
    model = load_model(args.model)
    if args.n < 1:
        raise SchemaError("--n must be positive")
    xs = np.asarray(model.sample(args.n, np.random.default_rng(args.seed)), dtype=float).reshape(args.n, -1)
    w = _writer(out)
    w.writerow(_coord_header(xs.shape[1]))
    for row in xs:
        w.writerow([fmt(v) for v in row])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cidk", description="Kernel means and densities for CID kernels.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model: str | None = "one", kernel: bool = False, points: bool = False, tol: bool = False):
        if model == "one":
            p.add_argument("--model", required=True, metavar="FILE")
        elif model == "two":
            p.add_argument("--model", action="append", metavar="FILE", help="give twice")
        if kernel:
            p.add_argument("--kernel", required=True, metavar="FILE")
        if points:
            p.add_argument("--x", nargs="+", metavar="X", help="points; comma-separated coordinates in d > 1")
            p.add_argument("--grid", metavar="LO:HI:N")
        if tol:
            p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--out", metavar="FILE", help="default: stdout")

    p = sub.add_parser("density", help="density of a model")
    common(p, points=True)
    p.set_defaults(func=cmd_density)
    p = sub.add_parser("kernel-mean", help="kernel mean of a model evaluated at points")
    common(p, kernel=True, points=True)
    p.set_defaults(func=cmd_kernel_mean)
    p = sub.add_parser("inner", help="<m_P, m_Q> for two models")
    common(p, model="two", kernel=True, tol=True)
    p.set_defaults(func=cmd_inner)
    p = sub.add_parser("mmd", help="squared MMD between two models")
    common(p, model="two", kernel=True, tol=True)
    p.set_defaults(func=cmd_mmd)
    p = sub.add_parser("recover", help="mixture weights from a target kernel mean")
    common(p, model=None, kernel=True)
    p.add_argument("--target", metavar="FILE")
    p.add_argument("--samples", metavar="CSV")
    p.add_argument("--candidates", required=True, metavar="FILE")
    p.add_argument("--ridge", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)
    p.set_defaults(func=cmd_recover)
    p = sub.add_parser("check-characteristic", help="grid certificate that the kernel CF is positive")
    common(p, model=None, kernel=True)
    p.add_argument("--theta-max", type=float, default=CfGrid().theta_max)
    p.add_argument("--n-points", type=int, default=CfGrid().n_points)
    p.set_defaults(func=cmd_check_characteristic)
    p = sub.add_parser("sample", help="draw variates from a model")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)
    return ap


def _exit_code(exc: CidError) -> int:
    if isinstance(exc, SchemaError):
        return EXIT_SCHEMA
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, (NotConjugateError, UnsupportedMixingError)):
        return EXIT_NOT_CONJUGATE
    return EXIT_NUMERIC


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    buf = io.StringIO()
    try:
        with np.errstate(all="ignore"):
            code = args.func(args, buf)
    except CidError as exc:
        print(f"cidk {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"cidk {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

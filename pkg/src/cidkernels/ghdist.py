"""Generalized hyperbolic laws as normal mean-variance mixtures over GIG.

X = mu + Z Delta beta + sqrt(Z) Delta^{1/2} W with Z ~ GIG(lam, delta, gamma),
gamma = sqrt(alpha^2 - beta' Delta beta). Subclasses are recognised from the
parameters: NIG (lam = -1/2), VG (delta = 0), Student t (alpha = 0),
HYP (lam = (d+1)/2), and the inverse-Gamma mixture with alpha = ||beta|| != 0.

All densities are computed in log space; the normalizer carries
det(Delta)^{-1/2} so that Delta need not have unit determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (
    DimensionMismatchError,
    DomainError,
    NoConvolutionRuleError,
    NotConjugateError,
    SchemaError,
    UnboundedKernelError,
    UnsupportedMixingError,
)
from .levy import as_points, invert_cf_radial
from .specfun import log_bessel_k

_PARAM_TOL = 1e-12


def _eq(a: float, b: float, tol: float = _PARAM_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------- GIG

@dataclass(frozen=True)
class GIGParams:
    """Density (gamma/delta)^lam / (2 K_lam(delta gamma)) x^(lam-1) exp(-(delta^2/x + gamma^2 x)/2)."""

    lam: float
    delta: float
    gamma: float

    def __post_init__(self) -> None:
        lam, d, g = float(self.lam), float(self.delta), float(self.gamma)
        ok = (
            (lam > 0 and d >= 0 and g > 0)
            or (lam == 0 and d > 0 and g > 0)
            or (lam < 0 and d > 0 and g >= 0)
        )
        if not ok or not all(map(math.isfinite, (lam, d, g))):
            raise SchemaError(f"inadmissible GIG parameters (lam={lam}, delta={d}, gamma={g})")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "gamma", g)


def gig_log_density(p: GIGParams, x):
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    pos = x > 0
    xp = x[pos]
    lam, d, g = p.lam, p.delta, p.gamma
    if d == 0.0:
        # Gamma(lam, rate gamma^2 / 2)
        rate = 0.5 * g * g
        vals = lam * math.log(rate) - math.lgamma(lam) + (lam - 1) * np.log(xp) - rate * xp
    elif g == 0.0:
        # inverse Gamma(-lam, scale delta^2 / 2)
        shape, scale = -lam, 0.5 * d * d
        vals = shape * math.log(scale) - math.lgamma(shape) - (shape + 1) * np.log(xp) - scale / xp
    else:
        log_norm = lam * (math.log(g) - math.log(d)) - math.log(2.0) - log_bessel_k(lam, d * g)
        vals = log_norm + (lam - 1) * np.log(xp) - 0.5 * (d * d / xp + g * g * xp)
    out[pos] = vals
    return out


def gig_density(p: GIGParams, x):
    out = np.exp(gig_log_density(p, x))
    return float(out) if out.ndim == 0 else out


def sample_gig(p: GIGParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Mixing draws for the subclasses with standard samplers."""
    lam, d, g = p.lam, p.delta, p.gamma
    if d == 0.0:
        return rng.gamma(lam, 2.0 / (g * g), size=n)
    if g == 0.0:
        return 0.5 * d * d / rng.gamma(-lam, 1.0, size=n)
    if _eq(lam, -0.5):
        return rng.wald(d / g, d * d, size=n)
    if _eq(lam, 0.5):
        # GIG(1/2) = GIG(-1/2) + Gamma(1/2): the MGFs multiply to the GIG(1/2) transform
        return rng.wald(d / g, d * d, size=n) + rng.gamma(0.5, 2.0 / (g * g), size=n)
    raise UnsupportedMixingError(
        f"no sampler for GIG mixing with lam={lam}, delta>0, gamma>0 (only lam = +-1/2 are supported)"
    )


# ---------------------------------------------------------------- GH parameters

def _as_matrix(Delta, d: int) -> np.ndarray:
    D = np.atleast_2d(np.asarray(Delta, dtype=float)).copy()
    if D.shape != (d, d):
        raise DimensionMismatchError(f"Delta must be {d}x{d}")
    if not np.allclose(D, D.T, rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(D))))):
        raise SchemaError("Delta must be symmetric")
    try:
        np.linalg.cholesky(D)
    except np.linalg.LinAlgError as exc:
        raise SchemaError("Delta must be positive definite") from exc
    D.setflags(write=False)
    return D


@dataclass(frozen=True)
class GHParams:
    lam: float
    alpha: float
    beta: np.ndarray
    delta: float
    mu: np.ndarray
    Delta: np.ndarray

    def __post_init__(self) -> None:
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        d = mu.size
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float)).copy()
        if beta.shape != (d,):
            raise DimensionMismatchError("beta and mu have different lengths")
        D = _as_matrix(self.Delta, d)
        lam, a, dl = float(self.lam), float(self.alpha), float(self.delta)
        if not (a >= 0 and dl >= 0 and all(map(math.isfinite, (lam, a, dl)))):
            raise SchemaError("GH requires alpha >= 0 and delta >= 0")
        bnorm = math.sqrt(max(float(beta @ D @ beta), 0.0))
        if lam > 0:
            ok = bnorm < a
        elif lam == 0:
            ok = dl > 0 and bnorm < a
        else:
            ok = dl > 0 and bnorm <= a * (1 + _PARAM_TOL)
        if not ok:
            raise SchemaError(
                f"inadmissible GH parameters (lam={lam}, alpha={a}, ||beta||={bnorm}, delta={dl})"
            )
        mu.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "delta", dl)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "Delta", D)
        object.__setattr__(self, "_chol", np.linalg.cholesky(D))

    @property
    def dim(self) -> int:
        return int(self.mu.size)

    @property
    def gamma(self) -> float:
        """sqrt(alpha^2 - beta' Delta beta), clipped at 0 for the limiting case."""
        return math.sqrt(max(self.alpha ** 2 - float(self.beta @ self.Delta @ self.beta), 0.0))

    @property
    def is_symmetric(self) -> bool:
        return not np.any(self.beta)

    @property
    def subclass(self) -> str:
        if self.delta == 0.0:
            return "VG"
        if self.alpha == 0.0:
            return "t"
        if self.gamma == 0.0:
            return "inverse-gamma mixture"
        if _eq(self.lam, -0.5):
            return "NIG"
        if _eq(self.lam, 0.5 * (self.dim + 1)):
            return "HYP"
        return "GH"

    def mixing(self) -> GIGParams:
        return GIGParams(self.lam, self.delta, self.gamma)

    def reflected(self) -> "GHParams":
        return GHParams(self.lam, self.alpha, -self.beta, self.delta, -self.mu, self.Delta)

    def with_(self, **changes) -> "GHParams":
        fields = dict(lam=self.lam, alpha=self.alpha, beta=self.beta, delta=self.delta, mu=self.mu, Delta=self.Delta)
        fields.update(changes)
        return GHParams(**fields)

    def log_det_delta(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self._chol))))

    def mahalanobis2(self, pts: np.ndarray) -> np.ndarray:
        """||x - mu||^2 in the Delta^{-1} metric for rows of ``pts``."""
        white = np.linalg.solve(self._chol, (pts - self.mu[None, :]).T)
        return np.sum(white * white, axis=0)


def nig(alpha: float, delta: float, mu=0.0, Delta=None, beta=None) -> GHParams:
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    d = mu.size
    return GHParams(-0.5, alpha, np.zeros(d) if beta is None else beta, delta, mu,
                    np.eye(d) if Delta is None else Delta)


def vg(lam: float, alpha: float, mu=0.0, Delta=None, beta=None) -> GHParams:
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    d = mu.size
    return GHParams(lam, alpha, np.zeros(d) if beta is None else beta, 0.0, mu,
                    np.eye(d) if Delta is None else Delta)


def student_t(lam: float, delta: float, mu=0.0, Delta=None) -> GHParams:
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    d = mu.size
    return GHParams(lam, 0.0, np.zeros(d), delta, mu, np.eye(d) if Delta is None else Delta)


# ---------------------------------------------------------------- density

def _log_rpow_bessel(nu: float, alpha: float, r: np.ndarray) -> np.ndarray:
    """log(r^nu K_nu(alpha r)); at r = 0 the finite limit Gamma(nu) 2^(nu-1) alpha^(-nu) when nu > 0."""
    out = np.empty_like(r)
    zero = r == 0.0
    if np.any(zero):
        if nu > 0:
            out[zero] = math.lgamma(nu) + (nu - 1) * math.log(2.0) - nu * math.log(alpha)
        else:
            out[zero] = np.inf
    nz = ~zero
    if np.any(nz):
        out[nz] = nu * np.log(r[nz]) + np.atleast_1d(log_bessel_k(nu, alpha * r[nz]))
    return out


def gh_log_density(p: GHParams, x):
    d = p.dim
    pts, batch = as_points(x, d)
    q = p.mahalanobis2(pts)
    nu = p.lam - 0.5 * d
    half_log_det = 0.5 * p.log_det_delta()
    skew = (pts - p.mu[None, :]) @ p.beta
    lam, a, dl = p.lam, p.alpha, p.delta
    if a == 0.0:
        # Student t: inverse-Gamma mixing, beta = 0
        log_norm = math.lgamma(0.5 * d - lam) - math.lgamma(-lam) - 0.5 * d * math.log(math.pi) - d * math.log(dl)
        out = log_norm + nu * np.log1p(q / (dl * dl))
    elif dl == 0.0:
        g = p.gamma
        log_norm = (2 * lam * math.log(g) - 0.5 * d * math.log(2 * math.pi) - math.lgamma(lam)
                    - nu * math.log(a) - (lam - 1) * math.log(2.0))
        out = log_norm + _log_rpow_bessel(nu, a, np.sqrt(q)) + skew
    else:
        g = p.gamma
        if g == 0.0:
            log_norm = ((lam + 1 - 0.5 * d) * math.log(2.0) - 0.5 * d * math.log(math.pi)
                        - 2 * lam * math.log(dl) - math.lgamma(-lam) - nu * math.log(a))
        else:
            log_norm = (lam * math.log(g) - 0.5 * d * math.log(2 * math.pi) - nu * math.log(a)
                        - lam * math.log(dl) - log_bessel_k(lam, dl * g))
        s = np.hypot(dl, np.sqrt(q))  # dl * dl underflows for tiny delta
        out = log_norm + nu * np.log(s) + np.atleast_1d(log_bessel_k(nu, a * s)) + skew
    out = (out - half_log_det).reshape(batch)
    return float(out) if out.ndim == 0 else out


def gh_density(p: GHParams, x):
    """GH density; VG laws with lam <= d/2 return inf at x = mu."""
    out = np.exp(np.asarray(gh_log_density(p, x)))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- characteristic function

def gh_log_cf(p: GHParams, theta):
    d = p.dim
    pts, batch = as_points(theta, d)
    quad = np.einsum("mi,ij,mj->m", pts, p.Delta, pts)
    lin = pts @ (p.Delta @ p.beta)
    g = p.gamma
    # gamma^2 - 2u with u = i theta' Delta beta - theta' Delta theta / 2; Re >= gamma^2 keeps it off the cut
    w = g * g + quad - 2j * lin
    assert np.all(w.real >= -1e-12 * (1 + np.abs(w))), "GIG transform argument crossed the branch cut"
    lam, dl = p.lam, p.delta
    out = np.zeros(w.shape, dtype=complex)
    nz = w != 0
    wn = w[nz]
    if dl == 0.0:
        out[nz] = lam * (math.log(g * g) - np.log(wn))
    elif g == 0.0:
        z = dl * np.sqrt(wn)
        out[nz] = math.log(2.0) - math.lgamma(-lam) - lam * np.log(0.5 * z) + np.log(special.kve(-lam, z)) - z
    else:
        z = dl * np.sqrt(wn)
        base = math.log(special.kve(lam, dl * g)) - dl * g
        out[nz] = 0.5 * lam * (math.log(g * g) - np.log(wn)) + np.log(special.kve(lam, z)) - z - base
    out = (out + 1j * pts @ p.mu).reshape(batch)
    return complex(out) if out.ndim == 0 else out


def gh_cf(p: GHParams, theta):
    """exp(i theta.mu) M_GIG(i theta' Delta beta - theta' Delta theta / 2)."""
    out = np.exp(gh_log_cf(p, theta))
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- kernels

def classify_bounded_sgh(lam: float, delta: float, dim: int) -> bool:
    """False exactly when the symmetric GH density blows up at 0: VG with 0 < lam <= d/2."""
    return not (delta == 0.0 and 0.0 < lam <= 0.5 * dim)


@dataclass(frozen=True)
class SGHKernel:
    """k(x, y) = symmetric GH density at x - y."""

    lam: float
    alpha: float
    delta: float
    Delta: np.ndarray

    def __post_init__(self) -> None:
        D = np.atleast_2d(np.asarray(self.Delta, dtype=float))
        object.__setattr__(self, "Delta", D)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "delta", float(self.delta))
        if not classify_bounded_sgh(self.lam, self.delta, D.shape[0]):
            raise UnboundedKernelError(
                f"VG density with lam={self.lam} <= d/2={D.shape[0] / 2} is unbounded at 0; not a kernel"
            )
        self.params  # validates admissibility

    @property
    def dim(self) -> int:
        return int(self.Delta.shape[0])

    @property
    def params(self) -> GHParams:
        d = self.dim
        return GHParams(self.lam, self.alpha, np.zeros(d), self.delta, np.zeros(d), self.Delta)

    @property
    def tag(self) -> str:
        return {"NIG": "SNIG", "VG": "SVG", "t": "St", "HYP": "SHYP"}.get(self.params.subclass, "SGH")

    def __call__(self, x, y):
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return gh_density(self.params, diff)


def snig_kernel(alpha: float, delta: float, dim: int = 1, Delta=None) -> SGHKernel:
    return SGHKernel(-0.5, alpha, delta, np.eye(dim) if Delta is None else Delta)


def svg_kernel(lam: float, alpha: float, dim: int = 1, Delta=None) -> SGHKernel:
    return SGHKernel(lam, alpha, 0.0, np.eye(dim) if Delta is None else Delta)


def st_kernel(lam: float, delta: float, dim: int = 1, Delta=None) -> SGHKernel:
    return SGHKernel(lam, 0.0, delta, np.eye(dim) if Delta is None else Delta)


# ---------------------------------------------------------------- convolution and kernel means

def _same_shape(p1: GHParams, p2: GHParams) -> bool:
    return (
        p1.dim == p2.dim
        and _eq(p1.alpha, p2.alpha)
        and np.allclose(p1.beta, p2.beta, rtol=0, atol=_PARAM_TOL)
        and np.allclose(p1.Delta, p2.Delta, rtol=0, atol=_PARAM_TOL)
    )


def gh_convolve_rule(p1: GHParams, p2: GHParams) -> str:
    """Name of the convolution rule that applies, or raise NoConvolutionRuleError."""
    if not _same_shape(p1, p2):
        raise NoConvolutionRuleError("GH convolution needs common alpha, beta and Delta")
    nig1, nig2 = _eq(p1.lam, -0.5) and p1.delta > 0, _eq(p2.lam, -0.5) and p2.delta > 0
    vg1, vg2 = p1.delta == 0.0, p2.delta == 0.0
    if nig1 and nig2:
        return "NIG+NIG"
    if vg1 and vg2:
        return "VG+VG"
    half1, half2 = _eq(p1.lam, 0.5) and p1.delta > 0, _eq(p2.lam, 0.5) and p2.delta > 0
    if (nig1 and half2) or (half1 and nig2):
        return "NIG+GH(1/2)"
    if (vg1 and p2.delta > 0 and _eq(p2.lam, -p1.lam)) or (vg2 and p1.delta > 0 and _eq(p1.lam, -p2.lam)):
        return "GH(-lam)+VG(lam)"
    raise NoConvolutionRuleError(
        f"no GH convolution rule for lam=({p1.lam}, {p2.lam}), delta=({p1.delta}, {p2.delta})"
    )


def gh_convolve(p1: GHParams, p2: GHParams) -> GHParams:
    rule = gh_convolve_rule(p1, p2)
    mu = p1.mu + p2.mu
    if rule == "NIG+NIG":
        return p1.with_(delta=p1.delta + p2.delta, mu=mu)
    if rule == "VG+VG":
        return p1.with_(lam=p1.lam + p2.lam, mu=mu)
    if rule == "NIG+GH(1/2)":
        return p1.with_(lam=0.5, delta=p1.delta + p2.delta, mu=mu)
    vgp, ghp = (p1, p2) if p1.delta == 0.0 else (p2, p1)
    return ghp.with_(lam=vgp.lam, mu=mu)


_KERNEL_MEAN_CASES = {
    ("SNIG", "NIG"): "1",
    ("SVG", "VG"): "2",
    ("GH(1/2)", "NIG"): "3(a)",
    ("SNIG", "GH(1/2)"): "3(b)",
    ("SVG", "GH(-lam)"): "4(a)",
    ("GH(-lam)", "VG"): "4(b)",
}


def _role(p: GHParams, as_kernel: bool) -> str:
    if p.delta == 0.0:
        return "SVG" if as_kernel else "VG"
    if _eq(p.lam, -0.5):
        return "SNIG" if as_kernel else "NIG"
    if _eq(p.lam, 0.5):
        return "GH(1/2)"
    return "GH(-lam)" if p.lam < 0 else "other"


def gh_kernel_mean_case(kernel: SGHKernel, model: GHParams) -> str:
    """Label of the conjugate (kernel, model) pairing, or raise NotConjugateError."""
    if not model.is_symmetric:
        raise NotConjugateError("GH kernel means are closed only for zero-skew models (beta = 0)")
    kp = kernel.params
    if kp.dim != model.dim:
        raise DimensionMismatchError("kernel and model dimensions differ")
    case = _KERNEL_MEAN_CASES.get((_role(kp, True), _role(model, False)))
    if case is None or not _same_shape(kp, model.with_(mu=np.zeros(model.dim))):
        raise NotConjugateError(
            f"no conjugate GH pairing for kernel {kernel.tag}(lam={kernel.lam}) and model {model.subclass}(lam={model.lam})"
        )
    if case == "2" and not kp.lam > 0.5 * kp.dim:
        raise NotConjugateError("VG kernel needs lam > d/2")
    if case in ("4(a)", "4(b)"):
        vg_lam = kp.lam if case == "4(a)" else model.lam
        gh_lam = model.lam if case == "4(a)" else kp.lam
        if not (_eq(gh_lam, -vg_lam) and vg_lam > 0.5 * kp.dim):
            raise NotConjugateError("case 4 needs GH(-lam) paired with VG(lam), lam > d/2")
    return case


def gh_kernel_mean(kernel: SGHKernel, model: GHParams) -> GHParams:
    """Parameters of the kernel mean density for the six conjugate pairings."""
    gh_kernel_mean_case(kernel, model)
    return gh_convolve(kernel.params, model)


def gh_inner_mean_feature(kernel: SGHKernel, model: GHParams, x):
    return gh_density(gh_kernel_mean(kernel, model), x)


def _radial_cf(p: GHParams):
    """Radial profile h(t) of a centred zero-skew GH CF in whitened coordinates."""
    unit = p.with_(mu=np.zeros(p.dim), Delta=np.eye(p.dim), beta=np.zeros(p.dim))

    def h(t):
        t = np.asarray(t, dtype=float)
        pts = np.zeros((t.size, p.dim))
        pts[:, 0] = t.ravel()
        return np.real(gh_cf(unit, pts)).reshape(t.shape)

    return h


def gh_inner_mean_mean(kernel: SGHKernel, p: GHParams, q: GHParams, tol: float = 1e-10) -> tuple[float, str]:
    """<m_P, m_Q>: density at 0 of kernel * reflected P * Q, and how it was obtained.

    The three-fold convolution is closed when a convolution rule applies to
    (kernel mean of P reflected, Q); otherwise the product of the three
    (real, radial) CFs is inverted at the whitened location difference.
    """
    mean_p = gh_kernel_mean(kernel, p)
    gh_kernel_mean_case(kernel, q)
    try:
        law = gh_convolve(mean_p.reflected(), q)
        return float(np.ravel(gh_density(law, np.zeros(p.dim)))[0]), "closed-form"
    except NoConvolutionRuleError:
        pass
    hk, hp, hq = _radial_cf(kernel.params), _radial_cf(p), _radial_cf(q)
    chol = np.linalg.cholesky(kernel.params.Delta)
    r = float(np.linalg.norm(np.linalg.solve(chol, q.mu - p.mu)))
    amp = invert_cf_radial(lambda t: hk(t) * hp(t) * hq(t), p.dim, r, tol)
    return amp / math.sqrt(np.linalg.det(kernel.params.Delta)), "numeric-cf"


def sample_gh(p: GHParams, n: int, seed=None) -> np.ndarray:
    """mu + Z Delta beta + sqrt(Z) Delta^{1/2} W; returns an (n, d) array."""
    rng = np.random.default_rng(seed)
    z = sample_gig(p.mixing(), n, rng)
    w = rng.standard_normal((n, p.dim)) @ p._chol.T
    return p.mu[None, :] + np.outer(z, p.Delta @ p.beta) + np.sqrt(z)[:, None] * w


def matern_shape(nu: float, alpha: float, r):
    """r^nu K_nu(alpha r), the Matern correlation up to a constant."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    return np.exp(_log_rpow_bessel(nu, alpha, np.atleast_1d(r))).reshape(r.shape)


__all__ = [
    "GIGParams",
    "gig_density",
    "gig_log_density",
    "sample_gig",
    "GHParams",
    "nig",
    "vg",
    "student_t",
    "gh_density",
    "gh_log_density",
    "gh_cf",
    "gh_log_cf",
    "classify_bounded_sgh",
    "SGHKernel",
    "snig_kernel",
    "svg_kernel",
    "st_kernel",
    "gh_convolve",
    "gh_convolve_rule",
    "gh_kernel_mean",
    "gh_kernel_mean_case",
    "gh_inner_mean_feature",
    "gh_inner_mean_mean",
    "sample_gh",
    "matern_shape",
]

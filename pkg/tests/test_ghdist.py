import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from cidkernels.errors import (
    NoConvolutionRuleError,
    NotConjugateError,
    SchemaError,
    UnboundedKernelError,
    UnsupportedMixingError,
)
from cidkernels.levy import check_characteristic_certificate, invert_cf_1d
from cidkernels.oracle import bessel_k_cosh_integral, ks_critical_99, ks_distance, mc_mean
from cidkernels.ghdist import (
    GHParams,
    GIGParams,
    SGHKernel,
    classify_bounded_sgh,
    gh_cf,
    gh_convolve,
    gh_convolve_rule,
    gh_density,
    gh_inner_mean_feature,
    gh_inner_mean_mean,
    gh_kernel_mean,
    gh_kernel_mean_case,
    gh_log_cf,
    gig_density,
    matern_shape,
    nig,
    sample_gh,
    snig_kernel,
    st_kernel,
    svg_kernel,
    vg,
    student_t,
)


def _at(p: GHParams, x) -> float:
    return float(np.ravel(gh_density(p, np.atleast_1d(np.asarray(x, dtype=float))))[0])


def _mass_1d(p: GHParams) -> float:
    f = lambda x: _at(p, x)  # noqa: E731
    m = float(p.mu[0])
    left = integrate.quad(f, -np.inf, m, limit=400, epsabs=1e-11)[0]
    right = integrate.quad(f, m, np.inf, limit=400, epsabs=1e-11)[0]
    return left + right


# ---------------------------------------------------------------- GIG

def test_gig_validation():
    with pytest.raises(SchemaError):
        GIGParams(0.0, 0.0, 1.0)
    with pytest.raises(SchemaError):
        GIGParams(1.0, 1.0, 0.0)
    with pytest.raises(SchemaError):
        GIGParams(-1.0, 0.0, 1.0)
    GIGParams(-1.0, 1.0, 0.0)
    GIGParams(1.0, 0.0, 1.0)


def test_gig_density_examples():
    assert gig_density(GIGParams(-0.5, 1.0, 1.0), 1.0) == pytest.approx(0.3989422804014327, abs=1e-14)
    assert gig_density(GIGParams(1.0, 1.0, 1.0), -1.0) == 0.0
    assert gig_density(GIGParams(1.0, 1.0, 1.0), 0.0) == 0.0


@pytest.mark.parametrize("lam,delta,gamma", [(1, 1, 1), (-0.5, 2, 0.7), (2.5, 0, 1.3), (-1.5, 0.8, 0), (0, 1.5, 2)])
def test_gig_integrates_to_one(lam, delta, gamma):
    p = GIGParams(lam, delta, gamma)
    mass = integrate.quad(lambda x: float(gig_density(p, x)), 0, np.inf, limit=400, epsabs=1e-12)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_gig_sampler_mean():
    p = GIGParams(0.5, 1.2, 0.8)
    xs = sample_gh(GHParams(0.5, 0.8, [0.0], 1.2, [0.0], [[1.0]]), 200_000, 0)
    # E Z for GIG: (delta / gamma) K_{lam+1}(delta gamma) / K_lam(delta gamma); E X^2 = E Z
    ez = 1.2 / 0.8 * special.kv(1.5, 0.96) / special.kv(0.5, 0.96)
    est = mc_mean(xs[:, 0] ** 2)
    assert est.within(ez, 4.0)
    assert gig_density(p, 1.0) > 0


# ---------------------------------------------------------------- parameters and densities

def test_gh_admissibility():
    with pytest.raises(SchemaError):
        GHParams(1.0, 1.0, [1.0], 1.0, [0.0], [[1.0]])  # ||beta|| = alpha needs lam < 0
    with pytest.raises(SchemaError):
        GHParams(0.0, 1.0, [0.0], 0.0, [0.0], [[1.0]])
    with pytest.raises(SchemaError):
        GHParams(-1.0, 1.0, [0.0], 0.0, [0.0], [[1.0]])
    with pytest.raises(SchemaError):
        GHParams(-1.0, 1.0, [0.0], 1.0, [0.0], [[-1.0]])
    GHParams(-1.0, 1.0, [1.0], 1.0, [0.0], [[1.0]])


def test_subclass_labels():
    assert nig(1, 1).subclass == "NIG"
    assert vg(1, 1).subclass == "VG"
    assert student_t(-1.5, 1).subclass == "t"
    assert GHParams(1.0, 2.0, [0.0], 1.0, [0.0], [[1.0]]).subclass == "HYP"
    assert GHParams(-1.0, 1.0, [1.0], 1.0, [0.0], [[1.0]]).subclass == "inverse-gamma mixture"


def test_nig_density_example():
    expected = math.e / math.pi * special.k1(1.0)
    assert gh_density(nig(1.0, 1.0), [0.0]) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(0.5208038299916701, abs=1e-15)


def test_student_t_matches_scipy():
    # lam = -nu/2, delta = sqrt(nu): Student t with nu degrees of freedom
    p = student_t(-1.5, math.sqrt(3.0))
    xs = np.linspace(-6, 6, 13)
    assert np.allclose(gh_density(p, xs), __import__("scipy").stats.t.pdf(xs, 3), atol=1e-14)


def test_vg_matches_cosh_integral_bessel():
    p = vg(1.3, 1.7)
    for x in (0.3, 1.0, 4.0):
        nu = 1.3 - 0.5
        norm = (1.7 ** 2) ** 1.3 / (math.sqrt(2 * math.pi) * math.gamma(1.3) * 1.7 ** nu * 2 ** 0.3)
        ref = norm * x ** nu * bessel_k_cosh_integral(nu, 1.7 * x)
        assert gh_density(p, [x]) == pytest.approx(ref, rel=1e-10)


@given(st.floats(-3, 3), st.floats(0.3, 3), st.floats(0, 2), st.floats(-5, 5))
def test_symmetric_density_reflection(lam, alpha, delta, x):
    if lam <= 0 and delta == 0:
        delta = 0.5
    p = GHParams(lam, alpha, [0.0], delta, [0.7], [[1.3]])
    lhs, rhs = gh_density(p, [0.7 + x]), gh_density(p, [0.7 - x])
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize(
    "p",
    [
        nig(1.5, 0.8, mu=0.3, beta=[0.6]),
        GHParams(1.2, 2.0, [-0.5], 1.0, [0.0], [[0.5]]),
        vg(1.5, 1.0, beta=[0.3]),
        student_t(-2.0, 1.5),
        GHParams(-1.0, 1.0, [1.0], 1.0, [0.0], [[1.0]]),
    ],
    ids=["nig-skew", "gh-lam1.2", "vg-skew", "t", "invgamma"],
)
def test_density_integrates_to_one(p):
    assert _mass_1d(p) == pytest.approx(1.0, abs=1e-6)


def test_density_2d_normalised():
    p = GHParams(0.7, 1.5, [0.2, -0.3], 0.9, [0.0, 0.0], [[1.0, 0.3], [0.3, 0.8]])
    f = lambda y, x: float(gh_density(p, [x, y]))  # noqa: E731
    mass = integrate.dblquad(f, -30, 30, -30, 30, epsabs=1e-9)[0]
    assert mass == pytest.approx(1.0, abs=1e-6)


# ---------------------------------------------------------------- characteristic functions

def test_cf_zero_and_nig_closed_form():
    p = nig(2.0, 1.3, mu=0.4, beta=[0.7])
    assert gh_cf(p, [0.0]) == pytest.approx(1.0, abs=1e-15)
    th = np.linspace(-10, 10, 41)
    direct = np.exp(1.3 * (math.sqrt(4 - 0.49) - np.sqrt(4 - (0.7 + 1j * th) ** 2)) + 1j * th * 0.4)
    assert np.max(np.abs(gh_cf(p, th) - direct)) < 1e-10


@pytest.mark.parametrize(
    "p",
    [nig(1.5, 0.8, mu=0.3, beta=[0.6]), GHParams(1.2, 2.0, [-0.5], 1.0, [0.1], [[0.5]]), vg(1.5, 1.0, beta=[0.3]),
     student_t(-2.0, 1.5)],
    ids=["nig", "gh", "vg", "t"],
)
def test_cf_inversion_matches_density(p):
    cf = lambda t: gh_cf(p, t)  # noqa: E731
    for x in np.linspace(-4, 4, 9) + 0.05:
        assert invert_cf_1d(cf, float(x), 1e-10) == pytest.approx(gh_density(p, [x]), abs=1e-6)


def test_cf_matches_empirical():
    p = vg(0.8, 1.2, mu=[0.1, -0.2], beta=[0.3, 0.2], Delta=[[1.0, 0.2], [0.2, 0.6]])
    xs = sample_gh(p, 200_000, 3)
    for th in ([0.5, 0.2], [-1.0, 1.3]):
        emp = np.exp(1j * xs @ np.array(th)).mean()
        assert abs(emp - gh_cf(p, np.array(th))) < 4 / math.sqrt(xs.shape[0])


# ---------------------------------------------------------------- kernels

def test_classify_bounded():
    assert classify_bounded_sgh(1.0, 0.0, 2) is False
    assert classify_bounded_sgh(1.01, 0.0, 2) is True
    assert classify_bounded_sgh(-3.0, 1.0, 5) is True
    assert classify_bounded_sgh(0.5, 0.0, 1) is False


def test_svg_kernel_examples():
    k = svg_kernel(1.0, 1.0)
    val = float(np.ravel(k([0.4], [0.4]))[0])
    # VG density at its centre: r^nu K_nu(r) -> Gamma(nu) 2^(nu-1) with nu = 1/2
    nu = 0.5
    ref = 1.0 / (math.sqrt(2 * math.pi) * math.gamma(1.0)) * math.gamma(nu) * 2 ** (nu - 1)
    assert val == pytest.approx(ref, rel=1e-13)
    with pytest.raises(UnboundedKernelError):
        svg_kernel(0.5, 1.0)
    assert k([0.1], [1.3]) == pytest.approx(k([1.3], [0.1]), abs=1e-16)


@pytest.mark.parametrize(
    "kernel",
    [snig_kernel(1.0, 0.5), snig_kernel(2.0, 1.0, 2), svg_kernel(1.5, 1.0, 2), svg_kernel(0.8, 2.0), st_kernel(-1.0, 1.0, 2)],
    ids=["snig1", "snig2", "svg2", "svg1", "st2"],
)
def test_sgh_gram_psd(kernel, rng):
    d = kernel.dim
    pts = rng.normal(size=(30, d)) * 2
    G = np.array([[np.ravel(kernel(a, b))[0] for b in pts] for a in pts])
    assert np.min(np.linalg.eigvalsh(G)) >= -1e-8


@pytest.mark.parametrize("kernel", [snig_kernel(1.0, 0.5), svg_kernel(1.5, 1.0, 2), st_kernel(-1.0, 1.0, 2)], ids=str)
def test_sgh_certificates(kernel):
    res = check_characteristic_certificate(lambda t: gh_log_cf(kernel.params, t), kernel.dim, log_scale=True)
    assert res.passed


@pytest.mark.parametrize("nu_sigma", [(1.5, 0.7), (2.5, 2.0)])
def test_matern_correspondence(nu_sigma):
    nu, sigma = nu_sigma
    d = 2
    alpha = math.sqrt(2 * nu) / sigma
    k = svg_kernel(nu + d / 2, alpha, d)
    rs = np.array([0.1, 0.5, 1.0, 2.0, 3.0, 5.0])
    ratios = np.array([np.ravel(k([r, 0.0], [0.0, 0.0]))[0] for r in rs]) / matern_shape(nu, alpha, rs)
    assert np.max(np.abs(ratios / ratios[0] - 1)) < 1e-8


# ---------------------------------------------------------------- convolution

CONV_CASES = {
    "NIG+NIG": lambda d, D, b: (GHParams(-0.5, 2, b, 0.7, np.zeros(d), D), GHParams(-0.5, 2, b, 1.1, np.ones(d), D)),
    "VG+VG": lambda d, D, b: (GHParams(0.6, 2, b, 0.0, np.zeros(d), D), GHParams(1.3, 2, b, 0.0, np.ones(d), D)),
    "NIG+GH(1/2)": lambda d, D, b: (GHParams(-0.5, 2, b, 0.7, np.zeros(d), D), GHParams(0.5, 2, b, 0.4, np.ones(d), D)),
    "GH(-lam)+VG(lam)": lambda d, D, b: (GHParams(-1.4, 2, b, 0.9, np.zeros(d), D), GHParams(1.4, 2, b, 0.0, np.ones(d), D)),
}


@pytest.mark.parametrize("rule", list(CONV_CASES))
@pytest.mark.parametrize("d", [1, 2])
def test_convolution_rules_cf_product(rule, d):
    rng = np.random.default_rng(d)
    D = np.eye(d) if d == 1 else np.array([[1.0, 0.3], [0.3, 0.7]])
    beta = np.full(d, 0.4)
    p1, p2 = CONV_CASES[rule](d, D, beta)
    assert gh_convolve_rule(p1, p2) == rule
    assert gh_convolve_rule(p2, p1) == rule
    out = gh_convolve(p1, p2)
    th = rng.normal(size=(64, d)) * 3
    assert np.max(np.abs(gh_cf(out, th) - gh_cf(p1, th) * gh_cf(p2, th))) < 1e-9


def test_convolution_examples():
    out = gh_convolve(nig(2.0, 1.0, mu=0.5), nig(2.0, 2.5, mu=-1.0))
    assert out.lam == -0.5 and out.delta == 3.5 and np.array_equal(out.mu, [-0.5])
    out = gh_convolve(vg(0.7, 1.0), vg(1.1, 1.0))
    assert out.lam == pytest.approx(1.8, abs=1e-15) and out.delta == 0.0


def test_convolution_no_rule():
    with pytest.raises(NoConvolutionRuleError):
        gh_convolve(nig(2.0, 1.0), nig(1.5, 1.0))
    with pytest.raises(NoConvolutionRuleError):
        gh_convolve(GHParams(1.2, 2, [0.0], 1.0, [0.0], [[1.0]]), GHParams(0.3, 2, [0.0], 1.0, [0.0], [[1.0]]))


# ---------------------------------------------------------------- kernel means

KM_CASES = {
    "1": (lambda: snig_kernel(1.5, 0.8), lambda: nig(1.5, 1.2, mu=0.3)),
    "2": (lambda: svg_kernel(1.2, 1.5), lambda: vg(0.7, 1.5, mu=-0.4)),
    "3(a)": (lambda: SGHKernel(0.5, 1.5, 0.6, [[1.0]]), lambda: nig(1.5, 1.0, mu=0.2)),
    "3(b)": (lambda: snig_kernel(1.5, 0.6), lambda: GHParams(0.5, 1.5, [0.0], 1.0, [0.2], [[1.0]])),
    "4(a)": (lambda: svg_kernel(1.3, 1.5), lambda: GHParams(-1.3, 1.5, [0.0], 0.9, [0.1], [[1.0]])),
    "4(b)": (lambda: SGHKernel(-1.3, 1.5, 0.9, [[1.0]]), lambda: vg(1.3, 1.5, mu=0.1)),
}


@pytest.mark.parametrize("case", list(KM_CASES))
def test_kernel_mean_case_detection_and_mass(case):
    k, m = KM_CASES[case][0](), KM_CASES[case][1]()
    assert gh_kernel_mean_case(k, m) == case
    mean = gh_kernel_mean(k, m)
    assert _mass_1d(mean) == pytest.approx(1.0, abs=1e-6)


def test_kernel_mean_examples():
    mean = gh_kernel_mean(snig_kernel(1.0, 1.0), nig(1.0, 1.0, mu=0.5))
    assert (mean.lam, mean.alpha, mean.delta) == (-0.5, 1.0, 2.0) and np.array_equal(mean.mu, [0.5])
    D = np.array([[1.0, 0.2], [0.2, 0.5]])
    mean = gh_kernel_mean(svg_kernel(1.4, 1.2, 2, D), GHParams(-1.4, 1.2, [0, 0], 0.7, [1.0, 0.0], D))
    assert mean.lam == 1.4 and mean.delta == 0.7 and np.array_equal(mean.Delta, D)


def test_kernel_mean_rejections():
    with pytest.raises(NotConjugateError):
        gh_kernel_mean(snig_kernel(1.5, 0.8), nig(1.5, 1.2, beta=[0.3]))
    with pytest.raises(NotConjugateError):
        gh_kernel_mean(snig_kernel(1.5, 0.8), nig(2.0, 1.2))
    with pytest.raises(NotConjugateError):
        gh_kernel_mean(snig_kernel(1.5, 0.8), vg(1.0, 1.5))
    with pytest.raises(NotConjugateError):
        gh_kernel_mean(svg_kernel(1.3, 1.5), GHParams(-1.1, 1.5, [0.0], 0.9, [0.1], [[1.0]]))


@pytest.mark.slow
@pytest.mark.parametrize("case", ["1", "2", "3(a)", "3(b)", "4(b)"])
def test_kernel_mean_matches_mc(case):
    k, m = KM_CASES[case][0](), KM_CASES[case][1]()
    xs = sample_gh(m, 1_000_000, 17)[:, 0]
    mean = gh_kernel_mean(k, m)
    for x in (-2.0, -0.5, 0.05, 0.9, 2.5):
        est = mc_mean(gh_density(k.params, x - xs))
        assert est.within(_at(mean, x), 3.0)


def test_kernel_mean_4a_matches_inversion():
    k, m = KM_CASES["4(a)"][0](), KM_CASES["4(a)"][1]()
    mean = gh_kernel_mean(k, m)
    cf = lambda t: gh_cf(k.params, t) * gh_cf(m, t)  # noqa: E731
    for x in (-1.0, 0.1, 2.0):
        assert invert_cf_1d(cf, x, 1e-11) == pytest.approx(gh_inner_mean_feature(k, m, [x]), abs=1e-8)


# ---------------------------------------------------------------- inner products

def test_inner_examples():
    k = snig_kernel(1.5, 0.8)
    p = nig(1.5, 1.2, mu=0.3)
    val, method = gh_inner_mean_mean(k, p, p)
    assert method == "closed-form"
    assert val == pytest.approx(gh_density(nig(1.5, 3.2), [0.0]), rel=1e-14)
    q = nig(1.5, 0.4, mu=-1.0)
    assert gh_inner_mean_mean(k, p, q)[0] == pytest.approx(gh_inner_mean_mean(k, q, p)[0], rel=1e-13)


def test_inner_numeric_branch_matches_inversion():
    k = svg_kernel(1.3, 1.5)
    p = GHParams(-1.3, 1.5, [0.0], 0.9, [0.1], [[1.0]])
    q = GHParams(-1.3, 1.5, [0.0], 0.4, [0.8], [[1.0]])
    val, method = gh_inner_mean_mean(k, p, q)
    assert method == "numeric-cf"
    cf = lambda t: gh_cf(k.params, t) * gh_cf(p.reflected(), t) * gh_cf(q, t)  # noqa: E731
    assert val == pytest.approx(invert_cf_1d(cf, 0.0, 1e-12), abs=1e-9)


@pytest.mark.slow
def test_inner_vg_matches_mc():
    k = svg_kernel(1.2, 1.5)
    p, q = vg(0.7, 1.5, mu=-0.4), vg(1.6, 1.5, mu=0.5)
    val, _ = gh_inner_mean_mean(k, p, q)
    X = sample_gh(p, 1_000_000, 1)[:, 0]
    Y = sample_gh(q, 1_000_000, 2)[:, 0]
    assert mc_mean(gh_density(k.params, X - Y)).within(val, 3.0)


# ---------------------------------------------------------------- sampling

def test_sampler_examples():
    xs = sample_gh(nig(1.5, 1.0, mu=0.7), 100_000, 5)[:, 0]
    assert mc_mean(xs).within(0.7, 3.0)
    p = vg(1.2, 1.3, beta=[0.4])
    n = 10_000
    ys = sample_gh(p, n, 6)[:, 0]
    grid = np.linspace(-25, 25, 20001)
    f = gh_density(p, grid)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(grid))])
    assert ks_distance(ys, lambda v: np.interp(v, grid, cum)) < ks_critical_99(n)
    assert np.array_equal(sample_gh(p, 10, 4), sample_gh(p, 10, 4))


def test_sampler_t_and_unsupported():
    p = student_t(-2.0, 2.0)
    ys = sample_gh(p, 10_000, 1)[:, 0]
    grid = np.linspace(-200, 200, 80001)
    f = gh_density(p, grid)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(grid))])
    cum += 0.5 * (1 - cum[-1])
    assert ks_distance(ys, lambda v: np.interp(v, grid, cum)) < ks_critical_99(10_000)
    with pytest.raises(UnsupportedMixingError):
        sample_gh(GHParams(1.0, 1.0, [0.0], 1.0, [0.0], [[1.0]]), 10, 0)

import math
import numpy as np
from scipy import integrate
from scipy.stats import norm

from paretograph.graphs import UGraph
from paretograph.hr import hr_lambda, hr_log_lambda, hr_extremal_coefficient
from paretograph.models import GraphModelSpec, HRFamily, LogisticFamily, logistic_lambda
from paretograph.numerics import RngStream
from paretograph.simulate import sample_pareto
from paretograph.inference import (
    ExceedanceSample, standardize, extract_exceedances, marginal_terms,
    hr_censored_loglik, logistic_censored_loglik, fit_clique, fit_graph,
    joint_censored_loglik, chi_empirical, chi3_empirical, chi_model, chi3_model,
    _censored_row_terms,
)
from paretograph.errors import ValidationError

# 1. standardize
out = standardize(np.array([[1.0], [2.0], [3.0]]).repeat(2, axis=1))
assert np.allclose(out[:, 0], [4 / 3, 2, 4])
a = np.column_stack([np.arange(10.0), np.arange(10.0) ** 3])
assert np.allclose(standardize(a), standardize(np.exp(a / 50)))
tied = standardize(np.column_stack([[1.0, 1.0, 2.0], [0, 1, 2]]))
assert tied[0, 0] == tied[1, 0]  # average rank for ties
try:
    standardize(np.ones((5, 2)))
    print("FAIL constant col")
except ValidationError as e:
    print("constant col rejected:", e)

# 2. extract_exceedances
std = standardize(np.random.default_rng(0).normal(size=(500, 3)))
samp = extract_exceedances(std, 0.9)
assert np.all(samp.y.max(axis=1) > 1)
assert np.array_equal(samp.mask, samp.y <= 1)
assert samp.n_raw == 500
print("exceedances:", samp.n, "rows at q=0.9")
try:
    extract_exceedances(np.ones((5, 2)) * 1.01, 0.999999)
    print("FAIL no-rows")
except ValidationError as e:
    print("no-rows rejected ok")

# 3. bivariate censored closed form vs spec example and quadrature
g1 = np.array([[0.0, 1.0], [1.0, 0.0]])
got = hr_censored_loglik(np.array([2.0, 0.5]), g1)
want = math.log(0.25 * norm.cdf((math.log(0.5) + 0.5) / 1.0) / (2 * norm.cdf(0.5)))
print(f"censored example {got:.10f} vs {want:.10f}")
assert abs(got - want) < 1e-12

rng = np.random.default_rng(42)
worst = 0.0
for _ in range(100):
    gam = rng.uniform(0.2, 4.0)
    g = np.array([[0.0, gam], [gam, 0.0]])
    y1 = rng.uniform(1.05, 6.0)
    closed = _censored_row_terms(np.array([[y1, 0.6]]), g)[0]
    quad, _ = integrate.quad(lambda u: hr_lambda(np.array([y1, u]), g), 0.0, 1.0,
                             limit=200)
    worst = max(worst, abs(closed - math.log(quad)) / abs(math.log(quad)))
assert worst < 1e-6, worst
print("bivariate censored vs quadrature worst rel err:", worst)

# uncensored row equals plain density term
y = np.array([1.7, 2.3])
assert abs(hr_censored_loglik(y, g1)
           - (hr_log_lambda(y, g1) - math.log(hr_extremal_coefficient(g1)))) < 1e-12

# 4. trivariate censored vs quadrature (both patterns)
g3 = np.array([[0.0, 1.0, 1.5], [1.0, 0.0, 2.0], [1.5, 2.0, 0.0]])
for y_obs in ([2.0, 1.4], [1.2, 3.0]):
    row = np.array([[y_obs[0], y_obs[1], 0.7]])
    closed = _censored_row_terms(row, g3)[0]
    quad, _ = integrate.quad(
        lambda u: hr_lambda(np.array([y_obs[0], y_obs[1], u]), g3), 0.0, 1.0)
    assert abs(closed - math.log(quad)) < 1e-8, (closed, math.log(quad))
row = np.array([[2.5, 0.8, 0.3]])
closed = _censored_row_terms(row, g3)[0]
quad, _ = integrate.dblquad(
    lambda v, u: hr_lambda(np.array([2.5, u, v]), g3), 0.0, 1.0, 0.0, 1.0,
    epsabs=1e-12)
print(f"doubly censored {closed:.8f} vs quad {math.log(quad):.8f}")
assert abs(closed - math.log(quad)) < 1e-7
# middle-coordinate observed variant (anchor not node 1)
row = np.array([[0.4, 2.2, 0.9]])
closed = _censored_row_terms(row, g3)[0]
quad, _ = integrate.dblquad(
    lambda v, u: hr_lambda(np.array([u, 2.2, v]), g3), 0.0, 1.0, 0.0, 1.0,
    epsabs=1e-12)
assert abs(closed - math.log(quad)) < 1e-7

# 5. logistic censored vs quadrature
for th in (0.3, 0.6):
    for y1 in (1.3, 4.0):
        closed = logistic_censored_loglik(np.array([y1, 0.5]), th)
        quad, _ = integrate.quad(lambda u: logistic_lambda(np.array([y1, u]), th),
                                 0.0, 1.0, limit=400, epsabs=1e-14, epsrel=1e-13)
        want = math.log(quad) - th * math.log(2)
        assert abs(closed - want) < 1e-12, (th, y1, closed, want)
print("logistic censored vs quadrature ok")

# 6. joint d=2 equals clique version exactly
rows2 = np.array([[2.0, 0.5], [1.5, 1.2], [0.7, 3.0]])
assert abs(joint_censored_loglik(rows2, g1) - hr_censored_loglik(rows2, g1)) < 1e-12
print("joint d=2 identity ok")

# 7. fits on simulated data
sr = RngStream(77, 0)
b = sample_pareto(g1, 2000, sr.child(1))
es = ExceedanceSample(b.samples, b.samples <= 1.0, 0.0, b.n)
fit = fit_clique(es, (1, 2), "hr")
print(f"pair fit gamma {fit.params[0]:.3f} converged {fit.converged} evals {fit.n_evals}")
assert 0.85 <= fit.params[0] <= 1.15
assert fit.converged
# monotonicity: fitted loglik >= start loglik
start_ll = hr_censored_loglik(es.y, np.array([[0.0, 1.3], [1.3, 0.0]]))
assert fit.loglik >= start_ll

g2tree = UGraph(2, [(1, 2)])
spec_log = GraphModelSpec(g2tree, {(1, 2): LogisticFamily(0.5)})
bl = sample_pareto(spec_log, 2000, sr.child(2))
esl = ExceedanceSample(bl.samples, bl.samples <= 1.0, 0.0, bl.n)
fitl = fit_clique(esl, (1, 2), "logistic")
print(f"logistic fit theta {fitl.params[0]:.3f}")
assert 0.45 <= fitl.params[0] <= 0.55

# 8. fit_graph on the worked 5-node tree
tree = UGraph(5, [(1, 2), (1, 3), (2, 4), (2, 5)])
bold = {(1, 2): 1.0, (1, 3): 2.0, (2, 4): 1.0, (2, 5): 2.0}
fams = {e: HRFamily(np.array([[0.0, g], [g, 0.0]])) for e, g in bold.items()}
spec5 = GraphModelSpec(tree, fams)
bt = sample_pareto(spec5, 2000, sr.child(3))
est = ExceedanceSample(bt.samples, bt.samples <= 1.0, 0.0, bt.n)
rep = fit_graph(est, tree)
print("tree fit params:", {c: round(float(f.params[0]), 3) for c, f in rep.clique_fits.items()})
for e, truth in bold.items():
    assert abs(rep.clique_fits[e].params[0] - truth) <= 0.15, (e, rep.clique_fits[e].params)
assert rep.p == 4
assert abs(rep.aic - (2 * 4 - 2 * rep.total_loglik)) < 1e-9
assert rep.gamma is not None and abs(rep.gamma[0, 1] - rep.clique_fits[(1, 2)].params[0]) < 1e-12
# completed entries equal path sums of fitted edges
assert abs(rep.gamma[2, 4] - (rep.clique_fits[(1, 3)].params[0]
                              + rep.clique_fits[(1, 2)].params[0]
                              + rep.clique_fits[(2, 5)].params[0])) < 1e-9
assert rep.all_converged
print("fit_graph ok; AIC", round(rep.aic, 2))

# 9. chi
n = 4000
z = np.random.default_rng(5).normal(size=n)
como = np.column_stack([z, 2 * z + 1])
c = chi_empirical(standardize(como), 1, 2, 0.9)
assert c.value == 1.0 and c.reliable
ind = np.random.default_rng(6).normal(size=(10_000, 2))
c = chi_empirical(standardize(ind), 1, 2, 0.95)
print("independent chi:", c.value)
assert c.value < 0.1
c = chi_empirical(b.samples, 1, 2, 0.0)
want = 2 - 2 * norm.cdf(0.5)
se = math.sqrt(want * (1 - want) / b.n)
print(f"hr chi hat {c.value:.4f} want {want:.4f}")
assert abs(c.value - want) < 3 * se

assert abs(chi_model(g1, 1, 2) - 0.617075) < 1e-6
assert chi_model(np.array([[0.0, 400.0], [400.0, 0.0]]), 1, 2) < 1e-6
# spec routing: same-edge logistic, cross-clique hr path sum
mix = GraphModelSpec(UGraph(3, [(1, 2), (2, 3)]),
                     {(1, 2): LogisticFamily(0.5),
                      (2, 3): HRFamily(np.array([[0.0, 1.0], [1.0, 0.0]]))})
assert abs(chi_model(mix, 1, 2) - (2 - 2 ** 0.5)) < 1e-12
try:
    chi_model(mix, 1, 3)
    print("FAIL: cross-clique logistic path accepted")
except ValidationError:
    print("cross-clique non-hr path rejected ok")
assert abs(chi_model(spec5, 3, 5) - (2 - 2 * norm.cdf(math.sqrt(5.0) / 2))) < 1e-12

# 10. chi3 vs sampled frequencies, exchangeable gamma=1
gex = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
model3 = chi3_model(gex, 1, 2, 3)
b3 = sample_pareto(gex, 100_000, sr.child(4))
emp3 = chi3_empirical(b3.samples, 1, 2, 3, 0.0)
se3 = math.sqrt(model3 * (1 - model3) / b3.n)
print(f"chi3 model {model3:.4f} empirical {emp3.value:.4f} 3se {3*se3:.4f}")
assert abs(model3 - emp3.value) < 3 * se3

# 11. joint vs clique estimates on a d=3 chain (preview of criterion 5)
chain = UGraph(3, [(1, 2), (2, 3)])
spec_c = GraphModelSpec(chain, {
    (1, 2): HRFamily(np.array([[0.0, 1.0], [1.0, 0.0]])),
    (2, 3): HRFamily(np.array([[0.0, 2.0], [2.0, 0.0]]))})
bc = sample_pareto(spec_c, 2000, sr.child(5))
ec = ExceedanceSample(bc.samples, bc.samples <= 1.0, 0.0, bc.n)
rep_c = fit_graph(ec, chain)
from paretograph.numerics import minimize
def joint_obj(x):
    if np.any(np.abs(x) > 20):
        return 1e10
    a, bb = np.exp(x)
    gfull = np.array([[0.0, a, a + bb], [a, 0.0, bb], [a + bb, bb, 0.0]])
    try:
        return -joint_censored_loglik(ec.y, gfull)
    except Exception:
        return 1e10
x0 = np.log([rep_c.clique_fits[(1, 2)].params[0], rep_c.clique_fits[(2, 3)].params[0]])
res = minimize(joint_obj, x0, tol=1e-8, max_evals=2000)
joint_est = np.exp(res.x)
cl_est = np.array([rep_c.clique_fits[(1, 2)].params[0], rep_c.clique_fits[(2, 3)].params[0]])
print(f"clique {cl_est} joint {joint_est} diff {np.abs(joint_est - cl_est)}")
assert np.all(np.abs(joint_est - cl_est) < 0.05)

print("ALL INFERENCE SMOKE OK")

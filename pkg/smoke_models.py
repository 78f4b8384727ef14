import math
import numpy as np
from scipy import integrate

from paretograph.models import (
    HRFamily, LogisticFamily, CustomBivariateFamily, GraphModelSpec,
    logistic_lambda, logistic_log_lambda, logistic_extremal_coefficient,
    bivariate_lambda_from_density, clique_log_lambda, clique_extremal_coefficient,
    graph_density, validate_family, spec_to_json, spec_from_json,
)
from paretograph.graphs import UGraph
from paretograph.hr import hr_decomposable_density, complete_variogram
from paretograph.numerics import RngStream
from paretograph.errors import ValidationError

# 1. logistic closed forms
v = logistic_lambda(np.array([1.0, 1.0]), 0.5)
print("lambda_logistic(1,1;0.5) =", v, "expect", 2 ** -1.5)
assert abs(v - 2 ** -1.5) < 1e-15

print("Lambda pair theta=0.5:", logistic_extremal_coefficient(2, 0.5), "expect", math.sqrt(2))
assert abs(logistic_extremal_coefficient(2, 0.5) - math.sqrt(2)) < 1e-15

# 2. CDF identity: integral of lambda(1, z) over (0, t) = (1 + t^{-1/theta})^{theta-1}
for theta in (0.3, 0.5, 0.8):
    for t in (0.4, 1.0, 2.5):
        got, _ = integrate.quad(lambda z: logistic_lambda(np.array([1.0, z]), theta), 0, t)
        want = (1 + t ** (-1 / theta)) ** (theta - 1)
        assert abs(got - want) < 1e-9, (theta, t, got, want)
print("logistic ratio CDF identity ok")

# 3. trivariate logistic homogeneity and value
y = np.array([1.0, 1.0, 1.0])
v3 = logistic_lambda(y, 0.5)
want3 = 3 ** (0.5 - 3) * (1 / 0.5 - 1) * (2 / 0.5 - 1)
assert abs(v3 - want3) < 1e-15
for t in (0.5, 2.0, 7.0):
    a = logistic_log_lambda(t * np.array([0.7, 1.3, 2.2]), 0.4)
    b = logistic_log_lambda(np.array([0.7, 1.3, 2.2]), 0.4) - 4 * math.log(t)
    assert abs(a - b) < 1e-12
print("trivariate logistic ok")

# 4. validate_family: logistic pair and hr pair exact, hr triangle via MC
diag = validate_family(LogisticFamily(0.6))
print("logistic diag:", diag)
assert diag.ok and diag.homogeneity_violation < 1e-12

diag = validate_family(HRFamily(np.array([[0.0, 1.3], [1.3, 0.0]])))
print("hr pair diag:", diag)
assert diag.ok

g3 = np.array([[0.0, 1.0, 1.5], [1.0, 0.0, 2.0], [1.5, 2.0, 0.0]])
diag = validate_family(HRFamily(g3))
print("hr triangle diag:", diag)
assert diag.ok

# 5. custom family from the logistic ratio density: matches logistic pair
theta = 0.45
fam_c = CustomBivariateFamily(lambda z: logistic_lambda(np.array([1.0, z]), theta))
pts = np.array([[0.7, 1.9], [2.0, 0.4], [1.0, 1.0]])
a = clique_log_lambda(pts, fam_c)
b = clique_log_lambda(pts, LogisticFamily(theta))
assert np.max(np.abs(a - b)) < 1e-12
lc = clique_extremal_coefficient(fam_c)
assert abs(lc - 2 ** theta) < 1e-6, (lc, 2 ** theta)
print("custom == logistic pair ok, Lambda err", abs(lc - 2 ** theta))

# bad custom: not unit mean
try:
    CustomBivariateFamily(lambda z: math.exp(-z))  # mean 1 but mass... exp mean is 1? mass 1, mean 1
except ValidationError as e:
    print("unexpected", e)
# exp(-z): mass 1, mean 1 -> actually valid. Use a wrong one:
try:
    CustomBivariateFamily(lambda z: 2.0 * math.exp(-2.0 * z))  # mass 1, mean 0.5
    print("FAIL: accepted non-unit-mean density")
except ValidationError as e:
    print("rejected bad custom:", e)

# 6. GraphModelSpec on the 5-node tree, all hr
tree = UGraph(5, [(1, 2), (1, 3), (2, 4), (2, 5)])
target = np.array([
    [0.0, 1.0, 2.0, 2.0, 3.0],
    [1.0, 0.0, 3.0, 1.0, 2.0],
    [2.0, 3.0, 0.0, 4.0, 5.0],
    [2.0, 1.0, 4.0, 0.0, 3.0],
    [3.0, 2.0, 5.0, 3.0, 0.0]])
blocks = {}
for (i, j) in tree.sorted_edges():
    blk = np.array([[0.0, target[i - 1, j - 1]], [target[i - 1, j - 1], 0.0]])
    blocks[(i, j)] = HRFamily(blk)
spec = GraphModelSpec(tree, blocks)
assert spec.is_tree and spec.all_hr
assert np.max(np.abs(spec.completed_gamma() - target)) == 0.0
print("spec completion exact")

rng = RngStream(7, 0)
gen = rng.generator()
ys = np.exp(gen.normal(0, 1, size=(6, 5)))
ys[:, 0] += 1.5  # ensure in the domain: max > 1 not required for density eval here
f_graph = graph_density(ys, spec, normalized=True, rng=RngStream(3, 1))
f_ref = hr_decomposable_density(ys, tree, target, rng=RngStream(3, 1))
print("graph vs decomposable density max rel err:",
      np.max(np.abs(f_graph / f_ref - 1)))
assert np.max(np.abs(f_graph / f_ref - 1)) < 1e-12

# 7. mixed spec validations
chain = UGraph(3, [(1, 2), (2, 3)])
mixed = GraphModelSpec(chain, {
    (1, 2): LogisticFamily(0.5),
    (2, 3): HRFamily(np.array([[0.0, 2.0], [2.0, 0.0]])),
})
val = graph_density(np.array([1.2, 0.8, 2.0]), mixed)
print("mixed unnormalized density:", val)
assert val > 0

tri = UGraph(3, [(1, 2), (2, 3), (1, 3)])
try:
    GraphModelSpec(tri, {(1, 2, 3): LogisticFamily(0.5)})
    print("FAIL: size-3 logistic accepted")
except ValidationError as e:
    print("rejected size-3 logistic:", e)

try:
    GraphModelSpec(chain, {(1, 2): LogisticFamily(0.5)})
    print("FAIL: missing clique accepted")
except ValidationError as e:
    print("rejected missing clique:", e)

try:
    GraphModelSpec(chain, {(1, 2): LogisticFamily(0.5), (2, 3): HRFamily(np.zeros((2, 2))),
                           (1, 3): LogisticFamily(0.5)})
    print("FAIL: extra clique accepted")
except (ValidationError, Exception) as e:
    print("rejected extra/bad:", type(e).__name__)

# 8. JSON round trip
doc = spec_to_json(mixed)
back = spec_from_json(doc)
assert back.graph == mixed.graph
assert back.families[(1, 2)].theta == mixed.families[(1, 2)].theta
assert np.array_equal(back.families[(2, 3)].gamma, mixed.families[(2, 3)].gamma)
doc_bad = dict(doc)
doc_bad["version"] = 2
try:
    spec_from_json(doc_bad)
    print("FAIL: unknown version accepted")
except ValidationError as e:
    print("rejected version 2:", e)

print("ALL MODELS SMOKE OK")

import math
import numpy as np
from scipy import integrate
from scipy.stats import kstest, norm

from paretograph.graphs import UGraph
from paretograph.models import GraphModelSpec, HRFamily, LogisticFamily
from paretograph.numerics import RngStream
from paretograph.simulate import (
    SimBatch, sample_hr_extremal, sample_logistic_extremal, sample_tree_yk,
    sample_pareto, estimate_extremal_coefficient,
)

rng = RngStream(2024, 0)

# 1. HR extremal function
g2 = np.array([[0.0, 1.0], [1.0, 0.0]])
u = sample_hr_extremal(g2, 1, rng.child(1), n=100_000)
assert np.all(u[:, 0] == 1.0)
mean2 = u[:, 1].mean()
se = u[:, 1].std(ddof=1) / math.sqrt(len(u))
print(f"HR extremal mean {mean2:.4f} (want 1 within {3*se:.4f})")
assert abs(mean2 - 1.0) < 3 * se
# log draws ~ N(-1/2, 1)
ks = kstest((np.log(u[:, 1]) + 0.5), "norm").statistic
print("KS of log draws vs N(0,1):", ks)
assert ks < 0.01

g4 = np.array([[0.0, 1.0, 2.0, 2.0],
               [1.0, 0.0, 3.0, 1.0],
               [2.0, 3.0, 0.0, 4.0],
               [2.0, 1.0, 4.0, 0.0]])
u = sample_hr_extremal(g4, 2, rng.child(2), n=200_000)
assert np.all(u[:, 1] == 1.0)
logs = np.log(u[:, [0, 2, 3]])
emp = np.cov(logs.T)
from paretograph.hr import phi_k
want = phi_k(g4, 2)
print("cov err:", np.max(np.abs(emp - want)))
assert np.max(np.abs(emp - want)) < 0.05

single = sample_hr_extremal(g2, 2, rng.child(3))
assert single.shape == (2,) and single[1] == 1.0

# 2. logistic extremal function
th = 0.4
v = sample_logistic_extremal(th, rng.child(4), n=100_000)
se = v.std(ddof=1) / math.sqrt(len(v))
print(f"logistic extremal mean {v.mean():.4f} (3se {3*se:.4f})")
assert abs(v.mean() - 1.0) < 3 * se

# CDF of the ratio is (1 + u^{-1/theta})^{theta-1}
for theta in (0.3, 0.7):
    draws = sample_logistic_extremal(theta, rng.child(5), n=100_000)
    cdf = lambda t: (1 + t ** (-1 / theta)) ** (theta - 1)
    ks = kstest(draws, cdf).statistic
    print(f"logistic ratio KS theta={theta}: {ks:.5f}")
    assert ks < 0.01
# qualitative: smaller theta = stronger dependence = draws nearer 1
v_small = sample_logistic_extremal(0.1, rng.child(6), n=20_000)
v_big = sample_logistic_extremal(0.7, rng.child(7), n=20_000)
assert np.var(np.log(v_small)) < np.var(np.log(v_big))
print("logistic spread monotone ok")

scalar = sample_logistic_extremal(0.5, rng.child(8))
assert isinstance(scalar, float) and scalar > 0

# 3. tree sampler on the 5-node worked example
tree = UGraph(5, [(1, 2), (1, 3), (2, 4), (2, 5)])
bold = {(1, 2): 1.0, (1, 3): 2.0, (2, 4): 1.0, (2, 5): 2.0}
fams = {e: HRFamily(np.array([[0.0, g], [g, 0.0]])) for e, g in bold.items()}
spec5 = GraphModelSpec(tree, fams)

yk = sample_tree_yk(spec5, 1, rng.child(9), n=200_000)
for q in (2.0, 5.0, 10.0):
    p = (yk[:, 0] > q).mean()
    se = math.sqrt(p * (1 - p) / len(yk))
    assert abs(p - 1 / q) < 3 * se, (q, p)
print("anchor margin standard Pareto ok")

# P(Y^1_j > 1) equals 2 - Lambda_1j(1,1) = 2 - 2 Phi(sqrt(G_1j)/2)
for j, gij in ((2, 1.0), (3, 2.0), (4, 2.0), (5, 3.0)):
    p = (yk[:, j - 1] > 1.0).mean()
    want = 2 - 2 * norm.cdf(math.sqrt(gij) / 2)
    se = math.sqrt(want * (1 - want) / len(yk))
    assert abs(p - want) < 3 * se, (j, p, want)
print("tree chi identity ok (incl chi12 ->", 2 - 2 * norm.cdf(0.5), ")")

# path independence on a 3-chain anchored at 2
chain = UGraph(3, [(1, 2), (2, 3)])
spec3 = GraphModelSpec(chain, {
    (1, 2): HRFamily(np.array([[0.0, 1.5], [1.5, 0.0]])),
    (2, 3): HRFamily(np.array([[0.0, 0.8], [0.8, 0.0]])),
})
y2 = sample_tree_yk(spec3, 2, rng.child(10), n=100_000)
a = np.log(y2[:, 0] / y2[:, 1])
b = np.log(y2[:, 2] / y2[:, 1])
corr = np.corrcoef(a, b)[0, 1]
print("path independence corr:", corr)
assert abs(corr) < 3 / math.sqrt(len(a))

# 4. rejection sampler, d=2 HR gamma=1
batch = sample_pareto(g2, 50_000, rng.child(11))
assert np.all(batch.samples.max(axis=1) > 1.0)
rate = batch.acceptance_rate
want = norm.cdf(0.5)
se = math.sqrt(want * (1 - want) / batch.proposals)
print(f"accept rate {rate:.5f} want {want:.5f} 3se {3*se:.5f}")
assert abs(rate - want) < 3 * se
# mean proposals per accept ~ d / Lambda(1)
ppa = batch.proposals / batch.accepts
want_ppa = 2 / (2 * norm.cdf(0.5))
print(f"proposals per accept {ppa:.4f} want {want_ppa:.4f}")
assert abs(ppa - want_ppa) < 0.02

# reproducibility
b2 = sample_pareto(g2, 50_000, rng.child(11))
assert np.array_equal(batch.samples, b2.samples) and batch.proposals == b2.proposals
print("bit-identical reproduction ok")

# sharded run deterministic too
b3 = sample_pareto(g2, 10_000, rng.child(12), n_jobs=2)
b4 = sample_pareto(g2, 10_000, rng.child(12), n_jobs=2)
assert np.array_equal(b3.samples, b4.samples)
print("sharded reproduction ok")

# 5. tree route vs completed-gamma route: same chi (symmetrized t=1 estimator)
def chi_hat(y, i, j, t=1.0):
    both = np.sum((y[:, i - 1] > t) & (y[:, j - 1] > t))
    either = np.sum(y[:, i - 1] > t) + np.sum(y[:, j - 1] > t)
    return 2.0 * both / either

bt = sample_pareto(spec5, 100_000, rng.child(13))          # tree route
bg = sample_pareto(spec5.completed_gamma(), 100_000, rng.child(14))  # gaussian route
for (i, j) in ((1, 2), (3, 5), (2, 4)):
    c1 = chi_hat(bt.samples, i, j)
    c2 = chi_hat(bg.samples, i, j)
    se = math.sqrt(c1 * (1 - c1) / bt.n + c2 * (1 - c2) / bg.n)
    print(f"chi({i},{j}) tree {c1:.4f} gauss {c2:.4f} diff {abs(c1-c2):.4f} 3se {3*se:.4f}")
    assert abs(c1 - c2) < 3 * se
# and against the closed form for the edge pair
want12 = 2 - 2 * norm.cdf(0.5)
assert abs(chi_hat(bt.samples, 1, 2) - want12) < 0.02

# 6. mixed tree: logistic + HR edges; extremal coefficient vs quadrature oracle
mixed = GraphModelSpec(chain, {
    (1, 2): LogisticFamily(0.5),
    (2, 3): HRFamily(np.array([[0.0, 1.0], [1.0, 0.0]])),
})
lam_hat = estimate_extremal_coefficient(mixed, rng.child(15), n_proposals=400_000)
F_a = lambda t: (1 + t ** (-2.0)) ** (-0.5)          # logistic ratio CDF, theta=0.5
F_b = lambda t: norm.cdf((math.log(t) + 0.5) / 1.0)  # lognormal(-1/2, 1) CDF
tail, _ = integrate.quad(lambda t: 1 - F_a(t) * F_b(t), 1.0, np.inf, limit=200)
lam_want = 1.0 + tail
r = lam_want / 3
se_lam = 3 * math.sqrt(r * (1 - r) / 400_000)
print(f"mixed-tree Lambda hat {lam_hat:.4f} oracle {lam_want:.4f} 3se {3*se_lam:.4f}")
assert abs(lam_hat - lam_want) < 3 * se_lam

# mixed samples land in the domain
bm = sample_pareto(mixed, 5_000, rng.child(16))
assert np.all(bm.samples.max(axis=1) > 1.0)

# non-tree mixed rejected
tri_graph = UGraph(4, [(1, 2), (2, 3), (1, 3), (3, 4)])
from paretograph.errors import ValidationError
g3b = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
bad = GraphModelSpec(tri_graph, {
    (1, 2, 3): HRFamily(g3b),
    (3, 4): LogisticFamily(0.5),
})
try:
    sample_pareto(bad, 10, rng.child(17))
    print("FAIL: mixed non-tree accepted")
except ValidationError as e:
    print("rejected mixed non-tree:", e)

# but all-hr non-tree works through completion
ok_spec = GraphModelSpec(tri_graph, {
    (1, 2, 3): HRFamily(g3b),
    (3, 4): HRFamily(np.array([[0.0, 2.0], [2.0, 0.0]])),
})
bo = sample_pareto(ok_spec, 2_000, rng.child(18))
assert bo.samples.shape == (2_000, 4)
print("all-hr block graph route ok")

print("ALL SIMULATE SMOKE OK")

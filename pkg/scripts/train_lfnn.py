"""Train the monthly CD-objective neural policy checkpoint.

Reproduces checkpoints/lfnn_cd_monthly: a width-10 single-hidden-layer
policy trained on 10,000 simulated high-inflation paths at dt = 1/12.
Training warm-starts from an imitation fit of the clipped closed-form
control (a cheap supervised initialization that puts the optimizer in the
right basin), then minimizes the empirical CD objective with minibatch Adam
on a decreasing learning-rate schedule. Held-out performance is printed
against the clipped-form policy after every phase.

Runtime is roughly 20-30 minutes single-threaded. Usage:

    python scripts/train_lfnn.py [out_prefix]
"""

import sys
import time

import numpy as np

from benchbeat import backtest as bt
from benchbeat import closed_form as cf
from benchbeat import jump_model as jm
from benchbeat import lfnn
from benchbeat import training as tr

out_prefix = sys.argv[1] if len(sys.argv) > 1 else "checkpoints/lfnn_cd_monthly"

params = jm.calibrated_high_inflation_params()
ctx = cf.ClosedFormContext(
    moments=jm.jump_moments(params), mu1=float(params.mu[0]), mu2=float(params.mu[1]),
    beta=0.01, c=10.0, T=10.0, varrho_hat=0.7, p_min=0.0, p_max=1.3,
)
dt = 1.0 / 12.0
inv = bt.InvestmentScenario(
    w0=100.0, T=10.0, dt=dt, injection=10.0, benchmark_weights=[0.7, 0.3], beta=0.01
)
net = lfnn.LFNNConfig(n_assets=2, n_long=1, p_max=1.3, hidden=(10,), T=10.0, w0=100.0)
obj = tr.ObjectiveSpec(kind="CD", beta=0.01)

train_set = jm.simulate_paths(params, dt, inv.n_periods, 10_000, seed=101)
test_set = jm.simulate_paths(params, dt, inv.n_periods, 10_000, seed=202)
clipped_traj = bt.run_policy(train_set, inv, bt.clipped_form_policy(ctx))
clipped_train = tr.path_objective(clipped_traj, obj)
clipped_test = tr.path_objective(bt.run_policy(test_set, inv, bt.clipped_form_policy(ctx)), obj)
print(f"clipped form: train {clipped_train:.1f}  test {clipped_test:.1f}", flush=True)

# --- imitation warm start -------------------------------------------------
# With one long and one shortable asset both softmax blocks are trivial, so
# the policy reduces to stock fraction = p_max * sigmoid(o_last(x)). Fitting
# that scalar to the clipped control over states visited by the clipped
# policy is a tiny regression problem; L-BFGS handles it in seconds.
from scipy.optimize import minimize

rng = np.random.default_rng(51)
n_states = 20_000
js = rng.integers(0, inv.n_periods, size=n_states)
ks = rng.integers(0, train_set.returns.shape[0], size=n_states)
t_s = inv.times[js]
w_s = clipped_traj.wealth[ks, js]
wh_s = clipped_traj.benchmark[ks, js]
target = np.empty(n_states)
for t in np.unique(t_s):  # the control is vectorized in wealth at fixed t
    m = t_s == t
    target[m] = cf.clipped_control(ctx, float(t), w_s[m], wh_s[m])
x_feat = lfnn.scale_features(0.0, w_s, wh_s, net)
x_feat[:, 0] = t_s / net.T


def imitation_mse(theta):
    o = lfnn.fnn_forward(x_feat, theta, net)
    frac = net.p_max * lfnn.sigmoid(o[:, net.n_assets])
    return float(np.mean((frac - target) ** 2))


theta0 = lfnn.init_theta(net, np.random.default_rng(7))
res = minimize(imitation_mse, theta0, method="L-BFGS-B", options={"maxiter": 400})
theta = res.x
print(f"imitation fit: rmse {np.sqrt(res.fun):.4f} stock-fraction units", flush=True)

# --- objective fine-tuning ------------------------------------------------
t0 = time.time()
best = (np.inf, theta.copy())
for lr, mb, iters, seed in [(1e-3, 1000, 4000, 21), (3e-4, 2000, 3000, 22), (1e-4, 5000, 1500, 23)]:
    cfg = tr.TrainConfig(learning_rate=lr, n_iterations=iters, minibatch=mb, seed=seed)
    theta, _ = tr.train(theta, train_set, inv, obj, net, cfg)
    l_tr = tr.empirical_loss(theta, train_set, inv, obj, net)
    l_te = tr.empirical_loss(theta, test_set, inv, obj, net)
    if l_tr < best[0]:
        best = (l_tr, theta.copy())
    print(
        f"lr={lr} mb={mb} x{iters}: train {l_tr:.1f} ({l_tr / clipped_train:.4f}x clipped) "
        f"held-out {l_te:.1f} ({l_te / clipped_test:.4f}x) [{time.time() - t0:.0f}s]",
        flush=True,
    )

lfnn.save_theta(out_prefix, best[1], net)
l_te = tr.empirical_loss(best[1], test_set, inv, obj, net)
print(f"saved {out_prefix}: held-out {l_te:.1f} ({l_te / clipped_test:.4f}x clipped)", flush=True)

"""The meta-learner on its own: gradients, training curve, topology grid."""

import numpy as np

from phishstack.meta_mlp import MlpConfig, gradient_check, mlp_fit, mlp_grid_search, mlp_predict

rng = np.random.default_rng(0)
Z = rng.random((400, 3))
y = (Z[:, 0] + Z[:, 1] > 1.0).astype(int)

cfg = MlpConfig(hidden_layers=(6, 12, 32, 12, 6), seed=0)
print("backprop vs finite differences:", gradient_check(cfg, Z[:20], y[:20]))

m = mlp_fit(cfg, Z, y)
print("epochs", len(m.training_loss_trace), "best", m.best_epoch)
print("train accuracy", np.mean((mlp_predict(m, Z) > 0.5) == (y == 1)))

grid = [MlpConfig(hidden_layers=h, seed=0) for h in [(8,), (16, 8), (6, 12, 32, 12, 6)]]
print("grid pick", mlp_grid_search(grid, Z, y, k=3, seed=0).hidden_layers)

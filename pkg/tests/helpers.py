"""Shared test utilities: the finite-difference gradient check harness."""
import numpy as np

from huge import datagen, encoder, heterophily, losses
from huge.numerics import finite_diff_gradient


def grad_check_instance(seed, n=30, d=8, d_e=8, batch_size=10, alpha=0.5, use_gnn=True):
    """Max relative gradient error on one seeded random instance.

    The oracle freezes the GNN similarity table at the base point, which is
    exactly what the stop-gradient means: central differences of the frozen
    objective match the analytic backward pass.
    """
    g = datagen.generate(
        datagen.SynthSpec(n=n, d=d, fraud_fraction=0.1, avg_degree=4.0, seed=seed)
    )
    rng = np.random.default_rng(seed + 1000)
    batch = rng.choice(n, size=batch_size, replace=False)
    params = encoder.init_params(d, d_e, seed)
    h = heterophily.node_heterophily(g, "halo")

    ctx = encoder.build_batch_context(params, g, batch, use_gnn=use_gnn)
    frozen = ctx.simbar.copy() if use_gnn else None
    analytic = losses.backward(ctx, h, alpha, params)

    def loss_fn(pd):
        p2 = encoder.EncoderParams.from_dict(pd)
        c2 = encoder.build_batch_context(p2, g, batch, use_gnn=use_gnn)
        return losses.loss_value_frozen_targets(c2, h, alpha, frozen)

    fd = finite_diff_gradient(loss_fn, params.to_dict())
    worst = 0.0
    for name, ga in analytic.items():
        gf = fd[name]
        scale = max(float(np.abs(ga).max()), float(np.abs(gf).max()), 1e-12)
        err = float(np.abs(ga - gf).max()) / scale
        worst = max(worst, err)
    return worst

import numpy as np

from fallcast import tensorlib as tl


def finite_difference_error(loss_fn, params, step=1e-5):
    """Worst relative error between backward() gradients and central differences.

    ``loss_fn`` must rebuild the graph from the current parameter values on
    every call; ``params`` are the leaf tensors to perturb.  The error for a
    parameter is ||analytic - numeric|| / max(||analytic||, ||numeric||).
    """
    loss = loss_fn()
    for p in params:
        p.grad = None
    tl.backward(loss)
    worst = 0.0
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        numeric = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            up = float(loss_fn().data)
            flat[i] = saved - step
            down = float(loss_fn().data)
            flat[i] = saved
            nflat[i] = (up - down) / (2.0 * step)
        scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / scale))
    return worst

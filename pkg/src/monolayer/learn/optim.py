import numpy as np

from ..m6 import M6Params

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


def adam_step(state, grads, lr, beta1=BETA1, beta2=BETA2, eps=EPS):
    """One bias-corrected Adam update; returns a new state.

    M6 parameters are clamped back into their box after the update.
    """
    new = state.copy()
    new.step = state.step + 1
    t = new.step
    for name, g in grads.items():
        m = beta1 * new.m[name] + (1.0 - beta1) * g
        v = beta2 * new.v[name] + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        new.m[name], new.v[name] = m, v
        new.params[name] = new.params[name] - lr * m_hat / (np.sqrt(v_hat) + eps)
    if "m6" in new.params:
        new.params["m6"] = M6Params.from_array(new.params["m6"]).clamped().as_array()
    return new

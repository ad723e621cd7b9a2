"""Adaptive-moment optimizer as a pure function over ParamSets."""

from dataclasses import dataclass, field

from taskcomm import _kernels
from taskcomm.learnkit.params import ParamSet


@dataclass
class OptimizerState:
    first_moment: ParamSet
    second_moment: ParamSet
    step_count: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optimizer(params: ParamSet, lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> OptimizerState:
    return OptimizerState(
        first_moment=params.zeros_like(),
        second_moment=params.zeros_like(),
        step_count=0,
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def optimizer_step(params: ParamSet, grads: ParamSet, state: OptimizerState):
    """One bias-corrected moment update; returns fresh (ParamSet, OptimizerState).

    update = lr * m_hat / (sqrt(v_hat) + eps), applied entry by entry.
    """
    if not params.same_structure(grads):
        raise ValueError("gradient names/shapes do not match parameters")
    if not params.same_structure(state.first_moment):
        raise ValueError("optimizer state does not match parameters")
    new_params = params.copy()
    new_m = state.first_moment.copy()
    new_v = state.second_moment.copy()
    t = state.step_count + 1
    for name in params.names():
        _kernels.adam_update(
            new_params[name].reshape(-1),
            grads[name].reshape(-1),
            new_m[name].reshape(-1),
            new_v[name].reshape(-1),
            state.lr, state.beta1, state.beta2, state.eps, t,
        )
    new_state = OptimizerState(
        first_moment=new_m,
        second_moment=new_v,
        step_count=t,
        lr=state.lr,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
    )
    return new_params, new_state

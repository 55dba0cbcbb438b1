from numeric.tensor import (
    NonFiniteError,
    ShapeError,
    Tape,
    Tensor,
    active_tape,
    as_tensor,
    backward,
    parameter,
    value_and_grad,
    zero_grad,
)
from numeric.functional import (
    absolute,
    add,
    concat,
    conv2d,
    groupnorm,
    matmul,
    mul,
    neg,
    permute,
    reduce_mean,
    reduce_sum,
    reshape,
    silu,
    softmax_rows,
    square,
    take,
    tanh,
    upsample_nearest2x,
)
from numeric.gradcheck import GradCheckReport, check_parameters, grad_check
from numeric.module import Module
from numeric.rng import derive_seed, make_rng

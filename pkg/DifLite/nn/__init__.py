# Copyright (C) 2024 DifLite developers
# This file is part of DifLite which is released under GNU General Public License v3.
# See file LICENSE or go to <http://www.gnu.org/licenses> for full license details.
"""Dense networks, Adam and reparameterized sampling."""

from .mlp import (
    Layer,
    MlpParams,
    GradCheckReport,
    init_mlp,
    mlp_from_architecture,
    mlp_forward,
    mlp_backward,
    grad_check,
    softplus,
    softplus_grad,
)
from .optim import OptState, init_opt_state, adam_step
from .reparam import draw_epsilon, reparam_sample, reparam_grad

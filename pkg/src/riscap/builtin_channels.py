"""Built-in benchmark channel matrices.

``four_by_four`` is a single-input four-output channel with four reflective
elements; the ``six_by_six_*`` family shares one realization of a five-element
channel with a direct path whose line-of-sight strength increases by 20 dB per
step (last column scaled by 10, then renormalized to unit Gram trace).
"""

from __future__ import annotations

import numpy as np

from .channel import EquivalentChannel, reduce_matrix

FOUR_BY_FOUR = np.array(
    [
        [0.040 + 0.011j, 0.352 + 0.175j, 0.174 - 0.230j, 0.073 + 0.158j],
        [0.074 + 0.113j, -0.392 - 0.113j, -0.289 + 0.161j, -0.290 + 0.103j],
        [-0.065 + 0.057j, 0.387 + 0.045j, -0.102 + 0.000j, 0.082 + 0.061j],
        [-0.041 + 0.188j, 0.059 - 0.164j, -0.048 - 0.010j, -0.211 + 0.217j],
    ]
)

SIX_BY_SIX_WEAK_LOS = np.array(
    [
        [0.042 + 0.014j, -0.028 - 0.034j, 0.065 + 0.053j, -0.038 + 0.052j, -0.195 + 0.078j, -0.145 - 0.147j],
        [-0.074 + 0.239j, -0.224 + 0.079j, -0.195 + 0.194j, 0.166 - 0.099j, 0.020 - 0.008j, -0.065 - 0.083j],
        [-0.041 + 0.041j, 0.080 + 0.078j, -0.134 - 0.043j, 0.063 + 0.200j, 0.108 - 0.266j, -0.024 + 0.033j],
        [-0.075 + 0.238j, -0.016 - 0.288j, -0.059 + 0.107j, 0.155 - 0.004j, -0.039 - 0.129j, 0.006 - 0.131j],
        [-0.135 - 0.095j, 0.092 - 0.175j, 0.014 + 0.072j, 0.017 + 0.216j, -0.071 + 0.081j, -0.008 + 0.128j],
        [-0.120 + 0.069j, 0.036 - 0.190j, 0.149 - 0.139j, -0.087 - 0.056j, -0.041 - 0.007j, 0.081 - 0.084j],
    ]
)


def _boost_direct_path(base: np.ndarray, factor: float) -> np.ndarray:
    out = base.copy()
    out[:, -1] *= factor
    return out / np.linalg.norm(out)


SIX_BY_SIX_MODERATE_LOS = _boost_direct_path(SIX_BY_SIX_WEAK_LOS, 10.0)
SIX_BY_SIX_STRONG_LOS = _boost_direct_path(SIX_BY_SIX_WEAK_LOS, 100.0)

_BUILTIN = {
    "4x4": FOUR_BY_FOUR,
    "6x6_weak_los": SIX_BY_SIX_WEAK_LOS,
    "6x6_moderate_los": SIX_BY_SIX_MODERATE_LOS,
    "6x6_strong_los": SIX_BY_SIX_STRONG_LOS,
}


def builtin_names() -> list[str]:
    return sorted(_BUILTIN)


def builtin_matrix(name: str) -> np.ndarray:
    try:
        return _BUILTIN[name].copy()
    except KeyError:
        raise KeyError(f"unknown builtin channel {name!r}; choose from {builtin_names()}") from None


def builtin_channel(name: str) -> EquivalentChannel:
    return reduce_matrix(builtin_matrix(name))

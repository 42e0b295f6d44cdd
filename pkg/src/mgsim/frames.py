"""Rotation between a CIG's local d-q frame and the common D-Q frame.

Two-vectors are plain ``(first, second)`` tuples of floats: ``(d, q)`` in a
local frame or ``(D, Q)`` in the common one. The frame angle ``delta`` is the
integral of ``omega_i - omega_s`` and is never wrapped.
"""

import math

import numpy as np


def rotation(delta):
    """2x2 matrix taking local dq components to common DQ components."""
    c, s = math.cos(delta), math.sin(delta)
    return np.array([[c, -s], [s, c]])


def to_global(x, delta):
    c, s = math.cos(delta), math.sin(delta)
    return (c * x[0] - s * x[1], s * x[0] + c * x[1])


def to_local(X, delta):
    c, s = math.cos(delta), math.sin(delta)
    return (c * X[0] + s * X[1], -s * X[0] + c * X[1])


def rotate_k(x):
    """Apply the cross-coupling matrix ``[[0, 1], [-1, 0]]``."""
    return (x[1], -x[0])

import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from mgsim.frames import rotate_k, rotation, to_global, to_local
from mgsim.plant import measure

finite = st.floats(-1e3, 1e3, allow_nan=False)
angle = st.floats(-50.0, 50.0, allow_nan=False)


def test_zero_angle_is_identity():
    assert to_global((3.0, -2.0), 0.0) == (3.0, -2.0)
    assert np.array_equal(rotation(0.0), np.eye(2))


def test_quarter_turn():
    X = to_global((1.0, 0.0), math.pi / 2)
    assert abs(X[0]) < 1e-15 and abs(X[1] - 1.0) < 1e-15


def test_rotate_k():
    assert rotate_k((2.0, 5.0)) == (5.0, -2.0)


@given(finite, finite, angle)
def test_round_trip(a, b, delta):
    back = to_local(to_global((a, b), delta), delta)
    assert abs(back[0] - a) <= 1e-12 * max(1.0, abs(a), abs(b))
    assert abs(back[1] - b) <= 1e-12 * max(1.0, abs(a), abs(b))


@given(finite, finite, angle)
def test_matrix_matches_tuple_form(a, b, delta):
    assert np.allclose(rotation(delta) @ [a, b], to_global((a, b), delta), rtol=0, atol=1e-9)


@given(finite, finite, finite, finite, angle)
def test_power_is_frame_invariant(vd, vq, idd, iq, delta):
    P0, Q0, V0 = measure((vd, vq), (idd, iq))
    P1, Q1, V1 = measure(to_global((vd, vq), delta), to_global((idd, iq), delta))
    scale = 1.0 + abs(vd * idd) + abs(vq * iq) + abs(vd * iq) + abs(vq * idd)
    assert abs(P0 - P1) <= 1e-11 * scale
    assert abs(Q0 - Q1) <= 1e-11 * scale
    assert abs(V0 - V1) <= 1e-11 * (1.0 + V0)

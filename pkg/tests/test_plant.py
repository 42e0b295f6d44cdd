import math

import numpy as np
import pytest

from mgsim.plant import (CigParams, CigState, LineParams, LoadParams, Network, PlantState, cig_derivatives,
                         line_derivative, load_derivative, measure, pf_sensitivity_p, pf_sensitivity_q,
                         solve_bus_voltages, solve_bus_voltages_kcl)

W = 2 * math.pi * 50


def test_measure_examples():
    assert measure((1.0, 0.0), (1.0, 0.0)) == (1.0, 0.0, 1.0)
    assert measure((0.0, 1.0), (1.0, 0.0)) == (0.0, 1.0, 1.0)
    assert measure((3.0, 4.0), (2.0, -1.0)) == (2.0, 11.0, 5.0)


def test_sensitivity_examples():
    assert pf_sensitivity_p(0.0, 1.0, 1.0) == 1.0
    assert pf_sensitivity_q(0.0, -1.0, 2.0) == 2.0
    with pytest.raises(ValueError):
        pf_sensitivity_p(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        pf_sensitivity_q(1.0, 1.0, 0.0)


def _p_flow(Vi, Vj, th, G, B):
    return Vi * Vj * (-G * math.cos(th) - B * math.sin(th)) + G * Vi * Vi


def _q_flow(Vi, Vj, th, G, B):
    return Vi * Vj * (-G * math.sin(th) + B * math.cos(th)) - B * Vi * Vi


def test_sensitivities_match_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(100):
        Vi, Vj = rng.uniform(300, 450, 2)
        th = rng.uniform(-0.3, 0.3)
        G, B = rng.uniform(0.5, 20), rng.uniform(-20, -0.5)
        h = 1e-3
        fd_p = (_p_flow(Vi + h, Vj, th, G, B) - _p_flow(Vi - h, Vj, th, G, B)) / (2 * h)
        fd_q = (_q_flow(Vi + h, Vj, th, G, B) - _q_flow(Vi - h, Vj, th, G, B)) / (2 * h)
        an_p = pf_sensitivity_p(_p_flow(Vi, Vj, th, G, B), G, Vi)
        an_q = pf_sensitivity_q(_q_flow(Vi, Vj, th, G, B), B, Vi)
        assert abs(an_p - fd_p) <= 1e-6 * abs(an_p)
        assert abs(an_q - fd_q) <= 1e-6 * abs(an_q)


def test_invalid_params():
    with pytest.raises(ValueError):
        CigParams(0.1, -1e-3, 50e-6, 0.03, 0.35e-3, 1)
    with pytest.raises(ValueError):
        LineParams(0.2, 0.3e-3, 1, 1)
    with pytest.raises(ValueError):
        LoadParams(0.0, 1e-3, 1)


def test_isolated_bus_rejected():
    cigs = [CigParams(0.1, 1.35e-3, 50e-6, 0.03, 0.35e-3, 1)]
    with pytest.raises(ValueError, match="isolated"):
        Network(cigs, [], [LoadParams(3, 3e-3, 1)], buses=[1, 7])


def test_zero_state_is_equilibrium():
    p = CigParams(0.1, 1.35e-3, 50e-6, 0.03, 0.35e-3, 1)
    di, dv = cig_derivatives(CigState(), (0.0, 0.0), W, p)
    assert di == (0.0, 0.0) and dv == (0.0, 0.0)
    assert line_derivative((0.0, 0.0), (0.0, 0.0), (0.0, 0.0), LineParams(0.2, 1e-3, 1, 2), W) == (0.0, 0.0)
    assert load_derivative((0.0, 0.0), (0.0, 0.0), LoadParams(3, 3e-3, 1), W) == (0.0, 0.0)


def _radial(rng, n_cig=3):
    cigs = [CigParams(0.1, 1.35e-3, 50e-6, rng.uniform(0.02, 0.06), rng.uniform(0.3e-3, 0.6e-3), i + 1)
            for i in range(n_cig)]
    lines = [LineParams(rng.uniform(0.1, 0.4), rng.uniform(0.3e-3, 2e-3), i + 1, i + 2) for i in range(n_cig - 1)]
    loads = [LoadParams(rng.uniform(2, 5), rng.uniform(1e-3, 5e-3), b) for b in (1, n_cig)]
    return Network(cigs, lines, loads)


def _phasor_solution(net, Vc, shunt=None):
    """Dense nodal solve: CIG node phasors given, bus phasors unknown."""
    A = net.incidence()
    y = 1.0 / (net.br_R + 1j * W * net.br_L)
    Y = A @ np.diag(y) @ A.T
    c = net.c
    Yuu, Yuc = Y[c:, c:], Y[c:, :c]
    if shunt is not None:
        Yuu = Yuu + np.eye(net.n_buses) / shunt
    Vu = np.linalg.solve(Yuu, -Yuc @ Vc)
    V = np.concatenate([Vc, Vu])
    I = y * (A.T @ V)
    return Vu, I


def _state_from(net, Vc, I):
    cigs = [CigState(v_o=(Vc[i].real, Vc[i].imag), i_conn=(I[i].real, I[i].imag)) for i in range(net.c)]
    nl = len(net.lines)
    lines = [(z.real, z.imag) for z in I[net.c:net.c + nl]]
    loads = [(z.real, z.imag) for z in I[net.c + nl:]]
    return PlantState(cigs, lines, loads)


def test_kcl_closure_reproduces_phasor_steady_state():
    rng = np.random.default_rng(3)
    net = _radial(rng)
    Vc = rng.uniform(380, 410, net.c) * np.exp(1j * rng.uniform(-0.1, 0.1, net.c))
    Vu, I = _phasor_solution(net, Vc)
    V = solve_bus_voltages_kcl(net, _state_from(net, Vc, I), W)
    for h, bus in enumerate(net.bus_ids):
        assert abs(complex(*V[bus]) - Vu[h]) < 1e-9 * abs(Vu[h])
    # steady-state currents stay put under those voltages
    Vall = [complex(*V[("cig", i)]) for i in range(net.c)] + [complex(*V[b]) for b in net.bus_ids]
    for k in range(net.n_branches):
        a, b = net.br_a[k], net.br_b[k]
        Va = Vall[a]
        Vb = Vall[b] if b >= 0 else 0j
        d = line_derivative((I[k].real, I[k].imag), (Va.real, Va.imag), (Vb.real, Vb.imag),
                            LineParams(net.br_R[k], net.br_L[k], 1, 2), W)
        assert max(abs(d[0]), abs(d[1])) < 1e-4


def test_shunt_closure_matches_dense_nodal_solve():
    rng = np.random.default_rng(4)
    net = _radial(rng, 4)
    Vc = rng.uniform(380, 410, net.c) * np.exp(1j * rng.uniform(-0.1, 0.1, net.c))
    for r in (1e3, 1e5):
        Vu, I = _phasor_solution(net, Vc, shunt=r)
        st = _state_from(net, Vc, I)
        V = solve_bus_voltages(net, st, r_shunt=r)
        inj = net.injections(st)
        for h, bus in enumerate(net.bus_ids):
            assert abs(complex(*V[bus]) - Vu[h]) < 1e-9 * abs(Vu[h])
            # residual of the shunt equation is exactly zero
            assert inj[h, 0] - V[bus][0] / r == 0.0 and inj[h, 1] - V[bus][1] / r == 0.0


def test_power_balance_and_shunt_loss_trend():
    rng = np.random.default_rng(5)
    net = _radial(rng)
    Vc = 400 * np.exp(1j * rng.uniform(-0.05, 0.05, net.c))
    losses = []
    for r in (1e3, 1e5):
        Vu, I = _phasor_solution(net, Vc, shunt=r)
        # DQ instantaneous power = Re(V conj(I)) in steady state
        p_out = sum((Vc[i] * np.conj(I[i])).real for i in range(net.c))
        p_branch = sum(net.br_R * np.abs(I) ** 2)
        p_shunt = sum(np.abs(Vu) ** 2 / r)
        assert abs(p_out - p_branch - p_shunt) < 1e-9 * p_out
        losses.append(p_shunt)
    assert losses[1] < losses[0] / 50
    assert losses[1] / p_out < 1e-3


def test_set_load_updates_arrays_in_place():
    rng = np.random.default_rng(0)
    net = _radial(rng)
    R_arr = net.br_R
    net.set_load(1, 2.5, 4e-3)
    assert net.br_R is R_arr
    k = net.load_branch(1)
    assert net.br_R[k] == 2.5 and net.br_L[k] == 4e-3

"""Small scenario texts shared by the tests."""

from pathlib import Path

from mgsim.scenario import builtin_path

SHIPPED = {n: Path(str(builtin_path(n))) for n in ("case1", "case2", "case3", "case4")}


def single_cig(P_nom=20000.0, R=8.0, L=1e-3, duration=2.0, controller="case1", events=""):
    """One CIG on its own bus feeding an RL load; no neighbours."""
    return f"""
name = "single"
controller = "{controller}"
[timing]
duration = {duration}
[output]
window = {min(0.2, duration)}
[filter]
R_f = 0.1
L_f = 1.35e-3
C_f = 50e-6
[[cig]]
id = 1
bus = 1
R_c = 0.03
L_c = 0.35e-3
[[load]]
id = 1
bus = 1
R = {R}
L = {L}
[comm]
edges = []
[droop]
m = 2e-5
P_nom = {P_nom}
[secondary]
pinned = 1
{events}
"""


def zero_input(n_cig=2, duration=0.1):
    """Unloaded-source network with every setpoint at zero."""
    cigs = "".join(f"[[cig]]\nid = {i}\nbus = {i}\nR_c = 0.03\nL_c = 0.35e-3\n" for i in range(1, n_cig + 1))
    lines = "".join(f"[[line]]\nfrom = {i}\nto = {i + 1}\nR = 0.2\nL = 0.3e-3\n" for i in range(1, n_cig))
    edges = [[i, i + 1] for i in range(1, n_cig)]
    return f"""
name = "zero"
controller = "custom"
[timing]
duration = {duration}
[output]
window = {duration}
[filter]
R_f = 0.1
L_f = 1.35e-3
C_f = 50e-6
{cigs}
{lines}
[[load]]
id = 1
bus = 1
R = 3.0
L = 3e-3
[comm]
edges = {edges}
[[event]]
time = 0.0
kind = "enable_controller"
name = "secondary_freq"
[[event]]
time = 0.0
kind = "enable_controller"
name = "consensus"
"""

"""
Traveling packets and their peak diffusivity
============================================

A phase gradient p gives the packet a drift velocity.  Under dephasing the
drift stops after a distance 2J sin(p)/Gamma, and for |p| beyond pi/4 the
diffusivity overshoots its steady value before settling.
"""

import math

from latdiff import InitialState, analytic
from latdiff.propagator import PropagationConfig, evolve

J, w, gamma = 1.0, 10.0, 1.0

for p in (math.pi / 8, math.pi / 4, math.pi / 2):
    state = InitialState.traveling(w, p)
    cfg = PropagationConfig.sized(state, J, 20.0, Gamma=gamma, dt=0.01, record_every=1.0)
    s = evolve(state, J, gamma, cfg)
    stop = analytic.com_traveling(20.0, J, w, p, gamma)
    tp = analytic.peak_time("traveling", J, w, p, gamma)
    peak = "none" if tp is None else f"{tp:.3f}"
    print(f"p={p:.4f}: <n>(20) = {s.mean_n[-1]:+.5f} (closed form {stop:+.5f}), D_T peak time {peak}")

tp_s = analytic.peak_time("standing", J, w, math.pi / 2, gamma)
print(f"standing k=pi/2 peak time {tp_s:.5f} = (1 + e^(1/w^2)) / Gamma")

"""Two ways to reset a qubit, two fates for the stored quantum information.

Ten ancillas share Bell pairs with a scrambled chain.  Erasers that measure
X directly destroy the coherent information; erasers that first measure Z
leave behind a state whose coherent information equals a purely classical
quantity, the rank of an affine map over GF(2).
"""
import numpy as np

from coherencelab.circuits import (
    CircuitConfig,
    ProbeSchedule,
    classical_shadow_series,
    run,
    scrambled_state,
)

L, A = 48, 6
base = CircuitConfig(L=L, ancillas=A, p_e=0.03, t=6.0, init="quantum_register", seed=2, scramble_time=10.0 * L)
sched = ProbeSchedule(tuple(np.arange(0, 6.01, 1.0)), ("coherent_info",))
scr = scrambled_state(base, 0)
for kind in ("coherence_destroying", "coherence_maintaining"):
    cfg = base.with_(eraser=kind)
    ci = run(cfg, sched, 0, scrambled=scr).series["coherent_info"]
    print(f"{kind:24s} coherent info:", ci.tolist())
shadow = classical_shadow_series(base.with_(eraser="coherence_maintaining"), sched, 0)
print(f"{'classical rank oracle':24s}               ", shadow.tolist())

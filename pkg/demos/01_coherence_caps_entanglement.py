"""CNOT-only circuits: the half-chain entropy saturates at the initial X-basis coherence.

A product state with C qubits polarized along Z (the rest along X) has
C_x = C.  CNOTs permute X-basis strings, so C_x never changes, and the
entanglement profile flattens at C once the circuit has scrambled.
"""
import numpy as np

from coherencelab.circuits import CircuitConfig, ProbeSchedule, run_ensemble

L = 32
for C in (2, 6, 12):
    cfg = CircuitConfig(L=L, n_z=C, n_x=L - C, t=8 * L, seed=C)
    agg = run_ensemble(cfg, ProbeSchedule.final(cfg, ("S_profile", "C_x")), 40)
    prof = agg.mean["S_profile"][-1]
    print(f"C_x = {C:2d}: measured C_x {agg.mean['C_x'][-1]:.0f}, "
          f"S(L/2) = {prof[L // 2]:.2f}, max_x S(x) = {prof.max():.2f}")
    print("   S(x) every 4 sites:", np.round(prof[::4], 1).tolist())

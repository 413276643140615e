"""Small version of the coherence-tuned transition: I_3 curves for three sizes and a collapse.

Takes about a minute on one core.  Increase the sizes and realizations for
cleaner crossings.
"""
import numpy as np

from coherencelab import experiments as ex

data = ex.critical_line_data(sizes=(32, 64, 128), deltas=tuple(np.round(np.linspace(0.2, 0.466, 7), 4)), realizations=30)
for L in data["sizes"]:
    print(f"L = {L:3d} I_3:", [round(m, 2) for m, _ in data["I_3"][L]])
chk = ex.critical_line(data)
print(chk.line())
print(ex.scaling_collapse(data).line())

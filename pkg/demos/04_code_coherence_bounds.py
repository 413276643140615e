"""Code distance is bounded by the coherence of code states: d <= tight <= C_PD."""
import numpy as np

from coherencelab.codes import build_named_code, random_css, css_ranks, tight_bound, verify_coherence_bound
from coherencelab.pauli import LocalPauliBasis

rng = np.random.default_rng(1)
for name, args in (("repetition", (5,)), ("steane", ()), ("shor", ()), ("five_qubit", ())):
    code = build_named_code(name, *args)
    bases = ["X", "Y", "Z", LocalPauliBasis.random(code.n, rng)]
    rep = verify_coherence_bound(code, bases)
    cells = ", ".join(f"{r['basis']}: tight {r['tight']} C_PD {r['C_PD']}" for r in rep["rows"])
    print(f"{code.name:14s} d = {rep['d']}  {cells}")

code, Hx, Hz = random_css(8, rng)
kx, kz = css_ranks(code)
print(f"random CSS [[{code.n},{code.k}]]: tight X {tight_bound(code, 'X')} = n - k_z + 1 = {code.n - kz + 1}; "
      f"tight Z {tight_bound(code, 'Z')} = n - k_x + 1 = {code.n - kx + 1}")

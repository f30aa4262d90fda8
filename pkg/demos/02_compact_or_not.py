# When is the embedding into the variable Lorentz space compact?
#
# The exponent family q(x) = p* - C / log(1/|x|)^ell approaches the critical
# Sobolev exponent at the origin.  For ell < 1 the approach is slow enough
# that small balls carry vanishing norm; at ell = 1 it is not.
import numpy as np

from varlorentz.compactness import (FamilyParams, bump_noncompactness_witness, classify,
                                    finiteness_report, indicator_decay_diagnostic)

radii = tuple(2.0 ** -k for k in range(1, 21))

for ell in (0.5, 1.0):
    fam = FamilyParams(1.0, 2, 1.0, ell, 0.1)
    q = fam.exponent()
    print(f"\nell = {ell}")
    # the integral of alpha^(s*(t)) stays finite for every alpha only when ell < 1
    for alpha in (2.0, np.exp(4.0), 100.0, 1e3):
        rep = finiteness_report(alpha, fam)
        print(f"  alpha={alpha:10.3f}  integral={rep['value']:.6g}  converged={rep['converged']}")
    decay = indicator_decay_diagnostic(q, q.critical, radii)
    print("  ||chi_B(2^-k)|| for k = 1, 5, 10, 20:", np.round(decay[[0, 4, 9, 19]], 4))
    print("  verdict:", classify(fam, decay_radii=radii[:10], n_list=(2, 4, 8)).verdict)

# at ell = 1 concentrating bumps keep a fixed share of the norm while
# shrinking to the origin in L^1
w = bump_noncompactness_witness(1, 2, 1.0, 0.1, n_list=[2, 16, 128, 1024])
print("\nbump witness: delta =", round(w.delta, 6), " threshold =", round(w.threshold, 6))
for n, mod, l1 in zip(w.n_list, w.modulars, w.lp_norms):
    print(f"  n={n:5d}  modular of phi_n/delta = {mod:.4f}   ||phi_n||_1 = {l1:.2e}")

# the decay at ell = 1/2 is real but logarithmically slow
q = FamilyParams(1.0, 2, 1.0, 0.5, 0.1).exponent()
far = indicator_decay_diagnostic(q, q.critical, 2.0 ** -np.array([20, 100, 300, 1000]))
print("\nell = 1/2 at k = 20, 100, 300, 1000:", np.round(far, 7))

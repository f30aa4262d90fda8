# Rearranging a radial profile on the unit disc.
#
# A profile is piecewise linear in |x|.  Its distribution function, its
# decreasing rearrangement f* on (0, |ball|) and its symmetric decreasing
# rearrangement f# are all computed exactly from the level sets.
import numpy as np

from varlorentz.domain import BallDomain, RadialProfile
from varlorentz.rearrangement import (decreasing_rearrangement, distribution_function,
                                      symmetric_decreasing_rearrangement)

disc = BallDomain(2, 1.0)

# a ring of height 2 around a low centre, with a jump at r = 0.6
f = RadialProfile(disc, [0.0, 0.3, 0.6, 0.6, 1.0], [0.5, 2.0, 1.0, 0.2, 0.0])
print("sup |f| =", f.sup)

df = distribution_function(f)
for lam in (0.1, 0.5, 1.0, 1.5):
    print(f"|{{|f| > {lam}}}| = {float(df(lam)):.6f}")

# f* is the generalized inverse of d_f: it only depends on the level-set measures
fstar = decreasing_rearrangement(f)
t = np.linspace(0, disc.measure(), 7)
print("f*(t):", np.round(fstar(t), 6))
print("breakpoints of f*:", np.round(fstar.breakpoints, 6))

# f# puts the same level sets back as centred balls
fsharp = symmetric_decreasing_rearrangement(f)
lam = np.linspace(0, f.sup, 9, endpoint=False)
print("d_f  :", np.round(df(lam), 9))
print("d_f# :", np.round(distribution_function(fsharp)(lam), 9))

# symmetrization does not increase the Dirichlet-type energy
g = RadialProfile(disc, [0.0, 0.3, 0.6, 1.0], [0.5, 2.0, 1.0, 0.0])
for p in (1.0, 2.0):
    print(f"p={p}: ||grad g||_p = {g.seminorm(p):.6f} >= ||grad g#||_p = "
          f"{symmetric_decreasing_rearrangement(g).seminorm(p):.6f}")

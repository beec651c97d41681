"""Follow the heat flow and watch the monotone functionals decrease.

On the Gaussian the Bakry-Emery functional Phi decreases to zero.  On the
double well the functional Psi, built from the constant chain, decreases
for t >= t0 and ends nonnegative.
"""

import numpy as np

from lsi_certify import build_pipeline, certify, make_potential
from lsi_certify.flow import flow_table, trace_phi, trace_psi
from lsi_certify.samples import bump_profile

gauss = build_pipeline(make_potential("gaussian"), radius=8.0, points=1001)
f = bump_profile(gauss.grid)
tr = trace_phi(gauss.spectrum, f, 1.0, np.linspace(0, 4, 9))
print("Phi along the Gaussian flow:", np.round(tr.values["Phi"], 6))

dw = build_pipeline(make_potential("double_well"), points=1001)
chain = certify(dw.potential, pipeline=dw, oracle_starts=0).chain
g = bump_profile(dw.grid)
tr = trace_psi(dw.spectrum, g, chain, np.linspace(chain.t0, chain.t0 + 8, 9))
print("Psi along the double-well flow:", np.round(tr.values["Psi"], 6))
print("monotone:", tr.flags["monotone"], " terminal value:", f"{tr.flags['terminal']:.2e}")

print(f"\n{'t':>5} {'Ent(P_t f^2)':>14} {'E(P_t f)':>12} {'Theta1':>10} {'Theta2':>10}")
for row in flow_table(dw.spectrum, g, [0, 0.5, 1, 2, 4], chain=chain):
    print(f"{row['t']:5.2f} {row['Ent_f2']:14.6e} {row['Energy']:12.6e} {row['Theta1']:10.3e} {row['Theta2']:10.3e}")

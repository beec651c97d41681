"""From an LSI constant back to a Lyapunov function.

Given rho = 1/(2 C), the Schrodinger operator H = -L + rho(b - c d^2) is
positive definite and H u = 1 has a positive solution u.  That u is a
Lyapunov function with constants (rho c, rho b), which can be fed back into
the constant chain.
"""

import math

from lsi_certify import build_pipeline, certify, make_potential
from lsi_certify.certify import constant_chain
from lsi_certify.converse import coercivity_check, scan_herbst_exponent, schroedinger_potential

gauss = build_pipeline(make_potential("gaussian"), radius=8.0, points=1001)
prob = schroedinger_potential(gauss.generator, 0.25, 0.25)
print(f"Gaussian normaliser b = {prob.b:.6f} (2 sqrt 2 = {2 * math.sqrt(2):.6f})")

dw = build_pipeline(make_potential("double_well"), points=1001)
rep = certify(dw.potential, pipeline=dw, oracle_starts=0)
rho = 1 / (2 * rep.C_lsi)
best, ladder = scan_herbst_exponent(dw.generator, rho)
for row in ladder:
    print(f"  c = {row['c']:.4g}: {row['status']}")
cert = best.certificate
print(f"u > 0 everywhere: {bool((best.u > 0).all())}, relative residual {best.relative_residual:.1e}")
print("coercivity:", coercivity_check(dw.generator, best.problem, best.u).passed)
again = constant_chain(cert, rep.chain.K, rep.chain.lambda_mu, rep.chain.mu0)
print(f"certificate (c, b) = ({cert.c:.4g}, {cert.b:.4g}) gives C' = {again.C_lsi:.4g}, started from C = {rep.C_lsi:.4g}")

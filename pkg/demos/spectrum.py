"""Growth rates along invariant loops and the resulting verdicts.

Tangential and normal exponents are Birkhoff averages of log-stretches of
the boundary map differential along orbits on the relaxed invariant loop.
"""
from setfront import catalog, classify, estimate_spectrum, lift_circle, relax_to_invariant_loop

print(f"{'scenario':14s} {'tangential':>10s} {'normal 1':>9s} {'normal 2':>9s}  verdict")
for name, s in catalog().items():
    l = relax_to_invariant_loop(lift_circle(s.center, s.epsilon, 0.005), s, 1e-8, 400)
    r = estimate_spectrum(l, s)
    c = classify(r)
    n1, n2 = r.normal_exponents
    print(f"{name:14s} {r.tangential_exponent:10.4f} {n1:9.4f} {n2:9.4f}  {c.verdict} (margin {c.margin:.3f})")

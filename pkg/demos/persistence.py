"""Follow the invariant loop through two perturbation families.

Growing the noise radius by delta moves the affine disk boundary by exactly
2 delta; a small quadratic shear moves it at first order in delta, so the
C0 deviation roughly halves with delta.
"""
from setfront import catalog, epsilon_family, run_persistence_experiment, shear_family

base = catalog()["affine"]
for fam, deltas in ((epsilon_family(base), [0.1, 0.05, 0.025]),
                    (shear_family(base), [0.08, 0.04, 0.02, 0.01])):
    tab = run_persistence_experiment(fam, deltas)
    print(f"{fam.name} family (base {tab.base_verdict.verdict}, "
          f"cold-start check {tab.cold_start_distance:.1e})")
    for r in tab.rows:
        print(f"  delta={r.delta:<7} c0={r.hausdorff_c0:.5f} c1={r.normal_deviation_c1:.5f} "
              f"{r.verdict.verdict}")

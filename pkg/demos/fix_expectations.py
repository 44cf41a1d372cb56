"""Fixed points of random permutation pairs: exact tables and Monte Carlo."""

from coverlab import fixpoints as fx

# exact expectations by full enumeration (degree at most 6)
print("n   <a>    <a,b>   <a^2>")
for n in range(1, 7):
    e1 = fx.expected_fix_exact([(1,)], n)
    e2 = fx.expected_fix_exact([(1,), (2,)], n)
    e3 = fx.expected_fix_exact([(1, 1)], n)
    print(f"{n}   {e1}      {e2}     {e3}")

# the rank-2 subgroup <ab, ba>: scaled expectation stays bounded
for n in (64, 128):
    rep = fx.expectation_ratio([(1, 2), (2, 1)], n, trials=20_000, seed=0)
    print(f"n={n}: mean fix {rep['mean_fix']:.5f} +- {rep['stderr']:.5f}, "
          f"scaled ratio {rep['ratio']:.2e} (ell = {rep['ell']})")

# falling factorial bounds, exact integer arithmetic
print("falling-factorial bounds exhaustive to n=50:", fx.pochhammer_check(50, 25))

core = fx.fold_core([(1, 2), (2, 1)])
print(fx.describe_core(core))
print(f"basis length {fx.basis_length(core)} "
      f"(brute-force tree minimum {fx.basis_length_all_trees(core)})")

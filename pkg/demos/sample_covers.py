"""Draw random degree-n covers, inspect their cusps, certify tangle-freeness.

A cover is a pair of permutations (sigma_a, sigma_b) acting on the fiber;
connectedness of the cover is transitivity of the pair.  Cusps of the base
surface lift to cycles of specific permutation words.
"""

from coverlab import covers as cv
from coverlab import tangle as tg

n, seed = 12, 2
pair, attempts = cv.sample_connected_pair(n, seed)
print(f"degree {n}, seed {seed}: connected after {attempts} attempt(s)")

# each cusp of the base lifts to one cover cusp per permutation cycle
cycles = cv.cusp_cycles(pair)
for cusp in ("inf", "zero", "one"):
    lens = sorted(len(c) for c in cycles[cusp])
    print(f"cusp {cusp}: {len(lens)} lifts with fiber cycle lengths {lens}")

# serialize / restore round trip
text = cv.pair_to_text(pair)
assert cv.pair_from_text(text) == pair
print(f"edge list serializes to {len(text.splitlines())} lines")

# tangle-freeness at the slow-growing radius rule
rho = tg.rho_rule(n)
report = tg.certify_tangle_free(pair, rho)
print(f"radius {rho} balls: tangle-free = {report.passed}")
if not report.passed:
    for ws in tg.witness_words(report)[:2]:
        print("  witness cycle pair:", ws)

"""Global budgets and committed calibration constants.

The depth constants are measured once on a fixed seeded corpus (see
tests/test_transform.py and tests/test_acceptance.py) and committed here;
tests assert against these exact values, never against per-run estimates.
"""

# Exact-expansion monomial budget for the identity oracle.
EXPAND_BUDGET = 10**6

# Node cap for unfolding circuits into formulas.
UNFOLD_BUDGET = 10**7

# Randomized identity tests target error probability below 2**-PIT_ERROR_BITS.
PIT_ERROR_BITS = 40

# depth(balance(F)) <= BALANCE_A * (ceil(log2(d+1))**2
#                     + ceil(log2(s)) * ceil(log2(d+1))) + BALANCE_B
# for a circuit of size s and syntactic degree d.
BALANCE_A = 3
BALANCE_B = 3

# depth(det_c) <= DETC_DEPTH_A * ceil(log2 n)**2 + DETC_DEPTH_B for n >= 2.
DETC_DEPTH_A = 14
DETC_DEPTH_B = 48

# Every circuit of a balanced determinant-identity proof stays below
# PROOF_DEPTH_A * ceil(log2 n)**2 + PROOF_DEPTH_B (n >= 1).
PROOF_DEPTH_A = 14
PROOF_DEPTH_B = 56

# Retry budgets for randomized searches (shift points, auxiliary variables).
SEARCH_RETRIES = 200

# prove_normalize output is below NORMALIZE_SIZE_C * (monomial count)**2 lines.
NORMALIZE_SIZE_C = 60

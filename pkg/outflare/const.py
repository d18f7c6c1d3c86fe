VERSION = "0.3.0"
IS_DEVEL = False

# Cyclic length beyond which iterated currents and words stop growing
DEFAULT_WORD_BUDGET = 200_000

# Rise tolerated between successive residuals in trend checks
TREND_SLACK = 1e-12

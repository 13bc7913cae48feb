"""Shared physical constants."""

# Propagation speed used throughout (m/s). The round value keeps range/velocity
# bins at exact binary fractions (e.g. 19.53125 m, 7.8125 m/s for the default
# long-range configuration), which the regression suite pins down.
SPEED_OF_LIGHT = 3.0e8

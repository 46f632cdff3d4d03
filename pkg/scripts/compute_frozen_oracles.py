"""Regenerate the brute-force constants frozen into the test suite.

Currently: the long-run mean and standard deviation of the observation
process of the SIN model at theta = -0.5, estimated by a 10^6-step
simulation.  The values are pasted into tests/test_model.py.
"""

import numpy as np


def main():
    rng = np.random.default_rng(123456)
    n = 1_000_000
    x = 0.0
    xs = np.empty(n)
    for t in range(n):
        x = np.sin(-0.5 * x) + rng.standard_normal()
        xs[t] = x
    y_mean = xs.mean()
    y_sd = np.sqrt(xs.var() + 0.25)
    print(f"SIN_LONGRUN_Y_MEAN = {y_mean:.6f}")
    print(f"SIN_LONGRUN_Y_SD = {y_sd:.6f}")


if __name__ == "__main__":
    main()

"""Solve a discrete maximum-likelihood problem with one generalized power cone.

    python demos/max_likelihood.py [n]
"""

import sys

import numpy as np

from nsconic import Settings, solve
from nsconic.bench import gen_max_likelihood, random_weights


def main(n: int = 50) -> None:
    problem = gen_max_likelihood(n, seed=0)
    res = solve(problem, Settings(verbose=True))
    alpha = random_weights(n, np.random.default_rng(0))
    x = res.x[:n]
    print(f"\nmax prod x^alpha = {-res.primal_objective:.10f}")
    print(f"closed form (x = alpha) = {np.exp(alpha @ np.log(alpha)):.10f}")
    print(f"max |x - alpha| = {np.abs(x - alpha).max():.2e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 50)

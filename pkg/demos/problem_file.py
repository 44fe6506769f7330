"""Write a small problem with several cone types to JSON and solve it from disk.

    python demos/problem_file.py out.json
    nsconic solve out.json -v
"""

import sys

import numpy as np

from nsconic import ProblemData, read_problem, solve, write_problem
from nsconic.cones import NonNeg, PowMean, RelEntropy, Zero

# variables (x1, x2, t, u):
#   x1 + x2 = 2                        (zero cone)
#   x >= 0.1                           (nonnegative orthant)
#   t <= x1^0.3 x2^0.7                 (power mean cone)
#   u >= x1 log(x1 / 1) + x2 log(x2 / 2) (relative entropy cone, v = (1, 2))
# minimize u - t
c = np.array([0.0, 0.0, -1.0, 1.0])
A = np.zeros((1 + 2 + 3 + 5, 4))
b = np.zeros(11)
A[0, :2] = 1.0
b[0] = 2.0
A[1, 0] = A[2, 1] = -1.0
b[1:3] = -0.1
A[3, 0] = A[4, 1] = A[5, 2] = -1.0
A[6, 3] = -1.0
b[7:9] = (1.0, 2.0)
A[9, 0] = A[10, 1] = -1.0
problem = ProblemData.build(c, A, b, [Zero(1), NonNeg(2), PowMean((0.3, 0.7)), RelEntropy(2)])

if __name__ == "__main__":
    path = sys.argv[1] if len(sys.argv) > 1 else "demo_problem.json"
    write_problem(problem, path)
    res = solve(read_problem(path))
    print(f"{res.status}: objective {res.primal_objective:.8f}, x = {res.x.round(6)}")

"""Compare the native cone formulations with chains of 3-dimensional cones.

    python demos/formulations.py
"""

from nsconic.bench import BenchCase, run_bench

CASES = [
    BenchCase(family, form, size)
    for family, size in (("max_likelihood", 100), ("max_volume", 100), ("entropy_max", 200))
    for form in (("native", "split3d") if family == "entropy_max" else ("native", "powmean", "split3d"))
]

if __name__ == "__main__":
    print(run_bench(CASES, repeats=1).to_markdown(), end="")

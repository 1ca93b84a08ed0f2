"""Audit the hand-derived gradients against central finite differences
on small random instances, one line per loss configuration.

Run with:  python3 demos/demo_gradient_audit.py
"""

from stepalign.gradcheck import run_gradcheck


def main():
    print("comparing analytic gradients to central differences (h=1e-4) ...")
    for name, seed, err, ok in run_gradcheck(seed=0, n_instances=2, tol=1e-4):
        print(f"  {'ok ' if ok else 'BAD'} {name:<26} seed={seed} max rel err {err:.2e}")


if __name__ == "__main__":
    main()

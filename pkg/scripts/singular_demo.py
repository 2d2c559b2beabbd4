"""Show the rcond gate on the singular instance and on a nearby regular one."""
import numpy as np

from stochlq import SingularUpsilon, solve_backward
from stochlq.instances import singular_upsilon


def main():
    spec = singular_upsilon()
    try:
        solve_backward(spec)
    except SingularUpsilon as exc:
        print(f"singular: k={exc.k} node={exc.node!r} rcond={exc.rcond:.3e}")
    for eps in (1e-2, 1e-6, 1e-9, 1e-12):
        near = spec.replace(R=np.eye(1) * (1 + eps))
        try:
            sol = solve_backward(near)
            print(f"R = 1 + {eps:g}: solved, rcond={sol.rcond[0][0]:.3e}")
        except SingularUpsilon as exc:
            print(f"R = 1 + {eps:g}: rejected, rcond={exc.rcond:.3e}")


if __name__ == "__main__":
    main()

"""Exact rational reference values for the two scalar one-step games.

Independent of the package: both players' first-order conditions are linear
in (u, v), so they are written out leaf by leaf in exact arithmetic and solved
by Cramer's rule.  The Jacobian of the stacked conditions is the coupled gain
matrix; the adjoints at the root give the stacked Riccati value times xi.
"""
from fractions import Fraction as Fr

LEAVES = ((Fr(1), Fr(1, 2)), (Fr(-1), Fr(1, 2)))


def solve(A, B, C, E, F, Q, P, R, S, G, H, xi=Fr(1)):
    """G and H map omega to the leaf weight."""

    def foc(u, v):
        # derivative of each player's cost w.r.t. its own control
        d1 = R * u
        d2 = S * v
        for om, pr in LEAVES:
            x1 = A * xi + B * u + C * v + (E * u + F * v) * om
            d1 += pr * G(om) * x1 * (B + E * om)
            d2 += pr * H(om) * x1 * (C + F * om)
        return d1, d2

    f0 = foc(Fr(0), Fr(0))
    fu = [a - b for a, b in zip(foc(Fr(1), Fr(0)), f0)]
    fv = [a - b for a, b in zip(foc(Fr(0), Fr(1)), f0)]
    ups = [[fu[0], fv[0]], [fu[1], fv[1]]]
    det = ups[0][0] * ups[1][1] - ups[0][1] * ups[1][0]
    u = (-f0[0] * ups[1][1] + f0[1] * ups[0][1]) / det
    v = (-f0[1] * ups[0][0] + f0[0] * ups[1][0]) / det

    x1 = {om: A * xi + B * u + C * v + (E * u + F * v) * om for om, _ in LEAVES}
    y1 = Q * xi + sum(pr * A * G(om) * x1[om] for om, pr in LEAVES)
    y2 = P * xi + sum(pr * A * H(om) * x1[om] for om, pr in LEAVES)
    J1 = Fr(1, 2) * (Q * xi**2 + R * u**2 + sum(pr * G(om) * x1[om] ** 2 for om, pr in LEAVES))
    J2 = Fr(1, 2) * (P * xi**2 + S * v**2 + sum(pr * H(om) * x1[om] ** 2 for om, pr in LEAVES))
    return {"Upsilon": ups, "u": u, "v": v, "x1": x1, "y1_0": y1, "y2_0": y2, "J1": J1, "J2": J2}


def main():
    one, zero = Fr(1), Fr(0)
    cases = {
        "symmetric_scalar": dict(A=one, B=one, C=one, E=zero, F=zero, Q=one, P=one, R=one, S=one,
                                 G=lambda om: one, H=lambda om: one),
        "noisy_control_scalar": dict(A=one, B=one, C=one, E=one, F=zero, Q=one, P=one, R=one, S=one,
                                     G=lambda om: 1 + om, H=lambda om: one),
    }
    for name, kw in cases.items():
        res = solve(**kw)
        print(name)
        for key, val in res.items():
            if isinstance(val, dict):
                val = {str(k): str(x) for k, x in val.items()}
            elif isinstance(val, list):
                val = [[str(x) for x in row] for row in val]
            else:
                val = str(val)
            print(f"  {key}: {val}")


if __name__ == "__main__":
    main()

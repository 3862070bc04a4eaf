"""Independent high-precision evaluation of the closed-form policy parameters.

Writes param_oracle.json next to this script. Every ceiling argument is
checked to sit at least 1e-6 away from an integer so that double precision
cannot round it the other way.

    python3 param_oracle.py
"""

import json
import pathlib

from mpmath import mp, mpf, ceil, log, sqrt, floor, nint

mp.dps = 60

HORIZONS = [10**3, 10**4, 10**5, 10**6, 10**7]
GAPS = ["0.25", "0.5", "1", "2"]
MARGIN = mpf("1e-6")
GRID_POINTS = 3


def safe_ceil(x, what):
    if abs(x - nint(x)) < MARGIN:
        raise SystemExit(f"{what} = {x} is too close to an integer")
    return int(ceil(x))


def known(T, d):
    d2 = d * d
    lp = log(T * d2)
    lt = log(T)
    eps = min(sqrt(lp / (d2 * lt * lt)), mpf("0.5"))
    if eps < mpf("0.5"):
        t1 = safe_ceil(2 * lt * lt, "2 ln^2 T")
    else:
        t1 = safe_ceil(8 * lp / d2, "8 ln(T d^2)/d^2")
    tau1 = 4 * safe_ceil(max(log(t1 * d2), 0) / d2, "ln(T1 d^2)/d^2")
    return eps, t1, tau1


def grid_known(T, d, eps):
    d2 = d * d
    lp = log(T * d2)
    denom = 2 * (1 - eps) ** 2 * d2
    tau0 = lp / denom
    step = (2 * sqrt(lp) + 4) / denom
    out = []
    k = 1
    while len(out) < GRID_POINTS:
        p = safe_ceil(tau0 + k * step, "known grid point")
        if not out or p > out[-1]:
            out.append(p)
        k += 1
    return tau0, step, out


def grid_stage3(T, g):
    lt = log(T)
    cap = safe_ceil(lt * lt, "ln^2 T")
    lead = min(safe_ceil(2 * lt / log(lt), "N1"), cap)
    n2 = (1 + lt ** mpf("-0.25")) ** 2
    offset = 2 / (g * g) * n2 * log(T * lt**3)
    step = n2 * lt ** (mpf(2) / 3) / (g * g)
    out = [lead]
    k = 1
    while len(out) < 1 + GRID_POINTS:
        raw = offset + k * step
        if raw > cap:
            out.append(cap)
            break
        p = safe_ceil(raw, "stage III grid point")
        if p > out[-1]:
            out.append(p)
        k += 1
    return lead, cap, out


def upper_bound(T, d, eps, t1):
    d2 = d * d
    lp = max(log(T * d2), 0)
    l1 = max(log(t1 * d2), 0)
    s = (1 - eps) ** 2
    return 2 * d + 8 / d + 4 * l1 / d + lp / (2 * s * d) + (2 * sqrt(lp) + 2) / (s * d)


def main():
    rows = []
    for T in HORIZONS:
        for g in GAPS:
            d = mpf(g)
            eps, t1, tau1 = known(mpf(T), d)
            tau0, step, kg = grid_known(mpf(T), d, eps)
            lead, cap, g3 = grid_stage3(mpf(T), d)
            rows.append(
                {
                    "horizon": T,
                    "delta": float(d),
                    "epsilon": float(eps),
                    "stage2_target": t1,
                    "stage1_pulls": tau1,
                    "known_grid_offset": float(tau0),
                    "known_grid_step": float(step),
                    "known_grid": kg,
                    "stage3_lead": lead,
                    "stage3_cap": cap,
                    "stage3_grid": g3,
                    "upper_bound": float(upper_bound(mpf(T), d, eps, t1)),
                }
            )
    path = pathlib.Path(__file__).with_name("param_oracle.json")
    path.write_text(json.dumps(rows, indent=1) + "\n")
    print(f"wrote {len(rows)} lattice points to {path}")


if __name__ == "__main__":
    main()

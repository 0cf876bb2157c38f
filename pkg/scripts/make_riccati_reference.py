"""Regenerate tests/data/riccati_reference.json.

Reference values for the Riccati-Bessel pair j_l, n_l and the modified pair
(growing/decaying) are computed from the ascending power series of the
half-integer Bessel functions in mpmath arbitrary precision, term by term:

    J_nu(x)  = sum_m (-1)^m (x/2)^(2m+nu) / (m! Gamma(m+nu+1))
    I_nu(x)  = sum_m        (x/2)^(2m+nu) / (m! Gamma(m+nu+1))

    j_l(x)   = sqrt(pi x / 2) J_{l+1/2}(x)
    n_l(x)   = (-1)^(l+1) sqrt(pi x / 2) J_{-(l+1/2)}(x)
    grow_l   = sqrt(pi x / 2) I_{l+1/2}(x)
    decay_l  = sqrt(2 x / pi) (-1)^l (pi/2) (I_{-(l+1/2)}(x) - I_{l+1/2}(x))

Derivatives are the termwise derivatives of the same series, so nothing here
shares code or recurrences with the package implementation. Before writing the
fixture the script asserts half-integer closed forms (sin, cos, sinh, exp),
the Wronskians, and agreement with mpmath's own independent Bessel routines.

Run from the repository root:  python scripts/make_riccati_reference.py
"""

import json
import pathlib

import mpmath as mp

OSC_LS = [0, 1, 2, 3, 5, 8, 13, 21, 30, 35]
OSC_XS = [0.05, 0.31, 1.0, 2.0, 5.0, 13.7, 29.9, 51.3, 120.0]
MOD_LS = [0, 1, 3, 8, 21, 35]
MOD_XS = [0.05, 0.7, 1.5, 6.3, 40.0, 120.0]

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "riccati_reference.json"


def _series(nu, x, signed):
    """Ascending series of sqrt(pi x/2) * B_nu(x) and its x-derivative.

    B is J for signed=True and I for signed=False. Returns (value, derivative)
    at the current working precision.
    """
    half = mp.mpf(1) / 2
    pref = mp.sqrt(mp.pi / 2)
    total = mp.mpf(0)
    dtotal = mp.mpf(0)
    peak = mp.mpf(0)
    m = 0
    while True:
        power = 2 * m + nu + half
        coeff = pref / (mp.power(2, 2 * m + nu) * mp.factorial(m) * mp.gamma(m + nu + 1))
        if signed and m % 2 == 1:
            coeff = -coeff
        term = coeff * mp.power(x, power)
        total += term
        dtotal += term * power / x
        peak = max(peak, abs(term))
        # Terms grow until 2m ~ x, then decay factorially; stop well past both.
        if m > x / 2 + 10 and abs(term) < peak * mp.mpf(10) ** (-mp.mp.dps - 10):
            break
        m += 1
        if m > 5000:
            raise RuntimeError(f"series did not converge for nu={nu}, x={x}")
    return total, dtotal


def riccati_reference(l, x):
    nu = l + mp.mpf(1) / 2
    j, jp = _series(nu, x, signed=True)
    jneg, jnegp = _series(-nu, x, signed=True)
    sign = mp.mpf(-1) ** (l + 1)
    return j, sign * jneg, jp, sign * jnegp


def modified_reference(l, x):
    nu = l + mp.mpf(1) / 2
    gi, gip = _series(nu, x, signed=False)
    gineg, ginegp = _series(-nu, x, signed=False)
    sign = mp.mpf(-1) ** l
    decay = sign * (gineg - gi)
    decayp = sign * (ginegp - gip)
    return gi, decay, gip, decayp


def _check(actual, expected, what, tol=mp.mpf(10) ** -30):
    scale = max(abs(expected), mp.mpf(1) ** 0)
    if abs(actual - expected) > tol * max(scale, mp.mpf(1e-250)):
        raise AssertionError(f"{what}: {actual} vs {expected}")


def main():
    rows = {"oscillatory": [], "modified": []}

    for x in OSC_XS:
        mp.mp.dps = 60 + int(1.2 * x)
        xm = mp.mpf(repr(x))
        for l in OSC_LS:
            j, n, jp, np_ = riccati_reference(l, xm)
            _check(j * np_ - jp * n, mp.mpf(1), f"wronskian l={l} x={x}")
            _check(j, mp.sqrt(mp.pi * xm / 2) * mp.besselj(l + mp.mpf(1) / 2, xm),
                   f"besselj cross-check l={l} x={x}")
            _check(n, mp.sqrt(mp.pi * xm / 2) * mp.bessely(l + mp.mpf(1) / 2, xm),
                   f"bessely cross-check l={l} x={x}")
            if l == 0:
                _check(j, mp.sin(xm), f"j0 x={x}")
                _check(n, -mp.cos(xm), f"n0 x={x}")
                _check(jp, mp.cos(xm), f"jp0 x={x}")
                _check(np_, mp.sin(xm), f"np0 x={x}")
            rows["oscillatory"].append(
                {"l": l, "x": x, "j": float(j), "n": float(n),
                 "jp": float(jp), "np": float(np_)})

    for x in MOD_XS:
        mp.mp.dps = 80 + int(1.5 * x)
        xm = mp.mpf(repr(x))
        for l in MOD_LS:
            g, d, gp, dp = modified_reference(l, xm)
            _check(g * dp - gp * d, mp.mpf(-1), f"modified wronskian l={l} x={x}")
            _check(g, mp.sqrt(mp.pi * xm / 2) * mp.besseli(l + mp.mpf(1) / 2, xm),
                   f"besseli cross-check l={l} x={x}")
            _check(d, mp.sqrt(2 * xm / mp.pi) * mp.besselk(l + mp.mpf(1) / 2, xm),
                   f"besselk cross-check l={l} x={x}")
            if l == 0:
                _check(g, mp.sinh(xm), f"grow0 x={x}")
                _check(d, mp.exp(-xm), f"decay0 x={x}")
            rows["modified"].append(
                {"l": l, "x": x, "grow": float(g), "decay": float(d),
                 "growp": float(gp), "decayp": float(dp)})

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w") as fh:
        json.dump(rows, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {OUT} ({len(rows['oscillatory'])} + {len(rows['modified'])} rows)")


if __name__ == "__main__":
    main()

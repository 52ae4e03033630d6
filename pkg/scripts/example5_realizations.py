"""Compare two realizations of the example-5 controller on the nominal plant.

The controller definition has the integral pole ``(1 + z^-1)/(1 - z^-1)``.
Clearing it yields increments ``e[n-k] + e[n-k-1]``; writing them as
differences instead removes the pole and turns the integral series into a
plain FIR term. This script prints phase margin and phase flatness for
both forms and for both readings of the integral order, to show which one
reproduces the published margins.

    python3 scripts/example5_realizations.py
"""
from __future__ import annotations

import numpy as np

from ldpid.cases import get_case
from ldpid.fracseries import expand_fk
from ldpid.lti import FrequencyResponse, log_grid, margins, plant_freq


def flatness(f, wc):
    band = log_grid(wc / 3, 3 * wc, 200)
    ph = np.degrees(np.unwrap(np.angle(f(band))))
    ph_c = np.degrees(np.angle(f(np.array([wc]))))[0]
    return float(np.max(np.abs(ph - ph_c)))


def main():
    case = get_case(5)
    P, T, M = case.plant, case.T, 5
    Kp, Kd, Ki, mu = 7.109, 0.711, 0.750, 0.077
    fd = expand_fk(mu, M).values
    print(f"{'form':>10} {'order':>6} {'omega_c':>8} {'phi_m':>7} {'dev[wc/3,3wc]':>14}")
    for form in ("pole", "no-pole"):
        for order in (0.415, 0.585):
            fi = expand_fk(order, M).values

            def L(w, fi=fi, form=form):
                zi = np.exp(-1j * w * T)
                integ = np.polyval(fi[::-1], zi)
                if form == "pole":
                    integ = integ * (1 + zi) / (1 - zi)
                return (Kp + Kd * np.polyval(fd[::-1], zi) + Ki * integ) * plant_freq(P, w)

            mg = margins(FrequencyResponse.from_function(L, log_grid(1e-3, 30)))
            print(f"{form:>10} {order:6.3f} {mg.omega_c:8.4f} {mg.phase_margin:7.2f} {flatness(L, mg.omega_c):14.2f}")


if __name__ == "__main__":
    main()

"""Smoke test for the berrymag Python module.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

import math

import berrymag as bm

TWO_PI = 2 * math.pi
GAMMA = TWO_PI * 28e9


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    c = bm.Constants()
    close(c.gamma, GAMMA, 1.0)

    # Ramsey fringe: one period in field is 2*pi/(gamma*T).
    t = 1e-6
    period = TWO_PI / (GAMMA * t)
    close(bm.ramsey_signal(t, period), 1.0, 1e-9)
    close(bm.ramsey_signal(t, period / 2), -1.0, 1e-9)
    close(bm.ramsey_field_range(t), period, 1e-12)

    # Propagated plans agree with the closed forms.
    plan = bm.SequencePlan.ramsey(t)
    assert plan.protocol == "ramsey"
    close(plan.interaction_time, t, 1e-18)
    close(plan.execute(0.3 * period), bm.ramsey_signal(t, 0.3 * period), 1e-9)

    rabi, n, T = TWO_PI * 500e6, 3, 8e-6
    berry = bm.SequencePlan.berry(rabi, n, T)
    for b in (0.0, 1e-4, 2.5e-4):
        close(berry.execute(b), bm.berry_signal(rabi, n, b), 1e-3)
    exact, _ = bm.adiabaticity(rabi, n, T)
    assert exact < 0.01

    # Estimation inverts the signal.
    b_true = 2.5e-4
    h = 1e-8
    p = bm.berry_signal(rabi, n, b_true)
    slope = (bm.berry_signal(rabi, n, b_true + h) - bm.berry_signal(rabi, n, b_true - h)) / (2 * h)
    e = bm.estimate_geometric(rabi, n, p, slope)
    close(e["b_hat"], b_true, 1e-7)
    try:
        bm.estimate_geometric(rabi, n, 1.0, 0.0)
        raise AssertionError("expected an unresolvable estimate")
    except bm.UnresolvableError:
        pass
    d = bm.estimate_dynamic(t, 0.5, (0.0, period))
    assert len(d["candidates"]) == 2

    # Noise: calibration reproduces its targets.
    cal = bm.calibrate(50e-6, 500e-6)
    close(cal["t2_star"], 50e-6, 1e-9)
    dec = bm.decoherence(cal["delta"], cal["tau_c"], 0.0, 50e-6)
    close(dec["geometric"], 0.0, 1e-15)
    close(dec["total"], dec["dynamic"], 1e-15)
    curve = bm.coherence_decay(cal["delta"], cal["tau_c"], 1.0, [10e-6 * k for k in range(1, 21)])
    assert curve["fit"] is not None

    traj = bm.ou_trajectory(cal["delta"], cal["tau_c"], 1e-5, 1e-7, seed=3)
    assert len(traj.samples) > 10
    noisy = berry.execute(1e-4, noise=traj)
    assert -1.0 <= noisy <= 1.0

    rows = bm.sweep("berry", [T], [k * 1e-6 for k in range(0, 801, 4)], rabi=[TWO_PI * f for f in (20e6, 40e6)], n=[1])
    assert len(rows) == 2 and all(r["error"] is None for r in rows)

    try:
        bm.SequencePlan.ramsey(-1.0)
        raise AssertionError("expected ValueError")
    except ValueError:
        pass

    print("berrymag smoke test: ok")


if __name__ == "__main__":
    main()

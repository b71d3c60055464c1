#!/usr/bin/env python3
"""Fit the synthetic quality-model constants and write crates/core/data/quality_models.toml.

Model (SNR g in dB, normalized CR u in [0, 1]):

    S(g)    = 1 / (1 + exp(-snr_slope * (g - snr_mid)))
    ceil(u) = q_ceil_max_cr - (q_ceil_max_cr - q_ceil_min_cr) * (exp(-k u) - exp(-k)) / (1 - exp(-k))
    Q(g, u) = q_floor + (ceil(u) - q_floor) * S(g)

Per dataset we fix q_floor and three low-CR anchors Q(0), Q(18), Q(30), solve
for (q_ceil_min_cr, snr_mid, snr_slope), then pick k so that the gain from
CR 1/6 to CR 3/10 at 30 dB equals `tail_gain_db`.

Usage: python3 scripts/fit_quality_models.py [--check]
"""

import math
import pathlib
import sys

from scipy.optimize import brentq, fsolve

CR_MIN, CR_MAX = 1.0 / 30.0, 3.0 / 10.0
ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "crates" / "core" / "data" / "quality_models.toml"

# tag: (q_floor, Q(0,cr_min), Q(18,cr_min), Q(30,cr_min), q_ceil_max_cr, tail_gain_db)
TARGETS = {
    "bdd100k-like": (0.0, 23.89, 28.80, 29.15, 39.95, 0.85),
    "mtdt-like": (0.0, 28.00, 31.60, 31.80, 36.69, 0.40),
    "ubs-like": (0.0, 24.00, 27.40, 27.60, 35.78, 0.70),
    "ubm-like": (0.0, 24.50, 27.70, 27.90, 33.69, 0.45),
}
CONTENT_NOISE_STD = 0.6
ORACLE_ERROR_BOUND = 1.0


def logistic(g, slope, mid):
    return 1.0 / (1.0 + math.exp(-slope * (g - mid)))


def fit(q_floor, a0, a18, a30, ceil_max, tail_gain):
    def eqs(p):
        amp, slope, mid = p
        return [
            q_floor + amp * logistic(0.0, slope, mid) - a0,
            q_floor + amp * logistic(18.0, slope, mid) - a18,
            q_floor + amp * logistic(30.0, slope, mid) - a30,
        ]

    amp, slope, mid = fsolve(eqs, [a30 - q_floor, 0.2, 0.0], xtol=1e-13)
    ceil_min = q_floor + amp
    s30 = logistic(30.0, slope, mid)
    span = (ceil_max - ceil_min) * s30
    u_half = (1.0 / 6.0 - CR_MIN) / (CR_MAX - CR_MIN)

    def tail(k):
        # Gain from u_half to 1 at 30 dB.
        return span * (math.exp(-k * u_half) - math.exp(-k)) / (1.0 - math.exp(-k)) - tail_gain

    k = brentq(tail, 0.5, 30.0)
    return dict(
        q_floor=q_floor,
        q_ceil_min_cr=ceil_min,
        q_ceil_max_cr=ceil_max,
        snr_mid=mid,
        snr_slope=slope,
        cr_sat=k,
    )


def mean_quality(m, g, eps):
    u = (eps - CR_MIN) / (CR_MAX - CR_MIN)
    k = m["cr_sat"]
    ceil = m["q_ceil_max_cr"] - (m["q_ceil_max_cr"] - m["q_ceil_min_cr"]) * (
        math.exp(-k * u) - math.exp(-k)
    ) / (1.0 - math.exp(-k))
    return m["q_floor"] + (ceil - m["q_floor"]) * logistic(g, m["snr_slope"], m["snr_mid"])


def main():
    lines = [
        "# Synthetic quality-model constants, one table per dataset profile.",
        "# Generated by scripts/fit_quality_models.py; edit the targets there, not here.",
        "#",
        "# Q(g, eps) = q_floor + (ceil(eps) - q_floor) / (1 + exp(-snr_slope (g - snr_mid)))",
        "# ceil interpolates q_ceil_min_cr..q_ceil_max_cr with exponential saturation rate cr_sat",
        "# over the normalized CR range. All qualities in dB, g in dB.",
        "",
        "schema_version = 1",
        "",
    ]
    for tag, target in TARGETS.items():
        m = fit(*target)
        q = lambda g, e: mean_quality(m, g, e)
        print(
            f"{tag:14s} Q(0,1/30)={q(0, CR_MIN):.2f} Q(18,1/30)={q(18, CR_MIN):.2f} "
            f"Q(30,1/30)={q(30, CR_MIN):.2f} gain1/6={q(30, 1/6) - q(30, CR_MIN):.2f} "
            f"tail={q(30, CR_MAX) - q(30, 1/6):.2f} Qmax(0)={q(0, CR_MAX):.2f} Qmax(30)={q(30, CR_MAX):.2f}",
            file=sys.stderr,
        )
        lines.append(f'[datasets."{tag}"]')
        for key in ["q_floor", "q_ceil_min_cr", "q_ceil_max_cr", "snr_mid", "snr_slope", "cr_sat"]:
            lines.append(f"{key} = {m[key]:.6f}")
        lines.append(f"content_noise_std = {CONTENT_NOISE_STD}")
        lines.append(f"oracle_error_bound = {ORACLE_ERROR_BOUND}")
        lines.append("")
    text = "\n".join(lines)
    if "--check" in sys.argv:
        if OUT.read_text() != text:
            sys.exit(f"{OUT} is stale; rerun {sys.argv[0]}")
        return
    OUT.write_text(text)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Steady-state resonance sweep of the 455 kHz beam and Q/zeta extraction,
mirroring the bench workflow: sweep, find the peak, take the 1/sqrt(2)
bandwidth, convert to the damping ratio.
"""

import os

import memsd
from memsd.protocols import Scenario, run_sweep


def main():
    out_root = os.environ.get("MEMSD_OUT", "memsd-out")
    name = "beam-455kHz"
    scenario = Scenario(name=name, device=memsd.preset(name), preset_name=name)
    fragment = run_sweep(scenario, out_root)
    fit = fragment["fit"]
    lo, hi = fragment["band_hz"]
    print(f"swept {lo / 1e3:.1f}-{hi / 1e3:.1f} kHz, {fragment['points']} points")
    print(f"peak:      {fit['peak_hz'] / 1e3:.3f} kHz, {fit['peak_amplitude_m'] * 1e9:.3f} nm")
    print(f"bandwidth: {fit['bandwidth_hz'] / 1e3:.3f} kHz")
    print(f"Q:         {fit['q_factor']:.2f}")
    print(f"zeta:      {fit['zeta']:.5f}")
    for check in fragment["checks"]:
        print(f"[{'PASS' if check['passed'] else 'FAIL'}] {check['name']}: {check['detail']}")
    print(f"CSV: {fragment['files'][0]}")


if __name__ == "__main__":
    main()

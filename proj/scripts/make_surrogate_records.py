#!/usr/bin/env python3
"""Generate surrogate two-lead ECG records in WFDB 212 format.

The records are synthetic (sum-of-Gaussians beat model with rhythm
variability, ectopy, baseline wander and noise). They are written and
read back with the `wfdb` Python package so the committed dumps come from
established tooling rather than from the C++ reader under test.

Usage: make_surrogate_records.py OUT_DIR
"""
import json
import os
import sys

import numpy as np
import wfdb

from make_reference_dumps import dump_reference

FS = 360
DURATION_S = 300
GAIN = 200.0
BASELINE = 1024

# (offset_s, amplitude_mV, width_s) relative to the R apex; offsets of P and T
# scale with sqrt(RR).
NORMAL = [(-0.20, 0.12, 0.022), (-0.035, -0.12, 0.010), (0.0, 1.00, 0.010),
          (0.035, -0.25, 0.012), (0.27, 0.30, 0.045)]
PVC = [(0.0, 1.45, 0.030), (0.07, -0.45, 0.030), (0.32, -0.35, 0.060)]

# name, mean RR, rr jitter, pvc prob, t-wave scale, noise mV, wander mV, r scale
PROFILES = [
    ("sur100", 0.80, 0.03, 0.00, 1.0, 0.010, 0.05, 1.00),
    ("sur101", 0.95, 0.05, 0.01, 1.0, 0.020, 0.10, 0.90),
    ("sur102", 0.70, 0.02, 0.00, 1.6, 0.015, 0.08, 0.85),
    ("sur103", 0.85, 0.04, 0.00, 1.2, 0.030, 0.15, 1.10),
    ("sur104", 0.75, 0.15, 0.00, 0.9, 0.030, 0.10, 0.95),
    ("sur105", 0.90, 0.04, 0.02, 1.0, 0.015, 0.06, 1.20),
    ("sur106", 0.80, 0.05, 0.12, 1.1, 0.020, 0.08, 1.00),
    ("sur107", 0.65, 0.02, 0.00, 0.8, 0.025, 0.12, 1.30),
    ("sur108", 1.05, 0.06, 0.02, 1.4, 0.040, 0.20, 0.75),
    ("sur109", 0.60, 0.03, 0.03, 1.0, 0.020, 0.08, 1.05),
]



def beat_times(rng, mean_rr, jitter, pvc_prob, n_total):
    times, kinds = [], []
    t = 0.35
    rr_state = mean_rr
    while t < n_total / FS - 0.4:
        kind = "V" if rng.random() < pvc_prob and kinds and kinds[-1] == "N" else "N"
        if kind == "V":
            # premature, compensated by a longer following interval
            t_beat = times[-1] + 0.6 * rr_state if times else t
        else:
            t_beat = t
        times.append(t_beat)
        kinds.append(kind)
        rr_state = mean_rr + 0.6 * (rr_state - mean_rr) + rng.normal(0, jitter)
        rr_state = float(np.clip(rr_state, 0.45 * mean_rr, 1.8 * mean_rr))
        t = t_beat + (1.4 * rr_state if kind == "V" else rr_state)
    return np.array(times), kinds


def synthesize(rng, profile, n, insert_pause):
    name, mean_rr, jitter, pvc_prob, t_scale, noise, wander, r_scale = profile
    times, kinds = beat_times(rng, mean_rr, jitter, pvc_prob, n)
    if insert_pause:
        # one sinus pause longer than 1023 samples, which forces a SKIP record
        k = len(times) // 2
        times[k:] += 3.2
        keep = times < n / FS - 0.4
        times = times[keep]
        kinds = [kd for kd, kp in zip(kinds, keep) if kp]
    t = np.arange(n) / FS
    lead1 = np.zeros(n)
    lead2 = np.zeros(n)
    for i, (tb, kind) in enumerate(zip(times, kinds)):
        rr = times[i] - times[i - 1] if i else mean_rr
        s = np.sqrt(max(rr, 0.3) / 0.8)
        waves = NORMAL if kind == "N" else PVC
        amp_var = 1.0 + rng.normal(0, 0.04)
        lo = max(0, int((tb - 0.5) * FS))
        hi = min(n, int((tb + 0.7) * FS))
        seg = t[lo:hi]
        for off, amp, width in waves:
            a = amp * amp_var
            if kind == "N" and off == 0.0:
                a *= r_scale
            if off > 0.1 or off < -0.1:
                off *= s
                if kind == "N" and off > 0.1:
                    a *= t_scale
            g = a * np.exp(-0.5 * ((seg - tb - off) / width) ** 2)
            lead1[lo:hi] += g
            lead2[lo:hi] += (0.45 if off != 0.0 else 0.35) * g * (1 if kind == "N" else -0.8)
    phase = rng.uniform(0, 2 * np.pi)
    base = wander * np.sin(2 * np.pi * 0.23 * t + phase) + 0.5 * wander * np.sin(2 * np.pi * 0.07 * t)
    lead1 += base + rng.normal(0, noise, n) + 0.01 * np.sin(2 * np.pi * 60 * t)
    lead2 += 0.7 * base + rng.normal(0, noise, n)
    d1 = np.clip(np.round(lead1 * GAIN - 60 + BASELINE), -2048, 2047).astype(np.int64)
    d2 = np.clip(np.round(lead2 * GAIN - 20 + BASELINE), -2048, 2047).astype(np.int64)
    r_samples = np.round(times * FS).astype(np.int64)
    return np.stack([d1, d2], axis=1), r_samples, kinds


def write_record(out_dir, profile, seed):
    rng = np.random.default_rng(seed)
    n = FS * DURATION_S
    name = profile[0]
    d, r_samples, kinds = synthesize(rng, profile, n, insert_pause=(name == "sur105"))
    wfdb.wrsamp(name, fs=FS, units=["mV", "mV"], sig_name=["MLII", "V5"],
                d_signal=d.astype(np.int16).astype(np.int64), fmt=["212", "212"],
                adc_gain=[GAIN, GAIN], baseline=[BASELINE, BASELINE],
                comments=["surrogate record, synthetic beat model"], write_dir=out_dir)
    # Annotation stream: rhythm marker with aux text, beats, a noise marker
    # with a channel field, and beat subtypes, so NUM/SUB/CHN/AUX all occur.
    samples = [0] + list(r_samples)
    symbols = ["+"] + kinds
    aux = ["(N"] + [""] * len(kinds)
    subtype = [0] * len(samples)
    chan = [0] * len(samples)
    num = [0] * len(samples)
    mid = len(samples) // 3
    samples.insert(mid, int(r_samples[mid - 1] + 40))
    symbols.insert(mid, "~")
    aux.insert(mid, "")
    subtype.insert(mid, 1)
    chan.insert(mid, 1)
    num.insert(mid, 0)
    for k in range(5, len(samples), 97):
        num[k] = 1
    order = np.argsort(np.array(samples), kind="stable")
    wfdb.wrann(name, "atr", np.array(samples)[order], symbol=[symbols[i] for i in order],
               subtype=np.array(subtype)[order], chan=np.array(chan)[order],
               num=np.array(num)[order], aux_note=[aux[i] for i in order],
               fs=FS, write_dir=out_dir)


def main():
    out_dir = sys.argv[1]
    os.makedirs(out_dir, exist_ok=True)
    for i, profile in enumerate(PROFILES):
        write_record(out_dir, profile, seed=1000 + i)
    dumps = [dump_reference(out_dir, p[0]) for p in PROFILES]
    with open(os.path.join(out_dir, "reference_dump.json"), "w") as f:
        json.dump(dumps, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()

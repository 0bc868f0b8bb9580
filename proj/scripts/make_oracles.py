#!/usr/bin/env python3
"""Freeze reference values from established implementations.

  * Butterworth coefficients      scipy.signal.butter
  * level-3 db3 SWT detail         pywt.swt
  * chrF sentence scores           sacrebleu.metrics.CHRF (beta=2, n=6)
  * QRS detector beat counts       py-ecg-detectors on the surrogate records

Usage: make_oracles.py WFDB_DIR OUT_JSON
"""
import json
import os
import sys

import numpy as np
import pywt
import scipy.signal as signal
import wfdb
from ecgdetectors import Detectors
from sacrebleu.metrics import CHRF

BUTTER_CASES = [
    (1, "bandpass", [5.0, 15.0], 360.0),
    (2, "lowpass", [15.0], 360.0),
    (2, "highpass", [5.0], 72.0),
    (2, "bandpass", [8.0, 20.0], 72.0),
    (1, "bandpass", [8.0, 16.0], 360.0),
    (2, "lowpass", [3.0], 100.0),
    (3, "bandpass", [8.0, 20.0], 360.0),
]

CHRF_PAIRS = [
    ("The user is stationary, likely in an outdoor area near a McDonald restaurant in Singapore.",
     "Outdoor seating area next to a McDonald's restaurant in Singapore."),
    ("The user is walking inside a shopping mall.", "Walking through a shopping mall on the ground floor."),
    ("The user is likely at a university library.", "Inside the university library reading room."),
    ("The user appears to be in a subway station.", "Waiting on the platform of a subway station."),
    ("Near a Starbucks coffee shop.", "Inside a Starbucks cafe."),
    ("The user is in an office building.", "Open plan office on the fifth floor of a commercial building."),
    ("abc", "xyz"),
    ("identical sentence here", "identical sentence here"),
    ("Close to HKUST campus, possibly in a lecture theatre.", "Lecture theatre at the HKUST campus."),
    ("Café near the station… maybe Tōkyō?", "A café next to Tokyo station."),
]


def butter_cases():
    out = []
    for order, btype, freqs, fs in BUTTER_CASES:
        wn = [2 * f / fs for f in freqs]
        b, a = signal.butter(order, wn if len(wn) > 1 else wn[0], btype=btype)
        out.append({"order": order, "type": btype, "freqs": freqs, "fs": fs,
                    "b": [float(v) for v in b], "a": [float(v) for v in a]})
    return out


def swt_case():
    rng = np.random.default_rng(7)
    x = np.round(1000 + 80 * np.sin(np.arange(64) * 0.4) + rng.normal(0, 10, 64))
    coeffs = pywt.swt(x, "db3", level=3)
    return {"input": [float(v) for v in x],
            "detail_level3": [float(v) for v in coeffs[0][1]],
            "approx_level3": [float(v) for v in coeffs[0][0]],
            "detail_level1": [float(v) for v in coeffs[2][1]]}


def chrf_cases():
    metric = CHRF(char_order=6, word_order=0, beta=2)
    return [{"hypothesis": h, "reference": r,
             "score": metric.sentence_score(h, [r]).score / 100.0} for h, r in CHRF_PAIRS]


def detector_counts(wfdb_dir):
    out = []
    for name in sorted(f[:-4] for f in os.listdir(wfdb_dir) if f.endswith(".hea")):
        rec = wfdb.rdrecord(os.path.join(wfdb_dir, name), physical=False)
        x = rec.d_signal[:, 0].astype(float)
        det = Detectors(rec.fs)
        row = {"record": name, "fs": rec.fs, "counts": {
            "pan_tompkins": len(det.pan_tompkins_detector(x)),
            "hamilton": len(det.hamilton_detector(x)),
            "christov": len(det.christov_detector(x)),
            "tma": len(det.two_average_detector(x)),
            "swt": len(det.swt_detector(x)),
        }}
        out.append(row)
    return out


def main():
    wfdb_dir, out_json = sys.argv[1], sys.argv[2]
    data = {"butter": butter_cases(), "swt": swt_case(), "chrf": chrf_cases(),
            "detector_counts": detector_counts(wfdb_dir)}
    with open(out_json, "w") as f:
        json.dump(data, f, indent=1, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Dump WFDB header fields, leading samples and beat times with the `wfdb`
Python package. The JSON output is the reference the C++ reader is checked
against.

Usage: make_reference_dumps.py DATA_DIR OUT_JSON RECORD [RECORD ...]
"""
import json
import os
import sys

import wfdb

# QRS annotation codes (WFDB isqrs convention without LEARN).
BEAT_CODES = set(range(1, 14)) | {25, 34, 35, 38, 41}


def dump_reference(data_dir, name, n_first=1000):
    path = os.path.join(data_dir, name)
    hdr = wfdb.rdheader(path)
    rec = wfdb.rdrecord(path, physical=False)
    ann = wfdb.rdann(path, "atr", return_label_elements=["label_store"])
    beats = [int(s) for s, code in zip(ann.sample, ann.label_store) if int(code) in BEAT_CODES]
    return {
        "record": name,
        "n_signals": hdr.n_sig,
        "fs": hdr.fs,
        "n_samples": hdr.sig_len,
        "signals": [
            {"format": int(f), "adc_gain": float(g), "adc_zero": int(z), "description": s}
            for f, g, z, s in zip(hdr.fmt, hdr.adc_gain, hdr.adc_zero, hdr.sig_name)
        ],
        "first_samples": [[int(v) for v in rec.d_signal[:n_first, c]] for c in range(hdr.n_sig)],
        "total_per_channel": [int(rec.d_signal[:, c].sum()) for c in range(hdr.n_sig)],
        "annotation_count": len(ann.sample),
        "beat_times": beats,
    }


def main():
    data_dir, out_json, records = sys.argv[1], sys.argv[2], sys.argv[3:]
    dumps = [dump_reference(data_dir, r) for r in records]
    with open(out_json, "w") as f:
        json.dump(dumps, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()

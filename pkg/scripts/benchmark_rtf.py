#!/usr/bin/env python3
"""Single-core real-time-factor benchmark with a per-stage breakdown.

Times STFT analysis, IVA separation, the network forward pass, mask
application, and synthesis separately on one synthetic stereo clip, then
prints each stage's share and the analytic MAC budget for comparison.

    python3 scripts/benchmark_rtf.py --seconds 10 --repeats 3
"""

import argparse
import sys
import time

import numpy as np

from hybridse import (IvaConfig, StftConfig, auxiva_separate, istft, stft)
from hybridse.bands import make_erb_filterbank
from hybridse.model import (apply_mask, count_macs, forward, init_random,
                            preset_config)


def bench(fn, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=10.0)
    ap.add_argument("--preset", default="lps-sn-m2")
    ap.add_argument("--iva-iters", type=int, default=20)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cfg = preset_config(args.preset)
    stft_cfg = StftConfig()
    iva_cfg = IvaConfig(iterations=args.iva_iters)
    weights = init_random(cfg, args.seed)
    fb = make_erb_filterbank()

    rng = np.random.default_rng(args.seed)
    n = int(args.seconds * stft_cfg.sample_rate)
    wave = 0.1 * rng.standard_normal((2, n))

    stages = {}
    stages["stft"], spec = bench(lambda: stft(wave, stft_cfg), args.repeats)
    stages["auxiva"], sep = bench(
        lambda: auxiva_separate(spec, iva_cfg)[0], args.repeats)
    stages["network"], mask = bench(
        lambda: forward(spec, sep, weights, cfg, fb=fb), args.repeats)
    stages["mask+istft"], _ = bench(
        lambda: istft(apply_mask(mask, spec, sep, cfg.masking), stft_cfg,
                      length=n), args.repeats)

    total = sum(stages.values())
    print(f"preset {args.preset}, {args.seconds:.0f} s clip, "
          f"{args.iva_iters} IVA iterations, best of {args.repeats} runs")
    for name, t in stages.items():
        print(f"  {name:12s} {t:7.3f} s   RTF {t / args.seconds:6.3f}   "
              f"{100 * t / total:5.1f}%")
    print(f"  {'total':12s} {total:7.3f} s   RTF {total / args.seconds:6.3f}")
    macs = count_macs(cfg, stft_cfg, iva_cfg)
    print(f"analytic budget {macs / 1e6:.1f} MMACs per second of audio")
    return 0


if __name__ == "__main__":
    sys.exit(main())

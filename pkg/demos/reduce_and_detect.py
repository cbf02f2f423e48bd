"""Reduce one random 4x4 channel and detect a noisy 16-QAM vector with it.

Run with ``python demos/reduce_and_detect.py``.
"""

import numpy as np

from clll import ReductionParams, clll_reduce, orthogonality_defect, rlll_reduce
from clll.detection import (Constellation, detect_ml, detect_sic, detect_zf, lr_detect,
                            noise_var_for_snr, sample_channel)


def main(seed: int = 1, snr_db: float = 20.0) -> None:
    rng = np.random.default_rng(seed)
    qam = Constellation(16)
    channel = sample_channel(4, 4, noise_var_for_snr(snr_db, 4, qam), rng)

    params = ReductionParams(0.99)
    c = clll_reduce(channel.h, params)
    r = rlll_reduce(channel.h, params)
    print(f"orthogonality defect: {orthogonality_defect(channel.h):.3f} before, "
          f"{orthogonality_defect(c.reduced_basis):.3f} after complex reduction")
    print(f"complex reduction: {c.swap_count} swaps, {c.flops.total:.0f} flops")
    print(f"real reduction:    {r.swap_count} swaps, {r.flops.total:.0f} flops")
    print("unimodular transform:\n", np.round(c.unimodular, 0))

    x = rng.choice(qam.points, size=4)
    y = channel.transmit(x, rng)
    results = {
        "zf": detect_zf(channel, y, qam),
        "sic": detect_sic(channel, y, qam),
        "lr-sic (complex)": lr_detect(channel, y, c, qam, "sic"),
        "lr-sic (real)": lr_detect(channel, y, r, qam, "sic"),
        "ml": detect_ml(channel, y, qam),
    }
    print("sent:", x)
    for name, res in results.items():
        wrong = int(np.sum(res.symbols != x))
        print(f"{name:>17}: {wrong} symbol errors")


if __name__ == "__main__":
    main()

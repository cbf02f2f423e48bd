"""Print average flop counts and pre-check pass rates for a few dimensions.

Run with ``python demos/complexity_tables.py``; the numbers are means over
random CN(0, 1) channels, so expect small run-to-run differences across seeds.
"""

from clll.complexity import bench_rows, estimate_pc_pr
from clll.costs import crcr


def main(trials: int = 2000, seed: int = 0) -> None:
    print(f"{'n':>3} {'real LLL':>10} {'complex LLL':>12} {'saved':>7} "
          f"{'real QR':>9} {'complex QR':>11} {'saved':>7} {'overall':>8}")
    for row in bench_rows([2, 3, 4, 6, 8], trials, 0.99, rng=seed):
        print(f"{row.n:>3} {row.rlll:>10.1f} {row.clll:>12.1f} {row.lll_saved:>7.1%} "
              f"{row.qr_real:>9.1f} {row.qr_complex:>11.1f} {row.qr_saved:>7.1%} "
              f"{row.overall_saved:>8.1%}")

    print(f"\n{'n':>3} {'P_c(n)':>8} {'P_r(2n)':>8} {'ratio':>6} {'cost ratio (K=4)':>17}")
    for n in (4, 6, 8):
        pc, pr = estimate_pc_pr(n, trials, 0.75, seed)
        print(f"{n:>3} {pc.p_hat:>8.4f} {pr.p_hat:>8.4f} {pc.p_hat / pr.p_hat:>6.3f} "
              f"{crcr(4, pc.p_hat, pr.p_hat):>17.3f}")


if __name__ == "__main__":
    main()

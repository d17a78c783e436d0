"""Maximizers of the synchronized reduced energy across k.

The ratio ``r*_k / (ε k ln k)`` drifts slowly towards ``m/2π``.
Run with ``python3 demos/reduced_scan_demo.py``.
"""
import math

from nlspeaks.ground_state import coupled_amplitudes, solve_ground_state
from nlspeaks.potentials import builtin_potential
from nlspeaks.reduced_energy import scan_sync, sync_constants


def main(epsilon=0.5, m=4.0):
    gs = solve_ground_state(1.0)
    pot = builtin_potential(m=m)
    consts = sync_constants(coupled_amplitudes(1.0, 1.0, 0.0), gs, (pot, pot))
    print(f"target m/2pi = {m / (2 * math.pi):.4f}")
    for k in (16, 32, 64, 128, 256, 1024):
        curve = scan_sync(k, epsilon, consts, m, consts["a_eff"])
        print(f"k={k:5d}  r*={curve.r_star:10.3f}  ratio={curve.ratio_to_klnk:.4f}  "
              f"interior={curve.interior}")


if __name__ == "__main__":
    main()

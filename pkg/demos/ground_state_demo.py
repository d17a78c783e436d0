"""Radial ground state, its integrals and the coupled amplitudes.

Run with ``python3 demos/ground_state_demo.py``.
"""
import math

from nlspeaks.ground_state import (coupled_amplitudes, coupled_residual, decay_constant,
                                   radial_integrals, solve_ground_state)


def main():
    gs = solve_ground_state(1.0)
    ints = radial_integrals(gs)
    print(f"w(0) = {gs.center_value:.12f}, ODE residual {gs.residual_norm:.2e}")
    for key in ("I2", "IG", "I4"):
        print(f"{key:>3} = {ints[key]:.6f}")
    print(f"Nehari defect   {(ints['IG'] + ints['I2'] - ints['I4']) / ints['I4']:.2e}")
    print(f"decay fit       {decay_constant(gs)}")

    for beta in (0.0, 0.5, -0.5, 2.0):
        amp = coupled_amplitudes(1.0, 1.0, beta)
        print(f"beta={beta:+.1f}: gamma = ({amp.gamma1:.6f}, {amp.gamma2:.6f}), "
              f"coupled residual {coupled_residual(gs, amp):.2e}")
    print(f"sqrt(2/3) = {math.sqrt(2 / 3):.6f}")


if __name__ == "__main__":
    main()

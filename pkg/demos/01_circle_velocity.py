"""Velocity on a disc: discrete contour integral against the closed form.

A disc with strength -1 rotates rigidly, so the velocity at (1, 0) is purely
vertical. Its value has a closed form in Beta functions.
"""
import numpy as np

from alphapatch.geometry import circle
from alphapatch.kernel import circle_velocity_exact, velocity_field

alpha = 0.7
exact = circle_velocity_exact(alpha)
print(f"closed form at alpha={alpha}: {exact:.10f}")

# Convergence with the number of nodes
for n in (25, 50, 100, 200, 400):
    vx, vy = velocity_field([circle(n)], alpha, [[1.0, 0.0]])[0]
    print(f"n={n:4d}  vx={vx: .2e}  vy={vy:.10f}  err={abs(vy - exact):.2e}")

# The rotation rate depends on alpha
for a in np.linspace(0.1, 0.9, 9):
    print(f"alpha={a:.1f}  v_y={circle_velocity_exact(a): .6f}")

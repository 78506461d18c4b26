"""Tour of the coefficient spaces underneath the proofs.

Chebyshev coefficient sequences and multivariate Taylor arrays both form
Banach algebras under their convolutions; operator norms reduce to weighted
suprema over the corner points of the unit ball.  This script walks through
the basic objects with rigorous interval enclosures.

Run:  python3 demos/01_sequence_spaces.py
"""

import numpy as np

from connorb.interval import CArray, Interval
from connorb.seqspace import (
    ChebSeq,
    TaylorArray,
    cheb_conv,
    cheb_opnorm_matrix,
    taylor_conv,
)

nu = Interval.from_decimal("1.5")
print("weight nu =", nu, "(decimal literal enclosed, never trusted)\n")

# -- the symmetric convolution is the product of Chebyshev expansions --------
e1 = ChebSeq.basis(1, nu)
square = cheb_conv(e1, e1)
print("T_1 * T_1 coefficients (expect 2 e_0 + e_2):")
print("  ", np.round(square.mid().ravel().real, 12))

# -- norms are rigorous enclosures --------------------------------------------
rng = np.random.default_rng(0)
a = ChebSeq(CArray.exact(rng.standard_normal((6, 1)).astype(complex)), nu)
b = ChebSeq(CArray.exact(rng.standard_normal((4, 1)).astype(complex)), nu)
prod = cheb_conv(a, b)
print("\nBanach algebra check ||a*b|| <= ||a|| ||b||:")
print(f"   ||a*b|| <= {prod.norm().hi:.6f}")
print(f"   ||a|| ||b|| = {a.norm().hi * b.norm().hi:.6f}")

# -- corner points attain operator norms --------------------------------------
print("\ncorner points have norm exactly 1:")
for k in range(4):
    xi = ChebSeq.corner(k, nu)
    print(f"   ||xi_{k}|| in {xi.norm()}")

# -- operator norms are weighted column suprema -------------------------------
M = rng.standard_normal((6, 6))
bound = cheb_opnorm_matrix(M, nu, nu)
print(f"\noperator norm bound of a random 6x6 block: {bound.hi:.4f}")
worst = 0.0
for _ in range(2000):
    x = rng.standard_normal(6)
    xs = ChebSeq(CArray.exact(x.astype(complex)[:, None]), nu)
    img = ChebSeq(CArray.exact((M @ x).astype(complex)[:, None]), nu)
    worst = max(worst, img.norm().lo / xs.norm().hi)
print(f"largest sampled Rayleigh quotient:          {worst:.4f}")

# -- multivariate Taylor arrays ------------------------------------------------
p = TaylorArray.delta((1, 0), nu)
q = TaylorArray.delta((0, 1), nu)
pq = taylor_conv(p, q)
print("\nCauchy product delta_(1,0) * delta_(0,1) lives at (1,1):")
print("  ", np.round(pq.mid()[..., 0].real, 12))

"""Show that the anisotropic bump measures saturate the decay exponent.

For each admissible ell the bump lives in a box adapted to the curve's
Taylor frame, and its curve average should fall like lambda^{-1/(d-ell)}.

    python demos/sharpness.py
"""

from curvedecay import exponents, experiments as X

d, alpha = 3, 2.5
lad = X.LambdaLadder.powers(6, 11)

# ell = -1 has no bump counterpart
for ell in exponents.ell_range(d, alpha)[1:]:
    rep = X.run_sharpness_lower(d, alpha, ell, lad)
    e = rep.extra
    print(rep.line())
    print(f"    window slope {e['window_slope']:+.3f}   energy slope {e['energy_slope']:+.3f} (h = {e['energy_predicted']:+.3f})")

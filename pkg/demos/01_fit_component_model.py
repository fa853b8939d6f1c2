"""Fit a leakage/delay model to characterization samples.

Samples stand in for a circuit-simulation sweep over a 5 x 5 sub-grid of
(Vth, Tox). We fit both closed forms and check how well they reproduce
the data, first without noise and then with 1 % multiplicative noise.
"""
# %%
import numpy as np

from cachevolt import ComponentKind, fit_delay, fit_leakage
from cachevolt.synthetic import characterization_samples, synthetic_cache

cell = synthetic_cache(16 * 1024).models[ComponentKind.CELL_ARRAY]

# %% Exact samples: the fit should recover the generating coefficients.
exact = characterization_samples(cell)
lk, dl = fit_leakage(exact), fit_delay(exact)
print("leakage coeffs  true:", np.array2string(cell.leakage.as_array(), precision=6))
print("                 fit:", np.array2string(lk.as_array(), precision=6))
print("delay coeffs    true:", np.array2string(cell.delay.as_array(), precision=6))
print("                 fit:", np.array2string(dl.as_array(), precision=6))

# %% Noisy samples: look at relative residuals instead of coefficients.
noisy = characterization_samples(cell, noise=0.01, seed=1)
lk, dl = fit_leakage(noisy), fit_delay(noisy)
res_l = np.array([lk(s.point.vth, s.point.tox) / s.leakage - 1 for s in noisy])
res_d = np.array([dl(s.point.vth, s.point.tox) / s.delay - 1 for s in noisy])
print(f"noisy fit: leakage rms residual {np.sqrt(np.mean(res_l**2)):.2%}, "
      f"delay rms residual {np.sqrt(np.mean(res_d**2)):.2%}")

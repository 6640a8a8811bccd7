"""Descriptor statistics of the synthetic 36-pore plate.

Writes a descriptor CSV, fits the five distribution families to the
equivalent diameters and draws lognormal templates from the fit.
"""
import numpy as np

from poresens import benchmark, porestats

pores = benchmark.random_pores()
outline, _ = benchmark.outline()
table = porestats.descriptor_table(pores, outline)
porestats.write_descriptor_csv(table, "plate_descriptors.csv")

fit = porestats.fit_distributions(table.eq_diameter)
for fam in porestats.FAMILIES:
    f = fit.fits.get(fam)
    if f is not None:
        print(f"{fam:12s} logL {f.log_likelihood:10.3f}  AIC {f.aic:10.3f}  BIC {f.bic:10.3f}")
print("selected:", fit.selected)

x, frac = porestats.cumulative_distribution(table.eq_diameter)
print("median equivalent diameter:", float(np.median(x)))
ln = fit.fits["lognormal"].params
line = porestats.Regression(slope=1.0, intercept=0.0, r=1.0, r_log=None)
templates = porestats.sample_templates(ln["mu"], ln["sigma"], line, count=50)
print("template nearest to the first pore:",
      porestats.match_template((table.eq_diameter[0], table.eq_diameter[0]), templates))

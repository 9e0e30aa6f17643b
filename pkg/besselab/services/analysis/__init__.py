# besselab/services/analysis/__init__.py
# Numerical core: grids/transforms, Riesz kernels, Bessel norms, multipliers, sharpness.

# besselab/__init__.py
# Numerical lab for Bessel-potential, uniformly localized and multiplier norms.

__version__ = "0.1.0"
ARTIFACT_NAME = "besselab"

"""Computable simple coarse structures: ends, large scale structures, Higson
coronas and asymptotic dimension covers at finite scale."""

__version__ = "0.1.0"

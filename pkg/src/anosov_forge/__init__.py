"""anosov-forge.

Exact and certified-float experiments on free subgroups of SL3: growth
profiles, ping-pong certificates, reducible suspensions, unipotent
perturbations and flag-space limit-set samples.
"""

__version__ = "0.1.0"

"""Ion-channel gated molecule release from a spherical transmitter.

Subpackages/modules:

- ``physio``   physical parameters and dimensionless constants
- ``gating``   voltage-gated channel kinetics and keying waveforms
- ``laplace``  release transfer function and Talbot inversion
- ``analytic`` average release rate w(t) and cumulative count M(t)
- ``bounded``  empty-exterior series solution (upper bound w_u, M_u)
- ``pbs``      particle-based Monte Carlo simulator
- ``experiments`` CSV pipelines behind the ``ionmod`` CLI
"""

__version__ = "0.1.0"

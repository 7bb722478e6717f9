"""Numerical laboratory for nonuniform dependence in 2D gas dynamics.

Subpackage map:

* ``spectral``  - periodic grids, lazily synced physical/spectral fields
* ``cutoffs``   - exact piecewise-smooth bump/ramp constructions
* ``sobolev``   - Sobolev norms, scaling fits, inequality spot checks
* ``ansatz``    - the two-parameter approximate-solution family
* ``residual``  - term-by-term residual bookkeeping and decay rates
* ``solver``    - pseudospectral time integration of the gas system
* ``experiment``- paired evolutions, error growth, separation metrics
* ``cli``       - command line entry points
"""

__version__ = "0.1.0"

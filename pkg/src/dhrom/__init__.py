"""Full- and reduced-order thermal models of district-heating pipes.

Modules: ``thermo`` (heat-transfer correlations), ``fom`` (finite-difference
pipe model), ``chebyshev`` (spectral time expansions), ``rom`` (transfer
function identification and propagation), ``network``, ``control``,
``costmodel`` and the ``cli`` front end.
"""

__version__ = "0.1.0"

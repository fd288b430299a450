"""Formation-flying satellite cluster design and network fabric mapping.

Modules cover the pipeline end to end: relative orbital elements and
propagation (``astro``), cluster construction and scaling sweeps
(``clusters``), solar exposure and line-of-sight geometry (``geometry``),
mesh metrics and folded-Clos fabrics (``network``), and the node-to-satellite
assignment solver (``assignment``).
"""

__version__ = "0.1.0"

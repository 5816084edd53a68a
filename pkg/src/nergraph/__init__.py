"""Engine for exploring and hand-curating named-entity graphs.

Submodules: ``store`` (graph + journal), ``view`` (projection, filters,
visual mapping), ``layout`` (progressive force-directed layout), ``search``
(node lookup), ``io_formats`` (canonical JSON interchange), ``service``
(HTTP session API).
"""

__version__ = "0.1.0"

"""condlevel: conditional VAE toolkit for tile-based platformer segments.

Train label-conditioned VAEs on 16x16 level segments, generate segments
containing requested game elements or design patterns, edit existing
segments by re-decoding them under new labels, and blend the styles of
Super Mario Bros., Kid Icarus and Mega Man.
"""

__version__ = "0.1.0"

from .corpus import Segment, TileGrid, parse_level  # noqa: F401
from .labeling import Label  # noqa: F401
from .tilemaps import TileMap, TileVocab, load_default_tilemap  # noqa: F401

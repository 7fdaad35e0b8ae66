"""
Perception of photographed screens: edges, screen detection, text and
non-text widget extraction, and the glyph library the text reader matches.
"""

from armbench.vision.edges import EdgeMap, canny, morph_close
from armbench.vision.glyphs import GlyphLibrary, default_library
from armbench.vision.image import Image, as_gray, read_image, write_image
from armbench.vision.screen import detect_screen, draw_overlay, extract_widgets
from armbench.vision.text import CharMatch, detect_text, refine_line
from armbench.vision.widgets import (
    Widget,
    WidgetKind,
    extract_nontext,
    looks_like_input,
    merge_widgets,
)

__all__ = [
    "EdgeMap",
    "canny",
    "morph_close",
    "GlyphLibrary",
    "default_library",
    "Image",
    "as_gray",
    "read_image",
    "write_image",
    "detect_screen",
    "draw_overlay",
    "extract_widgets",
    "CharMatch",
    "detect_text",
    "refine_line",
    "Widget",
    "WidgetKind",
    "extract_nontext",
    "looks_like_input",
    "merge_widgets",
]

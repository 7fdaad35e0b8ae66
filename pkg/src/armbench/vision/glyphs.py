"""
Glyph library shared by the renderer and the text detector.

Templates are rasterized once from OpenCV's Hershey simplex font. Every
template spans the full cell height with the baseline at a fixed row, and is
cropped horizontally to its ink, so a rendered string is the concatenation of
templates separated by `letter_spacing` blank columns.
"""

import functools
import logging
import string
from pathlib import Path
from typing import Literal

import cv2
import numpy as np
import numpy.typing as npt
from pydantic import Field

from armbench.documents import BenchBaseModel, dump_document, load_document
from armbench.errors import UnknownCharacterError
from armbench.vision.image import read_image, write_image
from common.utils import atomic_write_text

log = logging.getLogger("armbench.vision")

DEFAULT_CHARSET = string.ascii_lowercase + string.ascii_uppercase + string.digits + ".-"
MANIFEST_NAME = "glyphs.yaml"

Mask = npt.NDArray[np.bool_]


class GlyphManifest(BenchBaseModel):
    schema_version: Literal[1] = 1
    cell_height: int = Field(gt=0)
    letter_spacing: int = Field(ge=1)
    space_width: int = Field(ge=1)
    glyphs: dict[str, str]
    aliases: dict[str, str] = Field(default_factory=dict)


class GlyphLibrary:
    def __init__(
        self,
        templates: dict[str, Mask],
        cell_height: int,
        letter_spacing: int = 3,
        space_width: int = 6,
        aliases: dict[str, str] | None = None,
    ):
        if not templates:
            raise ValueError("A glyph library needs at least one template")
        for ch, t in templates.items():
            if t.ndim != 2 or t.shape[0] != cell_height or t.shape[1] < 1 or not t.any():
                raise ValueError(
                    f"Template for '{ch}' has shape {t.shape}, expected ({cell_height}, ≥1) with ink"
                )
        self._templates = {ch: t.astype(bool) for ch, t in templates.items()}
        self.cell_height = cell_height
        self.letter_spacing = letter_spacing
        self.space_width = space_width
        self.aliases = dict(aliases or {})
        for alias, target in self.aliases.items():
            if target not in self._templates:
                raise ValueError(f"Alias '{alias}' points at unknown glyph '{target}'")

    @classmethod
    def build(
        cls,
        charset: str = DEFAULT_CHARSET,
        font_scale: float = 0.6,
        thickness: int = 1,
        letter_spacing: int = 3,
        space_width: int = 6,
    ) -> "GlyphLibrary":
        font = cv2.FONT_HERSHEY_SIMPLEX
        sizes = [cv2.getTextSize(ch, font, font_scale, thickness) for ch in charset]
        ascent = max(size[0][1] for size in sizes)
        descent = max(size[1] for size in sizes)
        cell_height = ascent + descent + 2
        templates: dict[str, Mask] = {}
        aliases: dict[str, str] = {}
        for ch, ((width, _), _) in zip(charset, sizes, strict=True):
            canvas = np.zeros((cell_height, width + 6), dtype=np.uint8)
            cv2.putText(canvas, ch, (3, 1 + ascent), font, font_scale, 255, thickness, cv2.LINE_8)
            ink = canvas > 0
            cols = np.flatnonzero(ink.any(axis=0))
            template = ink[:, cols[0] : cols[-1] + 1]
            twin = next(
                (other for other, t in templates.items() if np.array_equal(t, template)), None
            )
            if twin is not None:
                aliases[ch] = twin
                continue
            templates[ch] = template
        log.debug(
            f"Built glyph library: {len(templates)} templates, {len(aliases)} aliases, cell height {cell_height}"
        )
        return cls(templates, cell_height, letter_spacing, space_width, aliases)

    @property
    def chars(self) -> tuple[str, ...]:
        return tuple(self._templates)

    @property
    def max_width(self) -> int:
        return max(t.shape[1] for t in self._templates.values())

    @property
    def space_gap(self) -> int:
        """Smallest ink gap read as a word break."""
        return self.letter_spacing + self.space_width // 2

    def __contains__(self, ch: object) -> bool:
        return ch in self._templates or ch in self.aliases

    def canonical(self, ch: str) -> str:
        return self.aliases.get(ch, ch)

    def template(self, ch: str) -> Mask:
        try:
            return self._templates[self.canonical(ch)]
        except KeyError:
            raise UnknownCharacterError(f"Character '{ch}' is not in the glyph library") from None

    def items(self):
        return self._templates.items()

    def layout(self, text: str) -> Mask:
        """Ink mask of `text`: cell height rows, ink-tight at both ends."""
        pieces: list[Mask] = []
        gap = np.zeros((self.cell_height, self.letter_spacing), dtype=bool)
        space = np.zeros((self.cell_height, self.space_width), dtype=bool)
        for ch in text:
            if ch == " ":
                pieces.append(space)
                continue
            if pieces:
                pieces.append(gap)
            pieces.append(self.template(ch))
        if not pieces:
            return np.zeros((self.cell_height, 0), dtype=bool)
        mask = np.hstack(pieces)
        cols = np.flatnonzero(mask.any(axis=0))
        if len(cols) == 0:
            return np.zeros((self.cell_height, 0), dtype=bool)
        return mask[:, cols[0] : cols[-1] + 1]

    def ink_extent(self, text: str) -> tuple[int, int, int]:
        """First ink row of the layout, ink width and ink height."""
        mask = self.layout(text)
        rows = np.flatnonzero(mask.any(axis=1))
        if len(rows) == 0:
            return (0, 0, 0)
        return (int(rows[0]), int(mask.shape[1]), int(rows[-1] - rows[0] + 1))

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        files: dict[str, str] = {}
        for ch, t in self._templates.items():
            name = f"u{ord(ch):04x}.png"
            write_image(directory / name, np.where(t, 255, 0).astype(np.uint8))
            files[ch] = name
        manifest = GlyphManifest(
            cell_height=self.cell_height,
            letter_spacing=self.letter_spacing,
            space_width=self.space_width,
            glyphs=files,
            aliases=self.aliases,
        )
        path = directory / MANIFEST_NAME
        atomic_write_text(path, dump_document(manifest))
        return path

    @classmethod
    def load(cls, directory: str | Path) -> "GlyphLibrary":
        directory = Path(directory)
        manifest = load_document(directory / MANIFEST_NAME, GlyphManifest)
        templates = {ch: read_image(directory / name) > 127 for ch, name in manifest.glyphs.items()}
        return cls(
            templates,
            manifest.cell_height,
            manifest.letter_spacing,
            manifest.space_width,
            manifest.aliases,
        )


@functools.cache
def default_library() -> GlyphLibrary:
    return GlyphLibrary.build()

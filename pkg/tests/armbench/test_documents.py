import logging
import math
import os
import tempfile

import astropy.units as u
import pytest
from pydantic import ValidationError

from armbench.documents import BenchBaseModel, dump_document, load_document, read_yaml
from armbench.geometry import Rect, distance
from armbench.units import Millimeters, MillimetersPerSecond, Radians, Seconds, to_canonical


class Sample(BenchBaseModel):
    length: Millimeters
    duration: Seconds = 0.0
    angle: Radians = 0.0
    speed: MillimetersPerSecond = 0.0
    box: Rect | None = None


def write(tmpdir, name, text):
    path = os.path.join(tmpdir, name)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path


def test_quantities_convert_to_canonical_units():
    p = Sample(length="1.25 cm", duration="800 ms", angle="90 deg", speed="5 cm/s")
    assert p.length == pytest.approx(12.5)
    assert p.duration == pytest.approx(0.8)
    assert p.angle == pytest.approx(math.pi / 2)
    assert p.speed == pytest.approx(50.0)


def test_plain_numbers_are_canonical():
    assert Sample(length=54).length == 54.0
    assert to_canonical("5", "length", u.mm) == 5.0


def test_wrong_physical_type_is_rejected():
    with pytest.raises(ValidationError, match="Physical type mismatch"):
        Sample(length="3 s")
    with pytest.raises(ValidationError, match="Invalid quantity"):
        Sample(length="many meters")
    with pytest.raises(ValidationError, match="boolean"):
        Sample(length=True)


def test_unknown_keys_are_rejected():
    with pytest.raises(ValidationError):
        Sample(length=1, colour="red")


def test_rect_from_list_and_geometry():
    r = Rect.model_validate([10, 20, 30, 40])
    assert (r.x1, r.y1, r.area, r.center) == (40, 60, 1200, (25.0, 40.0))
    assert r.contains_point((10, 20)) and not r.contains_point((40, 20))
    assert r.iou(r) == 1.0
    assert r.iou(Rect(x=100, y=100, width=5, height=5)) == 0.0
    assert Rect(x=0, y=0, width=10, height=10).containment_in(Rect(x=5, y=0, width=10, height=10)) == 0.5
    assert r.expanded(2).as_list() == [8, 18, 34, 44]
    assert distance((0, 0), (3, 4)) == 5.0
    with pytest.raises(ValidationError):
        Rect.model_validate([1, 2, 3])


def test_load_document_records_file_and_line():
    with tempfile.TemporaryDirectory() as tmp:
        path = write(tmp, "sample.yaml", "# sample\nlength: 2 cm\nbox: [1, 2, 3, 4]\n")
        sample = load_document(path, Sample)
    assert sample.length == pytest.approx(20.0)
    assert sample.doc_file == path
    assert sample.box == Rect(x=1, y=2, width=3, height=4)


def test_load_document_logs_error_lines(caplog):
    with tempfile.TemporaryDirectory() as tmp:
        path = write(tmp, "bad.yaml", "length: 1 mm\nduration: 3 kg\n")
        with caplog.at_level(logging.ERROR), pytest.raises(ValidationError):
            load_document(path, Sample)
    assert "❌ Sample validation of" in caplog.text
    assert "duration" in caplog.text


def test_empty_document_is_rejected():
    with tempfile.TemporaryDirectory() as tmp:
        path = write(tmp, "empty.yaml", "")
        with pytest.raises(ValueError, match="is empty"):
            load_document(path, Sample)


def test_json_documents_load_as_yaml_and_dump_round_trips():
    with tempfile.TemporaryDirectory() as tmp:
        path = write(tmp, "sample.json", '{"length": "4 mm", "angle": 1.5}')
        sample = load_document(path, Sample)
        again = write(tmp, "again.yaml", dump_document(sample))
        assert read_yaml(again)["length"] == 4.0
        assert load_document(again, Sample).model_dump() == sample.model_dump()

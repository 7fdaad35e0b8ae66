"""
Loading and dumping of armbench documents.

Benchmark configs, app models, device profiles and the glyph manifest are all
YAML (or JSON, which ruamel reads as YAML) validated into pydantic models that
remember which file and line they came from.
"""

import logging
from io import StringIO
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from ruamel.yaml import YAML

log = logging.getLogger("armbench.documents")


class BenchBaseModel(BaseModel):
    doc_line: int | None = Field(default=None, exclude=True)
    doc_file: str | None = Field(default=None, exclude=True)

    model_config = ConfigDict(extra="forbid")

    def __repr__(self) -> str:
        fields = self.model_dump()
        return f"{self.__class__.__name__}({fields})"


ModelT = TypeVar("ModelT", bound=BaseModel)


def read_yaml(path: str | Path) -> Any:
    yaml_loader = YAML(typ="rt")
    with open(path, encoding="utf-8") as f:
        return yaml_loader.load(f)


def dump_yaml(data: Any) -> str:
    yaml = YAML()
    yaml.default_flow_style = None
    stream = StringIO()
    yaml.dump(data, stream)
    return stream.getvalue()


def _get_line_for_error(data: Any, loc: tuple[str | int, ...]) -> int | None:
    """Traverse the ruamel.yaml data to find the line number for an error location."""
    current_data = data
    try:
        for key in loc:
            current_data = current_data[key]
        return current_data.lc.line + 1
    except (KeyError, IndexError, TypeError, AttributeError):
        parent_data = data
        try:
            for key in loc[:-1]:
                parent_data = parent_data[key]
            return parent_data.lc.line + 1
        except (KeyError, IndexError, TypeError, AttributeError):
            return None


def _inject_line_numbers(data: Any, model: BaseModel, file_path: str | None) -> None:
    if isinstance(model, BenchBaseModel):
        if hasattr(data, "lc") and hasattr(data.lc, "line"):
            model.doc_line = data.lc.line + 1
        if file_path:
            model.doc_file = file_path

    if not isinstance(data, dict):
        return
    for field_name in type(model).model_fields:
        if field_name not in data:
            continue
        child_val = getattr(model, field_name)
        child_data = data[field_name]
        if isinstance(child_val, BaseModel):
            _inject_line_numbers(child_data, child_val, file_path)
        elif isinstance(child_val, dict) and isinstance(child_data, dict):
            for k, v in child_val.items():
                if isinstance(v, BaseModel) and k in child_data:
                    _inject_line_numbers(child_data[k], v, file_path)
        elif isinstance(child_val, list) and isinstance(child_data, list):
            for item_data, item in zip(child_data, child_val, strict=False):
                if isinstance(item, BaseModel):
                    _inject_line_numbers(item_data, item, file_path)


def validate_document(
    data: Any, model_cls: type[ModelT], file_path: str | None = None
) -> ModelT:
    """
    Validate already-parsed document data, logging each error with its line.

    Raises:
        ValidationError: re-raised after logging when the data does not fit `model_cls`.
    """
    where = file_path or "<data>"
    try:
        model = model_cls.model_validate(data)
    except ValidationError as e:
        log.error(
            f"❌ {model_cls.__name__} validation of '{where}' failed with {len(e.errors())} error(s):"
        )
        for error in e.errors():
            line = _get_line_for_error(data, error["loc"])
            path_str = " -> ".join(map(str, error["loc"]))
            if line:
                log.error(f"  - Line {line}: '{path_str}' -> {error['msg']}")
            else:
                log.error(f"  - Location '{path_str}' -> {error['msg']}")
        raise
    _inject_line_numbers(data, model, file_path)
    return model


def load_document(path: str | Path, model_cls: type[ModelT]) -> ModelT:
    log.debug(f"Loading {model_cls.__name__} from '{path}'")
    data = read_yaml(path)
    if data is None:
        raise ValueError(f"Document '{path}' is empty")
    return validate_document(data, model_cls, str(path))


def dump_document(model: BaseModel) -> str:
    return dump_yaml(model.model_dump(mode="json"))

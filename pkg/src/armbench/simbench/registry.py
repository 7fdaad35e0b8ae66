import logging
from importlib import resources
from pathlib import Path
from typing import Optional

from armbench.documents import dump_document, load_document
from armbench.errors import ModelError
from armbench.simbench.models import AppModel, DeviceProfile
from armbench.simbench.suite import SuiteManifest, generate_app

SUITE_PREFIX = "suite:"


def _data_dir() -> Path:
    return Path(str(resources.files("armbench.simbench") / "data"))


class ModelRegistry:
    """
    Singleton cache of loaded app models and device profiles.

    References are file paths, `suite:<name>` for a generated suite app, or
    the bare name of a shipped app or device.
    """

    _instance: Optional["ModelRegistry"] = None

    def __new__(cls) -> "ModelRegistry":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._init_registry()
        return cls._instance

    def _init_registry(self) -> None:
        self.apps: dict[str, AppModel] = {}
        self.devices: dict[str, DeviceProfile] = {}
        self._manifest: SuiteManifest | None = None

    @property
    def manifest(self) -> SuiteManifest:
        if self._manifest is None:
            self._manifest = load_document(_data_dir() / "suite.yaml", SuiteManifest)
        return self._manifest

    def suite_names(self) -> list[str]:
        return [entry.name for entry in self.manifest.apps]

    def app(self, ref: str) -> AppModel:
        """
        Raises:
            ModelError: `ref` names no suite app, shipped app or file.
            ValidationError: the app document is invalid.
        """
        log = logging.getLogger("armbench.simbench")
        if ref in self.apps:
            return self.apps[ref]
        if ref.startswith(SUITE_PREFIX):
            name = ref[len(SUITE_PREFIX) :]
            entry = next((e for e in self.manifest.apps if e.name == name), None)
            if entry is None:
                raise ModelError(f"Unknown suite app '{name}'; the suite has {self.suite_names()}")
            model = generate_app(entry, self.manifest.resolution, self.manifest.fault_region)
        else:
            model = load_document(self._resolve(ref, "apps"), AppModel)
        log.debug(f"Registered app '{model.name}' as '{ref}'")
        self.apps[ref] = model
        return model

    def device(self, ref: str) -> DeviceProfile:
        """
        Raises:
            ModelError: `ref` names no shipped device or file.
            ValidationError: the device document is invalid.
        """
        if ref not in self.devices:
            self.devices[ref] = load_document(self._resolve(ref, "devices"), DeviceProfile)
        return self.devices[ref]

    def expand_apps(self, refs: list[str]) -> list[str]:
        """Replace `suite:*` by one reference per suite app, keeping order and dropping repeats."""
        expanded: list[str] = []
        for ref in refs:
            names = (
                [SUITE_PREFIX + n for n in self.suite_names()]
                if ref == SUITE_PREFIX + "*"
                else [ref]
            )
            expanded.extend(n for n in names if n not in expanded)
        return expanded

    def _resolve(self, ref: str, kind: str) -> Path:
        path = Path(ref)
        if path.is_file():
            return path
        for suffix in (".yaml", ".json"):
            shipped = _data_dir() / kind / f"{ref}{suffix}"
            if shipped.is_file():
                return shipped
        raise ModelError(f"'{ref}' is neither a file nor a shipped {kind[:-1]}")

    def export_app(self, ref: str) -> str:
        return dump_document(self.app(ref))

    def clear_caches(self) -> None:
        self.apps.clear()
        self.devices.clear()
        self._manifest = None


def get_model_registry() -> ModelRegistry:
    return ModelRegistry()

"""
The simulated side of the bench: app models, device profiles, screen
rendering, photographs through the camera model and app sessions.
"""

from armbench.simbench.models import (
    AppModel,
    CrashTrigger,
    DeviceProfile,
    MaskRegion,
    MaskShape,
    Placement,
    Response,
    ResponseKind,
    ScreenSpec,
    Transition,
    WidgetSpec,
)
from armbench.simbench.photo import (
    CameraRig,
    SceneConfig,
    SyntheticPhoto,
    synthesize_chessboard_views,
    synthesize_photo,
)
from armbench.simbench.registry import ModelRegistry, get_model_registry
from armbench.simbench.render import SoftKeyboard, render_screen, show_keyboard
from armbench.simbench.session import AppSession, apply_operation
from armbench.simbench.suite import SuiteApp, SuiteManifest, generate_app

__all__ = [
    "AppModel",
    "CrashTrigger",
    "DeviceProfile",
    "MaskRegion",
    "MaskShape",
    "Placement",
    "Response",
    "ResponseKind",
    "ScreenSpec",
    "Transition",
    "WidgetSpec",
    "CameraRig",
    "SceneConfig",
    "SyntheticPhoto",
    "synthesize_chessboard_views",
    "synthesize_photo",
    "ModelRegistry",
    "get_model_registry",
    "SoftKeyboard",
    "render_screen",
    "show_keyboard",
    "AppSession",
    "apply_operation",
    "SuiteApp",
    "SuiteManifest",
    "generate_app",
]

from .app import app, create_app
from . import models

__all__ = ["app", "create_app", "models"]

"""Configuration file loading shared by all paydiff subpackages."""

import dataclasses
import json
import sys
from pathlib import Path
from typing import Any, Dict, Mapping, Type, TypeVar, Union

from .error_handler import ModelValidationError
from .logger import get_logger

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = get_logger(__name__)

T = TypeVar("T")


def load_config(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON or TOML configuration file.

    Parameters
    ----------
    path : str or Path
        File with ``.json`` or ``.toml`` suffix.

    Returns
    -------
    dict
        Parsed configuration.

    Raises
    ------
    FileNotFoundError
        If the file does not exist.
    ValueError
        If the suffix is not supported.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")

    suffix = path.suffix.lower()
    if suffix == ".json":
        with open(path, "r") as f:
            data = json.load(f)
    elif suffix == ".toml":
        with open(path, "rb") as f:
            data = tomllib.load(f)
    else:
        raise ValueError(f"Unsupported config format: {suffix}")

    logger.debug(f"Loaded config {path}")
    return data


def dataclass_from_dict(cls: Type[T], data: Mapping[str, Any], path: str = "") -> T:
    """Build a dataclass from a mapping, rejecting unknown keys.

    Nested dataclass fields are built recursively; tuple-typed fields
    accept lists.

    Parameters
    ----------
    cls : type
        Dataclass type.
    data : mapping
        Field values. Missing fields keep their defaults.
    path : str
        Key path used in error messages.

    Returns
    -------
    object
        Instance of ``cls``.
    """
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        key = sorted(unknown)[0]
        raise ModelValidationError(f"{path}{key}" if not path else f"{path}.{key}",
                                   "unknown configuration key")

    kwargs = {}
    for name, value in data.items():
        field_type = fields[name].type
        if dataclasses.is_dataclass(field_type) and isinstance(value, Mapping):
            sub_path = f"{path}.{name}" if path else name
            value = dataclass_from_dict(field_type, value, sub_path)
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    return cls(**kwargs)


def dataclass_to_dict(obj: Any) -> Dict[str, Any]:
    """Convert a dataclass instance to JSON-friendly primitives."""
    def convert(value: Any) -> Any:
        if dataclasses.is_dataclass(value):
            return {f.name: convert(getattr(value, f.name)) for f in dataclasses.fields(value)}
        if isinstance(value, (list, tuple)):
            return [convert(v) for v in value]
        if hasattr(value, "tolist"):
            return value.tolist()
        if hasattr(value, "value") and not isinstance(value, (int, float, str)):
            return value.value
        return value

    return convert(obj)

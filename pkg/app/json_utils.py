import dataclasses
import json
import math

import numpy as np

from app.errors import ConfigError


def safe_json_loads(text: str, source: str = "input") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON ({exc.msg} at line {exc.lineno})", field=source)

    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a JSON object", field=source)
    return data


def to_jsonable(obj):
    """Приводит отчёты к типам JSON; +-inf и nan становятся строками."""
    if isinstance(obj, float) or isinstance(obj, np.floating):
        value = float(obj)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if hasattr(obj, "_asdict"):
        return {key: to_jsonable(value) for key, value in obj._asdict().items()}
    if hasattr(obj, "as_dict"):
        return to_jsonable(obj.as_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [{"re": to_jsonable(z.real), "im": to_jsonable(z.imag)} for z in obj.ravel()]
        return to_jsonable(obj.tolist())
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False)

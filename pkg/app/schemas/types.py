"""
Shared field types for numpy-backed schemas.
"""

from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer


def _as_float_array(value: Any) -> np.ndarray:
    """Copy the input into a read-only float64 array."""
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(lambda array: array.tolist(), return_type=list, when_used="json"),
]


class ArrayModel(BaseModel):
    """Immutable schema that may hold numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

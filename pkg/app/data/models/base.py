"""
Base data model providing common functionality for all data models.

Domain values (poses, parameters, contours) are immutable once built, so
the base configuration freezes instances and admits numpy arrays as field
types.
"""

from typing import Any, Dict

from pydantic import BaseModel, ConfigDict


class BaseDataModel(BaseModel):
    """
    Base data model shared by every domain type.

    Instances are frozen (hashable where the fields allow it) and validated on
    construction; numpy arrays are accepted as-is.
    """

    model_config = ConfigDict(
        frozen=True,
        use_enum_values=False,
        arbitrary_types_allowed=True,
        extra="forbid",
    )

    def to_dict(self, exclude_none: bool = True) -> Dict[str, Any]:
        """
        Convert model to dictionary.

        Args:
            exclude_none: Whether to exclude None values

        Returns:
            Dictionary representation of the model
        """
        return self.model_dump(exclude_none=exclude_none)

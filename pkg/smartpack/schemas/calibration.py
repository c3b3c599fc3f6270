"""Anchor dataset and fit result models."""

from typing import Any, Dict, Iterator, List

from pydantic import BaseModel, Field

# Rows whose model_id starts with this prefix carry lookup-table knots, not fit targets
TABLE_PREFIX = "table."


class Anchor(BaseModel):
    model_config = {"frozen": True, "protected_namespaces": ()}

    model_id: str = Field(min_length=1)
    inputs: Dict[str, Any] = Field(default_factory=dict)
    observed: float
    tolerance: float = Field(gt=0)
    provenance: str = Field(min_length=1)

    @property
    def kind(self) -> str:
        """``equal`` (two-sided), ``upper`` (model must stay below) or ``lower``."""
        return str(self.inputs.get("kind", "equal"))


class AnchorSet(BaseModel):
    anchors: List[Anchor] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.anchors)

    def __iter__(self) -> Iterator[Anchor]:  # type: ignore[override]
        return iter(self.anchors)

    def for_model(self, model_id: str) -> "AnchorSet":
        return AnchorSet(anchors=[a for a in self.anchors if a.model_id == model_id])

    @property
    def model_ids(self) -> List[str]:
        seen: List[str] = []
        for a in self.anchors:
            if a.model_id not in seen:
                seen.append(a.model_id)
        return seen

    def tables(self) -> Dict[str, List[Anchor]]:
        """Table rows grouped by table name (model_id without the prefix)."""
        grouped: Dict[str, List[Anchor]] = {}
        for a in self.anchors:
            if a.model_id.startswith(TABLE_PREFIX):
                grouped.setdefault(a.model_id[len(TABLE_PREFIX):], []).append(a)
        return grouped


class AnchorResidual(BaseModel):
    model_config = {"protected_namespaces": ()}

    model_id: str
    provenance: str
    observed: float
    predicted: float
    tolerance: float
    residual: float = Field(description="normalised, signed; zero inside a satisfied hinge")


class FitResult(BaseModel):
    model_config = {"protected_namespaces": ()}

    model_id: str
    param_names: List[str]
    vector: List[float]
    residual: float = Field(ge=0)
    iterations: int = 0
    converged: bool = False
    per_anchor: List[AnchorResidual] = Field(default_factory=list)
    at_bounds: List[str] = Field(default_factory=list, description="parameters not strictly inside their bounds")

    @property
    def params(self) -> Dict[str, float]:
        return dict(zip(self.param_names, self.vector))

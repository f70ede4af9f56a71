import os
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from strand.core.errors import ArgumentError

MAX_TENSOR_DIM = int(os.getenv("STRAND_MAX_TENSOR_DIM", "4096"))
MAX_LINK_STATES = int(os.getenv("STRAND_MAX_LINK_STATES", "4862"))
MAX_TL_STATES = int(os.getenv("STRAND_MAX_TL_STATES", "200000"))
CLUSTER_TOL = float(os.getenv("STRAND_CLUSTER_TOL", "1e-9"))
CIRCLE_TOL = float(os.getenv("STRAND_CIRCLE_TOL", "1e-7"))
MAX_MOMENT = int(os.getenv("STRAND_MAX_MOMENT", "1000"))
WORKERS = int(os.getenv("STRAND_WORKERS", "4"))

DEFAULT_D = "3"
CESARO_N = 2000
DENSITY_SAMPLES = 4096
QUADRATURE_POINTS = 16384


class BackendConfig(BaseModel):
    backend: Literal["tl", "tensor"] = "tl"
    # "3", "2.5", "cos:7" (d = 4cos^2(pi/7) - 1) or "symbolic"
    d: str = DEFAULT_D
    model: str = "coloring3"
    exact: bool = False

    @field_validator("d")
    @classmethod
    def _check_d(cls, v: str) -> str:
        v = v.strip()
        if v == "symbolic" or v.startswith("cos:"):
            if v.startswith("cos:") and not v[4:].isdigit():
                raise ValueError(f"bad cos:k value '{v}'")
            return v
        try:
            float(v)
        except ValueError:
            raise ValueError(f"d must be a number, 'cos:k' or 'symbolic', got '{v}'")
        return v


class RunConfig(BaseModel):
    command: Literal["reduce", "essential", "coefficient", "moments", "measure", "verify", "calibrate"]
    n: int = Field(default=2, ge=2)
    backend: BackendConfig = Field(default_factory=BackendConfig)
    element: Optional[str] = None
    element_file: Optional[str] = None
    psi: list[str] = Field(default_factory=list)
    max_moment: int = Field(default=10, ge=0)
    samples: int = Field(default=64, ge=1)
    out: Optional[str] = None
    as_json: bool = False

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        needs_element = self.command not in ("verify", "calibrate")
        given = (self.element is not None) + (self.element_file is not None)
        if needs_element and given != 1:
            raise ValueError("exactly one of --element / --element-file is required")
        if given > 1:
            raise ValueError("--element and --element-file are mutually exclusive")
        if self.max_moment > MAX_MOMENT:
            raise ValueError(f"--max exceeds the moment cap {MAX_MOMENT}")
        return self


def load_run_config(**kwargs) -> RunConfig:
    from pydantic import ValidationError
    try:
        return RunConfig(**kwargs)
    except ValidationError as e:
        raise ArgumentError(str(e)) from e

"""
Base Pydantic models for semzk.
Contains common models used across reports.
"""

from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field

REPORT_VERSION = 1


class ReportBase(BaseModel):
    """Base model for every serialized report."""
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(..., description="Report kind, one per CLI subcommand")
    seed: Optional[int] = Field(None, description="Seed of every pseudo-random draw behind the report")
    version: int = Field(REPORT_VERSION, description="Report schema version")


class ErrorReport(BaseModel):
    """Error report written next to the outputs of a failed run."""
    success: bool = Field(False, description="Always false for error reports")
    error: str = Field(..., description="Error code")
    message: str = Field(..., description="Human-readable error message")
    exit_code: int = Field(..., description="Process exit code")
    details: Optional[Dict[str, Any]] = Field(None, description="Additional error details")


class Verdict(str, Enum):
    """Outcome of the uniqueness contrast."""
    IDENTICAL = "identical"
    DISTINCT = "distinct"

"""
Error hierarchy.

Domain errors (bad input, bad configuration, wrong dimension) map to exit
code 2; numeric failures (non-convergence, accuracy loss, no root) map to
exit code 3.
"""
import json
from typing import Any, Dict, List, Optional, Sequence


class BdmError(Exception):
    """Base class for all errors raised by the package"""

    exit_code: int = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    @property
    def reason(self) -> str:
        """One-line machine-readable reason for the error stream"""
        payload = {
            "error": type(self).__name__,
            "exit_code": self.exit_code,
            "reason": self.message.replace("\n", " "),
        }
        if self.details:
            payload["details"] = self.details
        return json.dumps(payload, default=str)


# Domain errors (exit code 2)

class DomainError(BdmError, ValueError):
    """Argument outside the mathematical domain of an operation"""

    exit_code = 2


class SchemaError(DomainError):
    """Dataset or model schema violation"""


class ParseError(SchemaError):
    """Malformed input file"""

    def __init__(self, message: str, line: int, details: Optional[Dict[str, Any]] = None):
        super().__init__(f"line {line}: {message}", {**(details or {}), "line": line})
        self.line = line


class ConfigError(DomainError):
    """Invalid run configuration"""


class DimensionError(DomainError):
    """Operation called with an unsupported parameter dimension"""


class CapabilityError(DomainError):
    """Required derivative information is not available"""


# Numeric failures (exit code 3)

class NumericError(BdmError, ArithmeticError):
    """Numerical procedure failed"""

    exit_code = 3


class EvaluationError(NumericError):
    """Objective returned a non-finite value"""

    def __init__(self, message: str, point: Sequence[float]):
        super().__init__(message, {"point": [float(v) for v in point]})
        self.point = list(point)


class ConvergenceError(NumericError):
    """Iterative method did not converge"""

    def __init__(self, message: str, trace: Optional[List[Dict[str, float]]] = None):
        trace = trace or []
        super().__init__(message, {"iterations": len(trace), "last": trace[-1] if trace else None})
        self.trace = trace


class AccuracyError(NumericError):
    """Requested accuracy could not be reached"""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message, {"estimate": estimate, "error": error})
        self.estimate = estimate
        self.error = error


class BracketingError(NumericError):
    """No sign change found while bracketing a root"""


class NoSolutionError(BracketingError):
    """Skew-normal matching equation has no root in the admissible range"""

    def __init__(self, message: str, endpoint_signs: Sequence[float]):
        super().__init__(message, {"endpoint_signs": list(endpoint_signs)})
        self.endpoint_signs = list(endpoint_signs)


class InfeasibleMatchError(NumericError):
    """Matched scale matrix is not positive definite"""


class SingularInformationError(NumericError):
    """Information matrix is singular or not positive definite"""

"""Exception hierarchy shared by the numerical library and the CLI.

Every error carries a machine-readable ``code`` and the process ``exit_code`` the CLI
uses when the error escapes an experiment: 1 for input problems, 2 for numerical
failures.
"""

from __future__ import annotations

from typing import Any, Dict


class SpectralShapeError(Exception):
    """Base class for all library errors."""

    code: str = "error"
    exit_code: int = 1

    def to_dict(self) -> Dict[str, Any]:
        """Serialise the error into the report's ``error`` object."""
        return {
            "code": self.code,
            "type": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class InputError(SpectralShapeError, ValueError):
    """Bad mesh, bad field or bad parameter."""

    code = "input_error"
    exit_code = 1


class NumericalError(SpectralShapeError, RuntimeError):
    """A numerical routine failed on otherwise valid input."""

    code = "numerical_error"
    exit_code = 2


class ParseError(InputError):
    code = "parse_error"


class NonManifoldError(InputError):
    code = "non_manifold"


class EmptyMeshError(InputError):
    code = "empty_mesh"


class InvalidCountError(InputError):
    code = "invalid_count"


class InvalidVertexError(InputError):
    code = "invalid_vertex"


class InvalidAlphaError(InputError):
    code = "invalid_alpha"


class InvalidEpsilonError(InputError):
    code = "invalid_epsilon"


class DimensionMismatchError(InputError):
    code = "dimension_mismatch"


class DisconnectedMeshError(InputError):
    code = "disconnected_mesh"


class AsymmetricInputError(InputError):
    code = "asymmetric_input"


class TooLargeError(InputError):
    code = "too_large"


class NegativeMuError(InputError):
    code = "negative_mu"


class RankDeficientRivalError(InputError):
    code = "rank_deficient_rival"


class InvalidParameterError(InputError):
    """A scalar parameter lies outside its admissible range."""

    code = "invalid_parameter"


class DegenerateSamplingError(InputError):
    code = "degenerate_sampling"


class ConstantFunctionError(InputError):
    """The field has (numerically) zero Dirichlet energy; ratios are unbounded."""

    code = "constant_function"


class ConvergenceFailure(NumericalError):
    code = "convergence_failure"

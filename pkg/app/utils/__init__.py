from app.utils.logger import get_logger, app_logger
from app.utils.validators import parse_vector, parse_grid, validate_index
from app.utils.formatters import format_float, round_half_even, format_result_json, format_result_row, parse_result_row
from app.utils.helpers import sign0, as_vector, cholesky_or_raise, bracket_root

__all__ = [
    "get_logger",
    "app_logger",
    "parse_vector",
    "parse_grid",
    "validate_index",
    "format_float",
    "round_half_even",
    "format_result_json",
    "format_result_row",
    "parse_result_row",
    "sign0",
    "as_vector",
    "cholesky_or_raise",
    "bracket_root",
]

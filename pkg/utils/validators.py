import math

import numpy as np

from utils.errors import ArgumentError, ModelValidationError


class Validators:

    @staticmethod
    def validate_positive(name, value):
        """Positive finite real"""
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ArgumentError(f"{name} must be a number, got {value!r}")
        if not math.isfinite(value) or value <= 0:
            raise ArgumentError(f"{name} must be positive and finite, got {value}")
        return value

    @staticmethod
    def validate_count(name, value, minimum=1):
        """Integer not below `minimum`"""
        if isinstance(value, bool) or int(value) != value or value < minimum:
            raise ArgumentError(f"{name} must be an integer >= {minimum}, got {value!r}")
        return int(value)

    @staticmethod
    def validate_symmetric(name, matrix):
        """Exactly symmetric square matrix"""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ModelValidationError(f"{name} must be square, got shape {matrix.shape}")
        if not np.array_equal(matrix, matrix.T):
            raise ModelValidationError(f"{name} must be symmetric")
        return matrix

    @staticmethod
    def validate_in_range(name, value, interval):
        """Open interval membership"""
        lo, hi = interval
        if not lo < value < hi:
            raise ArgumentError(f"{name}={value} outside the admissible range ({lo}, {hi})")
        return value

    @staticmethod
    def validate_derivative(name, fn, dfn, points, rel_tol=1e-6, h=1e-5):
        """Cross-check an analytic derivative against a central difference"""
        points = np.asarray(points, dtype=float)
        analytic = np.asarray(dfn(points), dtype=float)
        numeric = (np.asarray(fn(points + h)) - np.asarray(fn(points - h))) / (2 * h)
        scale = np.maximum(1.0, np.abs(numeric))
        worst = float(np.max(np.abs(analytic - numeric) / scale))
        if worst > rel_tol:
            raise ModelValidationError(
                f"{name} disagrees with its finite difference (relative error {worst:.2e})"
            )
        return worst

"""Exception and warning types raised by the engine."""

from __future__ import annotations


class WaveguideError(Exception):
    """Base class for all engine errors."""


class NearDefectiveWarning(UserWarning):
    """A biorthogonal norm fell below the near-defective threshold."""


class NearDefective(WaveguideError):
    def __init__(self, min_norm: float, mode_index: int):
        self.min_norm = min_norm
        self.mode_index = mode_index
        super().__init__(
            f"mode {mode_index} has biorthogonal norm {min_norm:.3e}; "
            "eigensystem is close to an exceptional point"
        )


class AmbiguousEdge(WaveguideError):
    def __init__(self, candidates, overlaps, reason: str = ""):
        self.candidates = tuple(int(c) for c in candidates)
        self.overlaps = tuple(round(float(o), 6) for o in overlaps)
        msg = f"no mode overlaps the edge state by more than 0.5 (best: {self.candidates}, {self.overlaps})"
        if reason:
            msg = f"{reason}; {msg}"
        super().__init__(msg)


class GapTooSmall(WaveguideError):
    def __init__(self, gap: float, threshold: float):
        self.gap = gap
        self.threshold = threshold
        super().__init__(f"edge-bulk gap {gap:.4g} is below {threshold:.4g}")


class SingularResolvent(WaveguideError):
    def __init__(self, detuning: float, mode_index: int):
        self.detuning = detuning
        self.mode_index = mode_index
        super().__init__(f"detuning {detuning!r} hits the real eigenvalue of mode {mode_index}")


class NoZeroFound(WaveguideError):
    def __init__(self, gamma0: float, residual: float):
        self.gamma0 = gamma0
        self.residual = residual
        super().__init__(
            f"right-incident reflection has no zero in the bracket "
            f"(minimum {residual:.3e} at gamma0={gamma0:.6g})"
        )


class ScalingBreakdown(WaveguideError):
    def __init__(self, fit):
        self.fit = fit
        super().__init__(f"exponential scaling breaks down (r^2 = {fit.r_squared:.4f})")


class DegenerateRatio(WaveguideError):
    pass


class StepFailure(WaveguideError):
    def __init__(self, message: str, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)


class TruncatedEvolution(WaveguideError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"residual excitation {residual:.3e} left at end of evolution")


class UnknownFigure(WaveguideError):
    pass


class ConfigError(WaveguideError):
    pass

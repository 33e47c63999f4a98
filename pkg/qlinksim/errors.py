"""Exception hierarchy for qlinksim."""

from typing import List, Optional


class QlinkError(Exception):
    """Base class for all qlinksim failures."""


class ConfigError(QlinkError):
    """Invalid experiment configuration; carries the dotted key path."""

    def __init__(self, key_path: str, message: str):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}")


class NotHermitianError(QlinkError, ValueError):
    """A matrix expected to be Hermitian is not."""


class IntegrationError(QlinkError):
    """The adaptive ODE stepper gave up."""

    def __init__(self, message: str, t_fail: Optional[float] = None):
        self.t_fail = t_fail
        suffix = f" (at t={t_fail:.6g})" if t_fail is not None else ""
        super().__init__(f"{message}{suffix}")


class LabelingError(QlinkError):
    """Dressed eigenstates could not be assigned to bare product labels."""

    def __init__(self, label: str, candidates: List[tuple]):
        self.label = label
        self.candidates = candidates
        listing = ", ".join(f"l={idx} overlap={ov:.3f}" for idx, ov in candidates)
        super().__init__(f"ambiguous dressed state for |{label}>: {listing}")


class ConvergenceError(QlinkError):
    """An iterative procedure did not converge."""


class PerturbationError(QlinkError):
    """A perturbative sum hit a near-degenerate denominator."""


class FitError(QlinkError):
    """A least-squares fit failed or ended at an unacceptable optimum."""


class InvariantViolation(QlinkError):
    """A numerical invariant was violated beyond its tolerance."""

    def __init__(self, reasons: List[str], details: str = ""):
        self.reasons = reasons
        super().__init__(details or "; ".join(reasons))

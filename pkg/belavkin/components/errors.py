from __future__ import annotations


class BelavkinError(Exception):
    """Base class for errors raised by this package."""


class NotHermitianError(BelavkinError, ValueError):
    def __init__(self, asymmetry: float, tol: float) -> None:
        self.asymmetry = asymmetry
        super().__init__(f"operator is not Hermitian: max |H - H^dagger| = {asymmetry:.3e} exceeds {tol:.1e}")


class NotPSDError(BelavkinError, ValueError):
    def __init__(self, eigenvalue: float, tol: float) -> None:
        self.eigenvalue = eigenvalue
        super().__init__(f"operator is not positive semidefinite: eigenvalue {eigenvalue:.6e} below -{tol:.1e}")


class DimensionMismatchError(BelavkinError, ValueError):
    pass


class InvalidWeightsError(BelavkinError, ValueError):
    pass


class NonOrthonormalError(BelavkinError, ValueError):
    pass


class EnsembleParseError(BelavkinError, ValueError):
    """Malformed ensemble JSON; the message carries line and column."""


class CertificateInapplicableError(BelavkinError, RuntimeError):
    pass


class UncertifiedOptimumError(BelavkinError, RuntimeError):
    pass

"""Exception hierarchy shared across the toolkit."""


class LyapshearError(Exception):
    """Base class for all toolkit errors."""


class NotUnimodular(LyapshearError):
    """Integer matrix does not have determinant +-1."""


class EigenvalueOnUnitCircle(LyapshearError):
    """A certified root interval touches the unit circle; map not hyperbolic."""


class ComplexSpectrumUnsupported(LyapshearError):
    """Characteristic polynomial has non-real roots; construction needs a real split."""


class NormalizationFailed(LyapshearError):
    """No unimodular change of basis satisfying the stable-plane normal form was found."""


class NumericalBlowup(LyapshearError):
    """Cocycle norms left the representable range during iteration."""


class PlaneNotInvariant(LyapshearError):
    """Requested restriction plane is not carried to itself by the derivative."""


class PoorFit(LyapshearError):
    """An empirical constant fit fell below the required goodness threshold."""


class EmptyCone(LyapshearError):
    """Sector specification has empty interior."""


class ZeroVector(LyapshearError):
    """Zero vector passed where a direction is required."""


class ConeLoss(LyapshearError):
    """Grown direction field left the invariant unstable cone."""


class TooFewStrips(LyapshearError):
    """Leaf segment crosses fewer bad strips than the partition geometry requires."""


class DomainError(LyapshearError):
    """Lower-bound input outside its admissible domain."""


class NotConverged(LyapshearError):
    """Adaptive brute-force estimate failed to stabilise within the depth cap."""


class HypothesisViolated(LyapshearError):
    """A finite model fails one of the adapted-family hypotheses."""


class ConfigError(LyapshearError):
    """Experiment configuration missing or violating a parameter law."""


class ConditionsNotMet(LyapshearError):
    """No run row satisfied the required geometric conditions."""

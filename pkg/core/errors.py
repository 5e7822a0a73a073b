#!/usr/bin/env python3
"""
wavelab error types

Everything raised by the library derives from WaveLabError. Errors that mean
"you passed a bad argument" also derive from ValueError so plain
``except ValueError`` handlers keep working.
"""


class WaveLabError(Exception):
    """Base class for every wavelab failure"""


class ParamsError(WaveLabError, ValueError):
    """Problem parameters violate an invariant"""


class ProfileError(WaveLabError, ValueError):
    """Initial-data profile is malformed (support, pieces, coefficients)"""


class ProfileSmoothnessError(ProfileError):
    """Derivative requested beyond the profile's continuity class"""


class FreeWaveError(WaveLabError, ValueError):
    """Free solution evaluated outside its domain (t < 0)"""


class FieldTooNarrowError(WaveLabError):
    """Backward characteristics leave the sampled extent of a field"""


class SupportViolationError(WaveLabError):
    """A field claims cone support but is nonzero outside |x| <= t + R"""


class DivergenceError(WaveLabError, ArithmeticError):
    """Picard iterate produced non-finite values"""


class TheoryConstantsError(WaveLabError, ValueError):
    """Closed-form constants are undefined for this input (e.g. M = 0)"""


class BlowupHypothesisError(WaveLabError, ValueError):
    """Data does not meet the positivity hypothesis of the blow-up argument"""


class ODEComparisonError(WaveLabError):
    """Comparison ODE did not blow up before its hard time cap"""


class FitError(WaveLabError, ValueError):
    """Power-law regression input is degenerate"""


class SweepError(WaveLabError, ValueError):
    """Sweep request is malformed"""


class ConfigError(WaveLabError, ValueError):
    """Run configuration file is invalid"""

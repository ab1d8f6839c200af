class EnmoError(Exception):
    """Base class for every error raised on purpose by the library. The command line maps it to exit code 2."""


class InvalidParameter(EnmoError, ValueError):
    """A value breaks one of the invariants of the type or operation receiving it."""

    def __init__(self, name, value, requirement):
        self.name = name
        self.value = value
        super().__init__("Invalid {} = {!r}: {}".format(name, value, requirement))


class SingularConfiguration(EnmoError):
    """Using this instead of ZeroDivisionError so the message can say which physical quantity made the model blow
    up."""


class NotPositiveDefinite(EnmoError):

    def __init__(self, vxx, vpp, vxp):
        self.determinant = vxx * vpp - vxp ** 2
        super().__init__("Covariance [[{:.6g}, {:.6g}], [{:.6g}, {:.6g}]] is not positive definite "
                         "(det = {:.6g})".format(vxx, vxp, vxp, vpp, self.determinant))


class NoSqueezing(EnmoError):
    """The squeezing/anti-squeezing pair doesn't show any squeezing at all."""


class UnphysicalPair(EnmoError):
    """The squeezing/anti-squeezing pair would need an efficiency above 1."""


class ParameterFileError(EnmoError):
    """A parameter, design or config file couldn't be parsed."""

    def __init__(self, path, message):
        self.path = path
        super().__init__("{}: {}".format(path, message))


class TraceFormatError(EnmoError):

    def __init__(self, path, message, line_number=None):
        self.path = path
        self.line_number = line_number
        if line_number is not None:
            message = "line {}: {}".format(line_number, message)
        super().__init__("{}: {}".format(path, message))

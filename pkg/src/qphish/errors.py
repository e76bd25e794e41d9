"""Exception hierarchy. Every error carries a short machine-readable category
that the command line reports on failure."""


class QphishError(Exception):
    category = "error"


class CapacityError(QphishError, ValueError):
    category = "capacity"


class BindingError(QphishError, ValueError):
    category = "binding"


class GateError(QphishError, ValueError):
    category = "gate"


class NormalizationError(QphishError, ValueError):
    category = "normalization"


class ConfigurationError(QphishError, ValueError):
    category = "configuration"


class RegistryError(QphishError, KeyError):
    category = "registry"

    def __str__(self):
        return Exception.__str__(self)


class DegenerateError(QphishError, ValueError):
    category = "degenerate"


class InputError(QphishError, ValueError):
    category = "input"


class ParameterError(QphishError, ValueError):
    category = "parameter"


class UsageError(QphishError, RuntimeError):
    category = "usage"


class DataError(QphishError, ValueError):
    category = "data"


class ParseError(QphishError, ValueError):
    category = "parse"


class ValidationError(QphishError, ValueError):
    category = "validation"


class ContractError(QphishError, AssertionError):
    category = "contract"

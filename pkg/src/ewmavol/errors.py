"""Exception hierarchy shared across the package."""


class EwmaVolError(Exception):
    """Base class for every error raised by ewmavol."""


class MissingSymbolError(EwmaVolError, KeyError):
    def __init__(self, symbols):
        self.symbols = tuple(symbols)
        super().__init__(f"symbol(s) not found in source: {', '.join(self.symbols)}")

    def __str__(self):
        return self.args[0]


class PriceValidationError(EwmaVolError, ValueError):
    """A price cell is missing, non-numeric, non-positive or non-finite.

    ``line`` is the 1-based line number in the source file (header is line 1).
    """

    def __init__(self, message, *, line=None, column=None, date=None):
        self.line = line
        self.column = column
        self.date = date
        where = []
        if line is not None:
            where.append(f"line {line}")
        if date is not None:
            where.append(f"date {date}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class EmptyPanelError(EwmaVolError, ValueError):
    pass


class InsufficientDataError(EwmaVolError, ValueError):
    def __init__(self, message, *, required=None, available=None):
        self.required = required
        self.available = available
        if required is not None:
            message = f"{message} (required {required} rows, available {available})"
        super().__init__(message)


class DegenerateVolatilityError(EwmaVolError, ValueError):
    pass


class AlignmentError(EwmaVolError, ValueError):
    pass


class ContractError(EwmaVolError, ValueError):
    pass


class EmptyEvaluationError(EwmaVolError, ValueError):
    pass


class InsufficientAnchorsError(EwmaVolError, ValueError):
    pass


class UnknownLambdaError(EwmaVolError, KeyError):
    def __str__(self):
        return self.args[0]


class DegenerateVarianceError(EwmaVolError, ValueError):
    pass


class EmptyInputError(EwmaVolError, ValueError):
    pass

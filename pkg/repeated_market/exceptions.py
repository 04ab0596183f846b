"""
Domain errors of the repeated market.
"""


class MarketError(Exception):
    """Base class for every error raised by the simulator."""


class InvalidQuantity(MarketError, ValueError):
    """A Good, Money or Right amount was negative or not a number."""


class InvalidMechanism(MarketError, ValueError):
    """A distribution mechanism cannot be applied to the given buyers."""


class NoRightsInCirculation(MarketError):
    """The implicit price is undefined because no buyer holds Right."""

    def __init__(self, message='no rights in circulation'):
        super().__init__(message)


class UnnormalizedIncomes(MarketError, ValueError):
    """A closed form that needs sum(incomes) == 1 got something else."""


class ConservationError(MarketError):
    """Money, Good or Right was created or destroyed by a clearing."""


class AuditError(MarketError, ValueError):
    """An audit was requested with arguments it cannot work with."""


class RoundFailure(MarketError):
    """A round of the repeated market failed; the trace stops there."""

    def __init__(self, round_index, cause):
        self.round_index = round_index
        self.cause = cause
        super().__init__(f'round {round_index} failed: {cause}')


class ScenarioError(MarketError):
    """A scenario file could not be read or validated."""

    def __init__(self, message, *, key=None, line=None, column=None, source=None):
        self.key = key
        self.line = line
        self.column = column
        self.source = source
        super().__init__(message)

    def __str__(self):
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f'line {self.line}')
            if self.column is not None:
                where.append(f'column {self.column}')
        if self.key:
            where.append(f'key {self.key!r}')
        prefix = ', '.join(where)
        message = super().__str__()
        return f'{prefix}: {message}' if prefix else message

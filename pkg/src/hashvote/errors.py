"""Exception types shared across the package.

Each error class carries the process exit code the command-line tool maps it
to, so the CLI needs no lookup table.
"""


class HashvoteError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(HashvoteError):
    """Invalid configuration: bad option values, unmapped mock-hash words."""

    exit_code = 2


class DataError(HashvoteError):
    """Invalid or inconsistent data: parse failures, schema violations,
    corrupted model containers."""

    exit_code = 3


class AttackInfeasibleError(DataError):
    """The requested poisoning attack has no eligible examples to poison."""


class BudgetError(HashvoteError):
    """An exhaustive enumeration would exceed its combinatorial budget."""

    exit_code = 4

"""Exception hierarchy shared by every module.

Each error carries a ``module`` tag so the CLI can report where a failure
originated.
"""

from __future__ import annotations


class OdoforgeError(Exception):
    module = "core"


# word-core

class WordError(OdoforgeError):
    module = "word-core"


class UnknownGenerator(WordError):
    def __init__(self, name: str, position: int | None = None):
        self.name = name
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown generator {name!r}{where}")


class WordSyntaxError(WordError):
    def __init__(self, position: int, reason: str):
        self.position = position
        self.reason = reason
        super().__init__(f"syntax error at position {position}: {reason}")


class GroupMismatch(WordError):
    pass


class RadiusCap(WordError):
    pass


# coset-algebra

class CosetError(OdoforgeError):
    module = "coset-algebra"


class NotFiniteIndex(CosetError):
    pass


class StateCap(CosetError):
    pass


class CoreCap(CosetError):
    pass


# odometer-chain

class ChainError(OdoforgeError):
    module = "odometer-chain"


class NestingViolation(ChainError):
    def __init__(self, level: int, witness):
        self.level = level
        self.witness = witness
        super().__init__(f"level {level} is not contained in level {level - 1}; witness {witness}")


class PointNotInCylinder(ChainError):
    pass


class InfiniteCharacterGroup(ChainError):
    pass


# toeplitz-engine

class ToeplitzError(OdoforgeError):
    module = "toeplitz-engine"


class IndexOneLevel(ToeplitzError):
    pass


class TransversalSearchCap(ToeplitzError):
    pass


class WindowOutsideTower(ToeplitzError):
    pass


# partition-measures

class PartitionError(OdoforgeError):
    module = "partition-measures"


class TranslateEscapesSpace(PartitionError):
    pass


class InclusionUndecided(PartitionError):
    pass


class ColumnSumViolation(PartitionError):
    pass


class SampleTooShallow(PartitionError):
    """The sample domain does not reach below the top tower level."""


# cli-harness

class ConfigError(OdoforgeError):
    module = "cli-harness"


class ConfigSyntaxError(ConfigError):
    def __init__(self, line: int, column: int, reason: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {reason}")


class SemanticError(ConfigError):
    def __init__(self, field: str, reason: str):
        self.field = field
        super().__init__(f"{field}: {reason}")

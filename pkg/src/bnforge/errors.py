"""Exception hierarchy.

Every error carries the name of the module that raised it so front ends can
print module-qualified codes such as ``belief-graph/CycleCreated``.
"""


class BNForgeError(Exception):
    module = "bnforge"

    @property
    def code(self) -> str:
        return f"{self.module}/{type(self).__name__}"


# term-store

class TermStoreError(BNForgeError):
    module = "term-store"


class NonGroundAssertion(TermStoreError):
    pass


class DepthLimitExceeded(TermStoreError):
    pass


# rule-engine

class RuleEngineError(BNForgeError):
    module = "rule-engine"


class MalformedRule(RuleEngineError):
    pass


class UnknownAction(RuleEngineError):
    pass


# belief-graph

class BeliefGraphError(BNForgeError):
    module = "belief-graph"


class DuplicateNode(BeliefGraphError):
    pass


class UnknownNode(BeliefGraphError):
    pass


class CycleCreated(BeliefGraphError):
    pass


class StateMismatch(BeliefGraphError):
    pass


class DuplicateEntry(BeliefGraphError):
    pass


class UnknownState(BeliefGraphError):
    pass


class ConflictingEvidence(BeliefGraphError):
    pass


# dist-builder

class DistBuilderError(BNForgeError):
    module = "dist-builder"


class MissingDeclaration(DistBuilderError):
    pass


class CombinerError(DistBuilderError):
    pass


class NonBooleanChild(CombinerError):
    pass


class MultiplePFormsForFullTable(CombinerError):
    pass


class IncompleteTable(CombinerError):
    pass


class AsymmetricTransmission(CombinerError):
    pass


class UnknownFunction(DistBuilderError):
    pass


class DivisionByZero(DistBuilderError, ZeroDivisionError):
    pass


class OutOfRange(DistBuilderError, ValueError):
    pass


class BadExpression(DistBuilderError):
    pass


# inference-engine

class InferenceError(BNForgeError):
    module = "inference-engine"


class TooLarge(InferenceError):
    pass


class ImpossibleEvidence(InferenceError):
    pass


class MaxRoundsExceeded(InferenceError):
    pass


class BadOption(InferenceError, ValueError):
    pass


# rules-dsl

class ParseError(BNForgeError):
    """Syntax error with a 1-based source location."""

    module = "rules-dsl"

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"line {line}, column {col}: {message}")


class UnknownFormHead(ParseError):
    pass


class UnboundLabel(ParseError):
    pass


# cli

class CommandError(BNForgeError):
    module = "cli"

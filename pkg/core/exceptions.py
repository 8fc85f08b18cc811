from dataclasses import dataclass
from typing import Optional


class DCProbLogError(Exception):
    """Base class for every error the engine reports to the user"""

    stage = 'engine'
    exit_code = 1

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self):
        return self.message


class BudgetExceeded(DCProbLogError):
    """A configurable resource cap was hit"""

    exit_code = 2


class ConfigurationError(DCProbLogError):
    stage = 'config'


# Parsing and syntax validation

class ProgramSyntaxError(DCProbLogError):
    stage = 'parse'

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None,
                 expected: Optional[frozenset] = None):
        super().__init__(message, line, column)
        self.expected = frozenset(expected or ())


class ReservedHeadError(DCProbLogError):
    stage = 'parse'


# Grounding

class GroundingError(DCProbLogError):
    stage = 'ground'


class UnknownPredicate(GroundingError):
    pass


class NonTerminatingGrounding(BudgetExceeded):
    stage = 'ground'


# Desugaring

class DesugaringError(DCProbLogError):
    stage = 'desugar'


class InvalidProbability(DesugaringError):
    pass


class CyclicRandomTermDependency(DesugaringError):
    pass


class RvCycle(DesugaringError):
    pass


class UnboundedExpansion(BudgetExceeded):
    stage = 'desugar'


class ValidationError(DCProbLogError):
    stage = 'validate'


class InvalidProgram(ValidationError):
    """Syntax validation reported errors"""

    def __init__(self, message: str, diagnostics=(), line: Optional[int] = None):
        super().__init__(message, line)
        self.diagnostics = list(diagnostics)


class CyclicRandomVariableDependency(ValidationError):
    pass


# Formulas and circuits

class FormulaError(DCProbLogError):
    stage = 'formula'


class CyclicRuleDependency(FormulaError):
    pass


class UnknownEvidenceAtom(FormulaError):
    pass


class CompilationBudgetExceeded(BudgetExceeded):
    stage = 'compile'


class CompilationError(DCProbLogError):
    """A compiled circuit lacks a property weighted evaluation relies on"""

    stage = 'compile'


# Semiring and sampling

class DivisionByZeroInfNum(DCProbLogError):
    stage = 'semiring'


class UnassignedVariable(DCProbLogError):
    stage = 'semiring'


class NonNumericTerm(DCProbLogError):
    stage = 'infer'


class SamplingError(DCProbLogError):
    stage = 'sample'


class ImpossibleObservation(SamplingError):
    pass


class MalformedObservation(SamplingError):
    pass


class InvalidParameter(SamplingError):
    pass


# Inference

class InferenceError(DCProbLogError):
    stage = 'infer'


class ZeroProbabilityEvidence(InferenceError):
    pass


class NonzeroResidualOrder(InferenceError):
    pass


class NotFinitelyEnumerable(InferenceError):
    pass


class NoAcceptedSamples(InferenceError):
    pass


class EnumerationBudgetExceeded(BudgetExceeded):
    stage = 'infer'


@dataclass(frozen=True)
class Diagnostic:
    """A non-fatal finding returned by validation"""

    code: str
    message: str
    line: Optional[int] = None
    severity: str = 'error'

    def __str__(self):
        where = f'line {self.line}: ' if self.line is not None else ''
        return f'{self.severity} [{self.code}] {where}{self.message}'

# -*- coding: utf-8 -*-


class SplitpipeError(Exception):
    pass


class ScenarioParseError(SplitpipeError):

    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        location = ''
        if line is not None:
            location = ' (line {}, column {})'.format(line, column)
        super(ScenarioParseError, self).__init__('{}{}'.format(message, location))


class InfeasibleError(SplitpipeError):
    """
    Raised when no plan or micro-batch satisfies the constraints.

    ``constraint`` names the binding constraint, e.g. ``memory_server``.
    """

    def __init__(self, constraint, detail=''):
        self.constraint = constraint
        self.detail = detail
        super(InfeasibleError, self).__init__('Infeasible ({}): {}'.format(constraint, detail))


class OracleLimitExceeded(SplitpipeError):

    def __init__(self, estimate, limit):
        self.estimate = estimate
        self.limit = limit
        super(OracleLimitExceeded, self).__init__(
            'Refusing to enumerate {} options (limit {}).'.format(estimate, limit)
        )


class SimplexIterationLimit(SplitpipeError):

    def __init__(self, pivots):
        self.pivots = pivots
        super(SimplexIterationLimit, self).__init__('Simplex stopped after {} pivots.'.format(pivots))

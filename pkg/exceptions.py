'''
----------------------------
Errors raised by the library
and the command-line abort helper
----------------------------
'''

import click


class RkscaleError(Exception):
    pass


# Invalid problem description (alpha, potential degree, coefficient signs, parity)
class ProblemError(RkscaleError, ValueError):
    pass


# Unknown or malformed Butcher tableau, or a singular I - z*alpha
class TableauError(RkscaleError, ValueError):
    pass


class StageConvergenceError(RkscaleError, RuntimeError):
    def __init__(self, message, iterations = None, residual = None, h = None, step = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.h = h
        # Filled in by integrate once the failing step is known
        self.step = step

    def __str__(self):
        message = super().__str__()
        if self.step is not None:
            return f"step {self.step}: {message}"
        return message


# Reference trajectory does not hit a comparison time exactly
class AlignmentError(RkscaleError, ValueError):
    def __init__(self, message, time = None):
        super().__init__(message)
        self.time = time


# Error at or below zero handed to the log-log fit
class SaturationError(RkscaleError, ValueError):
    pass


class CommandAbort(click.ClickException):
    def __init__(self, message, exit_code = 1):
        super().__init__(message)
        self.exit_code = exit_code


def abort(code, message):
    # Ends a command with a chosen exit code and a printed reason
    raise CommandAbort(message, exit_code = code)

"""Error types raised by the lab and their process exit codes."""

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_QUADRATURE = 4
EXIT_NUMERICAL = 5


class LabError(Exception):
    '''Base class for every failure the CLI knows how to report'''
    exit_code = EXIT_UNEXPECTED

    def record(self):
        """Machine-readable error record written to error.json"""
        return {
            'error': str(self),
            'kind': type(self).__name__,
            'exit_code': self.exit_code,
        }


class ConfigError(LabError):
    exit_code = EXIT_CONFIG


class DomainError(LabError, ValueError):
    '''Argument outside the region where the geometry is defined'''
    exit_code = EXIT_CONFIG


class KindError(LabError, ValueError):
    '''Geodesic of the wrong kind for the requested operation'''
    exit_code = EXIT_CONFIG


class DirectionError(LabError, ValueError):
    '''Vector points away from the flat cylinder'''
    exit_code = EXIT_CONFIG


class InfeasibleTowerError(LabError, ValueError):
    exit_code = EXIT_INFEASIBLE


class QuadratureError(LabError, ArithmeticError):
    exit_code = EXIT_QUADRATURE


class TangencyError(LabError, ArithmeticError):
    '''Integrator step size collapsed near a turning point'''
    exit_code = EXIT_NUMERICAL


class ConvergenceError(LabError, ArithmeticError):
    exit_code = EXIT_NUMERICAL


class RiccatiBlowUp(LabError, ArithmeticError):
    '''u left [0, inf) although K <= 0; always a bug, never a data issue'''
    exit_code = EXIT_NUMERICAL


class DegenerateFitError(LabError, ValueError):
    exit_code = EXIT_NUMERICAL

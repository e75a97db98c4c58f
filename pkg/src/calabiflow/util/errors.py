from typing import Any


class CalabiFlowError( Exception ):
    """
    Base class of every error raised by calabiflow
    """


class ConfigError( CalabiFlowError ):
    def __init__( self, path: str, line: int, message: str ) -> None:
        """
        Create an error anchored at a line of a configuration file

        Parameters:
            path ( str ): path of the configuration file
            line ( int ): line of the offending entry ( 0 if the file itself is at fault )
            message ( str ): description of the problem
        """
        super().__init__( f"{ path }:{ line }: { message }" )
        self._path: str = path
        self._line: int = line
        self._message: str = message

    @property
    def path( self ) -> str:
        """
        Get the path of the configuration file

        Returns:
            str: file path
        """
        return self._path

    @property
    def line( self ) -> int:
        """
        Get the line of the offending entry

        Returns:
            int: line number, starting at 1
        """
        return self._line

    @property
    def message( self ) -> str:
        """
        Get the message without the location prefix

        Returns:
            str: message
        """
        return self._message


class PositivityViolation( CalabiFlowError ):
    def __init__( self, margin: float ) -> None:
        """
        Create an error signaling that a potential left the space of Kähler potentials

        Parameters:
            margin ( float ): smallest nodal eigenvalue of the metric
        """
        super().__init__( f"metric not positive definite ( smallest eigenvalue { margin:.6g} )" )
        self.margin: float = margin


class DerivativeOrderError( CalabiFlowError, ValueError ):
    pass


class NonConvergence( CalabiFlowError ):
    pass


class IncompatibleData( CalabiFlowError ):
    pass


class ClassConstraintViolation( CalabiFlowError ):
    pass


class InsufficientTrace( CalabiFlowError ):
    pass


class InsufficientData( CalabiFlowError ):
    pass


class _TraceCarryingError( CalabiFlowError ):
    def __init__( self, message: str, trace: Any = None ) -> None:
        super().__init__( message )
        self.trace = trace


class StepCollapse( _TraceCarryingError ):
    """
    The adaptive step size fell below its floor; the partial trace is attached
    """


class NumericalBreakdown( _TraceCarryingError ):
    """
    A non-finite value appeared in the potential; the partial trace is attached
    """

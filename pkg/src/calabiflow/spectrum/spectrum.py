import logging
import warnings
from dataclasses import dataclass
from typing import Callable
from numpy import ndarray, asarray, ones, column_stack, real, sqrt, sum, argmin, isfinite, nan
from numpy.linalg import norm
from numpy.random import Generator
from scipy.sparse.linalg import LinearOperator, lobpcg
from calabiflow.geometry.components.metric import MetricData
from calabiflow.spectral.components.field import RealField
from calabiflow.spectrum.components.constants import ConstantsReport, moserRatio, sobolevLowerEstimate
from calabiflow.spectrum.components.operator import weakLichnerowicz, weakLaplacian
from calabiflow.util.errors import NonConvergence
from calabiflow.util.rng import generator as streamGenerator, EIGEN

logger = logging.getLogger( __name__ )

RESIDUAL_TOLERANCE: float = 1e-6
INITIAL_MODES: int = 4


@dataclass( frozen = True )
class EigenResult:
    """
    Smallest eigenpair of an operator on functions with zero mean against omega_phi^n
    """
    mu1: float
    eigenfield: RealField
    residual: float
    iterations: int


def _blockwise( function: Callable[ [ ndarray ], ndarray ] ) -> Callable[ [ ndarray ], ndarray ]:
    def apply( x: ndarray ) -> ndarray:
        x = asarray( x )
        if x.ndim == 1:
            return function( x )
        return column_stack( [ function( column ) for column in x.T ] )
    return apply


def _smallestEigenpair( m: MetricData,
                        weakOperator: Callable[ [ ndarray, MetricData ], ndarray ],
                        symbol: ndarray,
                        generator: Generator | None,
                        sigma: float,
                        blockSize: int,
                        maxIterations: int,
                        tolerance: float ) -> EigenResult:
    """
    Solve the Galerkin problem of a weak operator on the dealiased band, A x = mu W x with W the volume
    density, in the complement of the constants, by LOBPCG preconditioned with ( sigma + symbol )^-1

    Parameters:
        m ( MetricData ): assembled metric
        weakOperator ( Callable ): weak form scaled by 1 / cellWeight
        symbol ( ndarray ): flat Fourier symbol of the operator
        generator ( Generator | None ): source of the initial block
        sigma ( float ): preconditioner shift
        blockSize ( int ): number of simultaneous iterates
        maxIterations ( int ): iteration cap
        tolerance ( float ): residual tolerance of the iteration

    Returns:
        EigenResult: smallest eigenpair
    """
    grid = m.grid
    shape = grid.shape
    mask = grid.dealiasMask
    density = m.determinant
    if generator is None:
        generator = streamGenerator( 0, EIGEN )

    def project( x: ndarray ) -> ndarray:
        return real( grid.synthesize( mask * grid.transform( x.reshape( shape ) ) ) )

    def applyA( x: ndarray ) -> ndarray:
        return project( weakOperator( project( x ), m ) ).ravel()

    def applyB( x: ndarray ) -> ndarray:
        inside = project( x )
        return ( project( density * inside ) + x.reshape( shape ) - inside ).ravel()

    def applyM( x: ndarray ) -> ndarray:
        return real( grid.synthesize( mask * grid.transform( x.reshape( shape ) ) / ( sigma + symbol ) ) ).ravel()

    size = grid.size
    A = LinearOperator( shape = ( size, size ), matvec = _blockwise( applyA ), matmat = _blockwise( applyA ), dtype = float )
    B = LinearOperator( shape = ( size, size ), matvec = _blockwise( applyB ), matmat = _blockwise( applyB ), dtype = float )
    M = LinearOperator( shape = ( size, size ), matvec = _blockwise( applyM ), matmat = _blockwise( applyM ), dtype = float )
    initial = column_stack( [ project( grid.randomField( generator, INITIAL_MODES ).values ).ravel() for _ in range( blockSize ) ] )
    constants = ones( ( size, 1 ) )

    with warnings.catch_warnings():
        warnings.simplefilter( "ignore" )
        values, vectors, history = lobpcg( A, initial, B = B, M = M, Y = constants, tol = tolerance,
                                           maxiter = maxIterations, largest = False, retResidualNormsHistory = True )
    index = int( argmin( values ) )
    mu = float( values[ index ] )
    u = project( vectors[ :, index ] )
    difference = project( weakOperator( u, m ) - mu * density * u )
    residual = float( norm( difference / density ) / norm( u ) ) if norm( u ) > 0. else nan
    iterations = len( history )
    if not isfinite( residual ) or residual > RESIDUAL_TOLERANCE:
        raise NonConvergence( f"eigen residual { residual:.3e} after { iterations } iterations" )

    u = u / sqrt( sum( u ** 2 * m.weights ) )
    logger.debug( f"eigen solve: mu { mu:.10g}, residual { residual:.2e}, { iterations } iterations" )
    return EigenResult( mu1 = mu, eigenfield = RealField( grid, u ), residual = residual, iterations = iterations )


def firstEigenvalue( m: MetricData,
                     generator: Generator | None = None,
                     sigma: float = 1e-3,
                     blockSize: int = 4,
                     maxIterations: int = 400,
                     tolerance: float = 1e-8 ) -> EigenResult:
    """
    Get the first eigenvalue of the Lichnerowicz operator, the minimum of int |nabla nabla u|^2 / int u^2
    over functions with zero mean against omega_phi^n

    Parameters:
        m ( MetricData ): assembled metric
        generator ( Generator | None = None ): source of the initial block
        sigma ( float = 1e-3 ): shift of the flat bilaplacian preconditioner
        blockSize ( int = 4 ): number of simultaneous iterates
        maxIterations ( int = 400 ): iteration cap
        tolerance ( float = 1e-8 ): residual tolerance of the iteration

    Returns:
        EigenResult: eigenvalue, unit eigenfield, residual and iteration count
    """
    return _smallestEigenpair( m, weakLichnerowicz, m.grid.bilaplacianSymbol, generator, sigma, blockSize, maxIterations, tolerance )


def laplacianLambda1( m: MetricData,
                      generator: Generator | None = None,
                      sigma: float = 1e-3,
                      blockSize: int = 4,
                      maxIterations: int = 400,
                      tolerance: float = 1e-8 ) -> float:
    """
    Get the smallest nonzero eigenvalue of minus the complex Laplacian of the metric

    Parameters:
        m ( MetricData ): assembled metric
        generator ( Generator | None = None ): source of the initial block
        sigma ( float = 1e-3 ): shift of the flat Laplacian preconditioner
        blockSize ( int = 4 ): number of simultaneous iterates
        maxIterations ( int = 400 ): iteration cap
        tolerance ( float = 1e-8 ): residual tolerance of the iteration

    Returns:
        float: lambda1, 1 / 4 for the flat metric
    """
    return _smallestEigenpair( m, weakLaplacian, m.grid.laplacianSymbol, generator, sigma, blockSize, maxIterations, tolerance ).mu1


def evaluateConstants( m: MetricData,
                       generator: Generator,
                       t: float = 0.,
                       moserExponent: float | None = None,
                       moserTrials: int = 20,
                       sobolevTrials: int = 8,
                       withEigenvalue: bool = False,
                       **settings: float ) -> ConstantsReport:
    """
    Evaluate the analytic constants of a metric

    Parameters:
        m ( MetricData ): assembled metric
        generator ( Generator ): source of trial fields and initial blocks
        t ( float = 0. ): flow time of the metric
        moserExponent ( float | None = None ): exponent p of the Moser check, 4n when omitted
        moserTrials ( int = 20 ): random right hand sides of the Moser check
        sobolevTrials ( int = 8 ): trial fields of the Sobolev estimate
        withEigenvalue ( bool = False ): also compute mu1 of the Lichnerowicz operator
        settings ( float ): eigen solver settings passed on to the eigen solves

    Returns:
        ConstantsReport: constants
    """
    n = m.grid.n
    lambda1 = laplacianLambda1( m, generator, **settings )
    exponent = moserExponent if moserExponent is not None else 4. * n
    sobolev, surrogate = sobolevLowerEstimate( m, sobolevTrials, generator )
    mu1 = firstEigenvalue( m, generator, **settings ).mu1 if withEigenvalue else nan
    report = ConstantsReport( t = float( t ),
                              lambda1 = lambda1,
                              poincare = 1. / ( lambda1 * m.volume ),
                              sobolevLower = sobolev,
                              sobolevSurrogate = surrogate,
                              moserRatio = moserRatio( m, exponent, moserTrials, generator ),
                              mu1 = mu1 )
    logger.info( f"constants at t = { t:.6g}: lambda1 { lambda1:.8g}, Sobolev >= { sobolev:.6g}, Moser { report.moserRatio:.6g}" )
    return report

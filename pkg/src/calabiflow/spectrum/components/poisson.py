import logging
from numpy import ndarray, where, sqrt, abs, real, sum
from numpy.linalg import norm
from scipy.sparse.linalg import LinearOperator, cg
from calabiflow.geometry.components.metric import MetricData
from calabiflow.spectral.components.field import RealField
from calabiflow.spectrum.components.operator import weakLaplacian, laplacian
from calabiflow.util.errors import NonConvergence, IncompatibleData

logger = logging.getLogger( __name__ )

COMPATIBILITY_TOLERANCE: float = 1e-8
RESIDUAL_TOLERANCE: float = 1e-8


def poissonResidual( v: RealField, f: RealField, m: MetricData ) -> float:
    """
    Get the relative residual ||Laplacian_phi v - f||_2 / ||f||_2 in L^2( omega_phi )

    Parameters:
        v ( RealField ): solution candidate
        f ( RealField ): right hand side
        m ( MetricData ): assembled metric

    Returns:
        float: relative residual, the absolute residual when f = 0
    """
    difference = laplacian( v, m ).values - f.values
    scale = sqrt( sum( f.values ** 2 * m.weights ) )
    residual = sqrt( sum( difference ** 2 * m.weights ) )
    return float( residual / scale ) if scale > 0. else float( residual )


def solvePoisson( f: RealField, m: MetricData, tolerance: float = 1e-10, maxIterations: int = 2000 ) -> RealField:
    """
    Solve Laplacian_phi v = f for the solution with zero mean against omega_phi^n by conjugate gradients on
    the weak form, preconditioned with the inverse flat Laplacian

    Parameters:
        f ( RealField ): right hand side with zero mean against omega_phi^n
        m ( MetricData ): assembled metric
        tolerance ( float = 1e-10 ): relative residual of the conjugate gradient iteration
        maxIterations ( int = 2000 ): iteration cap

    Returns:
        RealField: solution v
    """
    grid = m.grid
    weights = m.weights
    mass = sum( f.values * weights )
    if abs( mass ) > COMPATIBILITY_TOLERANCE * sqrt( sum( f.values ** 2 * weights ) * m.volume ):
        raise IncompatibleData( f"right hand side has mean { mass / m.volume:.3e} against the volume form" )
    if not f.values.any():
        return f.like( f.values.copy() )

    symbol = grid.laplacianSymbol
    inverseSymbol = where( symbol > 0., 1. / where( symbol > 0., symbol, 1. ), 0. )
    rhs = -real( grid.synthesize( where( symbol > 0., grid.transform( m.determinant * f.values ), 0. ) ) ).ravel()

    def applyOperator( x: ndarray ) -> ndarray:
        return weakLaplacian( x.reshape( grid.shape ), m ).ravel()

    def applyPreconditioner( x: ndarray ) -> ndarray:
        return real( grid.synthesize( inverseSymbol * grid.transform( x.reshape( grid.shape ) ) ) ).ravel()

    operator = LinearOperator( shape = ( grid.size, grid.size ), matvec = applyOperator, dtype = float )
    preconditioner = LinearOperator( shape = ( grid.size, grid.size ), matvec = applyPreconditioner, dtype = float )
    iterations = [ 0 ]

    def count( _: ndarray ) -> None:
        iterations[ 0 ] += 1

    solution, info = cg( operator, rhs, rtol = tolerance, atol = 0., maxiter = maxIterations, M = preconditioner, callback = count )
    if info != 0:
        raise NonConvergence( f"conjugate gradients stopped after { iterations[ 0 ] } iterations ( info { info } )" )
    values = solution.reshape( grid.shape )
    values = values - sum( values * weights ) / sum( weights )
    v = RealField( grid, values )
    residual = poissonResidual( v, f, m )
    if residual > RESIDUAL_TOLERANCE:
        raise NonConvergence( f"Poisson residual { residual:.3e} exceeds { RESIDUAL_TOLERANCE:.0e} after { iterations[ 0 ] } iterations" )
    logger.debug( f"Poisson solve: { iterations[ 0 ] } iterations, residual { residual:.3e}, |v| { norm( values ):.3e}" )
    return v

"""
Numerical estimates of the Moser, Poincaré and Sobolev constants.

Norms are normalized by the class volume, ||f||_q = ( ( 1 / V ) int |f|^q omega_phi^n )^( 1 / q ), and the
gradient norm is |df|^2 = g^{i jbar} f_i f_jbar.
"""
import logging
from dataclasses import dataclass, astuple
from numpy import ndarray, abs, sqrt, log, exp, sum, max, real
from numpy.random import Generator
from calabiflow.geometry.components.metric import MetricData
from calabiflow.spectral.components.field import RealField
from calabiflow.spectrum.components.operator import weakLaplacian
from calabiflow.spectrum.components.poisson import solvePoisson
from calabiflow.util.errors import IncompatibleData

logger = logging.getLogger( __name__ )

COLUMNS: tuple[ str, ... ] = ( "t", "lambda1", "poincare", "sobolevLower", "sobolevSurrogate", "moserRatio", "mu1" )
SOBOLEV_EXPONENT: float = 4.
SOBOLEV_MODES: int = 2
SOBOLEV_STEPS: int = 12
MOSER_MODES: int = 8


@dataclass( frozen = True )
class ConstantsReport:
    t: float
    lambda1: float
    poincare: float
    sobolevLower: float
    sobolevSurrogate: bool
    moserRatio: float
    mu1: float

    def row( self ) -> tuple:
        """
        Get the values in CSV column order

        Returns:
            tuple: one value per entry of COLUMNS
        """
        return astuple( self )


def normalizedNorm( values: ndarray, m: MetricData, q: float ) -> float:
    return float( ( sum( abs( values ) ** q * m.weights ) / m.volume ) ** ( 1. / q ) )


def _meanFree( values: ndarray, m: MetricData ) -> ndarray:
    return values - sum( values * m.weights ) / sum( m.weights )


def moserQuotient( f: RealField, m: MetricData, p: float ) -> float:
    """
    Solve Laplacian_phi v = f and get ( sup v - mean v ) / ||f||_{p*} with p* = 2np / ( 2n + p )

    Parameters:
        f ( RealField ): right hand side with zero mean against omega_phi^n
        m ( MetricData ): assembled metric
        p ( float ): exponent, larger than 2n

    Returns:
        float: quotient
    """
    n = m.grid.n
    if p <= 2 * n:
        raise ValueError( f"Moser exponent must exceed { 2 * n }, got { p }" )
    v = solvePoisson( f, m ).values
    mean = sum( v * m.weights ) / sum( m.weights )
    return float( ( max( v ) - mean ) / normalizedNorm( f.values, m, 2. * n * p / ( 2. * n + p ) ) )


def moserRatio( m: MetricData, p: float, trials: int, generator: Generator ) -> float:
    """
    Get the largest Moser quotient over random band-limited right hand sides on the wave number box
    |k|_inf <= min( 8, N / 4 ), the same fields on every resolution from N = 32 on

    Parameters:
        m ( MetricData ): assembled metric
        p ( float ): exponent, larger than 2n
        trials ( int ): number of right hand sides
        generator ( Generator ): source of randomness

    Returns:
        float: empirical lower bound of the Moser constant
    """
    if trials < 1:
        raise IncompatibleData( "the Moser ratio needs at least one trial" )
    grid = m.grid
    ratio = 0.
    for _ in range( trials ):
        f = RealField( grid, _meanFree( grid.randomField( generator, MOSER_MODES ).values, m ) )
        ratio = max( [ ratio, moserQuotient( f, m, p ) ] )
    return float( ratio )


def _sobolevParts( values: ndarray, m: MetricData, q: float ) -> tuple[ float, float, float ]:
    volume = m.volume
    a = float( sum( abs( values ) ** q * m.weights ) / volume )
    b = float( sum( values * weakLaplacian( values, m ) ) * m.grid.cellWeight / volume )
    c = float( sum( values ** 2 * m.weights ) / volume )
    return a, max( [ b, 0. ] ), c


def sobolevQuotient( f: RealField, m: MetricData, q: float = SOBOLEV_EXPONENT ) -> float:
    """
    Get ||f||_q / ( ||df||_2 + ||f||_2 )

    Parameters:
        f ( RealField ): nonzero trial field
        m ( MetricData ): assembled metric
        q ( float = 4. ): exponent of the numerator

    Returns:
        float: quotient, 1 for constants
    """
    a, b, c = _sobolevParts( f.values, m, q )
    return float( a ** ( 1. / q ) / ( sqrt( b ) + sqrt( c ) ) )


def _ascend( values: ndarray, m: MetricData, q: float, steps: int ) -> float:
    # gradient ascent of the log quotient inside the wave number box of the trial fields
    grid = m.grid
    box = grid.boxMask( SOBOLEV_MODES )
    volume = m.volume

    def objective( x: ndarray ) -> float:
        a, b, c = _sobolevParts( x, m, q )
        return log( a ) / q - log( sqrt( b ) + sqrt( c ) )

    current = objective( values )
    step = 1.
    for _ in range( steps ):
        a, b, c = _sobolevParts( values, m, q )
        denominator = sqrt( b ) + sqrt( c )
        gradient = q * abs( values ) ** ( q - 2. ) * values * m.weights / ( volume * q * a )
        flux = 2. * weakLaplacian( values, m ) * grid.cellWeight / volume
        mass = 2. * values * m.weights / volume
        descent = mass / ( 2. * sqrt( c ) )
        if b > 0.:
            descent = descent + flux / ( 2. * sqrt( b ) )
        gradient = gradient - descent / denominator
        gradient = real( grid.synthesize( box * grid.transform( gradient ) ) )
        scale = sqrt( sum( values ** 2 ) / max( [ sum( gradient ** 2 ), 1e-300 ] ) )
        improved = False
        for _ in range( 20 ):
            candidate = values + step * scale * gradient
            value = objective( candidate )
            if value > current:
                values, current, improved = candidate, value, True
                step = 2. * step
                break
            step = 0.5 * step
        if not improved:
            break
    return float( current )


def sobolevLowerEstimate( m: MetricData, trials: int, generator: Generator, steps: int = SOBOLEV_STEPS ) -> tuple[ float, bool ]:
    """
    Get a lower estimate of the Sobolev constant, the largest quotient ||f||_4 / ( ||df||_2 + ||f||_2 ) over
    random trial fields on the box |k| <= 2, each refined by gradient ascent. The exponent 4 is the critical
    exponent for n = 2; for n = 1 the same quotient serves as a surrogate and is flagged

    Parameters:
        m ( MetricData ): assembled metric
        trials ( int ): number of trial fields, at least 1
        generator ( Generator ): source of randomness
        steps ( int = 12 ): ascent steps per trial

    Returns:
        tuple[ float, bool ]: estimate and the surrogate flag
    """
    if trials < 1:
        raise ValueError( "the Sobolev estimate needs at least one trial" )
    grid = m.grid
    estimate = 0.
    for _ in range( trials ):
        f = grid.randomField( generator, SOBOLEV_MODES, meanZero = False )
        logQuotient = _ascend( f.values, m, SOBOLEV_EXPONENT, steps )
        estimate = max( [ estimate, float( exp( logQuotient ) ) ] )
    logger.debug( f"Sobolev lower estimate { estimate:.6g} from { trials } trials" )
    return estimate, grid.n == 1

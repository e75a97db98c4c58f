"""
Energy functionals of Kähler potentials.

Every n-fold wedge of ( 1, 1 )-forms is evaluated as the mixed discriminant of the coefficient
matrices, so omega_phi^n becomes det( g_phi ) dx and the class volume is V = ( 2 pi )^2n.
"""
from __future__ import annotations
import logging
from math import factorial
from typing import TYPE_CHECKING, Protocol
from numpy import ndarray, einsum, conj, log, sqrt, maximum, abs, max, min, sum, where
from numpy.polynomial.legendre import leggauss
from calabiflow.functionals.components.report import EnergyReport
from calabiflow.geometry.components.hermitian import determinant, mixedDiscriminant
from calabiflow.geometry.components.metric import MetricData
from calabiflow.geometry.geometry import PotentialState, assembleMetric

if TYPE_CHECKING:
    from calabiflow.spectral.spectral import SpectralGrid

logger = logging.getLogger( __name__ )

SEGMENT_NODES: int = 5


class PathSource( Protocol ):
    @property
    def pathLength( self ) -> float: ...


def _metricOf( state: PotentialState, m: MetricData | None ) -> MetricData:
    return m if m is not None else assembleMetric( state )


def _gradientDensity( state: PotentialState ) -> ndarray:
    # coefficient matrix of i d phi ^ dbar phi
    gradient = state.grid.gradient( state.phiSpectrum )
    return einsum( '...i,...j->...ij', gradient, conj( gradient ) )


def _aubinTerms( state: PotentialState ) -> list[ float ]:
    grid = state.grid
    n = grid.n
    density = _gradientDensity( state )
    background = state.background.metric
    terms = []
    for i in range( n ):
        factors = [ density ] + [ background ] * i + [ state.metric ] * ( n - 1 - i )
        terms.append( grid.integrate( mixedDiscriminant( *factors ) ) )
    return terms


def aubinIJ( state: PotentialState ) -> tuple[ float, float ]:
    """
    Get the Aubin functionals I = ( 1 / V ) sum_i int i d phi ^ dbar phi ^ omega^i ^ omega_phi^( n - 1 - i )
    and J, the same sum weighted by ( i + 1 ) / ( n + 1 )

    Parameters:
        state ( PotentialState ): potential

    Returns:
        tuple[ float, float ]: ( I, J ), both nonnegative
    """
    n = state.grid.n
    volume = state.background.volume
    terms = _aubinTerms( state )
    I = sum( terms ) / volume
    J = sum( [ ( i + 1 ) / ( n + 1 ) * term for i, term in enumerate( terms ) ] ) / volume
    return float( I ), float( J )


def dingD( state: PotentialState ) -> float:
    """
    Get the Ding functional D = ( 1 / V ) int phi omega^n - J

    Parameters:
        state ( PotentialState ): potential

    Returns:
        float: value of D
    """
    background = state.background
    _, J = aubinIJ( state )
    return state.grid.integrate( state.phi, background.determinant ) / background.volume - J


def dingDExpanded( state: PotentialState ) -> float:
    """
    Get D through its expansion ( 1 / V ) sum_i n! / ( ( i + 1 )! ( n - i )! ) int phi omega^( n - i ) ^ ( i d dbar phi )^i

    Parameters:
        state ( PotentialState ): potential

    Returns:
        float: value of D
    """
    grid = state.grid
    n = grid.n
    background = state.background
    hessian = grid.complexHessian( state.phiSpectrum )
    total = 0.
    for i in range( n + 1 ):
        weight = factorial( n ) / ( factorial( i + 1 ) * factorial( n - i ) )
        factors = [ background.metric ] * ( n - i ) + [ hessian ] * i
        total += weight * grid.integrate( state.phi, mixedDiscriminant( *factors ) )
    return total / background.volume


def dingDerivative( state: PotentialState, direction: ndarray ) -> float:
    """
    Get the derivative of D along a variation u of the potential, ( 1 / V ) int u omega_phi^n

    Parameters:
        state ( PotentialState ): base point
        direction ( ndarray ): variation u

    Returns:
        float: directional derivative
    """
    return state.grid.integrate( direction, state.determinant ) / state.background.volume


def entropy( state: PotentialState ) -> float:
    """
    Get the entropy E = int log( omega_phi^n / omega^n ) omega_phi^n

    Parameters:
        state ( PotentialState ): potential

    Returns:
        float: raw entropy, at least -V / e
    """
    ratio = state.determinant / state.background.determinant
    return state.grid.integrate( ratio * log( ratio ), state.background.determinant )


def jFunctional( state: PotentialState ) -> float:
    """
    Get j = -( 1 / V ) sum_i n! / ( ( i + 1 )! ( n - i - 1 )! ) int phi Ric( omega ) ^ omega^( n - 1 - i ) ^ ( i d dbar phi )^i

    Parameters:
        state ( PotentialState ): potential

    Returns:
        float: value of j, zero on the flat background
    """
    grid = state.grid
    n = grid.n
    background = state.background
    hessian = grid.complexHessian( state.phiSpectrum )
    total = 0.
    for i in range( n ):
        weight = factorial( n ) / ( factorial( i + 1 ) * factorial( n - i - 1 ) )
        factors = [ background.ricci ] + [ background.metric ] * ( n - 1 - i ) + [ hessian ] * i
        total += weight * grid.integrate( state.phi, mixedDiscriminant( *factors ) )
    return -total / background.volume


def jDerivative( state: PotentialState, direction: ndarray ) -> float:
    """
    Get the derivative of j along a variation u, -( n / V ) int u Ric( omega ) ^ omega_phi^( n - 1 )

    Parameters:
        state ( PotentialState ): base point
        direction ( ndarray ): variation u

    Returns:
        float: directional derivative
    """
    grid = state.grid
    n = grid.n
    density = mixedDiscriminant( state.background.ricci, *( [ state.metric ] * ( n - 1 ) ) )
    return -n * grid.integrate( direction, density ) / state.background.volume


def kEnergy( state: PotentialState ) -> float:
    """
    Get the K-energy nu = E + V ( Sbar D + j ); its derivative along a variation u is -int u ( S - Sbar ) omega_phi^n

    Parameters:
        state ( PotentialState ): potential

    Returns:
        float: raw K-energy
    """
    background = state.background
    return entropy( state ) + background.volume * ( background.averageScalarCurvature * dingD( state ) + jFunctional( state ) )


def kEnergyDerivative( state: PotentialState, direction: ndarray, m: MetricData | None = None ) -> float:
    m = _metricOf( state, m )
    shifted = m.scalarCurvature.values - state.background.averageScalarCurvature
    return -float( sum( direction * shifted * m.weights ) )


def calabiEnergy( state: PotentialState, m: MetricData | None = None ) -> float:
    """
    Get the Calabi energy Ca = int ( S - Sbar )^2 omega_phi^n

    Parameters:
        state ( PotentialState ): potential
        m ( MetricData | None = None ): assembled metric of the state

    Returns:
        float: nonnegative energy
    """
    m = _metricOf( state, m )
    shifted = m.scalarCurvature.values - state.background.averageScalarCurvature
    return float( sum( shifted ** 2 * m.weights ) )


def oscillation( state: PotentialState ) -> float:
    values = state.phi.values
    return float( max( values ) - min( values ) )


def lpNorm( state: PotentialState, p: float, m: MetricData | None = None ) -> float:
    """
    Get ||S||_{L^p( omega_phi )} as a raw integral

    Parameters:
        state ( PotentialState ): potential
        p ( float ): exponent, at least 1
        m ( MetricData | None = None ): assembled metric of the state

    Returns:
        float: norm
    """
    if p < 1.:
        raise ValueError( f"L^p exponent must be at least 1, got { p }" )
    m = _metricOf( state, m )
    return float( sum( abs( m.scalarCurvature.values ) ** p * m.weights ) ** ( 1. / p ) )


def segmentLength( state: PotentialState ) -> float:
    """
    Get the length of the straight path s phi, s in [ 0, 1 ], int_0^1 ( int phi^2 omega_{s phi}^n )^( 1 / 2 ) ds

    Parameters:
        state ( PotentialState ): end point

    Returns:
        float: length, an upper bound of the distance to the zero potential
    """
    grid = state.grid
    background = state.background.metric
    hessian = state.metric - background
    nodes, weights = leggauss( SEGMENT_NODES )
    squared = state.phi.values ** 2
    length = 0.
    for node, weight in zip( nodes, weights ):
        s = 0.5 * ( node + 1. )
        length += 0.5 * weight * sqrt( grid.integrate( squared, determinant( background + s * hessian ) ) )
    return float( length )


def pathIncrement( before: PotentialState, after: PotentialState ) -> float:
    """
    Get the length of one flow step, h ( int phidot^2 omega_phi^n )^( 1 / 2 ) with the density averaged over both ends

    Parameters:
        before ( PotentialState ): state at the start of the step
        after ( PotentialState ): state at its end

    Returns:
        float: nonnegative increment
    """
    grid = before.grid
    difference = after.phi.values - before.phi.values
    return float( sqrt( grid.integrate( difference ** 2, 0.5 * ( before.determinant + after.determinant ) ) ) )


def distanceBounds( state: PotentialState, trace: PathSource | None = None ) -> tuple[ float, float ]:
    """
    Get the lower bound V^( -1/2 ) max( int_{phi > 0} phi omega_phi^n, -int_{phi < 0} phi omega^n )
    of the geodesic distance to the zero potential and the length of the path that reached the state

    Parameters:
        state ( PotentialState ): potential
        trace ( PathSource | None = None ): run that produced the state, the straight segment when omitted

    Returns:
        tuple[ float, float ]: ( distLower, pathLen )
    """
    grid = state.grid
    background = state.background
    values = state.phi.values
    positive = grid.integrate( where( values > 0., values, 0. ), state.determinant )
    negative = -grid.integrate( where( values < 0., values, 0. ), background.determinant )
    lower = maximum( positive, negative ) / sqrt( background.volume )
    length = trace.pathLength if trace is not None else segmentLength( state )
    return float( lower ), float( length )


def evaluate( state: PotentialState,
              t: float = 0.,
              m: MetricData | None = None,
              pathLength: float | None = None,
              lpExponent: float | None = None ) -> EnergyReport:
    """
    Evaluate every functional of a state

    Parameters:
        state ( PotentialState ): potential
        t ( float = 0. ): flow time of the state
        m ( MetricData | None = None ): assembled metric of the state
        pathLength ( float | None = None ): accumulated path length, the straight segment when omitted
        lpExponent ( float | None = None ): exponent of ||S||_p, 2n + 1 when omitted

    Returns:
        EnergyReport: report
    """
    m = _metricOf( state, m )
    grid: SpectralGrid = state.grid
    background = state.background
    volume = background.volume
    I, J = aubinIJ( state )
    D = grid.integrate( state.phi, background.determinant ) / volume - J
    E = entropy( state )
    j = jFunctional( state )
    nu = E + volume * ( background.averageScalarCurvature * D + j )
    length = pathLength if pathLength is not None else segmentLength( state )
    lower, _ = distanceBounds( state, _FixedPath( length ) )
    report = EnergyReport( t = float( t ),
                           I = I,
                           J = J,
                           D = float( D ),
                           E = E,
                           j = j,
                           nu = float( nu ),
                           Ca = calabiEnergy( state, m ),
                           osc = oscillation( state ),
                           lpS = lpNorm( state, lpExponent if lpExponent is not None else 2 * grid.n + 1, m ),
                           distLower = lower,
                           pathLen = length,
                           V = volume )
    if logger.isEnabledFor( logging.DEBUG ):
        logger.debug( f"t = { t:.6g}: Ca = { report.Ca:.6e}, nu = { report.nu:.6e}, D = { report.D:.3e}" )
    return report


class _FixedPath:
    def __init__( self, length: float ) -> None:
        self._length: float = length

    @property
    def pathLength( self ) -> float:
        return self._length

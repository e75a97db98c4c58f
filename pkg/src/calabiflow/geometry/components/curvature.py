"""
Curvature of a Kähler metric given by a potential on the flat torus.

Conventions: omega = i g_{i jbar} dz^i ^ dzbar^j, Laplacian = g^{i jbar} d_i dbar_j, the inverse tensor
is g^{i jbar} = inverse[ ..., j, i ]. All sup-norms are fully metric contracted pointwise norms.
"""
from __future__ import annotations
from itertools import combinations_with_replacement
from math import factorial
from typing import TYPE_CHECKING
from numpy import ndarray, empty, zeros, einsum, conj, real, sqrt, maximum, abs, max, min, complex128
from calabiflow.geometry.components.hermitian import traceProduct, relativeMinEigenvalue
from calabiflow.spectral.components.field import RealField

if TYPE_CHECKING:
    from calabiflow.geometry.components.metric import MetricData


def ricci( m: MetricData ) -> ndarray:
    """
    Get the Ricci form R_{i jbar} = - d_i dbar_j log det g

    Parameters:
        m ( MetricData ): assembled metric

    Returns:
        ndarray: Hermitian field of shape ( *grid, n, n )
    """
    grid = m.grid
    return -grid.complexHessian( grid.transform( m.logDeterminant ) )


def scalarCurvature( m: MetricData ) -> RealField:
    """
    Get the scalar curvature S = g^{i jbar} R_{i jbar}

    Parameters:
        m ( MetricData ): assembled metric

    Returns:
        RealField: scalar curvature
    """
    return RealField( m.grid, traceProduct( m.inverse, m.ricci ) )


def metricDerivatives( m: MetricData ) -> ndarray:
    """
    Get the first derivatives d_k g_{l pbar}

    Parameters:
        m ( MetricData ): assembled metric

    Returns:
        ndarray: complex field of shape ( *grid, n, n, n ) indexed [ ..., k, l, p ]
    """
    grid = m.grid
    n = grid.n
    result = empty( grid.shape + ( n, n, n ), dtype = complex128 )
    for k in range( n ):
        for l in range( k, n ):
            for p in range( n ):
                result[ ..., k, l, p ] = m.potentialDerivative( grid.unit( k, l ), grid.unit( p ) )
                result[ ..., l, k, p ] = result[ ..., k, l, p ]
    return result


def christoffel( m: MetricData ) -> ndarray:
    """
    Get the Christoffel symbols Gamma^k_{ij} = g^{k lbar} d_i g_{j lbar}

    Parameters:
        m ( MetricData ): assembled metric

    Returns:
        ndarray: complex field of shape ( *grid, n, n, n ) indexed [ ..., k, i, j ]
    """
    return einsum( '...pm,...klp->...mkl', m.inverse, m.metricDerivatives )


def riemannTensor( m: MetricData ) -> ndarray:
    """
    Get R_{i jbar k lbar} = - d_i dbar_j g_{k lbar} + g^{p qbar} d_i g_{k qbar} dbar_j g_{p lbar}

    Parameters:
        m ( MetricData ): assembled metric

    Returns:
        ndarray: complex field of shape ( *grid, n, n, n, n )
    """
    grid = m.grid
    n = grid.n
    dG = m.metricDerivatives
    result = einsum( '...qp,...ikq,...jlp->...ijkl', m.inverse, dG, conj( dG ), optimize = True )
    for i in range( n ):
        for j in range( n ):
            for k in range( n ):
                for l in range( n ):
                    result[ ..., i, j, k, l ] -= m.potentialDerivative( grid.unit( i, k ), grid.unit( j, l ) )
    return result


def _contractedSquare( tensor: ndarray, inverseMetric: ndarray ) -> ndarray:
    # |A|^2 of a Hermitian ( 1, 1 )-tensor
    return real( einsum( '...ij,...jk,...kl,...li->...', tensor, inverseMetric, tensor, inverseMetric, optimize = True ) )


def gradientNormSquared( gradient: ndarray, inverseMetric: ndarray ) -> ndarray:
    """
    Get g^{i jbar} X_i conj( X_j ) for a ( 1, 0 )-form X

    Parameters:
        gradient ( ndarray ): field of shape ( *grid, n )
        inverseMetric ( ndarray ): matrix inverse of the metric

    Returns:
        ndarray: nonnegative field of grid shape
    """
    return real( einsum( '...ji,...i,...j->...', inverseMetric, gradient, conj( gradient ) ) )


def tensorNormSquared( tensor: ndarray, inverseMetric: ndarray ) -> ndarray:
    """
    Get the pointwise squared norm of a ( 2, 0 )-tensor T_{ij}

    Parameters:
        tensor ( ndarray ): field of shape ( *grid, n, n )
        inverseMetric ( ndarray ): matrix inverse of the metric

    Returns:
        ndarray: nonnegative field of grid shape
    """
    return real( einsum( '...ki,...lj,...ij,...kl->...', inverseMetric, inverseMetric, tensor, conj( tensor ), optimize = True ) )


def covariantHessian( spectrum: ndarray, m: MetricData ) -> ndarray:
    """
    Get the ( 2, 0 ) part of the covariant Hessian, u_{;ij} = d_i d_j u - Gamma^k_{ij} d_k u

    Parameters:
        spectrum ( ndarray ): spectrum of a real function u
        m ( MetricData ): assembled metric

    Returns:
        ndarray: symmetric complex field of shape ( *grid, n, n )
    """
    grid = m.grid
    n = grid.n
    flat = grid.unit()
    result = -einsum( '...mij,...m->...ij', m.christoffel, grid.gradient( spectrum ) )
    for i in range( n ):
        for j in range( i, n ):
            result[ ..., i, j ] += grid.spectralDerivative( spectrum, grid.unit( i, j ), flat )
            result[ ..., j, i ] = result[ ..., i, j ]
    return result


def riemannNorm( m: MetricData ) -> float:
    R = riemannTensor( m )
    G = m.inverse
    squared = real( einsum( '...ijkl,...abcd,...ai,...jb,...ck,...ld->...', R, conj( R ), G, G, G, G, optimize = True ) )
    return float( max( sqrt( maximum( squared, 0. ) ) ) )


def ricciNorm( m: MetricData ) -> float:
    return float( max( sqrt( maximum( _contractedSquare( m.ricci, m.inverse ), 0. ) ) ) )


def hessianSNorm( m: MetricData ) -> float:
    """
    Get sup |d dbar S| with both indices raised by the metric

    Parameters:
        m ( MetricData ): assembled metric

    Returns:
        float: nonnegative scalar
    """
    hessian = m.grid.complexHessian( m.scalarSpectrum )
    return float( max( sqrt( maximum( _contractedSquare( hessian, m.inverse ), 0. ) ) ) )


def traceRatio( m: MetricData ) -> RealField:
    return RealField( m.grid, traceProduct( m.inverse, m.background.metric ) )


def inverseTraceRatio( m: MetricData ) -> RealField:
    return RealField( m.grid, traceProduct( m.background.inverse, m.metric ) )


def ricciLowerBound( m: MetricData ) -> float:
    """
    Get the smallest eigenvalue of Ric( omega_phi ) relative to omega_phi over all nodes

    Parameters:
        m ( MetricData ): assembled metric

    Returns:
        float: lower Ricci bound
    """
    return float( min( relativeMinEigenvalue( m.ricci, m.metric ) ) )


def volumeRatioResidual( m: MetricData ) -> float:
    """
    Get sup | Laplacian_phi h - ( tr_phi Ric( omega ) - S ) | for the log volume ratio h

    Parameters:
        m ( MetricData ): assembled metric

    Returns:
        float: residual of the volume ratio equation
    """
    grid = m.grid
    laplacian = traceProduct( m.inverse, grid.complexHessian( grid.transform( m.h ) ) )
    source = traceProduct( m.inverse, m.background.ricci ) - m.scalarCurvature.values
    return float( max( abs( laplacian - source ) ) )


def derivativeNorms( m: MetricData ) -> ndarray:
    """
    Get sup |nabla^i S| for i = 1 .. 4. Orders one and two are exact metric norms, the second
    combining the ( 2, 0 ) and ( 1, 1 ) parts; orders three and four bound the covariant norm through
    the chart derivatives scaled by the smallest metric eigenvalue to the power -i/2

    Parameters:
        m ( MetricData ): assembled metric

    Returns:
        ndarray: four nonnegative scalars
    """
    grid = m.grid
    spectrum = m.scalarSpectrum
    norms = zeros( 4 )
    norms[ 0 ] = max( sqrt( maximum( gradientNormSquared( grid.gradient( spectrum ), m.inverse ), 0. ) ) )
    second = tensorNormSquared( covariantHessian( spectrum, m ), m.inverse ) \
        + _contractedSquare( grid.complexHessian( spectrum ), m.inverse )
    norms[ 1 ] = max( sqrt( maximum( second, 0. ) ) )
    lowest = m.state.lowestEigenvalue
    for order in ( 3, 4 ):
        total = zeros( grid.shape )
        for axes in combinations_with_replacement( range( grid.realDim ), order ):
            multiIndex = [ 0 ] * grid.realDim
            for axis in axes:
                multiIndex[ axis ] += 1
            multiplicity = factorial( order )
            for count in multiIndex:
                multiplicity //= factorial( count )
            partial = real( grid.synthesize( grid.multiplier( multiIndex ) * spectrum ) )
            total += multiplicity * partial ** 2
        norms[ order - 1 ] = max( lowest ** ( -0.5 * order ) * sqrt( total ) )
    return norms

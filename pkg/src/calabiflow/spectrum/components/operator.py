"""
Fourth and second order operators of a Kähler metric.

The strong forms act pointwise on samples. The weak forms return A u with
v . A u = Re int < D u, D v > omega_phi^n / cellWeight for real sample vectors u and v, where D is the
( 2, 0 ) Hessian for the Lichnerowicz operator and the gradient for the Laplacian; both are symmetric
positive semidefinite matrices in the plain dot product.
"""
from numpy import ndarray, einsum, conj, real, zeros, sum, complex128
from calabiflow.geometry.components.curvature import covariantHessian, tensorNormSquared
from calabiflow.geometry.components.hermitian import traceProduct
from calabiflow.geometry.components.metric import MetricData
from calabiflow.spectral.components.field import RealField


def hessian20( u: RealField, m: MetricData ) -> ndarray:
    """
    Get the ( 2, 0 ) covariant Hessian u_{;ij} = d_i d_j u - Gamma^k_{ij} d_k u

    Parameters:
        u ( RealField ): function
        m ( MetricData ): assembled metric

    Returns:
        ndarray: symmetric complex field of shape ( *grid, n, n )
    """
    return covariantHessian( m.grid.transform( u ), m )


def hessianEnergy( u: RealField, m: MetricData ) -> float:
    """
    Get int |nabla nabla u|^2 omega_phi^n

    Parameters:
        u ( RealField ): function
        m ( MetricData ): assembled metric

    Returns:
        float: nonnegative energy
    """
    return float( sum( tensorNormSquared( hessian20( u, m ), m.inverse ) * m.weights ) )


def laplacian( u: RealField, m: MetricData ) -> RealField:
    """
    Apply the complex Laplacian g^{i jbar} d_i dbar_j of the metric

    Parameters:
        u ( RealField ): function
        m ( MetricData ): assembled metric

    Returns:
        RealField: Laplacian of u
    """
    grid = m.grid
    return RealField( grid, traceProduct( m.inverse, grid.complexHessian( grid.transform( u ) ) ) )


def applyL( u: RealField, m: MetricData ) -> RealField:
    """
    Apply the Lichnerowicz operator Lu = Laplacian^2 u + R^{i jbar} u_{i jbar} + Re( g^{i jbar} S_i u_jbar ),
    the real part of u_{,ibar jbar j i}

    Parameters:
        u ( RealField ): function
        m ( MetricData ): assembled metric

    Returns:
        RealField: Lu
    """
    grid = m.grid
    inverse = m.inverse
    spectrum = grid.transform( u )
    hessian = grid.complexHessian( spectrum )
    first = traceProduct( inverse, hessian )
    second = traceProduct( inverse, grid.complexHessian( grid.transform( first ) ) )
    raised = einsum( '...ij,...jk,...kl->...il', inverse, m.ricci, inverse )
    ricciTerm = traceProduct( hessian, raised )
    gradientTerm = real( einsum( '...ji,...i,...j->...', inverse, grid.gradient( m.scalarSpectrum ), conj( grid.gradient( spectrum ) ) ) )
    return RealField( grid, second + ricciTerm + gradientTerm )


def weakLichnerowicz( values: ndarray, m: MetricData ) -> ndarray:
    """
    Apply the weak Lichnerowicz operator to samples

    Parameters:
        values ( ndarray ): real samples of grid shape
        m ( MetricData ): assembled metric

    Returns:
        ndarray: real samples of grid shape
    """
    grid = m.grid
    n = grid.n
    inverse = m.inverse
    hessian = covariantHessian( grid.transform( values ), m )
    raised = m.determinant[ ..., None, None ] * einsum( '...ki,...lj,...ij->...kl', inverse, inverse, hessian, optimize = True )
    contracted = einsum( '...mkl,...kl->...m', conj( m.christoffel ), raised )
    total = zeros( grid.shape, dtype = complex128 )
    for k in range( n ):
        for l in range( n ):
            symbol = grid.holomorphicSymbol( k ) * grid.holomorphicSymbol( l )
            total += conj( symbol ) * grid.transform( raised[ ..., k, l ] )
    for c in range( n ):
        total -= conj( grid.holomorphicSymbol( c ) ) * grid.transform( contracted[ ..., c ] )
    return real( grid.synthesize( total ) )


def weakLaplacian( values: ndarray, m: MetricData ) -> ndarray:
    """
    Apply the weak form of minus the Laplacian to samples

    Parameters:
        values ( ndarray ): real samples of grid shape
        m ( MetricData ): assembled metric

    Returns:
        ndarray: real samples of grid shape
    """
    grid = m.grid
    flux = m.determinant[ ..., None ] * einsum( '...ji,...i->...j', m.inverse, grid.gradient( grid.transform( values ) ) )
    total = zeros( grid.shape, dtype = complex128 )
    for c in range( grid.n ):
        total += conj( grid.holomorphicSymbol( c ) ) * grid.transform( flux[ ..., c ] )
    return real( grid.synthesize( total ) )

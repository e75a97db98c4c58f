"""
Closed form pointwise algebra of Hermitian n x n tensor fields, n in { 1, 2 }.

Tensor fields are arrays of shape ( *grid, n, n ) with entry [ ..., i, j ] = a_{i jbar}.
"""
from numpy import ndarray, empty_like, sqrt, maximum, real, einsum


def determinant( tensor: ndarray ) -> ndarray:
    """
    Get the nodal determinant of a Hermitian tensor field

    Parameters:
        tensor ( ndarray ): field of shape ( *grid, n, n )

    Returns:
        ndarray: real field of grid shape
    """
    if tensor.shape[ -1 ] == 1:
        return real( tensor[ ..., 0, 0 ] )
    return real( tensor[ ..., 0, 0 ] * tensor[ ..., 1, 1 ] - tensor[ ..., 0, 1 ] * tensor[ ..., 1, 0 ] )


def inverse( tensor: ndarray, det: ndarray | None = None ) -> ndarray:
    """
    Get the nodal matrix inverse of a tensor field

    Parameters:
        tensor ( ndarray ): field of shape ( *grid, n, n )
        det ( ndarray | None = None ): precomputed determinant

    Returns:
        ndarray: field of shape ( *grid, n, n )
    """
    if det is None:
        det = determinant( tensor )
    result = empty_like( tensor )
    if tensor.shape[ -1 ] == 1:
        result[ ..., 0, 0 ] = 1. / tensor[ ..., 0, 0 ]
        return result
    result[ ..., 0, 0 ] = tensor[ ..., 1, 1 ] / det
    result[ ..., 1, 1 ] = tensor[ ..., 0, 0 ] / det
    result[ ..., 0, 1 ] = -tensor[ ..., 0, 1 ] / det
    result[ ..., 1, 0 ] = -tensor[ ..., 1, 0 ] / det
    return result


def eigenvalueBounds( tensor: ndarray ) -> tuple[ ndarray, ndarray ]:
    """
    Get the smallest and largest nodal eigenvalue of a Hermitian tensor field

    Parameters:
        tensor ( ndarray ): field of shape ( *grid, n, n )

    Returns:
        tuple[ ndarray, ndarray ]: smallest and largest eigenvalue fields
    """
    if tensor.shape[ -1 ] == 1:
        value = real( tensor[ ..., 0, 0 ] )
        return value, value
    a = real( tensor[ ..., 0, 0 ] )
    d = real( tensor[ ..., 1, 1 ] )
    radius = sqrt( ( 0.5 * ( a - d ) ) ** 2 + abs( tensor[ ..., 0, 1 ] ) ** 2 )
    return 0.5 * ( a + d ) - radius, 0.5 * ( a + d ) + radius


def mixedDiscriminant( *tensors: ndarray ) -> ndarray:
    """
    Get the mixed discriminant of n Hermitian tensor fields, normalized so that D( A, .., A ) = det A;
    it represents the wedge of the associated ( 1, 1 )-forms relative to the volume form

    Parameters:
        tensors ( ndarray ): n fields of shape ( *grid, n, n )

    Returns:
        ndarray: real field of grid shape
    """
    if len( tensors ) == 1:
        return real( tensors[ 0 ][ ..., 0, 0 ] )
    a, b = tensors
    return 0.5 * real( a[ ..., 0, 0 ] * b[ ..., 1, 1 ] + a[ ..., 1, 1 ] * b[ ..., 0, 0 ]
                       - a[ ..., 0, 1 ] * b[ ..., 1, 0 ] - a[ ..., 1, 0 ] * b[ ..., 0, 1 ] )


def relativeMinEigenvalue( tensor: ndarray, metric: ndarray ) -> ndarray:
    """
    Get the smallest nodal eigenvalue of a Hermitian tensor relative to a positive metric,
    i.e. the smallest root of det( tensor - lambda metric ) = 0

    Parameters:
        tensor ( ndarray ): field of shape ( *grid, n, n )
        metric ( ndarray ): positive definite field of shape ( *grid, n, n )

    Returns:
        ndarray: real field of grid shape
    """
    detMetric = determinant( metric )
    if metric.shape[ -1 ] == 1:
        return real( tensor[ ..., 0, 0 ] ) / detMetric
    mixed = mixedDiscriminant( tensor, metric )
    discriminant = maximum( mixed ** 2 - detMetric * determinant( tensor ), 0. )
    return ( mixed - sqrt( discriminant ) ) / detMetric


def traceProduct( first: ndarray, second: ndarray ) -> ndarray:
    """
    Get the nodal real trace of a matrix product, tr( first @ second )

    Parameters:
        first ( ndarray ): field of shape ( *grid, n, n )
        second ( ndarray ): field of shape ( *grid, n, n )

    Returns:
        ndarray: real field of grid shape
    """
    return real( einsum( '...ij,...ji->...', first, second ) )

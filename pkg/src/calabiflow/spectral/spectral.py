from functools import cached_property
from math import pi
from typing import Iterable
from numpy import ndarray, zeros, ones, empty, abs, sum, real, cos, broadcast_to, arange, asarray, complex128
from numpy.random import Generator
from scipy.fft import fftn, ifftn, fftfreq
from calabiflow.spectral.components.field import RealField
from calabiflow.util.errors import DerivativeOrderError


MAXIMUM_ORDER: int = 6
MINIMUM_RESOLUTION: int = 16
MAXIMUM_RESOLUTION: dict[ int, int ] = { 1: 512, 2: 64 }

Field = RealField | ndarray
Mode = tuple[ tuple[ int, ... ], float ]


def _values( field: Field ) -> ndarray:
    return field.values if isinstance( field, RealField ) else field


class SpectralGrid:
    def __init__( self, n: int, N: int ) -> None:
        """
        Create the periodic sampling lattice of the torus C^n / ( 2 pi Z )^2n

        Parameters:
            n ( int ): complex dimension, 1 or 2
            N ( int ): samples per real axis, a power of two
        """
        if n not in MAXIMUM_RESOLUTION:
            raise ValueError( f"complex dimension must be 1 or 2, got { n }" )
        if N < MINIMUM_RESOLUTION or N & ( N - 1 ) != 0:
            raise ValueError( f"resolution must be a power of two >= { MINIMUM_RESOLUTION }, got { N }" )
        if N > MAXIMUM_RESOLUTION[ n ]:
            raise ValueError( f"resolution { N } exceeds the cap { MAXIMUM_RESOLUTION[ n ] } for n = { n }" )

        self._n: int = n
        self._N: int = N
        self._shape: tuple[ int, ... ] = ( N, ) * ( 2 * n )

        raw: ndarray = fftfreq( N, 1.0 / N )
        differentiable: ndarray = raw.copy()
        # the Nyquist wave number has no real derivative
        differentiable[ N // 2 ] = 0.
        self._raw: tuple[ ndarray, ... ] = tuple( self._alongAxis( raw, axis ) for axis in range( 2 * n ) )
        self._k: tuple[ ndarray, ... ] = tuple( self._alongAxis( differentiable, axis ) for axis in range( 2 * n ) )
        self._holomorphic: tuple[ ndarray, ... ] = tuple(
            0.5 * ( 1j * self._k[ 2 * c ] + self._k[ 2 * c + 1 ] ) for c in range( n ) )
        self._antiholomorphic: tuple[ ndarray, ... ] = tuple(
            0.5 * ( 1j * self._k[ 2 * c ] - self._k[ 2 * c + 1 ] ) for c in range( n ) )

    def _alongAxis( self, vector: ndarray, axis: int ) -> ndarray:
        shape = [ 1 ] * ( 2 * self._n )
        shape[ axis ] = self._N
        return vector.reshape( shape )

    @property
    def n( self ) -> int:
        """
        Get the complex dimension

        Returns:
            int: 1 or 2
        """
        return self._n

    @property
    def N( self ) -> int:
        """
        Get the number of samples per real axis

        Returns:
            int: resolution
        """
        return self._N

    @property
    def realDim( self ) -> int:
        return 2 * self._n

    @property
    def shape( self ) -> tuple[ int, ... ]:
        """
        Get the array shape of a sample field, axes ordered ( x1, y1, x2, y2 )

        Returns:
            tuple[ int, ... ]: field shape
        """
        return self._shape

    @property
    def size( self ) -> int:
        return self._N ** ( 2 * self._n )

    @property
    def period( self ) -> float:
        return 2. * pi

    @property
    def cellWeight( self ) -> float:
        """
        Get the quadrature weight of one lattice cell

        Returns:
            float: ( 2 pi / N )^2n
        """
        return ( 2. * pi / self._N ) ** ( 2 * self._n )

    @property
    def volume( self ) -> float:
        """
        Get the flat volume of the torus

        Returns:
            float: ( 2 pi )^2n
        """
        return ( 2. * pi ) ** ( 2 * self._n )

    @property
    def wavenumbers( self ) -> tuple[ ndarray, ... ]:
        """
        Get the broadcastable wave numbers per real axis, Nyquist set to zero

        Returns:
            tuple[ ndarray, ... ]: one array per axis
        """
        return self._k

    @cached_property
    def laplacianSymbol( self ) -> ndarray:
        """
        Get the symbol of minus the flat complex Laplacian, |k|^2 / 4

        Returns:
            ndarray: nonnegative array of grid shape
        """
        symbol = zeros( self._shape )
        for axis in range( 2 * self._n ):
            symbol = symbol + 0.25 * self._k[ axis ] ** 2
        return symbol

    @cached_property
    def bilaplacianSymbol( self ) -> ndarray:
        """
        Get the symbol of the flat bilaplacian, ( |k|^2 / 4 )^2

        Returns:
            ndarray: nonnegative array of grid shape
        """
        return self.laplacianSymbol ** 2

    @cached_property
    def dealiasMask( self ) -> ndarray:
        """
        Get the two-thirds rule mask, true where every |k| <= N / 3

        Returns:
            ndarray: boolean array of grid shape
        """
        mask = ones( self._shape, dtype = bool )
        for axis in range( 2 * self._n ):
            mask = mask & ( abs( self._raw[ axis ] ) <= self._N / 3. )
        return mask

    def boxMask( self, maxMode: int ) -> ndarray:
        """
        Get the mask of the wave number box |k|_inf <= maxMode

        Parameters:
            maxMode ( int ): half width of the box

        Returns:
            ndarray: boolean array of grid shape
        """
        mask = ones( self._shape, dtype = bool )
        for axis in range( 2 * self._n ):
            mask = mask & ( abs( self._raw[ axis ] ) <= maxMode )
        return mask

    def coordinate( self, axis: int ) -> ndarray:
        """
        Get the nodal coordinate along one real axis

        Parameters:
            axis ( int ): real axis index in ( x1, y1, x2, y2 ) order

        Returns:
            ndarray: coordinates of grid shape
        """
        nodes = self._alongAxis( arange( self._N ) * ( 2. * pi / self._N ), axis )
        return broadcast_to( nodes, self._shape ).copy()

    def transform( self, field: Field ) -> ndarray:
        """
        Get the discrete Fourier coefficients of a field

        Parameters:
            field ( RealField | ndarray ): samples

        Returns:
            ndarray: complex spectrum
        """
        return fftn( _values( field ), workers = -1 )

    def synthesize( self, spectrum: ndarray ) -> ndarray:
        """
        Get the samples belonging to a spectrum

        Parameters:
            spectrum ( ndarray ): complex spectrum

        Returns:
            ndarray: complex samples
        """
        return ifftn( spectrum, workers = -1 )

    def multiplier( self, multiIndex: Iterable[ int ] ) -> ndarray:
        """
        Get the Fourier multiplier ( i k )^multiIndex of a real partial derivative

        Parameters:
            multiIndex ( Iterable[ int ] ): derivative order per real axis

        Returns:
            ndarray: broadcastable complex multiplier
        """
        multiIndex = tuple( multiIndex )
        if len( multiIndex ) != 2 * self._n:
            raise ValueError( f"multi index { multiIndex } needs { 2 * self._n } entries" )
        if min( multiIndex ) < 0:
            raise ValueError( f"negative derivative order in { multiIndex }" )
        if sum( multiIndex ) > MAXIMUM_ORDER:
            raise DerivativeOrderError( f"derivative order { sum( multiIndex ) } exceeds { MAXIMUM_ORDER }" )
        symbol: ndarray | complex = 1. + 0j
        for axis, order in enumerate( multiIndex ):
            if order > 0:
                symbol = symbol * ( 1j * self._k[ axis ] ) ** order
        return asarray( symbol )

    def complexMultiplier( self, holomorphic: tuple[ int, ... ], antiholomorphic: tuple[ int, ... ] ) -> ndarray:
        """
        Get the Fourier multiplier of a mixed complex derivative

        Parameters:
            holomorphic ( tuple[ int, ... ] ): order of d/dz per complex coordinate
            antiholomorphic ( tuple[ int, ... ] ): order of d/dzbar per complex coordinate

        Returns:
            ndarray: broadcastable complex multiplier
        """
        if len( holomorphic ) != self._n or len( antiholomorphic ) != self._n:
            raise ValueError( f"complex multi indices need { self._n } entries" )
        if min( holomorphic + antiholomorphic ) < 0:
            raise ValueError( "negative derivative order" )
        order = sum( holomorphic ) + sum( antiholomorphic )
        if order > MAXIMUM_ORDER:
            raise DerivativeOrderError( f"derivative order { order } exceeds { MAXIMUM_ORDER }" )
        symbol: ndarray | complex = 1. + 0j
        for c in range( self._n ):
            if holomorphic[ c ] > 0:
                symbol = symbol * self._holomorphic[ c ] ** holomorphic[ c ]
            if antiholomorphic[ c ] > 0:
                symbol = symbol * self._antiholomorphic[ c ] ** antiholomorphic[ c ]
        return asarray( symbol )

    def holomorphicSymbol( self, coordinate: int ) -> ndarray:
        return self._holomorphic[ coordinate ]

    def antiholomorphicSymbol( self, coordinate: int ) -> ndarray:
        return self._antiholomorphic[ coordinate ]

    def unit( self, coordinate: int | None = None, twice: int | None = None ) -> tuple[ int, ... ]:
        """
        Get a complex multi index with ones at the given coordinates

        Parameters:
            coordinate ( int | None = None ): first coordinate to count
            twice ( int | None = None ): second coordinate to count

        Returns:
            tuple[ int, ... ]: multi index of length n
        """
        index = [ 0 ] * self._n
        for c in ( coordinate, twice ):
            if c is not None:
                index[ c ] += 1
        return tuple( index )

    def derivative( self, field: Field, multiIndex: Iterable[ int ] ) -> RealField:
        """
        Differentiate a real field spectrally

        Parameters:
            field ( RealField | ndarray ): samples
            multiIndex ( Iterable[ int ] ): derivative order per real axis, total at most 6

        Returns:
            RealField: derivative
        """
        symbol = self.multiplier( multiIndex )
        return RealField( self, real( self.synthesize( symbol * self.transform( field ) ) ) )

    def spectralDerivative( self, spectrum: ndarray, holomorphic: tuple[ int, ... ], antiholomorphic: tuple[ int, ... ] ) -> ndarray:
        return self.synthesize( self.complexMultiplier( holomorphic, antiholomorphic ) * spectrum )

    def complexDerivative( self,
                           field: Field,
                           holomorphic: int | tuple[ int, ... ],
                           antiholomorphic: int | tuple[ int, ... ] ) -> ndarray:
        """
        Apply d^i dbar^j to a real field, with d/dz = ( d/dx - i d/dy ) / 2 per complex coordinate

        Parameters:
            field ( RealField | ndarray ): samples
            holomorphic ( int | tuple[ int, ... ] ): order of d/dz per coordinate ( an int when n = 1 )
            antiholomorphic ( int | tuple[ int, ... ] ): order of d/dzbar per coordinate ( an int when n = 1 )

        Returns:
            ndarray: complex sample field
        """
        if isinstance( holomorphic, int ):
            holomorphic = ( holomorphic, )
        if isinstance( antiholomorphic, int ):
            antiholomorphic = ( antiholomorphic, )
        return self.spectralDerivative( self.transform( field ), tuple( holomorphic ), tuple( antiholomorphic ) )

    def gradient( self, spectrum: ndarray ) -> ndarray:
        """
        Get the holomorphic gradient d_i of a real field from its spectrum

        Parameters:
            spectrum ( ndarray ): spectrum of the field

        Returns:
            ndarray: complex array of shape ( *grid, n )
        """
        result = empty( self._shape + ( self._n, ), dtype = complex128 )
        for i in range( self._n ):
            result[ ..., i ] = self.synthesize( self._holomorphic[ i ] * spectrum )
        return result

    def complexHessian( self, spectrum: ndarray ) -> ndarray:
        """
        Get the complex Hessian d_i dbar_j of a real field from its spectrum

        Parameters:
            spectrum ( ndarray ): spectrum of the field

        Returns:
            ndarray: Hermitian complex array of shape ( *grid, n, n )
        """
        result = empty( self._shape + ( self._n, self._n ), dtype = complex128 )
        for i in range( self._n ):
            for j in range( self._n ):
                result[ ..., i, j ] = self.synthesize( self._holomorphic[ i ] * self._antiholomorphic[ j ] * spectrum )
            result[ ..., i, i ] = result[ ..., i, i ].real
        return result

    def integrate( self, field: Field, density: Field | None = None ) -> float:
        """
        Integrate a field against a density with the periodic trapezoidal rule

        Parameters:
            field ( RealField | ndarray ): integrand
            density ( RealField | ndarray | None = None ): density, flat measure when omitted

        Returns:
            float: sum of field * density * cellWeight
        """
        values = _values( field )
        if density is not None:
            values = values * _values( density )
        return float( sum( values ) * self.cellWeight )

    def dealias( self, field: Field ) -> RealField:
        """
        Remove every Fourier mode with some |k| > N / 3

        Parameters:
            field ( RealField | ndarray ): samples

        Returns:
            RealField: filtered field
        """
        return RealField( self, real( self.synthesize( self.dealiasMask * self.transform( field ) ) ) )

    def cosineField( self, modes: Iterable[ Mode ] ) -> RealField:
        """
        Create the trigonometric polynomial sum c cos( k . x ) over complex coordinates

        Parameters:
            modes ( Iterable[ tuple[ tuple[ int, ... ], float ] ] ): wave vector ( 2n integers ) and coefficient pairs

        Returns:
            RealField: samples
        """
        values = zeros( self._shape )
        for wave, coefficient in modes:
            if len( wave ) != 2 * self._n:
                raise ValueError( f"wave vector { wave } needs { 2 * self._n } entries" )
            phase = zeros( self._shape )
            for axis, k in enumerate( wave ):
                if k != 0:
                    phase = phase + k * self.coordinate( axis )
            values = values + coefficient * cos( phase )
        return RealField( self, values )

    def randomField( self, generator: Generator, maxMode: int, meanZero: bool = True ) -> RealField:
        """
        Create a random band-limited field with coefficients decaying like ( 1 + |k|^2 )^-( n + 1 )

        The coefficients are drawn on the fixed box |k|_inf <= min( maxMode, N / 4 ), so one generator
        state yields the same trigonometric polynomial on every resolution that contains the box.

        Parameters:
            generator ( Generator ): source of randomness
            maxMode ( int ): requested half width of the wave number box
            meanZero ( bool = True ): drop the constant mode

        Returns:
            RealField: samples ( not normalized )
        """
        K = max( 1, min( maxMode, self._N // 4 ) )
        box = ( 2 * K + 1, ) * ( 2 * self._n )
        coefficients = generator.standard_normal( box ) + 1j * generator.standard_normal( box )
        waves = arange( -K, K + 1 )
        squared = zeros( box )
        for axis in range( 2 * self._n ):
            shape = [ 1 ] * ( 2 * self._n )
            shape[ axis ] = 2 * K + 1
            squared = squared + waves.reshape( shape ) ** 2
        coefficients = coefficients * ( 1. + squared ) ** ( -( self._n + 1 ) )
        if meanZero:
            coefficients[ ( K, ) * ( 2 * self._n ) ] = 0.

        spectrum = zeros( self._shape, dtype = complex128 )
        index = waves % self._N
        spectrum[ tuple( index.reshape( [ -1 if a == axis else 1 for a in range( 2 * self._n ) ] )
                         for axis in range( 2 * self._n ) ) ] = coefficients
        values = real( self.synthesize( spectrum * self.size ) )
        return RealField( self, values, meanZero )

    def __eq__( self, other: object ) -> bool:
        return isinstance( other, SpectralGrid ) and other.n == self._n and other.N == self._N

    def __hash__( self ) -> int:
        return hash( ( self._n, self._N ) )

    def __repr__( self ) -> str:
        return f"SpectralGrid( n = { self._n }, N = { self._N } )"

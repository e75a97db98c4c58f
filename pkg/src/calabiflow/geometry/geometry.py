import logging
from numpy import ndarray, zeros, eye, broadcast_to, isfinite, log, abs, min, complex128
from calabiflow.geometry.components.hermitian import determinant, inverse, eigenvalueBounds, traceProduct
from calabiflow.geometry.components.metric import MetricData
from calabiflow.spectral.spectral import SpectralGrid
from calabiflow.spectral.components.field import RealField
from calabiflow.util.errors import PositivityViolation, ClassConstraintViolation

logger = logging.getLogger( __name__ )

CLASS_TOLERANCE: float = 1e-8


class KahlerBackground:
    def __init__( self, grid: SpectralGrid, potential: RealField | None = None ) -> None:
        """
        Create the reference Kähler form omega with g0 = identity + d dbar psi0

        Parameters:
            grid ( SpectralGrid ): sampling lattice
            potential ( RealField | None = None ): background potential psi0, flat when omitted
        """
        if potential is not None and potential.grid != grid:
            raise ValueError( "background potential lives on another grid" )
        self._grid: SpectralGrid = grid
        self._potential: RealField = potential if potential is not None else RealField( grid, zeros( grid.shape ) )
        self._spectrum: ndarray = grid.transform( self._potential )

        identity = broadcast_to( eye( grid.n, dtype = complex128 ), grid.shape + ( grid.n, grid.n ) )
        self._metric: ndarray = identity + grid.complexHessian( self._spectrum )
        self._determinant: ndarray = determinant( self._metric )
        margin = float( min( eigenvalueBounds( self._metric )[ 0 ] ) )
        if not isfinite( margin ) or margin <= 0.:
            raise PositivityViolation( margin )
        self._inverse: ndarray = inverse( self._metric, self._determinant )
        self._ricci: ndarray = -grid.complexHessian( grid.transform( log( self._determinant ) ) )
        self._volume: float = grid.integrate( self._determinant )

        scalar = traceProduct( self._inverse, self._ricci )
        self._scalarMean: float = grid.integrate( scalar, self._determinant ) / self._volume
        if abs( self._scalarMean ) > CLASS_TOLERANCE:
            raise ClassConstraintViolation( f"background mean scalar curvature { self._scalarMean:.3e} is not 0" )
        logger.debug( f"background on { grid }: margin { margin:.4f}, volume { self._volume:.12g}" )

    @classmethod
    def flat( cls, grid: SpectralGrid ) -> "KahlerBackground":
        """
        Create the flat background g0 = identity

        Parameters:
            grid ( SpectralGrid ): sampling lattice

        Returns:
            KahlerBackground: flat background
        """
        return cls( grid )

    @property
    def grid( self ) -> SpectralGrid:
        return self._grid

    @property
    def potential( self ) -> RealField:
        """
        Get the background potential psi0

        Returns:
            RealField: potential, zero for the flat background
        """
        return self._potential

    @property
    def potentialSpectrum( self ) -> ndarray:
        return self._spectrum

    @property
    def metric( self ) -> ndarray:
        """
        Get g0_{i jbar}

        Returns:
            ndarray: Hermitian field of shape ( *grid, n, n )
        """
        return self._metric

    @property
    def inverse( self ) -> ndarray:
        return self._inverse

    @property
    def determinant( self ) -> ndarray:
        return self._determinant

    @property
    def ricci( self ) -> ndarray:
        """
        Get the background Ricci form Ric( omega ), zero for the flat background

        Returns:
            ndarray: Hermitian field of shape ( *grid, n, n )
        """
        return self._ricci

    @property
    def volume( self ) -> float:
        """
        Get the class volume V = integral of det g0

        Returns:
            float: ( 2 pi )^2n up to round-off
        """
        return self._volume

    @property
    def averageScalarCurvature( self ) -> float:
        """
        Get the average scalar curvature of the class; zero on the torus

        Returns:
            float: 0.0
        """
        return 0.

    @property
    def scalarMean( self ) -> float:
        """
        Get the computed mean of S( omega ), checked against the class average on creation

        Returns:
            float: mean scalar curvature
        """
        return self._scalarMean

    @property
    def isFlat( self ) -> bool:
        return not self._potential.values.any()


class PotentialState:
    def __init__( self, phi: RealField, background: KahlerBackground ) -> None:
        """
        Create a Kähler potential together with its positivity certificate

        Parameters:
            phi ( RealField ): potential samples
            background ( KahlerBackground ): reference form omega
        """
        if phi.grid != background.grid:
            raise ValueError( "potential and background live on different grids" )
        grid = background.grid
        self._phi: RealField = phi
        self._background: KahlerBackground = background
        self._phiSpectrum: ndarray = grid.transform( phi )
        self._totalSpectrum: ndarray = background.potentialSpectrum + self._phiSpectrum
        self._metric: ndarray = background.metric + grid.complexHessian( self._phiSpectrum )
        self._determinant: ndarray = determinant( self._metric )
        self._lowest: ndarray = eigenvalueBounds( self._metric )[ 0 ]
        self._margin: float = float( min( self._lowest ) )
        if not isfinite( self._margin ) or self._margin <= 0.:
            raise PositivityViolation( self._margin )

    @property
    def phi( self ) -> RealField:
        """
        Get the potential

        Returns:
            RealField: samples of phi
        """
        return self._phi

    @property
    def background( self ) -> KahlerBackground:
        return self._background

    @property
    def grid( self ) -> SpectralGrid:
        return self._background.grid

    @property
    def phiSpectrum( self ) -> ndarray:
        return self._phiSpectrum

    @property
    def totalSpectrum( self ) -> ndarray:
        """
        Get the spectrum of psi0 + phi

        Returns:
            ndarray: complex spectrum
        """
        return self._totalSpectrum

    @property
    def metric( self ) -> ndarray:
        return self._metric

    @property
    def determinant( self ) -> ndarray:
        return self._determinant

    @property
    def lowestEigenvalue( self ) -> ndarray:
        """
        Get the smallest nodal eigenvalue of g_phi

        Returns:
            ndarray: positive field of grid shape
        """
        return self._lowest

    @property
    def positivityMargin( self ) -> float:
        """
        Get the smallest eigenvalue of g_phi over all nodes

        Returns:
            float: positive margin
        """
        return self._margin

    def shifted( self, constant: float ) -> "PotentialState":
        """
        Create the state of phi + constant; the metric is unchanged

        Parameters:
            constant ( float ): shift

        Returns:
            PotentialState: shifted state
        """
        return PotentialState( self._phi.like( self._phi.values + constant ), self._background )


def assembleMetric( state: PotentialState ) -> MetricData:
    """
    Assemble the metric of a potential and evaluate its Ricci form and scalar curvature

    Parameters:
        state ( PotentialState ): potential with positive margin

    Returns:
        MetricData: assembled metric
    """
    data = MetricData( state )
    data.scalarCurvature
    if logger.isEnabledFor( logging.DEBUG ):
        logger.debug( f"assembled metric: margin { state.positivityMargin:.6f}, volume { data.volume:.12g}" )
    return data

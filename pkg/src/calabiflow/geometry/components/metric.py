from __future__ import annotations
from functools import cached_property
from typing import TYPE_CHECKING
from numpy import ndarray, log, sum
from calabiflow.geometry.components import curvature
from calabiflow.geometry.components.hermitian import inverse
from calabiflow.spectral.spectral import SpectralGrid
from calabiflow.spectral.components.field import RealField

if TYPE_CHECKING:
    from calabiflow.geometry.geometry import KahlerBackground, PotentialState


class MetricData:
    def __init__( self, state: PotentialState ) -> None:
        """
        Create the metric data of a Kähler potential; curvature quantities are evaluated on first access
        and then kept, so one instance never changes after assembly

        Parameters:
            state ( PotentialState ): potential with a positivity certificate
        """
        self._state: PotentialState = state
        self._grid: SpectralGrid = state.grid
        self._background: KahlerBackground = state.background
        self._metric: ndarray = state.metric
        self._determinant: ndarray = state.determinant
        self._inverse: ndarray = inverse( self._metric, self._determinant )
        self._detRatio: ndarray = self._determinant / self._background.determinant
        self._weights: ndarray = self._determinant * self._grid.cellWeight
        self._derivatives: dict[ tuple[ tuple[ int, ... ], tuple[ int, ... ] ], ndarray ] = {}

    @property
    def state( self ) -> PotentialState:
        """
        Get the potential the data was assembled from

        Returns:
            PotentialState: potential
        """
        return self._state

    @property
    def grid( self ) -> SpectralGrid:
        return self._grid

    @property
    def background( self ) -> KahlerBackground:
        return self._background

    @property
    def metric( self ) -> ndarray:
        """
        Get g_{i jbar} = g0_{i jbar} + d_i dbar_j phi

        Returns:
            ndarray: Hermitian field of shape ( *grid, n, n )
        """
        return self._metric

    @property
    def inverse( self ) -> ndarray:
        """
        Get the matrix inverse of the metric; the inverse tensor is g^{i jbar} = inverse[ ..., j, i ]

        Returns:
            ndarray: Hermitian field of shape ( *grid, n, n )
        """
        return self._inverse

    @property
    def determinant( self ) -> ndarray:
        return self._determinant

    @property
    def detRatio( self ) -> ndarray:
        """
        Get the volume ratio det( g_phi ) / det( g0 )

        Returns:
            ndarray: positive field of grid shape
        """
        return self._detRatio

    @cached_property
    def h( self ) -> ndarray:
        """
        Get the log volume ratio

        Returns:
            ndarray: field of grid shape
        """
        return log( self._detRatio )

    @cached_property
    def logDeterminant( self ) -> ndarray:
        return log( self._determinant )

    @property
    def weights( self ) -> ndarray:
        """
        Get the nodal quadrature weights of the volume form omega_phi^n

        Returns:
            ndarray: det( g_phi ) * cellWeight
        """
        return self._weights

    @cached_property
    def volume( self ) -> float:
        """
        Get the volume of omega_phi^n; equals the class volume V

        Returns:
            float: volume
        """
        return float( sum( self._weights ) )

    @property
    def positivityMargin( self ) -> float:
        return self._state.positivityMargin

    def potentialDerivative( self, holomorphic: tuple[ int, ... ], antiholomorphic: tuple[ int, ... ] ) -> ndarray:
        """
        Get a mixed complex derivative of the total potential psi0 + phi

        Parameters:
            holomorphic ( tuple[ int, ... ] ): order of d/dz per coordinate
            antiholomorphic ( tuple[ int, ... ] ): order of d/dzbar per coordinate

        Returns:
            ndarray: complex field of grid shape
        """
        key = ( holomorphic, antiholomorphic )
        if key not in self._derivatives:
            self._derivatives[ key ] = self._grid.spectralDerivative( self._state.totalSpectrum, holomorphic, antiholomorphic )
        return self._derivatives[ key ]

    @cached_property
    def ricci( self ) -> ndarray:
        """
        Get the Ricci form R_{i jbar} = - d_i dbar_j log det g

        Returns:
            ndarray: Hermitian field of shape ( *grid, n, n )
        """
        return curvature.ricci( self )

    @cached_property
    def scalarCurvature( self ) -> RealField:
        """
        Get the scalar curvature S = g^{i jbar} R_{i jbar}

        Returns:
            RealField: scalar curvature
        """
        return curvature.scalarCurvature( self )

    @cached_property
    def scalarSpectrum( self ) -> ndarray:
        return self._grid.transform( self.scalarCurvature )

    @cached_property
    def metricDerivatives( self ) -> ndarray:
        return curvature.metricDerivatives( self )

    @cached_property
    def christoffel( self ) -> ndarray:
        return curvature.christoffel( self )

    @cached_property
    def riemannNorm( self ) -> float:
        """
        Get sup |Rm|

        Returns:
            float: nonnegative scalar
        """
        return curvature.riemannNorm( self )

    @cached_property
    def ricciNorm( self ) -> float:
        return curvature.ricciNorm( self )

    @cached_property
    def hessianSNorm( self ) -> float:
        """
        Get sup |d dbar S|

        Returns:
            float: nonnegative scalar
        """
        return curvature.hessianSNorm( self )

    @cached_property
    def traceRatio( self ) -> RealField:
        """
        Get tr_{omega_phi} omega

        Returns:
            RealField: positive field
        """
        return curvature.traceRatio( self )

    @cached_property
    def inverseTraceRatio( self ) -> RealField:
        return curvature.inverseTraceRatio( self )

    @cached_property
    def derivativeNorms( self ) -> ndarray:
        """
        Get sup |nabla^i S| for i = 1 .. 4

        Returns:
            ndarray: four nonnegative scalars
        """
        return curvature.derivativeNorms( self )

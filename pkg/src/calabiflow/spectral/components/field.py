from __future__ import annotations
from typing import TYPE_CHECKING
from numpy import ndarray, asarray, float64, isfinite, sqrt, sum, abs
from numpy.linalg import norm

if TYPE_CHECKING:
    from calabiflow.spectral.spectral import SpectralGrid

MEAN_ZERO_TOLERANCE: float = 1e-12


class RealField:
    def __init__( self, grid: SpectralGrid, values: ndarray, meanZero: bool = False ) -> None:
        """
        Create a real sample field on the lattice of a grid

        Parameters:
            grid ( SpectralGrid ): lattice the samples live on
            values ( ndarray ): one double per lattice point, shaped like grid.shape
            meanZero ( bool = False ): flag the field as having zero flat mean; checked on creation
        """
        values = asarray( values, dtype = float64 )
        if values.shape != grid.shape:
            raise ValueError( f"field of shape { values.shape } does not fit a grid of shape { grid.shape }" )
        if not isfinite( values ).all():
            raise ValueError( "field contains non-finite samples" )
        if meanZero:
            mean = abs( sum( values ) * grid.cellWeight )
            if mean > MEAN_ZERO_TOLERANCE * norm( values ) * sqrt( grid.cellWeight ):
                raise ValueError( f"field flagged mean-zero has integral { mean:.3e}" )
        self._grid: SpectralGrid = grid
        self._values: ndarray = values
        self._meanZero: bool = meanZero

    @property
    def grid( self ) -> SpectralGrid:
        """
        Get the grid of the field

        Returns:
            SpectralGrid: sampling lattice
        """
        return self._grid

    @property
    def values( self ) -> ndarray:
        """
        Get the samples

        Returns:
            ndarray: real array shaped like grid.shape
        """
        return self._values

    @property
    def meanZero( self ) -> bool:
        """
        Get whether the field is flagged as mean-zero

        Returns:
            bool: flag
        """
        return self._meanZero

    def like( self, values: ndarray, meanZero: bool = False ) -> RealField:
        """
        Create a field on the same grid

        Parameters:
            values ( ndarray ): new samples
            meanZero ( bool = False ): mean-zero flag of the new field

        Returns:
            RealField: new field
        """
        return RealField( self._grid, values, meanZero )

    def __len__( self ) -> int:
        return self._values.size

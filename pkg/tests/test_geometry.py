import logging
import pytest
from math import pi
from numpy import cos, sin, zeros, abs, max, min
from numpy.testing import assert_allclose
from calabiflow.geometry.components.curvature import ricciLowerBound, volumeRatioResidual
from calabiflow.geometry.components.hermitian import determinant, inverse, mixedDiscriminant
from calabiflow.geometry.geometry import KahlerBackground, PotentialState, assembleMetric
from calabiflow.spectral.spectral import SpectralGrid
from calabiflow.spectral.components.field import RealField
from calabiflow.util.errors import CalabiFlowError, PositivityViolation, ClassConstraintViolation
from calabiflow.util.rng import generator


def cosineState( n: int, N: int, epsilon: float ) -> PotentialState:
    grid = SpectralGrid( n, N )
    return PotentialState( grid.cosineField( [ ( ( 1, ) + ( 0, ) * ( 2 * n - 1 ), epsilon ) ] ), KahlerBackground.flat( grid ) )


class TestHermitian:
    """Pointwise Hermitian algebra"""

    def test_determinant_and_inverse( self ):
        tensor = zeros( ( 3, 2, 2 ), dtype = complex )
        tensor[ :, 0, 0 ] = 2.
        tensor[ :, 1, 1 ] = 3.
        tensor[ :, 0, 1 ] = 1j
        tensor[ :, 1, 0 ] = -1j
        assert_allclose( determinant( tensor ), 5. )
        product = inverse( tensor ) @ tensor
        assert_allclose( product[ 0 ], [ [ 1., 0. ], [ 0., 1. ] ], atol = 1e-14 )

    def test_mixed_discriminant_of_equal_factors_is_determinant( self ):
        tensor = zeros( ( 1, 2, 2 ), dtype = complex )
        tensor[ 0 ] = [ [ 2., 0.5 ], [ 0.5, 1. ] ]
        assert_allclose( mixedDiscriminant( tensor, tensor ), determinant( tensor ) )


class TestKahlerBackground:
    """Reference metrics of the class"""

    def test_flat_background( self, flat, n ):
        assert flat.isFlat
        assert_allclose( flat.volume, ( 2. * pi ) ** ( 2 * n ), rtol = 1e-13 )
        assert max( abs( flat.ricci ) ) == 0.
        assert flat.averageScalarCurvature == 0.

    def test_curved_background_has_zero_mean_curvature( self, curved ):
        assert not curved.isFlat
        assert abs( curved.scalarMean ) < 1e-10
        assert max( abs( curved.ricci ) ) > 0.

    def test_debug_logging_of_curved_metric( self, grid, caplog ):
        caplog.set_level( logging.DEBUG, logger = "calabiflow" )
        psi = grid.randomField( generator( 11, 1 ), 1 )
        background = KahlerBackground( grid, psi.like( 0.1 / max( abs( psi.values ) ) * psi.values ) )
        assembleMetric( PotentialState( RealField( grid, zeros( grid.shape ) ), background ) )
        messages = [ record.getMessage() for record in caplog.records ]
        assert any( message.startswith( f"background on { grid }: margin " ) for message in messages )
        assert any( message.startswith( "assembled metric: margin " ) for message in messages )

    def test_non_kahler_background( self ):
        grid = SpectralGrid( 1, 16 )
        with pytest.raises( PositivityViolation ):
            KahlerBackground( grid, grid.cosineField( [ ( ( 1, 0 ), 8. ) ] ) )

    def test_grid_mismatch( self ):
        with pytest.raises( ValueError, match = "another grid" ):
            KahlerBackground( SpectralGrid( 1, 16 ), RealField( SpectralGrid( 1, 32 ), zeros( ( 32, 32 ) ) ) )

    def test_class_constraint_error_is_domain_error( self ):
        assert issubclass( ClassConstraintViolation, CalabiFlowError )
        assert issubclass( PositivityViolation, CalabiFlowError )


class TestPotentialState:
    """Positivity certificate of Kähler potentials"""

    @pytest.mark.parametrize( "epsilon", [ 0.1, 1., 3.5 ] )
    def test_margin_of_cosine( self, n, epsilon ):
        state = cosineState( n, 16, epsilon )
        assert state.positivityMargin == pytest.approx( min( [ 1. - 0.25 * epsilon, 1. ] ), rel = 1e-12 )

    def test_non_kahler_potential( self, n ):
        with pytest.raises( PositivityViolation ) as error:
            cosineState( n, 16, 5. )
        assert error.value.margin == pytest.approx( -0.25 )

    def test_shift_keeps_metric( self, smoothState, curved ):
        state = smoothState( curved )
        shifted = state.shifted( 2.5 )
        assert_allclose( shifted.metric, state.metric, atol = 1e-12 )
        assert_allclose( shifted.phi.values, state.phi.values + 2.5 )


class TestCurvature:
    """Ricci form, scalar curvature and derived norms"""

    def test_flat_metric_is_flat( self, flat, zeroState ):
        m = assembleMetric( zeroState( flat ) )
        assert max( abs( m.scalarCurvature.values ) ) == 0.
        assert m.riemannNorm == 0.
        assert ricciLowerBound( m ) == 0.

    def test_scalar_curvature_of_cosine_potential( self ):
        epsilon = 0.5
        state = cosineState( 1, 64, epsilon )
        x = state.grid.coordinate( 0 )
        g = 1. - 0.25 * epsilon * cos( x )
        first = 0.25 * epsilon * sin( x ) / g
        second = 0.25 * epsilon * cos( x ) / g - first ** 2
        expected = -0.25 * second / g
        assert_allclose( assembleMetric( state ).scalarCurvature.values, expected, atol = 1e-10 )

    def test_trace_ratio_product( self, curved, smoothState, n ):
        m = assembleMetric( smoothState( curved, amplitude = 0.1 ) )
        product = m.traceRatio.values * m.inverseTraceRatio.values
        assert min( product ) >= n * n * ( 1. - 1e-12 )
        if n == 1:
            assert_allclose( product, 1., rtol = 1e-12 )

    def test_volume_ratio_equation( self, curved, smoothState ):
        m = assembleMetric( smoothState( curved, seed = 4 ) )
        assert volumeRatioResidual( m ) < 1e-9

    def test_derivative_norms( self, flat, smoothState ):
        m = assembleMetric( smoothState( flat ) )
        norms = m.derivativeNorms
        assert norms.shape == ( 4, )
        assert ( norms >= 0. ).all()
        assert m.hessianSNorm > 0.

    def test_ricci_lower_bound_detects_curvature( self, curved, zeroState ):
        m = assembleMetric( zeroState( curved ) )
        assert ricciLowerBound( m ) < 0.

    def test_metric_data_is_cached( self, flat, smoothState ):
        m = assembleMetric( smoothState( flat ) )
        assert m.scalarCurvature is m.scalarCurvature
        assert m.volume == pytest.approx( flat.volume, rel = 1e-12 )
        assert_allclose( m.weights.sum(), m.volume )


def test_random_backgrounds_pass_the_class_constraint():
    grid = SpectralGrid( 2, 16 )
    for seed in range( 3 ):
        psi = grid.randomField( generator( seed, 1 ), 1 )
        background = KahlerBackground( grid, psi.like( 0.1 / max( abs( psi.values ) ) * psi.values ) )
        assert abs( background.scalarMean ) < 1e-10

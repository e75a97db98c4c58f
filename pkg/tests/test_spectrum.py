import pytest
from math import isnan
from numpy import cos, ones, zeros, abs, sum
from numpy.testing import assert_allclose
from calabiflow.geometry.geometry import KahlerBackground, PotentialState, assembleMetric
from calabiflow.spectral.spectral import SpectralGrid
from calabiflow.spectral.components.field import RealField
from calabiflow.spectrum.components.constants import moserQuotient, moserRatio, sobolevLowerEstimate, sobolevQuotient, \
    ConstantsReport, COLUMNS
from calabiflow.spectrum.components.operator import applyL, hessian20, hessianEnergy, laplacian
from calabiflow.spectrum.components.poisson import solvePoisson, poissonResidual
from calabiflow.spectrum.spectrum import firstEigenvalue, laplacianLambda1, evaluateConstants, RESIDUAL_TOLERANCE
from calabiflow.util.errors import IncompatibleData, NonConvergence
from calabiflow.util.rng import generator, EIGEN, CONSTANTS
from calabiflow.verify.verify import cosineNorm


def flatMetric( n: int, N: int ):
    grid = SpectralGrid( n, N )
    return assembleMetric( PotentialState( RealField( grid, zeros( grid.shape ) ), KahlerBackground.flat( grid ) ) )


class TestOperators:
    """Lichnerowicz operator and Laplacian"""

    def test_lichnerowicz_of_unit_mode( self ):
        m = flatMetric( 1, 32 )
        u = RealField( m.grid, cos( m.grid.coordinate( 0 ) ) )
        assert_allclose( applyL( u, m ).values, u.values / 16., atol = 1e-13 )

    def test_flat_hessian_of_unit_mode( self ):
        m = flatMetric( 1, 32 )
        x = m.grid.coordinate( 0 )
        hessian = hessian20( RealField( m.grid, cos( x ) ), m )
        assert hessian.shape == m.grid.shape + ( 1, 1 )
        assert_allclose( hessian[ ..., 0, 0 ], -0.25 * cos( x ), atol = 1e-12 )

    def test_laplacian_of_unit_mode( self, n ):
        m = flatMetric( n, 16 )
        u = RealField( m.grid, cos( m.grid.coordinate( 0 ) ) )
        assert_allclose( laplacian( u, m ).values, -0.25 * u.values, atol = 1e-13 )

    def test_quadratic_form( self, curved, smoothState ):
        m = assembleMetric( smoothState( curved, seed = 2 ) )
        grid = m.grid
        u = grid.randomField( generator( 4, 7 ), 2 if grid.n == 1 else 1 )
        strong = grid.integrate( u.values * applyL( u, m ).values, m.determinant )
        weak = hessianEnergy( u, m )
        assert weak > 0.
        assert strong == pytest.approx( weak, rel = 1e-8 )


class TestEigenvalues:
    """Smallest eigenvalues on the flat torus"""

    def test_flat_lichnerowicz( self, n ):
        m = flatMetric( n, 32 if n == 1 else 16 )
        result = firstEigenvalue( m, generator( 0, EIGEN ) )
        assert result.mu1 == pytest.approx( 1. / 16., abs = 1e-8 )
        assert result.residual <= RESIDUAL_TOLERANCE
        u = result.eigenfield.values
        assert abs( sum( u * m.weights ) ) < 1e-8
        assert sum( u ** 2 * m.weights ) == pytest.approx( 1. )

    def test_flat_laplacian( self, n ):
        m = flatMetric( n, 32 if n == 1 else 16 )
        assert laplacianLambda1( m, generator( 1, EIGEN ) ) == pytest.approx( 0.25, abs = 1e-8 )

    def test_curved_metric_is_not_flat( self, curved, zeroState ):
        m = assembleMetric( zeroState( curved ) )
        result = firstEigenvalue( m, generator( 2, EIGEN ) )
        assert 0. < result.mu1
        assert result.mu1 != pytest.approx( 1. / 16., abs = 1e-6 )


class TestPoisson:
    """Solutions of Laplacian_phi v = f"""

    def test_flat_cosine( self, n ):
        m = flatMetric( n, 16 )
        f = RealField( m.grid, cos( m.grid.coordinate( 0 ) ) )
        v = solvePoisson( f, m )
        assert_allclose( v.values, -4. * f.values, atol = 1e-8 )
        assert poissonResidual( v, f, m ) < 1e-8

    def test_curved_residual( self, curved, smoothState ):
        m = assembleMetric( smoothState( curved, seed = 8 ) )
        grid = m.grid
        values = grid.randomField( generator( 9, 7 ), 2 if grid.n == 1 else 1 ).values
        f = RealField( grid, values - sum( values * m.weights ) / m.volume )
        assert poissonResidual( solvePoisson( f, m ), f, m ) < 1e-8

    def test_iteration_cap( self, curved, smoothState ):
        m = assembleMetric( smoothState( curved, seed = 8 ) )
        grid = m.grid
        values = grid.randomField( generator( 9, 7 ), 2 if grid.n == 1 else 1 ).values
        f = RealField( grid, values - sum( values * m.weights ) / m.volume )
        with pytest.raises( NonConvergence, match = "iterations" ):
            solvePoisson( f, m, maxIterations = 1 )
        with pytest.raises( NonConvergence, match = "Poisson residual" ):
            solvePoisson( f, m, tolerance = 1e-2 )

    def test_incompatible_right_hand_side( self ):
        m = flatMetric( 1, 16 )
        with pytest.raises( IncompatibleData ):
            solvePoisson( RealField( m.grid, ones( m.grid.shape ) ), m )

    def test_zero_right_hand_side( self ):
        m = flatMetric( 1, 16 )
        v = solvePoisson( RealField( m.grid, zeros( m.grid.shape ) ), m )
        assert not v.values.any()


class TestConstants:
    """Moser, Sobolev and Poincaré estimates"""

    def test_cosine_norm( self ):
        assert cosineNorm( 2. ) == pytest.approx( 2. ** -0.5 )

    def test_moser_quotient_of_flat_cosine( self ):
        m = flatMetric( 1, 64 )
        f = RealField( m.grid, cos( m.grid.coordinate( 0 ) ) )
        assert moserQuotient( f, m, 4. ) == pytest.approx( 4. / cosineNorm( 4. / 3. ), rel = 1e-3 )

    def test_moser_exponent( self ):
        m = flatMetric( 1, 16 )
        with pytest.raises( ValueError, match = "must exceed 2" ):
            moserQuotient( RealField( m.grid, cos( m.grid.coordinate( 0 ) ) ), m, 2. )

    def test_moser_ratio_needs_trials( self ):
        with pytest.raises( IncompatibleData ):
            moserRatio( flatMetric( 1, 16 ), 4., 0, generator( 0, CONSTANTS ) )

    def test_sobolev_quotient_of_constants( self, n ):
        m = flatMetric( n, 16 )
        assert sobolevQuotient( RealField( m.grid, ones( m.grid.shape ) ), m ) == pytest.approx( 1., rel = 1e-12 )

    def test_sobolev_estimate( self ):
        m = flatMetric( 1, 32 )
        estimate, surrogate = sobolevLowerEstimate( m, 2, generator( 0, CONSTANTS ) )
        assert estimate > 0.
        assert surrogate
        with pytest.raises( ValueError, match = "at least one trial" ):
            sobolevLowerEstimate( m, 0, generator( 0, CONSTANTS ) )

    def test_evaluate_on_flat_torus( self ):
        m = flatMetric( 1, 32 )
        report = evaluateConstants( m, generator( 0, CONSTANTS ), t = 1.5, moserTrials = 2, sobolevTrials = 1 )
        assert report.t == 1.5
        assert report.lambda1 == pytest.approx( 0.25, abs = 1e-8 )
        assert report.poincare == pytest.approx( 4. / m.volume, rel = 1e-6 )
        assert report.moserRatio > 0.
        assert report.sobolevSurrogate
        assert isnan( report.mu1 )
        assert len( report.row() ) == len( COLUMNS )

    def test_evaluate_with_eigenvalue( self ):
        report = evaluateConstants( flatMetric( 1, 32 ), generator( 1, CONSTANTS ), moserTrials = 1, sobolevTrials = 1,
                                    withEigenvalue = True )
        assert isinstance( report, ConstantsReport )
        assert report.mu1 == pytest.approx( 1. / 16., abs = 1e-8 )

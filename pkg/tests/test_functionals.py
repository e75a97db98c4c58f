import pytest
from math import sqrt
from numpy import abs, max
from numpy.testing import assert_allclose
from calabiflow.functionals.functionals import aubinIJ, dingD, dingDExpanded, dingDerivative, entropy, jFunctional, \
    jDerivative, kEnergy, kEnergyDerivative, calabiEnergy, oscillation, lpNorm, segmentLength, pathIncrement, \
    distanceBounds, evaluate
from calabiflow.functionals.components.report import EnergyReport, COLUMNS
from calabiflow.geometry.geometry import KahlerBackground, PotentialState
from calabiflow.spectral.spectral import SpectralGrid
from calabiflow.util.rng import generator


def cosineState( epsilon: float, N: int = 32 ) -> PotentialState:
    grid = SpectralGrid( 1, N )
    return PotentialState( grid.cosineField( [ ( ( 1, 0 ), epsilon ) ] ), KahlerBackground.flat( grid ) )


def perturbed( state: PotentialState, direction, h: float ) -> PotentialState:
    return PotentialState( state.phi.like( state.phi.values + h * direction ), state.background )


def direction( grid: SpectralGrid, seed: int ):
    field = grid.randomField( generator( seed, 7 ), 2 if grid.n == 1 else 1, meanZero = False )
    return field.values / max( abs( field.values ) )


class TestClosedForms:
    """Functionals of phi = eps cos x on the flat torus"""

    def test_aubin_functionals( self ):
        epsilon = 0.1
        I, J = aubinIJ( cosineState( epsilon ) )
        assert I == pytest.approx( epsilon ** 2 / 8., rel = 1e-12 )
        assert J == pytest.approx( 0.5 * I, rel = 1e-12 )

    def test_ding_functional( self ):
        state = cosineState( 0.1 )
        assert dingD( state ) == pytest.approx( -0.1 ** 2 / 16., rel = 1e-12 )
        assert dingDExpanded( state ) == pytest.approx( dingD( state ), rel = 1e-12 )

    def test_entropy_and_calabi_energy( self ):
        epsilon = 1e-3
        state = cosineState( epsilon )
        volume = state.background.volume
        assert entropy( state ) == pytest.approx( epsilon ** 2 * volume / 64., rel = 1e-2 )
        assert calabiEnergy( state ) == pytest.approx( epsilon ** 2 * volume / 512., rel = 1e-2 )

    def test_k_energy_is_entropy_on_flat_background( self ):
        state = cosineState( 0.3 )
        assert jFunctional( state ) == 0.
        assert kEnergy( state ) == pytest.approx( entropy( state ), rel = 1e-14 )

    def test_oscillation_and_segment( self ):
        epsilon = 0.2
        state = cosineState( epsilon )
        assert oscillation( state ) == pytest.approx( 2. * epsilon )
        assert segmentLength( state ) == pytest.approx( epsilon * sqrt( 0.5 * state.background.volume ), rel = 1e-12 )

    def test_zero_potential( self, flat, zeroState ):
        state = zeroState( flat )
        assert aubinIJ( state ) == ( 0., 0. )
        assert calabiEnergy( state ) == 0.
        assert segmentLength( state ) == 0.


class TestIdentities:
    """Identities and inequalities on random potentials"""

    def test_aubin_bounds( self, curved, smoothState, n ):
        for seed in range( 5 ):
            I, J = aubinIJ( smoothState( curved, seed = seed ) )
            assert I > 0.
            assert I / ( n + 1 ) <= J * ( 1. + 1e-12 )
            assert J <= n * I / ( n + 1 ) * ( 1. + 1e-12 )

    def test_ding_expansion( self, curved, smoothState ):
        state = smoothState( curved, seed = 3 )
        assert_allclose( dingDExpanded( state ), dingD( state ), rtol = 1e-9, atol = 1e-15 )

    def test_entropy_is_nonnegative( self, curved, smoothState ):
        state = smoothState( curved, seed = 2 )
        assert entropy( state ) >= -1e-12 * curved.volume

    def test_j_vanishes_on_flat_background( self, flat, smoothState ):
        state = smoothState( flat )
        assert jFunctional( state ) == 0.
        assert jDerivative( state, direction( state.grid, 0 ) ) == 0.

    @pytest.mark.parametrize( "functional, derivative", [ ( dingD, dingDerivative ),
                                                          ( jFunctional, jDerivative ),
                                                          ( kEnergy, kEnergyDerivative ) ],
                              ids = [ "D", "j", "nu" ] )
    def test_path_derivatives( self, curved, smoothState, functional, derivative ):
        state = smoothState( curved, seed = 1 )
        u = direction( state.grid, 1 )
        h = 1e-4
        difference = ( functional( perturbed( state, u, h ) ) - functional( perturbed( state, u, -h ) ) ) / ( 2. * h )
        assert difference == pytest.approx( derivative( state, u ), rel = 1e-5 )

    def test_ding_shifts_with_constants( self, flat, smoothState ):
        state = smoothState( flat )
        shifted = state.shifted( 1.5 )
        assert dingD( shifted ) - dingD( state ) == pytest.approx( 1.5, rel = 1e-12 )

    def test_distance_lower_bound_below_segment( self, curved, smoothState ):
        state = smoothState( curved, seed = 5 )
        lower, length = distanceBounds( state )
        assert 0. < lower <= length

    def test_path_increment( self, flat, smoothState ):
        state = smoothState( flat )
        assert pathIncrement( state, state ) == 0.
        later = state.shifted( 0.5 )
        assert pathIncrement( state, later ) == pytest.approx( 0.5 * sqrt( flat.volume ), rel = 1e-12 )

    def test_lp_norm_exponent( self, flat, smoothState ):
        with pytest.raises( ValueError, match = "at least 1" ):
            lpNorm( smoothState( flat ), 0.5 )


class TestEnergyReport:
    """Assembled functional reports"""

    def test_evaluate( self, curved, smoothState, n ):
        state = smoothState( curved, seed = 6 )
        report = evaluate( state, t = 2. )
        assert report.t == 2.
        assert report.V == pytest.approx( curved.volume )
        assert report.nu == pytest.approx( kEnergy( state ), rel = 1e-12, abs = 1e-15 )
        assert report.nu == pytest.approx( report.E + report.V * report.j, rel = 1e-12, abs = 1e-15 )
        assert report.Ca == pytest.approx( calabiEnergy( state ) )
        assert report.lpS == pytest.approx( lpNorm( state, 2. * n + 1. ) )
        assert report.pathLen == pytest.approx( segmentLength( state ) )

    def test_row_and_columns( self ):
        report = EnergyReport( *range( len( COLUMNS ) ) )
        assert len( report.row() ) == len( COLUMNS )
        row = { column: str( value ) for column, value in zip( COLUMNS, report.row() ) }
        row[ "extra" ] = "9"
        assert EnergyReport.fromRow( row ) == report

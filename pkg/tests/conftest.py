import pytest
from numpy import abs, max, nan, zeros
from calabiflow.flow.components.config import FlowConfig
from calabiflow.flow.components.trace import FlowTrace, TraceRecord
from calabiflow.functionals.components.report import EnergyReport
from calabiflow.geometry.geometry import KahlerBackground, PotentialState
from calabiflow.spectral.spectral import SpectralGrid
from calabiflow.spectral.components.field import RealField
from calabiflow.util.rng import generator

RESOLUTION: dict[ int, int ] = { 1: 32, 2: 16 }
SMOOTH_MODES: dict[ int, int ] = { 1: 2, 2: 1 }


def _scaled( field: RealField, amplitude: float ) -> RealField:
    return field.like( amplitude / max( abs( field.values ) ) * field.values )


@pytest.fixture( params = [ 1, 2 ], ids = [ "n1", "n2" ] )
def n( request ) -> int:
    return request.param


@pytest.fixture
def grid( n: int ) -> SpectralGrid:
    return SpectralGrid( n, RESOLUTION[ n ] )


@pytest.fixture
def flat( grid: SpectralGrid ) -> KahlerBackground:
    return KahlerBackground.flat( grid )


@pytest.fixture
def curved( grid: SpectralGrid ) -> KahlerBackground:
    psi = grid.randomField( generator( 11, 1 ), SMOOTH_MODES[ grid.n ] )
    return KahlerBackground( grid, _scaled( psi, 0.1 ) )


@pytest.fixture
def smoothState():
    """
    Factory of smooth random potentials with sup |phi| = amplitude on a background
    """
    def make( background: KahlerBackground, seed: int = 0, amplitude: float = 0.05 ) -> PotentialState:
        grid = background.grid
        phi = grid.randomField( generator( seed, 2 ), SMOOTH_MODES[ grid.n ] )
        return PotentialState( _scaled( phi, amplitude ), background )
    return make


@pytest.fixture
def zeroState():
    def make( background: KahlerBackground ) -> PotentialState:
        return PotentialState( RealField( background.grid, zeros( background.grid.shape ) ), background )
    return make


def _record( t: float, dt: float = 0.01, **values: float ) -> TraceRecord:
    report = { "t": t, "I": 0., "J": 0., "D": 0., "E": 0., "j": 0., "nu": 0., "Ca": 0., "osc": 0., "lpS": 0.,
               "distLower": 0., "pathLen": 0., "V": 1. }
    norms = { "Rm": 0., "Ric": 0., "HessS": 0., "gradS": ( 0., 0., 0., 0. ), "dissipation": 0., "ricciLower": 0.,
              "trRatio": 1., "hSup": 0., "mu1": nan, "Ddrift": 0., "margin": 1. }
    for key, value in values.items():
        if key in report:
            report[ key ] = float( value )
        elif key == "gradS":
            norms[ key ] = tuple( float( v ) for v in value )
        else:
            norms[ key ] = float( value )
    return TraceRecord( dt = dt, report = EnergyReport( **report ), **norms )


@pytest.fixture
def makeTrace():
    """
    Factory of synthetic traces from column arrays aligned with the times; unnamed columns are neutral
    """
    def make( times, **columns ) -> FlowTrace:
        return FlowTrace( [ _record( float( t ), **{ key: value[ index ] for key, value in columns.items() } )
                            for index, t in enumerate( times ) ] )
    return make


@pytest.fixture
def quickConfig() -> FlowConfig:
    return FlowConfig( n = 1, N = 16, amplitude = 0.05, maxMode = 2, tEnd = 1., dt0 = 0.25, eigenCadence = 4 )

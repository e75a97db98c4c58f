import json
import pytest
from math import log, isnan
from numpy import exp, linspace
from calabiflow.flow.components.checks import CheckReport, CheckStatus
from calabiflow.flow.components.config import FlowConfig
from calabiflow.geometry.components import curvature
from calabiflow.util.errors import ConfigError, InsufficientData, NonConvergence
from calabiflow.verify.components.fit import fitDecay, fitTrace
from calabiflow.verify.components.manifest import RunManifest
from calabiflow.verify.components.sweep import SweepCell, COLUMNS, runCell, runSweep, threshold, writeSummary
from calabiflow.verify import verify
from calabiflow.verify.verify import VerificationSuite


@pytest.fixture
def smallConfig() -> FlowConfig:
    return FlowConfig( potentials = 5, trials = 2, resolution1 = 32, resolution2 = 16, moserTrials = 2, sobolevTrials = 1 )


class TestDecayFit:
    """Exponential fits of the Calabi energy"""

    def test_exact_exponential( self ):
        t = linspace( 0., 10., 21 )
        fit = fitDecay( t, 3. * exp( -0.5 * t ) )
        assert fit.slope == pytest.approx( -0.5 )
        assert fit.intercept == pytest.approx( log( 3. ) )
        assert fit.rSquared == pytest.approx( 1. )
        assert fit.rate == pytest.approx( 0.25 )
        assert fit.records == 21
        assert fit.window == ( 0., 10. )

    def test_window_and_floor( self ):
        t = linspace( 0., 10., 21 )
        energy = exp( -t )
        energy[ -3: ] = 0.
        fit = fitDecay( t, energy, ( 0., 10. ) )
        assert fit.records == 18
        assert fit.slope == pytest.approx( -1. )

    @pytest.mark.parametrize( "window", [ ( 2., 4. ), ( 3., 3. ), ( 5., 1. ) ] )
    def test_insufficient_data( self, window ):
        t = linspace( 0., 10., 21 )
        with pytest.raises( InsufficientData ):
            fitDecay( t, exp( -t ), window )

    def test_fit_trace_uses_second_half( self, makeTrace ):
        t = linspace( 0., 10., 41 )
        fit = fitTrace( makeTrace( t, Ca = exp( -t ) ) )
        assert fit.window == ( 5., 10. )
        assert fit.records == 21
        assert fit.rate == pytest.approx( 0.5 )


class TestRunManifest:
    """JSON manifests of command runs"""

    def test_write( self, tmp_path ):
        output = tmp_path / "trace.csv"
        output.write_text( "t\n0\n", encoding = "utf-8" )
        manifest = RunManifest( "flow", { "n": 1 }, "1.0.0", 7 )
        manifest.addOutput( output )
        manifest.addOutput( output )
        manifest.addCheck( CheckReport.hard( "conservation", True, detail = "fine" ) )
        manifest.addCheck( CheckReport.reportOnly( "rate monitor", False ) )
        data = json.loads( manifest.write( tmp_path / "manifest.json" ).read_text( encoding = "utf-8" ) )
        assert data[ "command" ] == "flow"
        assert data[ "seed" ] == 7
        assert data[ "config" ] == { "n": 1 }
        assert data[ "outputs" ] == [ { "path": str( output ), "bytes": 4 } ]
        assert [ check[ "result" ] for check in data[ "checks" ] ] == [ "pass", "report-only" ]
        assert data[ "start" ] <= data[ "end" ]

    def test_duplicate_check( self ):
        manifest = RunManifest( "verify", {}, "1.0.0", 0 )
        manifest.addCheck( CheckReport.hard( "Moser ratio", True ) )
        with pytest.raises( ValueError, match = "already in the manifest" ):
            manifest.addCheck( CheckReport.hard( "Moser ratio", False ) )

    def test_missing_output( self, tmp_path ):
        manifest = RunManifest( "flow", {}, "1.0.0", 0 )
        manifest.addOutput( tmp_path / "absent.csv" )
        with pytest.raises( ValueError, match = "missing or empty" ):
            manifest.toDict()


class TestSweep:
    """Amplitude and resolution sweeps"""

    def test_threshold( self ):
        cells = [ SweepCell( amplitude, N, "converged" if ok else "finished", ok, 0.0625, 1., False )
                  for amplitude, N, ok in [ ( 0.01, 16, True ), ( 0.01, 32, True ), ( 0.02, 16, True ),
                                            ( 0.02, 32, True ), ( 0.04, 16, True ), ( 0.04, 32, False ) ] ]
        assert threshold( cells ) == 0.02
        assert isnan( threshold( cells[ -1: ] ) )

    def test_row( self ):
        cell = SweepCell( 0.01, 16, "converged", True, 0.0625, 1.5, False )
        assert cell.row() == [ "0.01", "16", "converged", "1", "0.0625", "1.5", "0" ]
        collapsed = SweepCell( 0.5, 32, "collapse", False, float( "nan" ), float( "nan" ), True )
        assert collapsed.row()[ 4: ] == [ "", "", "1" ]

    def test_write_summary( self, tmp_path ):
        path = writeSummary( [ SweepCell( 0.01, 16, "finished", False, 0.06, 1., False ) ], tmp_path / "sweep.csv" )
        lines = path.read_text( encoding = "utf-8" ).splitlines()
        assert lines[ 0 ] == ",".join( COLUMNS )
        assert len( lines ) == 2

    def test_empty_sweep( self ):
        with pytest.raises( ConfigError, match = "sweep grid is empty" ):
            runSweep( FlowConfig() )

    def test_invalid_resolution( self ):
        with pytest.raises( ConfigError ):
            runSweep( FlowConfig( sweepAmplitudes = ( 0.01, ), sweepResolutions = ( 16, 24 ) ) )

    def test_invalid_cell_is_recorded( self ):
        config = FlowConfig( n = 1, N = 16, modes = ( ( ( 1, 0 ), 1. ), ) )
        cell = runCell( config, 5., 16 )
        assert cell.status == "invalid"
        assert not cell.converged
        assert isnan( cell.muFit )

    def test_cells_in_order( self ):
        config = FlowConfig( n = 1, N = 16, tEnd = 0.5, dt0 = 0.25, eigenCadence = 1000, modes = ( ( ( 1, 0 ), 1. ), ),
                             sweepAmplitudes = ( 0., 5. ), jobs = 1 )
        cells = runSweep( config )
        assert [ ( cell.amplitude, cell.N, cell.status ) for cell in cells ] == [ ( 0., 16, "finished" ), ( 5., 16, "invalid" ) ]
        assert cells[ 0 ].maxRm == 0.


class TestVerificationSuite:
    """Individual checks of the verification suite"""

    def test_linearization( self, smallConfig ):
        report = VerificationSuite( smallConfig ).linearization()
        assert report.status is CheckStatus.PASS

    def test_linearization_detects_wrong_curvature_sign( self, smallConfig, monkeypatch ):
        ricci = curvature.ricci
        monkeypatch.setattr( curvature, "ricci", lambda m: -ricci( m ) )
        report = VerificationSuite( smallConfig ).linearization()
        assert report.failed

    def test_functional_samples( self, smallConfig ):
        suite = VerificationSuite( smallConfig )
        for report in ( suite.aubinBounds(), suite.aubinHalf(), suite.entropyBound() ):
            assert report.status is CheckStatus.PASS, report.detail

    def test_path_derivatives( self, smallConfig ):
        suite = VerificationSuite( smallConfig )
        for report in ( suite.dingPath(), suite.jPath(), suite.kEnergyIdentity() ):
            assert report.status is CheckStatus.PASS, report.detail

    def test_operators( self, smallConfig ):
        suite = VerificationSuite( smallConfig )
        for report in ( suite.quadraticForm(), suite.poissonResiduals(), suite.hamilton() ):
            assert report.status is CheckStatus.PASS, report.detail

    def test_flat_spectrum_is_reproducible( self, smallConfig ):
        first = VerificationSuite( smallConfig ).flatSpectrum()
        second = VerificationSuite( smallConfig ).flatSpectrum()
        assert first.status is CheckStatus.PASS
        assert first.detail == second.detail

    def test_report_only_checks( self, smallConfig ):
        suite = VerificationSuite( smallConfig )
        for report in ( suite.classConstraint(), suite.volumeRatio(), suite.chernLuProduct() ):
            assert report.status is CheckStatus.REPORT_ONLY
            assert report.holds, report.detail

    def test_sobolev_trials_apply_to_both_dimensions( self, monkeypatch ):
        calls = []

        def estimate( m, trials, generator ):
            calls.append( ( m.grid.n, trials ) )
            return 1., m.grid.n == 1

        monkeypatch.setattr( verify, "sobolevLowerEstimate", estimate )
        config = FlowConfig( resolution1 = 16, resolution2 = 16, sobolevTrials = 3 )
        report = VerificationSuite( config ).sobolev()
        assert report.holds
        assert calls == [ ( 1, 3 ), ( 1, 3 ), ( 2, 3 ), ( 2, 3 ) ]

    def test_errors_fail_their_check( self, smallConfig, monkeypatch ):
        suite = VerificationSuite( smallConfig )

        def broken() -> CheckReport:
            raise NonConvergence( "eigen residual too large" )

        monkeypatch.setattr( suite, "_checks", lambda: [ ( "first", True, lambda: CheckReport.hard( "first", True ) ),
                                                         ( "second", True, broken ),
                                                         ( "third", False, broken ) ] )
        reports = suite.run()
        assert [ report.status for report in reports ] == [ CheckStatus.PASS, CheckStatus.FAIL, CheckStatus.REPORT_ONLY ]
        assert "NonConvergence" in reports[ 1 ].detail
        assert not reports[ 2 ].holds
        assert not suite.passed
        table = suite.table().splitlines()
        assert table[ 0 ].split() == [ "#", "check", "result", "detail" ]
        assert table[ -1 ] == "1 of 2 hard checks passed"

    @pytest.mark.slow
    def test_full_suite_passes( self ):
        config = FlowConfig( potentials = 50, trials = 3, moserTrials = 4, sobolevTrials = 2 )
        suite = VerificationSuite( config )
        reports = suite.run()
        assert len( reports ) == 17
        assert suite.passed, suite.table()
        assert sum( report.status is CheckStatus.REPORT_ONLY for report in reports ) == 5

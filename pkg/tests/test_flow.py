import pytest
from pathlib import Path
from math import exp as scalarExp
from numpy import cos, diff, exp, linspace, nan, abs
from numpy.testing import assert_array_equal
from calabiflow.flow.components.checks import CheckStatus, FlowType, classifyType, eigenDecayCheck, derivativeDecayCheck, \
    gradientFlowCheck, dissipationCheck, conservationCheck, chenCheck, caMonotoneCheck, rateMonitor, hamiltonInterpolation
from calabiflow.flow.components.config import FlowConfig, parseModes
from calabiflow.flow.components.monitor import hBoundMonitor, chernLuMonitor, oscillationMonitor
from calabiflow.flow.components.trace import FlowTrace, COLUMNS
from calabiflow.flow.flow import FlowIntegrator, adaptiveRun, buildBackground, buildPotential, flowChecks, step, \
    stabilizationConstant
from calabiflow.functionals.functionals import dingD
from calabiflow.geometry.geometry import KahlerBackground, PotentialState
from calabiflow.spectral.spectral import SpectralGrid
from calabiflow.spectral.components.checkpoint import writeCheckpoint
from calabiflow.util.errors import ConfigError, InsufficientTrace, NumericalBreakdown, StepCollapse
from calabiflow.util.rng import generator
from calabiflow.verify.components.fit import fitTrace


def unitCoefficient( state: PotentialState ) -> float:
    grid = state.grid
    x = grid.coordinate( 0 )
    return grid.integrate( state.phi.values * cos( x ) ) / grid.integrate( cos( x ) ** 2 )


def cosineState( epsilon: float, N: int = 16 ) -> PotentialState:
    grid = SpectralGrid( 1, N )
    return PotentialState( grid.cosineField( [ ( ( 1, 0 ), epsilon ) ] ), KahlerBackground.flat( grid ) )


class TestFlowConfig:
    """INI configuration files"""

    def test_defaults( self ):
        config = FlowConfig()
        assert ( config.n, config.N ) == ( 1, 128 )
        assert config.lp == 3.
        assert config.moser == 4.
        assert config.eigenSettings == { "sigma": 1e-3, "blockSize": 4, "maxIterations": 400, "tolerance": 1e-8 }

    def test_parse_text( self ):
        text = "[grid]\nn = 2\nN = 32\n\n[perturbation]\namplitude = 0.1  # small\nmodes = 1,0,0,0:1; 0,1,0,0:0.5\n" \
               "[sweep]\namplitudes = 0.01, 0.02\nresolutions = 16 32\n"
        config = FlowConfig.fromText( text, "run.ini" )
        assert ( config.n, config.N, config.amplitude ) == ( 2, 32, 0.1 )
        assert config.modes == ( ( ( 1, 0, 0, 0 ), 1. ), ( ( 0, 1, 0, 0 ), 0.5 ) )
        assert config.sweepAmplitudes == ( 0.01, 0.02 )
        assert config.sweepResolutions == ( 16, 32 )
        assert config.lineOf( "amplitude" ) == 6
        assert config.lineOf( "seed" ) == 0

    def test_unknown_key( self ):
        with pytest.raises( ConfigError, match = "unknown key 'foo' in section \\[grid\\]" ) as error:
            FlowConfig.fromText( "[grid]\nn = 1\nfoo = 3\n", "run.ini" )
        assert error.value.line == 3
        assert error.value.path == "run.ini"

    def test_invalid_value( self ):
        with pytest.raises( ConfigError, match = "invalid value 'soon'" ) as error:
            FlowConfig.fromText( "[flow]\n\ntEnd = soon\n" )
        assert error.value.line == 3

    def test_validation_points_at_the_key( self ):
        with pytest.raises( ConfigError, match = "tEnd must exceed" ) as error:
            FlowConfig.fromText( "[flow]\ntStart = 5\ntEnd = 2\n" )
        assert error.value.line == 3
        with pytest.raises( ConfigError ) as error:
            FlowConfig.fromText( "[grid]\nN = 24\n" )
        assert error.value.line == 2
        with pytest.raises( ConfigError, match = "needs 4 entries" ) as error:
            FlowConfig.fromText( "[grid]\nn = 2\nN = 16\n[perturbation]\nmodes = 1,0:1\n" )
        assert error.value.line == 5

    @pytest.mark.parametrize( "changes", [ { "dt0": 0. }, { "safety": 1.5 }, { "stabilization": 0.5 }, { "trials": 0 },
                                           { "amplitude": -1. }, { "minimumMargin": 2. }, { "lpExponent": 1. } ] )
    def test_rejects_invalid_settings( self, changes ):
        with pytest.raises( ConfigError ):
            FlowConfig( **changes )

    def test_missing_file( self, tmp_path ):
        with pytest.raises( ConfigError, match = "cannot read configuration" ) as error:
            FlowConfig.fromFile( tmp_path / "absent.ini" )
        assert error.value.line == 0

    def test_read_file( self, tmp_path ):
        path = tmp_path / "run.ini"
        path.write_text( "[run]\nseed = 17\n", encoding = "utf-8" )
        config = FlowConfig.fromFile( path )
        assert config.seed == 17
        assert config.source == str( path )

    def test_shipped_defaults( self ):
        path = Path( __file__ ).parents[ 1 ] / "configs" / "default.ini"
        assert FlowConfig.fromFile( path ) == FlowConfig()

    def test_parse_modes( self ):
        assert parseModes( "1,0:0.5;" ) == ( ( ( 1, 0 ), 0.5 ), )
        assert parseModes( "" ) == ()
        with pytest.raises( ValueError, match = "lacks ':coefficient'" ):
            parseModes( "1,0" )

    def test_overrides_and_echo( self ):
        config = FlowConfig()
        assert config.withOverrides() is config
        changed = config.withOverrides( seed = 7, directory = "elsewhere" )
        assert ( changed.seed, changed.directory ) == ( 7, "elsewhere" )
        cell = config.withCell( 0.02, 32 )
        assert ( cell.amplitude, cell.N ) == ( 0.02, 32 )
        echo = config.echo()
        assert "lines" not in echo
        assert echo[ "tEnd" ] == 200.


class TestInitialData:
    """Background and initial potential of a run"""

    def test_potential_is_normalized( self, quickConfig ):
        state = buildPotential( quickConfig, buildBackground( quickConfig ) )
        assert abs( dingD( state ) ) < 1e-14
        assert state.positivityMargin >= quickConfig.minimumMargin

    def test_cosine_modes_scale_with_amplitude( self ):
        config = FlowConfig( n = 1, N = 16, amplitude = 0.2, modes = ( ( ( 1, 0 ), 1. ), ) )
        state = buildPotential( config, buildBackground( config ) )
        assert unitCoefficient( state ) == pytest.approx( 0.2 )

    @pytest.mark.parametrize( "amplitude", [ 3., 5. ] )
    def test_rejects_large_perturbations( self, amplitude ):
        config = FlowConfig( n = 1, N = 16, amplitude = amplitude, modes = ( ( ( 1, 0 ), 1. ), ) )
        with pytest.raises( ConfigError, match = "initial potential not Kähler" ):
            buildPotential( config, buildBackground( config ) )

    def test_curved_background( self ):
        config = FlowConfig( n = 1, N = 16, backgroundAmplitude = 0.1 )
        background = buildBackground( config )
        assert not background.isFlat
        with pytest.raises( ConfigError, match = "background potential not Kähler" ):
            buildBackground( FlowConfig( n = 1, N = 16, backgroundAmplitude = 5., backgroundModes = ( ( ( 1, 0 ), 1. ), ) ) )

    def test_resume( self, tmp_path, quickConfig ):
        state = buildPotential( quickConfig, buildBackground( quickConfig ) )
        path = writeCheckpoint( tmp_path / "phi.calb", state.phi )
        resumed = FlowConfig( n = 1, N = 16, resume = str( path ) )
        assert_array_equal( buildPotential( resumed, buildBackground( resumed ) ).phi.values, state.phi.values )
        other = FlowConfig( n = 1, N = 32, resume = str( path ) )
        with pytest.raises( ConfigError, match = "checkpoint lives on" ):
            buildPotential( other, buildBackground( other ) )


class TestStep:
    """One semi-implicit step"""

    def test_stabilization_constant( self ):
        state = cosineState( 2. )
        assert state.positivityMargin == pytest.approx( 0.5 )
        assert stabilizationConstant( state ) == pytest.approx( 4. )
        assert stabilizationConstant( state, 10. ) == 10.

    def test_linear_decay_factor( self ):
        state = cosineState( 1e-6 )
        dt = 0.5
        after = step( state, dt )
        assert unitCoefficient( after ) / unitCoefficient( state ) == pytest.approx( 1. / ( 1. + dt / 16. ), rel = 1e-6 )

    @pytest.mark.parametrize( "n", [ 1 ] )
    def test_ding_functional_is_conserved( self, curved, smoothState ):
        state = smoothState( curved, amplitude = 0.1 )
        after = step( state, 0.2 )
        assert abs( dingD( after ) - dingD( state ) ) < 1e-12

    def test_non_finite_step( self ):
        with pytest.raises( NumericalBreakdown ):
            step( cosineState( 0.1 ), nan )


class TestIntegrator:
    """Adaptive integration of the flow"""

    def test_flat_potential_stays_flat( self, tmp_path ):
        config = FlowConfig( n = 1, N = 16, amplitude = 0., tEnd = 1., dt0 = 0.25, eigenCadence = 4, checkpointCadence = 2 )
        integrator = FlowIntegrator( config, tmp_path )
        trace = integrator.run()
        assert trace.stepCount == 4
        assert trace.rejectedCount == 0
        assert len( trace ) == trace.stepCount + 1
        assert not trace.converged
        assert trace.span == ( 0., 1. )
        assert not trace.column( "Ca" ).any()
        mu = trace.column( "mu1" )
        assert mu[ 0 ] == pytest.approx( 1. / 16., abs = 1e-8 )
        assert mu[ -1 ] == pytest.approx( 1. / 16., abs = 1e-8 )
        assert [ path.name for path in integrator.outputs ] == [ "checkpoint_000002.calb", "checkpoint_000004.calb", "final.calb" ]
        reports = flowChecks( trace, 1 )
        assert len( reports ) == 12
        assert len( { report.name for report in reports } ) == 12
        assert not any( report.failed for report in reports )

    def test_linear_decay_rate( self ):
        config = FlowConfig( n = 1, N = 32, amplitude = 1e-6, modes = ( ( ( 1, 0 ), 1. ), ), tEnd = 16., dt0 = 0.05,
                             dtMax = 0.1, eigenCadence = 10000 )
        integrator = FlowIntegrator( config )
        trace = integrator.run()
        ratio = unitCoefficient( integrator.state ) / unitCoefficient( integrator.initial )
        assert ratio == pytest.approx( scalarExp( -1. ), rel = 1e-2 )
        ca = trace.column( "Ca" )
        assert ca[ -1 ] / ca[ 0 ] == pytest.approx( scalarExp( -2. ), rel = 2e-2 )
        assert ( trace.column( "Ddrift" ) < 1e-12 ).all()

    def test_runs_are_reproducible( self, tmp_path, quickConfig ):
        first = adaptiveRun( quickConfig ).writeCsv( tmp_path / "first.csv" )
        second = adaptiveRun( quickConfig ).writeCsv( tmp_path / "second.csv" )
        assert first.read_bytes() == second.read_bytes()

    def test_energy_decreases( self, quickConfig ):
        trace = adaptiveRun( quickConfig )
        assert not caMonotoneCheck( trace ).failed
        assert not conservationCheck( trace ).failed
        assert not chenCheck( trace ).failed

    def test_step_collapse_carries_the_trace( self ):
        with pytest.raises( StepCollapse ) as error:
            adaptiveRun( FlowConfig( n = 1, N = 16, amplitude = 0., dt0 = 1e-13, eigenCadence = 1000 ) )
        assert len( error.value.trace ) == 1


@pytest.mark.slow
class TestLongRuns:
    """Full runs until the Calabi energy reaches the terminal threshold"""

    def test_random_perturbation_converges_at_the_linear_rate( self ):
        config = FlowConfig( n = 1, N = 64, amplitude = 0.05, maxMode = 2, tEnd = 400., dtMax = 0.5, eigenCadence = 50 )
        trace = FlowIntegrator( config ).run()
        assert trace.converged
        assert trace.records[ -1 ].report.Ca <= 1e-16 * trace.records[ -1 ].report.V
        assert fitTrace( trace ).slope == pytest.approx( -0.125, rel = 0.1 )
        nu = trace.column( "nu" )
        assert ( diff( nu ) <= 1e-12 ).all()
        assert conservationCheck( trace ).status is CheckStatus.PASS
        assert ( trace.column( "Ddrift" ) < 1e-10 ).all()
        assert not eigenDecayCheck( trace ).failed
        assert trace.column( "mu1" )[ -1 ] == pytest.approx( 1. / 16., abs = 1e-6 )

    def test_fine_steps_follow_the_gradient_flow( self ):
        config = FlowConfig( n = 1, N = 32, amplitude = 0.05, modes = ( ( ( 1, 0 ), 1. ), ( ( 1, 1 ), 0.5 ) ), tEnd = 2.,
                             dt0 = 0.01, dtMax = 0.01, eigenCadence = 100 )
        trace = FlowIntegrator( config ).run()
        assert gradientFlowCheck( trace ).status is CheckStatus.PASS
        assert dissipationCheck( trace ).status is CheckStatus.PASS

    def test_two_dimensional_rate( self ):
        config = FlowConfig( n = 2, N = 16, amplitude = 0.02, modes = ( ( ( 1, 0, 0, 0 ), 1. ), ), tEnd = 120., dtMax = 0.5,
                             eigenCadence = 10000 )
        trace = FlowIntegrator( config ).run()
        assert fitTrace( trace ).rate == pytest.approx( 1. / 16., rel = 0.2 )


class TestFlowTrace:
    """Trace records and CSV files"""

    def test_times_must_increase( self, makeTrace ):
        trace = makeTrace( [ 0., 1. ] )
        with pytest.raises( ValueError, match = "does not follow" ):
            trace.append( trace[ 0 ] )

    def test_csv_round_trip( self, tmp_path, makeTrace ):
        trace = makeTrace( [ 0., 0.5, 1. ], Ca = [ 1., 0.5, 1. / 3. ], mu1 = [ 0.0625, nan, 0.06 ],
                           gradS = [ ( 1., 2., 3., 4. ) ] * 3 )
        path = trace.writeCsv( tmp_path / "trace.csv" )
        assert path.read_text( encoding = "utf-8" ).splitlines()[ 0 ] == ",".join( COLUMNS )
        restored = FlowTrace.readCsv( path )
        assert len( restored ) == 3
        for column in COLUMNS:
            assert_array_equal( restored.column( column ), trace.column( column ) )

    def test_rejects_foreign_csv( self, tmp_path ):
        path = tmp_path / "trace.csv"
        path.write_text( "t,dt\n0,1\n", encoding = "utf-8" )
        with pytest.raises( ValueError, match = "lacks trace columns" ):
            FlowTrace.readCsv( path )


class TestTraceChecks:
    """Checks on synthetic traces"""

    def test_gradient_flow_and_dissipation( self, makeTrace ):
        t = linspace( 0., 1., 101 )
        trace = makeTrace( t, Ca = exp( -2. * t ), nu = 0.5 * exp( -2. * t ), dissipation = exp( -2. * t ) )
        gradient = gradientFlowCheck( trace )
        assert gradient.status is CheckStatus.PASS
        assert gradient.slack > 0.
        assert dissipationCheck( trace ).status is CheckStatus.PASS

    def test_gradient_flow_failure( self, makeTrace ):
        t = linspace( 0., 1., 101 )
        trace = makeTrace( t, Ca = exp( -2. * t ), nu = exp( -2. * t ), dissipation = 3. * exp( -2. * t ) )
        assert gradientFlowCheck( trace ).failed
        assert dissipationCheck( trace ).failed

    def test_coarse_trace_is_report_only( self, makeTrace ):
        trace = makeTrace( [ 0., 0.5, 1. ], Ca = [ 1., 0.5, 0.25 ] )
        assert gradientFlowCheck( trace ).status is CheckStatus.REPORT_ONLY
        assert dissipationCheck( trace ).status is CheckStatus.REPORT_ONLY

    def test_monotone_energy( self, makeTrace ):
        assert not caMonotoneCheck( makeTrace( [ 0., 1., 2. ], Ca = [ 1., 0.5, 0.25 ] ) ).failed
        assert caMonotoneCheck( makeTrace( [ 0., 1., 2. ], Ca = [ 1., 0.5, 0.6 ] ) ).failed

    def test_chen_inequality( self, makeTrace ):
        assert not chenCheck( makeTrace( [ 0., 1. ], nu = [ 1., 0.5 ], Ca = [ 1., 0.1 ], pathLen = [ 0., 1. ] ) ).failed
        assert chenCheck( makeTrace( [ 0., 1. ], nu = [ 1., 0.5 ], Ca = [ 1., 0.1 ], pathLen = [ 0., 0.1 ] ) ).failed

    def test_conservation( self, makeTrace ):
        times = [ 0., 1., 2. ]
        assert not conservationCheck( makeTrace( times, Ddrift = [ 0., 1e-7, 1.5e-6 ] ) ).failed
        assert conservationCheck( makeTrace( times, Ddrift = [ 0., 1e-7, 3e-6 ] ) ).failed

    def test_classify_type( self, makeTrace ):
        trace = makeTrace( [ 0., 1., 2. ], Rm = [ 1., 1., 10. ], HessS = [ 0.5, 0.5, 0.5 ] )
        assert classifyType( trace, 1., 2. ) is FlowType.TYPEII
        assert classifyType( trace, 1., 1.2 ) is FlowType.TYPEI
        assert classifyType( trace, 1., 0.5 ) is FlowType.NEITHER
        assert classifyType( trace, 2., 2. ) is FlowType.NEITHER
        with pytest.raises( InsufficientTrace ):
            classifyType( trace, 5., 2. )
        with pytest.raises( ValueError ):
            classifyType( trace, -1., 2. )

    def test_eigen_decay( self, makeTrace ):
        times = [ 0., 1., 2. ]
        holding = makeTrace( times, mu1 = [ 0.0625, nan, 0.06 ], Ric = [ 0.1 ] * 3, HessS = [ 0.01 ] * 3 )
        assert eigenDecayCheck( holding ).status is CheckStatus.PASS
        failing = makeTrace( times, mu1 = [ 0.0625, nan, 0.001 ] )
        assert eigenDecayCheck( failing ).failed
        assert eigenDecayCheck( makeTrace( times ) ).status is CheckStatus.REPORT_ONLY

    def test_derivative_decay( self, makeTrace ):
        t = linspace( 0., 10., 21 )
        ca = exp( -8. * t )
        scaled = [ ( value ** ( 1. / 16. ), ) * 4 for value in ca ]
        steady = derivativeDecayCheck( makeTrace( t, Ca = ca, gradS = scaled ), 1 )
        assert steady.status is CheckStatus.REPORT_ONLY
        assert steady.holds
        assert not derivativeDecayCheck( makeTrace( t, Ca = ca, gradS = [ ( 1., ) * 4 ] * 21 ), 1 ).holds
        assert derivativeDecayCheck( makeTrace( t ), 1 ).holds

    def test_rate_monitor( self, makeTrace ):
        t = linspace( 0., 4., 41 )
        mu = [ nan ] * 41
        mu[ 10 ], mu[ 20 ] = 0.0625, 0.0625
        report = rateMonitor( makeTrace( t, Ca = exp( -0.125 * t ), mu1 = mu ) )
        assert report.status is CheckStatus.REPORT_ONLY
        assert report.holds

    def test_hamilton_interpolation( self ):
        grid = SpectralGrid( 1, 16 )
        spectrum = grid.transform( grid.randomField( generator( 3, 7 ), 4 ).values )
        assert hamiltonInterpolation( spectrum, grid.laplacianSymbol ) >= 0.
        assert hamiltonInterpolation( spectrum, grid.laplacianSymbol, 1, 3 ) >= 0.
        single = grid.transform( cos( 2. * grid.coordinate( 1 ) ) )
        assert hamiltonInterpolation( single, grid.laplacianSymbol ) == pytest.approx( 0., abs = 1e-9 * abs( single ).max() ** 2 )
        with pytest.raises( ValueError ):
            hamiltonInterpolation( spectrum, grid.laplacianSymbol, 2, 1 )


class TestMonitors:
    """Report-only monitors of a priori estimates"""

    def test_monitors_never_fail( self, makeTrace ):
        t = [ 0., 1., 2., 3. ]
        trace = makeTrace( t, osc = [ 0.1, 0.08, 0.06, 0.05 ], I = [ 0.01, 0.008, 0.006, 0.005 ],
                           hSup = [ 0.02, 0.015, 0.01, 0.008 ], lpS = [ 0.1, 0.05, 0.02, 0.01 ], trRatio = [ 1.1, 1.05, 1.02, 1.01 ] )
        for report in ( hBoundMonitor( trace ), chernLuMonitor( trace ), oscillationMonitor( trace ) ):
            assert report.status is CheckStatus.REPORT_ONLY
            assert report.holds

    def test_trace_ratio_breakdown( self, makeTrace ):
        report = chernLuMonitor( makeTrace( [ 0., 1. ], trRatio = [ 1., nan ] ) )
        assert not report.holds
        assert not report.failed

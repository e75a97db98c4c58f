"""
Command line front end.

Exit codes: 0 success, 1 configuration or input error, 2 step collapse ( or a sweep without a converged
cell ), 3 numerical breakdown or a failed eigen solve, 4 a failed hard verification check.
"""
import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Sequence
from calabiflow import __version__
from calabiflow.flow.components.checks import CheckReport
from calabiflow.flow.components.config import FlowConfig
from calabiflow.flow.components.trace import FlowTrace, formatValue
from calabiflow.flow.flow import FlowIntegrator, buildBackground, buildPotential, flowChecks
from calabiflow.geometry.geometry import assembleMetric
from calabiflow.spectrum.components.constants import COLUMNS as CONSTANTS_COLUMNS
from calabiflow.spectrum.spectrum import evaluateConstants
from calabiflow.util.errors import ConfigError, InsufficientData, NonConvergence, StepCollapse, NumericalBreakdown
from calabiflow.util.log import configureLogging
from calabiflow.util.rng import generator, CONSTANTS
from calabiflow.verify.components.fit import DecayFit, fitTrace
from calabiflow.verify.components.manifest import RunManifest
from calabiflow.verify.components.sweep import runSweep, threshold, writeSummary
from calabiflow.verify.verify import VerificationSuite

logger = logging.getLogger( __name__ )

EXIT_OK: int = 0
EXIT_INPUT: int = 1
EXIT_COLLAPSE: int = 2
EXIT_BREAKDOWN: int = 3
EXIT_VERIFY: int = 4


def _manifest( command: str, config: FlowConfig ) -> RunManifest:
    return RunManifest( command, config.echo(), __version__, config.seed )


def _outputDirectory( config: FlowConfig ) -> Path:
    directory = Path( config.directory )
    directory.mkdir( parents = True, exist_ok = True )
    return directory


def cmdFlow( config: FlowConfig ) -> int:
    """
    Run the Calabi flow and write the trace, the checkpoints and the manifest with the trace checks

    Parameters:
        config ( FlowConfig ): configuration

    Returns:
        int: 0 when the run completes, 2 on step collapse, 3 on numerical breakdown
    """
    directory = _outputDirectory( config )
    manifest = _manifest( "flow", config )
    integrator = FlowIntegrator( config, directory )
    code = EXIT_OK
    try:
        trace = integrator.run()
    except ( StepCollapse, NumericalBreakdown ) as error:
        logger.error( str( error ) )
        code = EXIT_COLLAPSE if isinstance( error, StepCollapse ) else EXIT_BREAKDOWN
        trace = error.trace if error.trace is not None else integrator.trace
    for path in integrator.outputs:
        manifest.addOutput( path )
    if len( trace ):
        manifest.addOutput( trace.writeCsv( directory / "trace.csv" ) )
        for report in flowChecks( trace, config.n ):
            manifest.addCheck( report )
    manifest.write( directory / "manifest.json" )
    if code == EXIT_OK:
        final = trace.records[ -1 ]
        print( f"t = { final.t:.6g}, Ca = { final.report.Ca:.6e}, steps = { trace.stepCount }, "
               f"rejected = { trace.rejectedCount }, converged = { trace.converged }" )
    return code


def cmdVerify( config: FlowConfig ) -> int:
    """
    Run the verification suite, print its table and write the report and the manifest

    Parameters:
        config ( FlowConfig ): configuration

    Returns:
        int: 0 when every hard check passes, 4 otherwise
    """
    directory = _outputDirectory( config )
    manifest = _manifest( "verify", config )
    suite = VerificationSuite( config )
    for report in suite.run():
        manifest.addCheck( report )
    table = suite.table()
    print( table, end = "" )
    report = directory / "report.txt"
    report.write_text( table, encoding = "utf-8" )
    manifest.addOutput( report )
    manifest.write( directory / "manifest.json" )
    return EXIT_OK if suite.passed else EXIT_VERIFY


def cmdFitDecay( tracePath: str | Path, window: tuple[ float, float ] | None = None ) -> DecayFit:
    """
    Fit the exponential decay of the Calabi energy of a trace file

    Parameters:
        tracePath ( str | Path ): trace CSV written by the flow command
        window ( tuple[ float, float ] | None = None ): time window, the second half of the run when omitted

    Returns:
        DecayFit: fit
    """
    try:
        trace = FlowTrace.readCsv( tracePath )
    except ( OSError, ValueError ) as error:
        raise InsufficientData( f"cannot read trace { tracePath }: { error }" ) from error
    if not len( trace ):
        raise InsufficientData( f"trace { tracePath } holds no records" )
    return fitTrace( trace, window )


def cmdSweep( config: FlowConfig ) -> int:
    """
    Run the amplitude and resolution sweep and write its summary and manifest

    Parameters:
        config ( FlowConfig ): configuration with a sweep grid

    Returns:
        int: 0 when at least one cell converged, 2 otherwise
    """
    directory = _outputDirectory( config )
    manifest = _manifest( "sweep", config )
    cells = runSweep( config )
    manifest.addOutput( writeSummary( cells, directory / "sweep.csv" ) )
    converged = [ cell for cell in cells if cell.converged ]
    frontier = threshold( cells )
    logger.info( f"empirical small energy threshold: { frontier:g}" )
    manifest.addCheck( CheckReport.hard( "Chen surrogate over converged cells", all( cell.chenHolds for cell in converged ),
                                         detail = f"{ len( converged ) } of { len( cells ) } cells converged" ) )
    manifest.addCheck( CheckReport.reportOnly( "small energy threshold", bool( converged ), detail = f"threshold { frontier:g}" ) )
    manifest.write( directory / "manifest.json" )
    for cell in cells:
        print( f"{ cell.amplitude:<12g}{ cell.N:<6}{ cell.status }" )
    print( f"threshold { frontier:g}" )
    return EXIT_OK if converged else EXIT_COLLAPSE


def cmdEigen( config: FlowConfig ) -> int:
    """
    Evaluate the analytic constants and mu1 of the configured initial potential and write them as CSV

    Parameters:
        config ( FlowConfig ): configuration

    Returns:
        int: 0
    """
    directory = _outputDirectory( config )
    manifest = _manifest( "eigen", config )
    state = buildPotential( config, buildBackground( config ) )
    report = evaluateConstants( assembleMetric( state ),
                                generator( config.seed, CONSTANTS ),
                                t = config.tStart,
                                moserExponent = config.moser,
                                moserTrials = config.moserTrials,
                                sobolevTrials = config.sobolevTrials,
                                withEigenvalue = True,
                                **config.eigenSettings )
    path = directory / "constants.csv"
    with open( path, "w", newline = "", encoding = "utf-8" ) as handle:
        writer = csv.writer( handle, lineterminator = "\n" )
        writer.writerow( CONSTANTS_COLUMNS )
        writer.writerow( [ str( int( value ) ) if isinstance( value, bool ) else formatValue( value ) for value in report.row() ] )
    manifest.addOutput( path )
    manifest.write( directory / "manifest.json" )
    for column, value in zip( CONSTANTS_COLUMNS, report.row() ):
        print( f"{ column:<16}{ value }" )
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser( add_help = False )
    common.add_argument( "--config", type = str, default = None, help = "INI configuration file, defaults when omitted" )
    common.add_argument( "--out", type = str, default = None, help = "output directory, overrides [output] directory" )
    common.add_argument( "--seed", type = int, default = None, help = "random seed, overrides [run] seed" )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument( "--quiet", action = "store_true", help = "warnings only" )
    verbosity.add_argument( "--verbose", action = "store_true", help = "debug output" )

    parser = argparse.ArgumentParser( prog = "calabiflow", description = "Calabi flow laboratory on flat complex tori" )
    parser.add_argument( "--version", action = "version", version = f"%(prog)s { __version__ }" )
    commands = parser.add_subparsers( dest = "command", required = True )
    commands.add_parser( "flow", parents = [ common ], help = "integrate the Calabi flow" )
    commands.add_parser( "verify", parents = [ common ], help = "run the verification suite" )
    fit = commands.add_parser( "fit-decay", parents = [ common ], help = "fit the decay rate of a trace" )
    fit.add_argument( "--trace", type = str, required = True, help = "trace CSV of a flow run" )
    fit.add_argument( "--window", type = float, nargs = 2, metavar = ( "T1", "T2" ), default = None, help = "time window of the fit" )
    commands.add_parser( "sweep", parents = [ common ], help = "sweep perturbation amplitudes and resolutions" )
    commands.add_parser( "eigen", parents = [ common ], help = "evaluate mu1 and the analytic constants" )
    return parser


def main( argv: Sequence[ str ] | None = None ) -> int:
    """
    Run one subcommand

    Parameters:
        argv ( Sequence[ str ] | None = None ): arguments without the program name, sys.argv when omitted

    Returns:
        int: exit code
    """
    args = _parser().parse_args( argv )
    configureLogging( 0 if args.quiet else 2 if args.verbose else 1 )
    try:
        if args.command == "fit-decay":
            fit = cmdFitDecay( args.trace, tuple( args.window ) if args.window is not None else None )
            print( f"window [ { fit.window[ 0 ]:g}, { fit.window[ 1 ]:g} ], records { fit.records }" )
            print( f"slope { fit.slope:.10g}, intercept { fit.intercept:.10g}, R^2 { fit.rSquared:.10f}, rate { fit.rate:.10g}" )
            return EXIT_OK
        config = FlowConfig.fromFile( args.config ) if args.config is not None else FlowConfig()
        config = config.withOverrides( seed = args.seed, directory = args.out )
        commands = { "flow": cmdFlow, "verify": cmdVerify, "sweep": cmdSweep, "eigen": cmdEigen }
        return commands[ args.command ]( config )
    except ( ConfigError, InsufficientData ) as error:
        print( str( error ), file = sys.stderr )
        return EXIT_INPUT
    except StepCollapse as error:
        print( str( error ), file = sys.stderr )
        return EXIT_COLLAPSE
    except ( NumericalBreakdown, NonConvergence ) as error:
        print( str( error ), file = sys.stderr )
        return EXIT_BREAKDOWN

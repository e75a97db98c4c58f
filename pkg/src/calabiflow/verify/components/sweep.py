"""
Parameter sweeps over perturbation amplitude and resolution.

Every cell is a pure function of the configuration, its amplitude and its resolution: the perturbation
is drawn from the run seed on a wave number box shared by all resolutions, so cells of one sweep scale
the same field and each can be rerun on its own.
"""
import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from joblib import Parallel, delayed
from numpy import nan, isnan, max
from calabiflow.flow.components.checks import chenCheck
from calabiflow.flow.components.config import FlowConfig
from calabiflow.flow.flow import FlowIntegrator
from calabiflow.util.errors import ConfigError, InsufficientData, StepCollapse, NumericalBreakdown
from calabiflow.verify.components.fit import fitTrace

logger = logging.getLogger( __name__ )

COLUMNS: tuple[ str, ... ] = ( "amplitude", "N", "status", "converged", "muFit", "maxRm", "stepCollapse" )


@dataclass( frozen = True )
class SweepCell:
    amplitude: float
    N: int
    status: str
    converged: bool
    muFit: float
    maxRm: float
    stepCollapse: bool
    chenHolds: bool = True

    def row( self ) -> list[ str ]:
        """
        Get the values in CSV column order

        Returns:
            list[ str ]: one entry per column of COLUMNS
        """
        return [ f"{ self.amplitude:.17g}", str( self.N ), self.status, str( int( self.converged ) ),
                 "" if isnan( self.muFit ) else f"{ self.muFit:.17g}",
                 "" if isnan( self.maxRm ) else f"{ self.maxRm:.17g}", str( int( self.stepCollapse ) ) ]


def runCell( config: FlowConfig, amplitude: float, N: int ) -> SweepCell:
    """
    Run one sweep cell; failures are recorded in the cell, never raised

    Parameters:
        config ( FlowConfig ): sweep configuration
        amplitude ( float ): perturbation amplitude of the cell
        N ( int ): resolution of the cell

    Returns:
        SweepCell: outcome
    """
    try:
        integrator = FlowIntegrator( config.withCell( amplitude, N ) )
    except ConfigError as error:
        logger.warning( f"cell ( { amplitude:g}, { N } ) not run: { error.message }" )
        return SweepCell( amplitude, N, "invalid", False, nan, nan, False )
    try:
        trace = integrator.run()
    except StepCollapse as error:
        rm = float( max( error.trace.column( "Rm" ) ) ) if error.trace is not None and len( error.trace ) else nan
        return SweepCell( amplitude, N, "collapse", False, nan, rm, True )
    except NumericalBreakdown:
        return SweepCell( amplitude, N, "breakdown", False, nan, nan, False )
    try:
        rate = fitTrace( trace ).rate
    except InsufficientData:
        rate = nan
    return SweepCell( amplitude, N, "converged" if trace.converged else "finished", trace.converged, rate,
                      float( max( trace.column( "Rm" ) ) ), False, chenCheck( trace ).holds )


def runSweep( config: FlowConfig ) -> list[ SweepCell ]:
    """
    Run every ( amplitude, resolution ) cell of a configuration in parallel

    Parameters:
        config ( FlowConfig ): configuration with a nonempty sweep grid

    Returns:
        list[ SweepCell ]: cells ordered by resolution, then amplitude
    """
    if not config.sweepAmplitudes:
        raise config.error( "sweepAmplitudes", "sweep grid is empty: no amplitudes" )
    resolutions = config.sweepResolutions or ( config.N, )
    cells = [ ( amplitude, N ) for N in resolutions for amplitude in config.sweepAmplitudes ]
    for _, N in cells:
        try:
            config.withCell( 0., N )
        except ConfigError as error:
            raise config.error( "sweepResolutions", error.message ) from error
    logger.info( f"sweep of { len( cells ) } cells on { config.jobs } jobs" )
    return Parallel( n_jobs = config.jobs )( delayed( runCell )( config, amplitude, N ) for amplitude, N in cells )


def threshold( cells: list[ SweepCell ] ) -> float:
    """
    Get the empirical small energy threshold: the largest amplitude such that every cell with an amplitude
    up to it converged

    Parameters:
        cells ( list[ SweepCell ] ): sweep outcome

    Returns:
        float: threshold, NaN when the smallest amplitude already fails
    """
    frontier = nan
    for amplitude in sorted( { cell.amplitude for cell in cells } ):
        if not all( cell.converged for cell in cells if cell.amplitude == amplitude ):
            break
        frontier = amplitude
    return frontier


def writeSummary( cells: list[ SweepCell ], path: str | Path ) -> Path:
    """
    Write the sweep summary as CSV

    Parameters:
        cells ( list[ SweepCell ] ): sweep outcome
        path ( str | Path ): target file

    Returns:
        Path: path of the written file
    """
    path = Path( path )
    with open( path, "w", newline = "", encoding = "utf-8" ) as handle:
        writer = csv.writer( handle, lineterminator = "\n" )
        writer.writerow( COLUMNS )
        for cell in cells:
            writer.writerow( cell.row() )
    return path

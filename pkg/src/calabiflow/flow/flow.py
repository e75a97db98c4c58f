import logging
from pathlib import Path
from numpy import abs, max, real, sum, isfinite, nan
from numpy.random import Generator
from calabiflow.flow.components.checks import CheckReport, eigenDecayCheck, derivativeDecayCheck, gradientFlowCheck, \
    dissipationCheck, conservationCheck, chenCheck, caMonotoneCheck, rateMonitor, MONOTONE_SLACK, MONOTONE_FLOOR
from calabiflow.flow.components.config import FlowConfig
from calabiflow.flow.components.monitor import hBoundMonitor, chernLuMonitor, entropyMonitor, oscillationMonitor
from calabiflow.flow.components.trace import FlowTrace, TraceRecord
from calabiflow.functionals.functionals import calabiEnergy, dingD, evaluate, pathIncrement, segmentLength
from calabiflow.geometry.components.curvature import ricciLowerBound
from calabiflow.geometry.components.metric import MetricData
from calabiflow.geometry.geometry import KahlerBackground, PotentialState, assembleMetric
from calabiflow.spectral.spectral import SpectralGrid, Mode
from calabiflow.spectral.components.checkpoint import readCheckpoint, writeCheckpoint
from calabiflow.spectral.components.field import RealField
from calabiflow.spectrum.components.operator import hessianEnergy
from calabiflow.spectrum.spectrum import firstEigenvalue
from calabiflow.util.errors import PositivityViolation, ClassConstraintViolation, NonConvergence, StepCollapse, \
    NumericalBreakdown
from calabiflow.util.rng import generator, BACKGROUND, PERTURBATION, EIGEN

logger = logging.getLogger( __name__ )

MINIMUM_STEP: float = 1e-12
GROWTH_LIMIT: float = 2.
SHRINK_LIMIT: float = 0.2


def _potential( grid: SpectralGrid, amplitude: float, modes: tuple[ Mode, ... ], maxMode: int, random: Generator ) -> RealField:
    # amplitude times the cosine modes, or a random field scaled to sup |phi| = amplitude
    if modes:
        field = grid.cosineField( modes )
        return field.like( amplitude * field.values )
    field = grid.randomField( random, maxMode )
    peak = float( max( abs( field.values ) ) )
    return field.like( amplitude / peak * field.values if peak > 0. else 0. * field.values )


def buildBackground( config: FlowConfig ) -> KahlerBackground:
    """
    Create the background metric of a configuration, flat when its amplitude is 0

    Parameters:
        config ( FlowConfig ): configuration

    Returns:
        KahlerBackground: background
    """
    grid = SpectralGrid( config.n, config.N )
    if config.backgroundAmplitude == 0.:
        return KahlerBackground.flat( grid )
    psi = _potential( grid, config.backgroundAmplitude, config.backgroundModes, config.backgroundMaxMode,
                      generator( config.seed, BACKGROUND ) )
    try:
        return KahlerBackground( grid, psi )
    except PositivityViolation as error:
        raise config.error( "backgroundAmplitude", f"background potential not Kähler ( margin { error.margin:.4g} )" ) from error
    except ClassConstraintViolation as error:
        raise config.error( "backgroundAmplitude", str( error ) ) from error


def buildPotential( config: FlowConfig, background: KahlerBackground ) -> PotentialState:
    """
    Create the initial potential of a configuration: the resume checkpoint when one is set, otherwise the
    configured perturbation shifted so that D vanishes

    Parameters:
        config ( FlowConfig ): configuration
        background ( KahlerBackground ): background of the run

    Returns:
        PotentialState: initial state with margin at least config.minimumMargin
    """
    grid = background.grid
    if config.resume:
        try:
            phi = readCheckpoint( config.resume )
        except ( OSError, ValueError ) as error:
            raise config.error( "resume", f"cannot resume from { config.resume }: { error }" ) from error
        if phi.grid != grid:
            raise config.error( "resume", f"checkpoint lives on { phi.grid }, configuration on { grid }" )
    else:
        phi = _potential( grid, config.amplitude, config.modes, config.maxMode, generator( config.seed, PERTURBATION ) )
    try:
        state = PotentialState( phi, background )
    except PositivityViolation as error:
        raise config.error( "amplitude", f"initial potential not Kähler ( margin { error.margin:.4g} )" ) from error
    if state.positivityMargin < config.minimumMargin:
        raise config.error( "amplitude", f"initial potential not Kähler enough: margin { state.positivityMargin:.4g} "
                                         f"below { config.minimumMargin:g}" )
    if not config.resume:
        state = state.shifted( -dingD( state ) )
    return state


def stabilizationConstant( state: PotentialState, stabilization: float = 1. ) -> float:
    """
    Get the weight of the implicit flat bilaplacian, max( c, margin^-2 ), which dominates the leading
    symbol of the linearized flow at the state. The margin is the smallest nodal eigenvalue of g_phi; this
    replaces the rule max( 1, sup detRatio^-1 ), which for n = 2 misses states where one eigenvalue is small
    while the determinant is not, since the leading symbol scales with |g^-1|^2

    Parameters:
        state ( PotentialState ): current state
        stabilization ( float = 1. ): configured constant c

    Returns:
        float: effective constant
    """
    return float( max( [ stabilization, state.positivityMargin ** -2 ] ) )


def step( state: PotentialState, dt: float, stabilization: float = 1., m: MetricData | None = None ) -> PotentialState:
    """
    Advance the Calabi flow d phi / dt = S - Sbar by one semi-implicit step, solving
    ( 1 + dt c Laplacian_0^2 ) phi+ = phi + dt ( S - Sbar + c Laplacian_0^2 phi ) diagonally in Fourier space,
    then dealiasing. The constant mode of the increment is corrected so that D is conserved

    Parameters:
        state ( PotentialState ): current state
        dt ( float ): step size
        stabilization ( float = 1. ): configured constant c
        m ( MetricData | None = None ): assembled metric of the state

    Returns:
        PotentialState: next state
    """
    grid = state.grid
    background = state.background
    if m is None:
        m = assembleMetric( state )
    c = stabilizationConstant( state, stabilization )
    symbol = grid.bilaplacianSymbol
    source = grid.transform( m.scalarCurvature.values - background.averageScalarCurvature )
    spectrum = ( state.phiSpectrum + dt * ( source + c * symbol * state.phiSpectrum ) ) / ( 1. + dt * c * symbol )
    values = real( grid.synthesize( grid.dealiasMask * spectrum ) )
    if not isfinite( values ).all():
        raise NumericalBreakdown( f"non-finite potential after a step of { dt:.3e}" )

    after = PotentialState( state.phi.like( values ), background )
    weights = state.determinant + after.determinant
    drift = float( sum( ( values - state.phi.values ) * weights ) / sum( weights ) )
    return after.shifted( -drift )


class FlowIntegrator:
    def __init__( self, config: FlowConfig, directory: str | Path | None = None ) -> None:
        """
        Create an integrator of the Calabi flow for one configuration

        Parameters:
            config ( FlowConfig ): configuration
            directory ( str | Path | None = None ): directory of the checkpoints, none written when omitted
        """
        self._config: FlowConfig = config
        self._directory: Path | None = Path( directory ) if directory is not None else None
        self._background: KahlerBackground = buildBackground( config )
        self._initial: PotentialState = buildPotential( config, self._background )
        self._state: PotentialState = self._initial
        self._trace: FlowTrace = FlowTrace()
        self._outputs: list[ Path ] = []
        self._D0: float = 0.

    @property
    def config( self ) -> FlowConfig:
        return self._config

    @property
    def background( self ) -> KahlerBackground:
        return self._background

    @property
    def initial( self ) -> PotentialState:
        """
        Get the initial state of the run

        Returns:
            PotentialState: state at tStart
        """
        return self._initial

    @property
    def state( self ) -> PotentialState:
        """
        Get the latest accepted state

        Returns:
            PotentialState: current state
        """
        return self._state

    @property
    def trace( self ) -> FlowTrace:
        return self._trace

    @property
    def outputs( self ) -> list[ Path ]:
        """
        Get the checkpoint files written so far

        Returns:
            list[ Path ]: paths in writing order
        """
        return list( self._outputs )

    def _eigenvalue( self, m: MetricData, stepIndex: int ) -> float:
        try:
            return firstEigenvalue( m, generator( self._config.seed, EIGEN, stepIndex ), **self._config.eigenSettings ).mu1
        except NonConvergence as error:
            logger.warning( f"mu1 not sampled at step { stepIndex }: { error }" )
            return nan

    def _record( self, state: PotentialState, m: MetricData, t: float, dt: float, pathLength: float, mu1: float ) -> TraceRecord:
        report = evaluate( state, t, m, pathLength, self._config.lp )
        gradient = m.derivativeNorms
        return TraceRecord( dt = float( dt ),
                            report = report,
                            Rm = m.riemannNorm,
                            Ric = m.ricciNorm,
                            HessS = m.hessianSNorm,
                            gradS = tuple( float( value ) for value in gradient ),
                            dissipation = hessianEnergy( m.scalarCurvature, m ),
                            ricciLower = ricciLowerBound( m ),
                            trRatio = float( max( m.traceRatio.values ) ),
                            hSup = float( max( abs( m.h ) ) ),
                            mu1 = mu1,
                            Ddrift = abs( report.D - self._D0 ),
                            margin = state.positivityMargin )

    def _checkpoint( self, name: str ) -> None:
        if self._directory is None:
            return
        self._directory.mkdir( parents = True, exist_ok = True )
        self._outputs.append( writeCheckpoint( self._directory / name, self._state.phi ) )

    def run( self ) -> FlowTrace:
        """
        Integrate to tEnd or until Ca <= terminalCa V with step doubling error control: a step of size h is
        accepted when the two half steps and the full step differ by at most tolerance * h in sup norm and
        the Calabi energy does not increase; the two half steps are kept. A step leaving the space of
        Kähler potentials is retried at half the size

        Returns:
            FlowTrace: trace holding the initial record and every recordCadence-th accepted step
        """
        config = self._config
        state = self._state
        m = assembleMetric( state )
        self._D0 = dingD( state )
        t = config.tStart
        dt = min( config.dt0, config.dtMax )
        pathLength = segmentLength( state )
        volume = self._background.volume
        ca = calabiEnergy( state, m )
        terminal = config.terminalCa * volume
        stopEarly = ca > terminal
        steps = 0
        rejected = 0
        trace = self._trace
        trace.append( self._record( state, m, t, dt, pathLength, self._eigenvalue( m, 0 ) ) )
        logger.info( f"flow on { state.grid }: Ca( { t:g} ) = { ca:.6e}, margin { state.positivityMargin:.4f}" )

        while config.tEnd - t > 1e-12 * max( [ 1., abs( config.tEnd ) ] ):
            if dt < MINIMUM_STEP:
                trace.stepCount, trace.rejectedCount = steps, rejected
                raise StepCollapse( f"step size { dt:.3e} fell below { MINIMUM_STEP:g} at t = { t:.6g}", trace )
            h = min( dt, config.tEnd - t )
            try:
                full = step( state, h, config.stabilization, m )
                halfway = step( state, 0.5 * h, config.stabilization, m )
                candidate = step( halfway, 0.5 * h, config.stabilization )
                error = float( max( abs( candidate.phi.values - full.phi.values ) ) )
                candidateMetric = assembleMetric( candidate )
                candidateCa = calabiEnergy( candidate, candidateMetric )
            except PositivityViolation as violation:
                rejected += 1
                dt = 0.5 * h
                logger.warning( f"step { h:.3e} at t = { t:.6g} left the Kähler cone ( margin { violation.margin:.3g} ), retrying" )
                continue
            except NumericalBreakdown as breakdown:
                trace.stepCount, trace.rejectedCount = steps, rejected
                raise NumericalBreakdown( f"{ breakdown } at t = { t:.6g}", trace ) from breakdown
            if not isfinite( candidateCa ):
                trace.stepCount, trace.rejectedCount = steps, rejected
                raise NumericalBreakdown( f"non-finite Calabi energy at t = { t + h:.6g}", trace )

            if error > config.tolerance * h:
                rejected += 1
                dt = h * max( [ SHRINK_LIMIT, config.safety * config.tolerance * h / error ] )
                continue
            if candidateCa > ca * ( 1. + MONOTONE_SLACK ) + MONOTONE_FLOOR * volume:
                rejected += 1
                dt = 0.5 * h
                logger.warning( f"Calabi energy rose from { ca:.6e} to { candidateCa:.6e} at t = { t:.6g}, retrying" )
                continue

            pathLength += pathIncrement( state, candidate )
            t += h
            steps += 1
            state, m, ca = candidate, candidateMetric, candidateCa
            self._state = state
            if error > 0.:
                growth = config.safety * config.tolerance * h / error
                dt = h * min( GROWTH_LIMIT, max( [ SHRINK_LIMIT, growth ] ) )
            dt = min( dt, config.dtMax )

            converged = stopEarly and ca <= terminal
            last = converged or config.tEnd - t <= 1e-12 * max( [ 1., abs( config.tEnd ) ] )
            if config.checkpointCadence and steps % config.checkpointCadence == 0:
                self._checkpoint( f"checkpoint_{ steps:06d}.calb" )
            if last or steps % config.recordCadence == 0 or steps % config.eigenCadence == 0:
                mu1 = self._eigenvalue( m, steps ) if last or steps % config.eigenCadence == 0 else nan
                trace.append( self._record( state, m, t, h, pathLength, mu1 ) )
                if logger.isEnabledFor( logging.DEBUG ):
                    logger.debug( f"step { steps }: t = { t:.6g}, dt = { h:.3e}, Ca = { ca:.6e}" )
            if converged:
                trace.converged = True
                break

        trace.stepCount, trace.rejectedCount = steps, rejected
        self._checkpoint( "final.calb" )
        logger.info( f"flow finished at t = { t:.6g} after { steps } steps ( { rejected } rejected ), Ca = { ca:.6e}" )
        return trace


def adaptiveRun( config: FlowConfig, directory: str | Path | None = None ) -> FlowTrace:
    """
    Run the Calabi flow of a configuration

    Parameters:
        config ( FlowConfig ): configuration
        directory ( str | Path | None = None ): directory of the checkpoints, none written when omitted

    Returns:
        FlowTrace: trace of the run
    """
    return FlowIntegrator( config, directory ).run()


def flowChecks( trace: FlowTrace, n: int ) -> list[ CheckReport ]:
    """
    Run every trace check and monitor on a finished run

    Parameters:
        trace ( FlowTrace ): run
        n ( int ): complex dimension

    Returns:
        list[ CheckReport ]: reports in a fixed order
    """
    return [ gradientFlowCheck( trace ),
             dissipationCheck( trace ),
             conservationCheck( trace ),
             chenCheck( trace ),
             caMonotoneCheck( trace ),
             eigenDecayCheck( trace ),
             derivativeDecayCheck( trace, n ),
             rateMonitor( trace ),
             hBoundMonitor( trace ),
             chernLuMonitor( trace ),
             entropyMonitor( trace ),
             oscillationMonitor( trace ) ]

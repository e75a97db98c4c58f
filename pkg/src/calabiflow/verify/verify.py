"""
The verification suite: identities and inequalities of the Kähler functionals, curvature and spectral
operators checked on sampled potentials. Twelve hard checks decide the exit code, five report-only
checks record constants whose values the theory leaves open.
"""
import logging
from typing import Callable
from numpy import ndarray, abs, log, exp, real, sqrt, pi, max, min, array, zeros, inf
from numpy.random import Generator
from scipy.special import gamma
from calabiflow.flow.components.checks import CheckReport, CheckStatus, hamiltonInterpolation
from calabiflow.flow.components.config import FlowConfig
from calabiflow.functionals.functionals import aubinIJ, dingD, dingDerivative, entropy, jFunctional, jDerivative, \
    kEnergy, kEnergyDerivative, evaluate
from calabiflow.geometry.components.curvature import volumeRatioResidual
from calabiflow.geometry.geometry import KahlerBackground, PotentialState, assembleMetric
from calabiflow.spectral.spectral import SpectralGrid
from calabiflow.spectral.components.field import RealField
from calabiflow.spectrum.components.constants import moserRatio, moserQuotient, sobolevLowerEstimate
from calabiflow.spectrum.components.operator import applyL, hessianEnergy
from calabiflow.spectrum.components.poisson import solvePoisson, poissonResidual
from calabiflow.spectrum.spectrum import firstEigenvalue, laplacianLambda1
from calabiflow.util.errors import CalabiFlowError, PositivityViolation
from calabiflow.util.rng import generator, VERIFY

logger = logging.getLogger( __name__ )

LINEARIZATION_RESOLUTION: int = 128
LINEARIZATION_MODES: int = 4
LINEARIZATION_AMPLITUDES: tuple[ float, ... ] = ( 1e-2, 5e-3, 2.5e-3 )
LINEARIZATION_SPREAD: float = 0.2
SAMPLE_MODES: int = 4
SMOOTH_MODES: dict[ int, int ] = { 1: 2, 2: 1 }
FUNCTIONAL_TOLERANCE: float = 1e-12
ASSEMBLY_TOLERANCE: float = 1e-10
DIFFERENCE_STEP: float = 1e-4
PATH_TOLERANCE: float = 1e-5
QUADRATIC_TOLERANCE: float = 1e-8
SPECTRUM_TOLERANCE: float = 1e-6
POISSON_TOLERANCE: float = 1e-8
MOSER_SPREAD: float = 0.25
MOSER_CLOSED_FORM_TOLERANCE: float = 1e-3
HAMILTON_TOLERANCE: float = 1e-10
VOLUME_RATIO_TOLERANCE: float = 1e-6
EIGEN_RESOLUTION: dict[ int, int ] = { 1: 32, 2: 16 }


def cosineNorm( q: float ) -> float:
    """
    Get the volume normalized L^q norm of cos x on the torus

    Parameters:
        q ( float ): exponent

    Returns:
        float: ( Gamma( ( q + 1 ) / 2 ) / ( sqrt( pi ) Gamma( q / 2 + 1 ) ) )^( 1 / q )
    """
    return float( ( gamma( 0.5 * ( q + 1. ) ) / ( sqrt( pi ) * gamma( 0.5 * q + 1. ) ) ) ** ( 1. / q ) )


class VerificationSuite:
    def __init__( self, config: FlowConfig ) -> None:
        """
        Create the suite for the sample sizes, resolutions and amplitudes of a configuration

        Parameters:
            config ( FlowConfig ): configuration
        """
        self._config: FlowConfig = config
        self._grids: dict[ int, SpectralGrid ] = { 1: SpectralGrid( 1, config.resolution1 ), 2: SpectralGrid( 2, config.resolution2 ) }
        self._backgrounds: dict[ int, KahlerBackground ] = {}
        self._samples: dict[ str, list[ str ] ] | None = None
        self._reports: list[ CheckReport ] = []

    @property
    def config( self ) -> FlowConfig:
        return self._config

    @property
    def reports( self ) -> list[ CheckReport ]:
        """
        Get the reports of the last run in execution order

        Returns:
            list[ CheckReport ]: reports
        """
        return list( self._reports )

    @property
    def passed( self ) -> bool:
        return bool( self._reports ) and not any( report.failed for report in self._reports )

    def _generator( self, check: int, *stream: int ) -> Generator:
        return generator( self._config.seed, VERIFY, check, *stream )

    def _background( self, n: int ) -> KahlerBackground:
        # smooth non-flat background, one per dimension
        if n not in self._backgrounds:
            grid = self._grids[ n ]
            psi = grid.randomField( generator( self._config.seed, VERIFY, 0, n ), SMOOTH_MODES[ n ] )
            psi = psi.like( self._config.verifyBackgroundAmplitude / max( abs( psi.values ) ) * psi.values )
            self._backgrounds[ n ] = KahlerBackground( grid, psi )
        return self._backgrounds[ n ]

    def _randomState( self, background: KahlerBackground, random: Generator, maxMode: int, amplitude: float ) -> PotentialState | None:
        field = background.grid.randomField( random, maxMode )
        peak = float( max( abs( field.values ) ) )
        try:
            return PotentialState( field.like( amplitude / peak * field.values ), background )
        except PositivityViolation:
            return None

    def _direction( self, grid: SpectralGrid, random: Generator ) -> ndarray:
        field = grid.randomField( random, SMOOTH_MODES[ grid.n ], meanZero = False )
        return field.values / max( abs( field.values ) )

    def _smoothState( self, n: int, random: Generator ) -> PotentialState:
        state = self._randomState( self._background( n ), random, SMOOTH_MODES[ n ], self._config.verifyAmplitude )
        if state is None:
            raise PositivityViolation( 0. )
        return state

    def linearization( self ) -> CheckReport:
        """
        Check S( eps phi ) + eps Laplacian_0^2 phi = O( eps^2 ) on the flat torus: halving eps divides the sup
        norm of the left side by 4 within 20%
        """
        grid = SpectralGrid( 1, LINEARIZATION_RESOLUTION )
        background = KahlerBackground.flat( grid )
        random = self._generator( 1 )
        ratios = []
        for _ in range( self._config.trials ):
            shape = grid.randomField( random, LINEARIZATION_MODES )
            shape = shape.like( shape.values / max( abs( shape.values ) ) )
            linear = real( grid.synthesize( grid.bilaplacianSymbol * grid.transform( shape ) ) )
            residuals = []
            for epsilon in LINEARIZATION_AMPLITUDES:
                state = PotentialState( shape.like( epsilon * shape.values ), background )
                curvature = assembleMetric( state ).scalarCurvature.values
                residuals.append( float( max( abs( curvature + epsilon * linear ) ) ) )
            ratios += [ residuals[ 0 ] / residuals[ 1 ], residuals[ 1 ] / residuals[ 2 ] ]
        ratios = array( ratios )
        spread = float( max( abs( ratios / 4. - 1. ) ) )
        return CheckReport.hard( "linearization", spread <= LINEARIZATION_SPREAD, LINEARIZATION_SPREAD - spread,
                                 f"ratios in [ { min( ratios ):.3f}, { max( ratios ):.3f} ]" )

    def _functionalSamples( self ) -> dict[ str, list[ str ] ]:
        # one pass over the random potentials feeds the Aubin, J = I / 2 and entropy checks
        if self._samples is not None:
            return self._samples
        failures: dict[ str, list[ str ] ] = { "aubin": [], "half": [], "entropy": [], "count": [] }
        for n in ( 1, 2 ):
            background = self._background( n )
            random = self._generator( 2, n )
            volume = background.volume
            valid = 0
            for index in range( self._config.potentials ):
                amplitude = random.uniform( 0., 2. * self._config.verifyAmplitude )
                state = self._randomState( background, random, SAMPLE_MODES, amplitude )
                if state is None:
                    continue
                valid += 1
                I, J = aubinIJ( state )
                tolerance = FUNCTIONAL_TOLERANCE * I + 1e-15
                if I < -tolerance or J < I / ( n + 1 ) - tolerance or J > n * I / ( n + 1 ) + tolerance:
                    failures[ "aubin" ].append( f"n = { n } sample { index }: I = { I:.6e}, J = { J:.6e}" )
                if n == 1 and abs( J - 0.5 * I ) > tolerance:
                    failures[ "half" ].append( f"sample { index }: J - I / 2 = { J - 0.5 * I:.3e}" )
                ratio = state.determinant / background.determinant
                lowest = float( min( ratio * log( ratio ) ) )
                E = entropy( state )
                if lowest < -exp( -1. ) - 1e-15 or E < -FUNCTIONAL_TOLERANCE * volume:
                    failures[ "entropy" ].append( f"n = { n } sample { index }: min r log r = { lowest:.6f}, E = { E:.3e}" )
            failures[ "count" ].append( f"{ valid } potentials for n = { n }" )
            logger.debug( f"functional samples: { valid } valid potentials for n = { n }" )
        self._samples = failures
        return failures

    def _sampleReport( self, name: str, key: str ) -> CheckReport:
        samples = self._functionalSamples()
        failures = samples[ key ]
        detail = ", ".join( samples[ "count" ] ) if not failures else f"{ len( failures ) } violations, first: { failures[ 0 ] }"
        return CheckReport.hard( name, not failures, detail = detail )

    def aubinBounds( self ) -> CheckReport:
        """
        Check 0 <= I / ( n + 1 ) <= J <= n I / ( n + 1 ) on random potentials over a non-flat background
        """
        return self._sampleReport( "Aubin bounds", "aubin" )

    def aubinHalf( self ) -> CheckReport:
        return self._sampleReport( "J = I / 2 for n = 1", "half" )

    def entropyBound( self ) -> CheckReport:
        """
        Check r log r >= -1 / e pointwise for the volume ratio r and E >= 0
        """
        return self._sampleReport( "entropy bound", "entropy" )

    def _pathDerivative( self, name: str, check: int, functional: Callable[ [ PotentialState ], float ],
                         derivative: Callable[ [ PotentialState, ndarray ], float ] ) -> CheckReport:
        worst = 0.
        for n in ( 1, 2 ):
            random = self._generator( check, n )
            for _ in range( self._config.trials ):
                state = self._smoothState( n, random )
                u = self._direction( state.grid, random )
                phi = state.phi
                forward = functional( PotentialState( phi.like( phi.values + DIFFERENCE_STEP * u ), state.background ) )
                backward = functional( PotentialState( phi.like( phi.values - DIFFERENCE_STEP * u ), state.background ) )
                difference = ( forward - backward ) / ( 2. * DIFFERENCE_STEP )
                exact = derivative( state, u )
                worst = max( [ worst, abs( difference - exact ) / max( [ abs( exact ), 1e-6 ] ) ] )
        return CheckReport.hard( name, worst <= PATH_TOLERANCE, PATH_TOLERANCE - worst, f"largest relative error { worst:.3e}" )

    def dingPath( self ) -> CheckReport:
        """
        Check the derivative of D along random directions against ( 1 / V ) int u omega_phi^n
        """
        return self._pathDerivative( "D path derivative", 5, dingD, dingDerivative )

    def jPath( self ) -> CheckReport:
        return self._pathDerivative( "j path derivative", 6, jFunctional, jDerivative )

    def kEnergyIdentity( self ) -> CheckReport:
        """
        Check nu = E + V ( Sbar D + j ) as assembled by the report and the derivative of nu along random
        directions against -int u ( S - Sbar ) omega_phi^n
        """
        assembly = 0.
        for n in ( 1, 2 ):
            state = self._smoothState( n, self._generator( 7, 0, n ) )
            report = evaluate( state )
            background = state.background
            parts = report.E + report.V * ( background.averageScalarCurvature * report.D + report.j )
            assembly = max( [ assembly, ( abs( report.nu - kEnergy( state ) ) + abs( report.nu - parts ) ) / ( 1. + abs( report.nu ) ) ] )
        path = self._pathDerivative( "K-energy", 7, kEnergy, lambda state, u: kEnergyDerivative( state, u ) )
        holds = path.holds and assembly <= ASSEMBLY_TOLERANCE
        return CheckReport.hard( "K-energy assembly and path derivative", holds, path.slack,
                                 f"assembly error { assembly:.2e}, { path.detail }" )

    def quadraticForm( self ) -> CheckReport:
        """
        Check int u L u omega_phi^n = int |nabla nabla u|^2 omega_phi^n on smooth non-flat metrics
        """
        worst = 0.
        for n in ( 1, 2 ):
            random = self._generator( 8, n )
            for _ in range( self._config.trials ):
                state = self._smoothState( n, random )
                m = assembleMetric( state )
                grid = state.grid
                u = RealField( grid, self._direction( grid, random ) )
                strong = grid.integrate( u.values * applyL( u, m ).values, m.determinant )
                weak = hessianEnergy( u, m )
                worst = max( [ worst, abs( strong - weak ) / weak ] )
        return CheckReport.hard( "L quadratic form", worst <= QUADRATIC_TOLERANCE, QUADRATIC_TOLERANCE - worst,
                                 f"largest relative error { worst:.3e}" )

    def flatSpectrum( self ) -> CheckReport:
        """
        Check lambda1 = 1 / 4 for the Laplacian and mu1 = 1 / 16 for the Lichnerowicz operator of the flat torus
        """
        worst = 0.
        values = []
        for n in ( 1, 2 ):
            grid = SpectralGrid( n, EIGEN_RESOLUTION[ n ] )
            m = assembleMetric( PotentialState( RealField( grid, zeros( grid.shape ) ), KahlerBackground.flat( grid ) ) )
            settings = self._config.eigenSettings
            lambda1 = laplacianLambda1( m, self._generator( 9, n, 0 ), **settings )
            mu1 = firstEigenvalue( m, self._generator( 9, n, 1 ), **settings ).mu1
            worst = max( [ worst, abs( lambda1 - 0.25 ), abs( mu1 - 0.0625 ) ] )
            values.append( f"n = { n }: { lambda1:.10f}, { mu1:.10f}" )
        return CheckReport.hard( "flat eigenvalues", worst <= SPECTRUM_TOLERANCE, SPECTRUM_TOLERANCE - worst, "; ".join( values ) )

    def poissonResiduals( self ) -> CheckReport:
        """
        Check the relative residual of the Poisson solver on smooth right hand sides
        """
        holds = True
        details = []
        for n in ( 1, 2 ):
            random = self._generator( 10, n )
            worst = 0.
            for _ in range( self._config.trials ):
                state = self._smoothState( n, random )
                m = assembleMetric( state )
                grid = state.grid
                f = grid.randomField( random, LINEARIZATION_MODES if n == 1 else SMOOTH_MODES[ n ] ).values
                f = RealField( grid, f - ( f * m.weights ).sum() / m.weights.sum() )
                worst = max( [ worst, poissonResidual( solvePoisson( f, m ), f, m ) ] )
            holds = holds and worst <= POISSON_TOLERANCE
            details.append( f"n = { n }: { worst:.2e}" )
        return CheckReport.hard( "Poisson residuals", holds, detail = "; ".join( details ) )

    def moser( self ) -> CheckReport:
        """
        Check the Moser quotient of cos x on the flat torus against 4 / ||cos||_{p*} and the stability of the
        largest quotient over random right hand sides between N and 2N, flat and perturbed
        """
        config = self._config
        p = config.moserExponent if config.moserExponent is not None else 4.
        conjugate = 2. * p / ( 2. + p )
        ratios = {}
        closedForm = 0.
        for N in ( config.resolution1, 2 * config.resolution1 ):
            grid = SpectralGrid( 1, N )
            flat = KahlerBackground.flat( grid )
            zero = PotentialState( RealField( grid, zeros( grid.shape ) ), flat )
            m = assembleMetric( zero )
            cosine = grid.cosineField( [ ( ( 1, 0 ), 1. ) ] )
            exact = 4. / cosineNorm( conjugate )
            closedForm = max( [ closedForm, abs( moserQuotient( cosine, m, p ) / exact - 1. ) ] )
            ratios[ ( "flat", N ) ] = moserRatio( m, p, config.moserTrials, self._generator( 11, 0 ) )
            perturbation = grid.randomField( self._generator( 11, 1 ), 8 )
            perturbation = perturbation.like( config.verifyAmplitude / max( abs( perturbation.values ) ) * perturbation.values )
            perturbed = assembleMetric( PotentialState( perturbation, flat ) )
            ratios[ ( "perturbed", N ) ] = moserRatio( perturbed, p, config.moserTrials, self._generator( 11, 0 ) )
        spread = max( [ abs( ratios[ ( kind, config.resolution1 ) ] / ratios[ ( kind, 2 * config.resolution1 ) ] - 1. )
                        for kind in ( "flat", "perturbed" ) ] )
        holds = spread <= MOSER_SPREAD and closedForm <= MOSER_CLOSED_FORM_TOLERANCE
        detail = ", ".join( f"{ kind } N = { N }: { value:.5f}" for ( kind, N ), value in ratios.items() )
        return CheckReport.hard( "Moser ratio", holds, MOSER_SPREAD - spread, f"{ detail }; closed form error { closedForm:.2e}" )

    def hamilton( self ) -> CheckReport:
        """
        Check int |nabla T|^2 <= ( int |nabla^2 T|^2 )^( 1 / 2 ) ( int |T|^2 )^( 1 / 2 ) on the flat torus
        """
        worst = inf
        for n in ( 1, 2 ):
            grid = self._grids[ n ]
            random = self._generator( 12, n )
            symbol = grid.laplacianSymbol
            for _ in range( self._config.trials ):
                spectrum = grid.transform( grid.randomField( random, 8, meanZero = False ) )
                scale = float( ( symbol * abs( spectrum ) ** 2 ).sum() )
                worst = min( [ worst, hamiltonInterpolation( spectrum, symbol ) / scale ] )
        return CheckReport.hard( "Hamilton interpolation", worst >= -HAMILTON_TOLERANCE, worst,
                                 f"smallest relative slack { worst:.3e}" )

    def classConstraint( self ) -> CheckReport:
        means = [ self._background( n ).scalarMean for n in ( 1, 2 ) ]
        return CheckReport.reportOnly( "class constraint", max( abs( array( means ) ) ) <= 1e-8,
                                       detail = ", ".join( f"n = { n }: Sbar = { mean:.2e}" for n, mean in zip( ( 1, 2 ), means ) ) )

    def volumeRatio( self ) -> CheckReport:
        """
        Report sup | Laplacian_phi h - ( tr_phi Ric( omega ) - S ) | on smooth non-flat metrics
        """
        residuals = [ volumeRatioResidual( assembleMetric( self._smoothState( n, self._generator( 13, n ) ) ) ) for n in ( 1, 2 ) ]
        return CheckReport.reportOnly( "volume ratio equation", max( residuals ) <= VOLUME_RATIO_TOLERANCE,
                                       detail = ", ".join( f"n = { n }: { value:.2e}" for n, value in zip( ( 1, 2 ), residuals ) ) )

    def chernLuProduct( self ) -> CheckReport:
        """
        Report tr_phi omega * tr_omega omega_phi >= n^2 pointwise
        """
        holds = True
        details = []
        for n in ( 1, 2 ):
            m = assembleMetric( self._smoothState( n, self._generator( 14, n ) ) )
            product = float( min( m.traceRatio.values * m.inverseTraceRatio.values ) )
            holds = holds and product >= n * n * ( 1. - 1e-12 )
            details.append( f"n = { n }: min product { product:.6f}" )
        return CheckReport.reportOnly( "Chern-Lu product bound", holds, detail = "; ".join( details ) )

    def poincare( self ) -> CheckReport:
        config = self._config
        grid = self._grids[ 1 ]
        perturbation = grid.randomField( self._generator( 15 ), 8 )
        perturbation = perturbation.like( config.verifyAmplitude / max( abs( perturbation.values ) ) * perturbation.values )
        m = assembleMetric( PotentialState( perturbation, KahlerBackground.flat( grid ) ) )
        lambda1 = laplacianLambda1( m, self._generator( 15, 1 ), **config.eigenSettings )
        return CheckReport.reportOnly( "Poincaré constant", lambda1 > 0.,
                                       detail = f"lambda1 = { lambda1:.8f}, C_P = { 1. / ( lambda1 * m.volume ):.6e}" )

    def sobolev( self ) -> CheckReport:
        """
        Report the Sobolev lower estimate of the flat torus at N and 2N
        """
        config = self._config
        holds = True
        details = []
        for n in ( 1, 2 ):
            estimates = []
            for N in ( self._grids[ n ].N, 2 * self._grids[ n ].N ):
                grid = SpectralGrid( n, N )
                m = assembleMetric( PotentialState( RealField( grid, zeros( grid.shape ) ), KahlerBackground.flat( grid ) ) )
                estimate, _ = sobolevLowerEstimate( m, config.sobolevTrials, self._generator( 16, n ) )
                estimates.append( estimate )
            holds = holds and abs( estimates[ 0 ] / estimates[ 1 ] - 1. ) <= MOSER_SPREAD
            details.append( f"n = { n }: { estimates[ 0 ]:.5f} / { estimates[ 1 ]:.5f}{ ' ( surrogate )' if n == 1 else '' }" )
        return CheckReport.reportOnly( "Sobolev lower estimate", holds, detail = "; ".join( details ) )

    def _checks( self ) -> list[ tuple[ str, bool, Callable[ [], CheckReport ] ] ]:
        return [ ( "linearization", True, self.linearization ),
                 ( "Aubin bounds", True, self.aubinBounds ),
                 ( "J = I / 2 for n = 1", True, self.aubinHalf ),
                 ( "entropy bound", True, self.entropyBound ),
                 ( "D path derivative", True, self.dingPath ),
                 ( "j path derivative", True, self.jPath ),
                 ( "K-energy assembly and path derivative", True, self.kEnergyIdentity ),
                 ( "L quadratic form", True, self.quadraticForm ),
                 ( "flat eigenvalues", True, self.flatSpectrum ),
                 ( "Poisson residuals", True, self.poissonResiduals ),
                 ( "Moser ratio", True, self.moser ),
                 ( "Hamilton interpolation", True, self.hamilton ),
                 ( "class constraint", False, self.classConstraint ),
                 ( "volume ratio equation", False, self.volumeRatio ),
                 ( "Chern-Lu product bound", False, self.chernLuProduct ),
                 ( "Poincaré constant", False, self.poincare ),
                 ( "Sobolev lower estimate", False, self.sobolev ) ]

    def run( self ) -> list[ CheckReport ]:
        """
        Run every check in order; an error inside a check fails that check

        Returns:
            list[ CheckReport ]: one report per check
        """
        self._reports = []
        for name, hard, check in self._checks():
            try:
                report = check()
            except CalabiFlowError as error:
                detail = f"{ type( error ).__name__ }: { error }"
                report = CheckReport.hard( name, False, detail = detail ) if hard else CheckReport.reportOnly( name, False, detail = detail )
            logger.info( f"{ name }: { report.status.value }" )
            self._reports.append( report )
        return self.reports

    def table( self ) -> str:
        """
        Format the reports as a fixed width table

        Returns:
            str: one line per check, preceded by a header
        """
        lines = [ f"{ '#':>2}  { 'check':<40}{ 'result':<13}detail" ]
        for index, report in enumerate( self._reports, start = 1 ):
            lines.append( f"{ index:>2}  { report.name:<40}{ report.status.value:<13}{ report.detail }" )
        hard = [ report for report in self._reports if report.status is not CheckStatus.REPORT_ONLY ]
        passed = sum( 1 for report in hard if not report.failed )
        lines.append( f"{ passed } of { len( hard ) } hard checks passed" )
        return "\n".join( lines ) + "\n"

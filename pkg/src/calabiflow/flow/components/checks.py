"""
Checks that read a finished flow trace.

Each check returns a CheckReport. Hard checks compare against identities or inequalities with explicit
constants and report pass or fail; checks of inequalities whose constants are only known to exist are
report-only and carry the outcome in `holds`.
"""
from dataclasses import dataclass
from enum import Enum
from numpy import ndarray, isfinite, abs, exp, sqrt, diff, mean, std, maximum, max, min, flatnonzero, inf, nan
from scipy.integrate import cumulative_trapezoid
from calabiflow.flow.components.trace import FlowTrace
from calabiflow.util.errors import InsufficientTrace

DISSIPATION_CONSTANT: float = 2.
EIGEN_DECAY_FACTOR: float = 26.
FINE_STEP: float = 1e-2
GRADIENT_TOLERANCE: float = 1e-3
DISSIPATION_SPREAD: float = 0.05
CONSERVATION_TOLERANCE: float = 1e-6
MONOTONE_SLACK: float = 1e-10
MONOTONE_FLOOR: float = 1e-24
ENERGY_FLOOR: float = 1e-10
STABILITY_FACTOR: float = 1.5
EIGEN_SLACK: float = 1e-6


class CheckStatus( Enum ):
    PASS = "pass"
    FAIL = "fail"
    REPORT_ONLY = "report-only"


class FlowType( Enum ):
    TYPEI = "typeI"
    TYPEII = "typeII"
    NEITHER = "neither"


@dataclass( frozen = True )
class CheckReport:
    """
    Outcome of one check: status for the manifest, whether the checked relation held, the smallest
    slack observed and a one-line detail
    """
    name: str
    status: CheckStatus
    holds: bool
    slack: float = nan
    detail: str = ""

    @classmethod
    def hard( cls, name: str, holds: bool, slack: float = nan, detail: str = "" ) -> "CheckReport":
        """
        Create the report of a check that decides pass or fail

        Parameters:
            name ( str ): check name
            holds ( bool ): outcome
            slack ( float = nan ): smallest slack
            detail ( str = "" ): description

        Returns:
            CheckReport: report with status PASS or FAIL
        """
        return cls( name, CheckStatus.PASS if holds else CheckStatus.FAIL, bool( holds ), float( slack ), detail )

    @classmethod
    def reportOnly( cls, name: str, holds: bool, slack: float = nan, detail: str = "" ) -> "CheckReport":
        return cls( name, CheckStatus.REPORT_ONLY, bool( holds ), float( slack ), detail )

    @property
    def failed( self ) -> bool:
        return self.status is CheckStatus.FAIL


def classifyType( trace: FlowTrace, tau: float, Lambda: float ) -> FlowType:
    """
    Classify a run on [ t0, t0 + tau ] by its recorded curvature: type II if |Rm| + |d dbar S| <= Lambda
    at every record, type I if only |Rm| <= Lambda holds

    Parameters:
        trace ( FlowTrace ): run
        tau ( float ): length of the time window
        Lambda ( float ): curvature bound

    Returns:
        FlowType: TYPEII, TYPEI or NEITHER
    """
    if tau < 0.:
        raise ValueError( f"time window must be nonnegative, got { tau }" )
    start, end = trace.span
    if len( trace ) == 0 or start + tau > end * ( 1. + 1e-12 ) + 1e-12:
        raise InsufficientTrace( f"trace covers [ { start:.6g}, { end:.6g} ], shorter than tau = { tau:.6g}" )
    t = trace.column( "t" )
    inside = t <= start + tau + 1e-12 * ( 1. + abs( start + tau ) )
    riemann = trace.column( "Rm" )[ inside ]
    hessian = trace.column( "HessS" )[ inside ]
    if max( riemann + hessian ) <= Lambda:
        return FlowType.TYPEII
    if max( riemann ) <= Lambda:
        return FlowType.TYPEI
    return FlowType.NEITHER


def eigenDecayCheck( trace: FlowTrace ) -> CheckReport:
    """
    Check ( mu1( t ) + Lambda^2 ) >= ( mu1( 0 ) + Lambda^2 ) exp( -26 int_0^t eps ) at every mu1 sample,
    with Lambda the largest |Ric| of the run and eps( t ) the recorded |d dbar S|

    Parameters:
        trace ( FlowTrace ): run with mu1 samples

    Returns:
        CheckReport: hard report, slack is the smallest difference of both sides
    """
    name = "eigenvalue decay bound"
    mu = trace.column( "mu1" )
    samples = flatnonzero( isfinite( mu ) )
    if len( samples ) == 0:
        return CheckReport.reportOnly( name, True, detail = "no mu1 samples" )
    t = trace.column( "t" )
    Lambda = float( max( trace.column( "Ric" ) ) )
    integral = cumulative_trapezoid( trace.column( "HessS" ), t, initial = 0. )
    first = samples[ 0 ]
    start = mu[ first ] + Lambda ** 2
    bound = start * exp( -EIGEN_DECAY_FACTOR * ( integral[ samples ] - integral[ first ] ) )
    slack = mu[ samples ] + Lambda ** 2 - bound
    smallest = float( min( slack ) )
    holds = smallest >= -EIGEN_SLACK * abs( start )
    return CheckReport.hard( name, holds, smallest,
                             f"{ len( samples ) } samples, Lambda = { Lambda:.4g}, minimal slack { smallest:.3e}" )


def derivativeDecayCheck( trace: FlowTrace, n: int ) -> CheckReport:
    """
    Fit C_i = |nabla^i S| / Ca^( 1 / ( 8 ( n + 1 ) ) ) for i = 1 .. 4 and check that the largest value over
    the second half of the run stays within 1.5 times the largest value over the first half

    Parameters:
        trace ( FlowTrace ): run
        n ( int ): complex dimension

    Returns:
        CheckReport: report-only
    """
    name = "derivative decay"
    ca = trace.column( "Ca" )
    keep = ca > 0.
    if keep.sum() < 2:
        return CheckReport.reportOnly( name, True, detail = "Calabi energy vanishes, nothing to fit" )
    t = trace.column( "t" )[ keep ]
    scale = ca[ keep ] ** ( 1. / ( 8. * ( n + 1 ) ) )
    middle = 0.5 * ( t[ 0 ] + t[ -1 ] )
    early, late = t <= middle, t > middle
    holds = True
    fitted = []
    for order in range( 1, 5 ):
        ratio = trace.column( f"gradS{ order }" )[ keep ] / scale
        if not isfinite( ratio ).all():
            holds = False
            fitted.append( inf )
            continue
        first = float( max( ratio[ early ] ) )
        second = float( max( ratio[ late ] ) ) if late.any() else first
        holds = holds and second <= STABILITY_FACTOR * first
        fitted.append( float( max( ratio ) ) )
    return CheckReport.reportOnly( name, holds, detail = "C = " + ", ".join( f"{ c:.3g}" for c in fitted ) )


def hamiltonInterpolation( spectrum: ndarray, symbol: ndarray, j: int = 1, k: int = 2 ) -> float:
    """
    Get the slack of int |nabla^j T|^2 <= ( int |nabla^k T|^2 )^( j / k ) ( int |T|^2 )^( 1 - j / k ) for a
    function T on the flat torus, evaluated as Fourier sums with weights symbol^i for the i-th derivative

    Parameters:
        spectrum ( ndarray ): Fourier coefficients of T
        symbol ( ndarray ): flat Laplacian symbol, the weight of one derivative squared
        j ( int = 1 ): lower order
        k ( int = 2 ): upper order, larger than j

    Returns:
        float: right side minus left side, nonnegative by Hölder
    """
    if not 0 <= j < k:
        raise ValueError( f"orders must satisfy 0 <= j < k, got j = { j }, k = { k }" )
    power = abs( spectrum ) ** 2
    lower = ( symbol ** j * power ).sum()
    upper = ( symbol ** k * power ).sum()
    mass = power.sum()
    return float( upper ** ( j / k ) * mass ** ( 1. - j / k ) - lower )


def _fineIntervals( trace: FlowTrace ) -> tuple[ ndarray, ndarray ]:
    t = trace.column( "t" )
    ca = trace.column( "Ca" )
    V = trace.column( "V" )
    steps = diff( t )
    usable = ( steps <= FINE_STEP * ( 1. + 1e-12 ) ) & ( ca[ :-1 ] >= ENERGY_FLOOR * V[ :-1 ] )
    return flatnonzero( usable ), steps


def gradientFlowCheck( trace: FlowTrace ) -> CheckReport:
    """
    Check nu( t1 ) - nu( t0 ) = -int Ca dt between consecutive records with step at most 0.01, the
    integral by the trapezoidal rule, within 1e-3 relative

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: hard report, report-only when no interval qualifies
    """
    name = "gradient flow"
    intervals, steps = _fineIntervals( trace )
    if len( intervals ) == 0:
        return CheckReport.reportOnly( name, True, detail = f"no interval with dt <= { FINE_STEP:g} above the energy floor" )
    nu = trace.column( "nu" )
    ca = trace.column( "Ca" )
    change = nu[ intervals + 1 ] - nu[ intervals ]
    dissipated = 0.5 * steps[ intervals ] * ( ca[ intervals ] + ca[ intervals + 1 ] )
    error = abs( change + dissipated ) / dissipated
    worst = float( max( error ) )
    return CheckReport.hard( name, worst <= GRADIENT_TOLERANCE, GRADIENT_TOLERANCE - worst,
                             f"{ len( intervals ) } intervals, largest relative error { worst:.3e}" )


def dissipationCheck( trace: FlowTrace ) -> CheckReport:
    """
    Estimate kappa = -( dCa / dt ) / int |nabla nabla S|^2 omega_phi^n over intervals with step at most
    0.01 and check it equals 2 with a spread ( std / mean ) of at most 5%

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: hard report, report-only when no interval qualifies
    """
    name = "dissipation"
    intervals, steps = _fineIntervals( trace )
    if len( intervals ) == 0:
        return CheckReport.reportOnly( name, True, detail = f"no interval with dt <= { FINE_STEP:g} above the energy floor" )
    ca = trace.column( "Ca" )
    dissipation = trace.column( "dissipation" )
    rate = -( ca[ intervals + 1 ] - ca[ intervals ] ) / steps[ intervals ]
    kappa = rate / ( 0.5 * ( dissipation[ intervals ] + dissipation[ intervals + 1 ] ) )
    average = float( mean( kappa ) )
    spread = float( std( kappa ) / abs( average ) ) if average != 0. else inf
    holds = abs( average - DISSIPATION_CONSTANT ) <= DISSIPATION_SPREAD * DISSIPATION_CONSTANT and spread <= DISSIPATION_SPREAD
    return CheckReport.hard( name, holds, DISSIPATION_SPREAD - spread,
                             f"kappa = { average:.6f}, spread { spread:.2e} over { len( intervals ) } intervals" )


def conservationCheck( trace: FlowTrace ) -> CheckReport:
    """
    Check |D( t ) - D( t0 )| <= 1e-6 ( 1 + |D( t0 )| ) max( 1, t - t0 )

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: hard report
    """
    t = trace.column( "t" )
    drift = trace.column( "Ddrift" )
    allowed = CONSERVATION_TOLERANCE * ( 1. + abs( trace[ 0 ].report.D ) ) * maximum( t - t[ 0 ], 1. )
    slack = float( min( allowed - drift ) )
    return CheckReport.hard( "conservation", slack >= 0., slack, f"largest D drift { float( max( drift ) ):.3e}" )


def chenCheck( trace: FlowTrace ) -> CheckReport:
    """
    Check nu( t0 ) - nu( T ) <= Ca( t0 )^( 1 / 2 ) L with L the length of the flow path from t0 to T

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: hard report
    """
    first, last = trace[ 0 ].report, trace[ -1 ].report
    decrease = first.nu - last.nu
    bound = sqrt( first.Ca ) * ( last.pathLen - first.pathLen )
    slack = float( bound - decrease )
    holds = slack >= -1e-12 * ( 1. + abs( first.nu ) )
    return CheckReport.hard( "Chen inequality", holds, slack, f"nu decrease { decrease:.6e}, bound { bound:.6e}" )


def caMonotoneCheck( trace: FlowTrace ) -> CheckReport:
    """
    Check that the Calabi energy never increases between records, up to round-off

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: hard report
    """
    ca = trace.column( "Ca" )
    V = trace.column( "V" )
    if len( ca ) < 2:
        return CheckReport.hard( "Calabi energy monotone", True, detail = "single record" )
    allowed = ca[ :-1 ] * ( 1. + MONOTONE_SLACK ) + MONOTONE_FLOOR * V[ 1: ]
    slack = float( min( allowed - ca[ 1: ] ) )
    return CheckReport.hard( "Calabi energy monotone", slack >= 0., slack, f"{ len( ca ) } records" )


def rateMonitor( trace: FlowTrace ) -> CheckReport:
    """
    Compare the decay rate -( dCa / dt ) / Ca with 2 mu1 at every eigenvalue sample

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: report-only, holds when the rate is at least 2 mu1 ( 1 - 1% ) everywhere
    """
    name = "rate monitor"
    mu = trace.column( "mu1" )
    ca = trace.column( "Ca" )
    t = trace.column( "t" )
    V = trace.column( "V" )
    ratios = []
    for index in flatnonzero( isfinite( mu ) ):
        if len( t ) < 2 or ca[ index ] < ENERGY_FLOOR * V[ index ] or mu[ index ] <= 0.:
            continue
        other = index - 1 if index > 0 else 1
        rate = -( ca[ index ] - ca[ other ] ) / ( t[ index ] - t[ other ] ) / ca[ index ]
        ratios.append( rate / ( 2. * mu[ index ] ) )
    if not ratios:
        return CheckReport.reportOnly( name, True, detail = "no usable eigenvalue sample" )
    smallest = float( min( ratios ) )
    return CheckReport.reportOnly( name, smallest >= 0.99, smallest - 1.,
                                   f"smallest rate / 2 mu1 = { smallest:.4f} over { len( ratios ) } samples" )

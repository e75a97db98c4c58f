"""
Monitors of a priori estimates whose constants exist but are unknown. Each fits its constant on the run
itself and reports whether the fit stays stable; none of them can fail a run.
"""
from numpy import ndarray, log, abs, isfinite, ptp, max
from scipy.stats import linregress
from calabiflow.flow.components.checks import CheckReport, STABILITY_FACTOR
from calabiflow.flow.components.trace import FlowTrace


def _halvesStable( t: ndarray, values: ndarray ) -> tuple[ bool, float, float ]:
    # largest value over the second half against the first half
    middle = 0.5 * ( t[ 0 ] + t[ -1 ] )
    early, late = t <= middle, t > middle
    first = float( max( values[ early ] ) )
    second = float( max( values[ late ] ) ) if late.any() else first
    return second <= STABILITY_FACTOR * abs( first ) + 1e-14, first, second


def hBoundMonitor( trace: FlowTrace ) -> CheckReport:
    """
    Fit C in sup |h| <= E / V + C ( osc phi + ||S||_p ) on the first record and check that the ratio stays
    within 1.5 times that value along the run

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: report-only
    """
    name = "log volume ratio bound"
    scale = trace.column( "osc" ) + trace.column( "lpS" )
    excess = ( trace.column( "hSup" ) - trace.column( "E" ) / trace.column( "V" ) ).clip( 0., None )
    keep = scale > 0.
    if not keep.any():
        return CheckReport.reportOnly( name, True, detail = "potential constant along the run" )
    ratio = excess[ keep ] / scale[ keep ]
    fitted = float( ratio[ 0 ] )
    largest = float( max( ratio ) )
    holds = largest <= STABILITY_FACTOR * fitted + 1e-14
    return CheckReport.reportOnly( name, holds, STABILITY_FACTOR * fitted - largest,
                                   f"fitted C = { fitted:.4g}, largest ratio { largest:.4g}" )


def chernLuMonitor( trace: FlowTrace ) -> CheckReport:
    """
    Fit sup tr_phi omega <= exp( a osc phi + b ): the slope a by least squares of log tr_phi omega on
    osc phi, the offset b as the smallest value that bounds every record

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: report-only, holds when both trace ratios stay finite
    """
    name = "Chern-Lu trace bound"
    ratio = trace.column( "trRatio" )
    oscillation = trace.column( "osc" )
    if not ( isfinite( ratio ).all() and ( ratio > 0. ).all() ):
        return CheckReport.reportOnly( name, False, detail = "trace ratio lost finiteness" )
    logRatio = log( ratio )
    slope = 0.
    if len( ratio ) > 1 and ptp( oscillation ) > 0.:
        slope = float( linregress( oscillation, logRatio ).slope )
    offset = float( max( logRatio - slope * oscillation ) )
    return CheckReport.reportOnly( name, True, detail = f"a = { slope:.4g}, b = { offset:.4g}, sup trace { float( max( ratio ) ):.6g}" )


def entropyMonitor( trace: FlowTrace ) -> CheckReport:
    """
    Fit E / V >= delta I - C with delta the positive part of the least squares slope of E / V on I and
    C the smallest offset over the first half, then check the offset needed on the second half stays
    within 1.5 times that value

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: report-only
    """
    name = "entropy against I"
    entropy = trace.column( "E" ) / trace.column( "V" )
    I = trace.column( "I" )
    t = trace.column( "t" )
    delta = 0.
    if len( I ) > 1 and ptp( I ) > 0.:
        delta = max( [ float( linregress( I, entropy ).slope ), 0. ] )
    offset = delta * I - entropy
    holds, first, second = _halvesStable( t, offset )
    return CheckReport.reportOnly( name, holds, detail = f"delta = { delta:.4g}, C = { first:.4g} then { second:.4g}" )


def oscillationMonitor( trace: FlowTrace ) -> CheckReport:
    """
    Check that osc phi - I, the constant of the zero order estimate, stays stable along the run

    Parameters:
        trace ( FlowTrace ): run

    Returns:
        CheckReport: report-only
    """
    difference = trace.column( "osc" ) - trace.column( "I" )
    holds, first, second = _halvesStable( trace.column( "t" ), difference )
    return CheckReport.reportOnly( "oscillation against I", holds, detail = f"C = { first:.4g} then { second:.4g}" )

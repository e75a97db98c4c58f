from dataclasses import dataclass
from numpy import ndarray, asarray, log, isfinite
from scipy.stats import linregress
from calabiflow.flow.components.trace import FlowTrace
from calabiflow.util.errors import InsufficientData

MINIMUM_RECORDS: int = 10
ENERGY_FLOOR: float = 1e-30


@dataclass( frozen = True )
class DecayFit:
    """
    Least squares line through ( t, log Ca ) on a time window
    """
    window: tuple[ float, float ]
    slope: float
    intercept: float
    rSquared: float
    records: int

    @property
    def rate( self ) -> float:
        """
        Get the implied eigenvalue rate mu_fit = -slope / 2; log Ca decays at twice the rate of S

        Returns:
            float: rate
        """
        return -0.5 * self.slope


def fitDecay( t: ndarray, energy: ndarray, window: tuple[ float, float ] | None = None ) -> DecayFit:
    """
    Fit log Ca against t over the records inside a window with Ca above 1e-30

    Parameters:
        t ( ndarray ): record times
        energy ( ndarray ): Calabi energies
        window ( tuple[ float, float ] | None = None ): closed window [ t1, t2 ], every record when omitted

    Returns:
        DecayFit: fit
    """
    t = asarray( t, dtype = float )
    energy = asarray( energy, dtype = float )
    if window is None:
        window = ( float( t.min() ), float( t.max() ) ) if len( t ) else ( 0., 0. )
    t1, t2 = float( window[ 0 ] ), float( window[ 1 ] )
    if not t1 < t2:
        raise InsufficientData( f"window [ { t1:g}, { t2:g} ] is empty" )
    usable = ( t >= t1 ) & ( t <= t2 ) & isfinite( energy ) & ( energy > ENERGY_FLOOR )
    count = int( usable.sum() )
    if count < MINIMUM_RECORDS:
        raise InsufficientData( f"{ count } records with Ca > { ENERGY_FLOOR:g} in [ { t1:g}, { t2:g} ], "
                                f"at least { MINIMUM_RECORDS } needed" )
    line = linregress( t[ usable ], log( energy[ usable ] ) )
    return DecayFit( window = ( t1, t2 ),
                     slope = float( line.slope ),
                     intercept = float( line.intercept ),
                     rSquared = float( min( max( line.rvalue ** 2, 0. ), 1. ) ),
                     records = count )


def fitTrace( trace: FlowTrace, window: tuple[ float, float ] | None = None ) -> DecayFit:
    """
    Fit the Calabi energy decay of a run

    Parameters:
        trace ( FlowTrace ): run
        window ( tuple[ float, float ] | None = None ): time window, the second half of the run when omitted

    Returns:
        DecayFit: fit
    """
    if window is None:
        start, end = trace.span
        window = ( 0.5 * ( start + end ), end )
    return fitDecay( trace.column( "t" ), trace.column( "Ca" ), window )

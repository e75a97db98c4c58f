import logging

FORMAT: str = '%(name)s:%(levelname)s:%(message)s'


def configureLogging( verbosity: int = 1 ) -> None:
    """
    Install the console handler of the package

    Parameters:
        verbosity ( int ): 0 warnings only, 1 progress, 2 and above debug output
    """
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig( format = FORMAT )
    logging.getLogger( 'calabiflow' ).setLevel( level = level )

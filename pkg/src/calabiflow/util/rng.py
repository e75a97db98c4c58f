from numpy.random import Generator, Philox

# stream identifiers, one per consumer of randomness
BACKGROUND: int = 1
PERTURBATION: int = 2
EIGEN: int = 3
VERIFY: int = 4
CONSTANTS: int = 5

_MASK64: int = ( 1 << 64 ) - 1


def generator( seed: int, *stream: int ) -> Generator:
    """
    Create a counter based random generator for one stream of a seed

    Parameters:
        seed ( int ): 64 bit run seed
        stream ( int ): stream path, e.g. ( EIGEN, stepIndex )

    Returns:
        Generator: independent and reproducible numpy generator
    """
    word: int = 0
    for index in stream:
        word = ( word * 1000003 + int( index ) + 1 ) & _MASK64
    return Generator( Philox( key = ( word << 64 ) | ( int( seed ) & _MASK64 ) ) )

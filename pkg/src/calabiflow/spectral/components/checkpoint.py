import struct
from pathlib import Path
from numpy import frombuffer, dtype
from calabiflow.spectral.spectral import SpectralGrid
from calabiflow.spectral.components.field import RealField

MAGIC: bytes = b"CALB1"
HEADER: struct.Struct = struct.Struct( "<II" )
SAMPLE: dtype = dtype( "<f8" )


def writeCheckpoint( path: str | Path, field: RealField ) -> Path:
    """
    Write a field in the CALB1 format: magic, n and N as little endian uint32, then the samples
    as little endian doubles in row-major ( x1, y1, x2, y2 ) order

    Parameters:
        path ( str | Path ): target file
        field ( RealField ): field to store

    Returns:
        Path: path of the written file
    """
    path = Path( path )
    with open( path, "wb" ) as handle:
        handle.write( MAGIC )
        handle.write( HEADER.pack( field.grid.n, field.grid.N ) )
        handle.write( field.values.astype( SAMPLE ).tobytes( order = "C" ) )
    return path


def readCheckpoint( path: str | Path ) -> RealField:
    """
    Read a field stored in the CALB1 format

    Parameters:
        path ( str | Path ): source file

    Returns:
        RealField: stored field on a grid rebuilt from the header
    """
    content = Path( path ).read_bytes()
    if content[ : len( MAGIC ) ] != MAGIC:
        raise ValueError( f"{ path } is not a CALB1 checkpoint" )
    n, N = HEADER.unpack_from( content, len( MAGIC ) )
    grid = SpectralGrid( n, N )
    payload = content[ len( MAGIC ) + HEADER.size : ]
    if len( payload ) != grid.size * SAMPLE.itemsize:
        raise ValueError( f"{ path } holds { len( payload ) } bytes of samples, expected { grid.size * SAMPLE.itemsize }" )
    return RealField( grid, frombuffer( payload, dtype = SAMPLE ).reshape( grid.shape ).copy() )

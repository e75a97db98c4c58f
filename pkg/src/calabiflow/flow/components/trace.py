import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator
from numpy import ndarray, array, nan, isnan
from calabiflow.functionals.components.report import EnergyReport, COLUMNS as REPORT_COLUMNS

NORM_COLUMNS: tuple[ str, ... ] = ( "Rm", "Ric", "HessS", "gradS1", "gradS2", "gradS3", "gradS4", "dissipation",
                                    "ricciLower", "trRatio", "hSup", "mu1", "Ddrift", "margin" )
COLUMNS: tuple[ str, ... ] = ( "t", "dt" ) + REPORT_COLUMNS[ 1: ] + NORM_COLUMNS


def formatValue( value: float ) -> str:
    """
    Format a float with 17 significant digits, NaN as the empty string

    Parameters:
        value ( float ): value

    Returns:
        str: text
    """
    if isnan( value ):
        return ""
    return f"{ value:.17g}"


@dataclass( frozen = True )
class TraceRecord:
    """
    State of a run at one recorded time
    """
    dt: float
    report: EnergyReport
    Rm: float
    Ric: float
    HessS: float
    gradS: tuple[ float, float, float, float ]
    dissipation: float
    ricciLower: float
    trRatio: float
    hSup: float
    mu1: float
    Ddrift: float
    margin: float

    @property
    def t( self ) -> float:
        return self.report.t

    def value( self, column: str ) -> float:
        """
        Get the value of one trace column

        Parameters:
            column ( str ): name in COLUMNS

        Returns:
            float: value, NaN for an unsampled mu1
        """
        if column == "dt":
            return self.dt
        if column.startswith( "gradS" ):
            return self.gradS[ int( column[ -1 ] ) - 1 ]
        if column in REPORT_COLUMNS:
            return getattr( self.report, column )
        return getattr( self, column )

    def row( self ) -> list[ str ]:
        return [ formatValue( self.value( column ) ) for column in COLUMNS ]

    @classmethod
    def fromRow( cls, values: dict[ str, str ] ) -> "TraceRecord":
        """
        Create a record from a parsed CSV row

        Parameters:
            values ( dict[ str, str ] ): column name to text

        Returns:
            TraceRecord: record
        """
        number = { column: float( text ) if text != "" else nan for column, text in values.items() }
        return cls( dt = number[ "dt" ],
                    report = EnergyReport.fromRow( values ),
                    Rm = number[ "Rm" ],
                    Ric = number[ "Ric" ],
                    HessS = number[ "HessS" ],
                    gradS = tuple( number[ f"gradS{ i }" ] for i in range( 1, 5 ) ),
                    dissipation = number[ "dissipation" ],
                    ricciLower = number[ "ricciLower" ],
                    trRatio = number[ "trRatio" ],
                    hSup = number[ "hSup" ],
                    mu1 = number[ "mu1" ],
                    Ddrift = number[ "Ddrift" ],
                    margin = number[ "margin" ] )


class FlowTrace:
    def __init__( self, records: list[ TraceRecord ] | None = None ) -> None:
        """
        Create an append-only time series of trace records. A run stores the record of the initial state at
        tStart followed by one record per recorded accepted step, so a run with fixed step dt0 and
        recordCadence 1 holds ceil( ( tEnd - tStart ) / dt0 ) + 1 records

        Parameters:
            records ( list[ TraceRecord ] | None = None ): initial records in time order
        """
        self._records: list[ TraceRecord ] = []
        self._stepCount: int = 0
        self._rejectedCount: int = 0
        self._converged: bool = False
        for record in records or []:
            self.append( record )

    def append( self, record: TraceRecord ) -> None:
        """
        Append a record; times must increase strictly

        Parameters:
            record ( TraceRecord ): record
        """
        if self._records and not record.t > self._records[ -1 ].t:
            raise ValueError( f"trace time { record.t } does not follow { self._records[ -1 ].t }" )
        self._records.append( record )

    @property
    def records( self ) -> tuple[ TraceRecord, ... ]:
        """
        Get the records in time order

        Returns:
            tuple[ TraceRecord, ... ]: records
        """
        return tuple( self._records )

    @property
    def stepCount( self ) -> int:
        """
        Get the number of accepted steps of the run

        Returns:
            int: accepted steps
        """
        return self._stepCount

    @stepCount.setter
    def stepCount( self, count: int ) -> None:
        self._stepCount = count

    @property
    def rejectedCount( self ) -> int:
        return self._rejectedCount

    @rejectedCount.setter
    def rejectedCount( self, count: int ) -> None:
        self._rejectedCount = count

    @property
    def converged( self ) -> bool:
        """
        Get whether the run reached the terminal Calabi energy

        Returns:
            bool: convergence flag
        """
        return self._converged

    @converged.setter
    def converged( self, flag: bool ) -> None:
        self._converged = flag

    @property
    def pathLength( self ) -> float:
        return self._records[ -1 ].report.pathLen if self._records else 0.

    @property
    def span( self ) -> tuple[ float, float ]:
        """
        Get the first and last recorded time

        Returns:
            tuple[ float, float ]: time span
        """
        if not self._records:
            return ( 0., 0. )
        return ( self._records[ 0 ].t, self._records[ -1 ].t )

    def column( self, name: str ) -> ndarray:
        """
        Get one column of the trace

        Parameters:
            name ( str ): name in COLUMNS

        Returns:
            ndarray: values in time order
        """
        return array( [ record.value( name ) for record in self._records ], dtype = float )

    def writeCsv( self, path: str | Path ) -> Path:
        """
        Write the trace as CSV, one row per record

        Parameters:
            path ( str | Path ): target file

        Returns:
            Path: path of the written file
        """
        path = Path( path )
        with open( path, "w", newline = "", encoding = "utf-8" ) as handle:
            writer = csv.writer( handle, lineterminator = "\n" )
            writer.writerow( COLUMNS )
            for record in self._records:
                writer.writerow( record.row() )
        return path

    @classmethod
    def readCsv( cls, path: str | Path ) -> "FlowTrace":
        """
        Read a trace written by writeCsv

        Parameters:
            path ( str | Path ): source file

        Returns:
            FlowTrace: trace
        """
        with open( path, newline = "", encoding = "utf-8" ) as handle:
            reader = csv.DictReader( handle )
            missing = set( COLUMNS ) - set( reader.fieldnames or () )
            if missing:
                raise ValueError( f"{ path } lacks trace columns { sorted( missing ) }" )
            return cls( [ TraceRecord.fromRow( row ) for row in reader ] )

    def __len__( self ) -> int:
        return len( self._records )

    def __iter__( self ) -> Iterator[ TraceRecord ]:
        return iter( self._records )

    def __getitem__( self, index: int ) -> TraceRecord:
        return self._records[ index ]

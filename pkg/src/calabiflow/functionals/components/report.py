from dataclasses import dataclass, astuple, fields

COLUMNS: tuple[ str, ... ] = ( "t", "I", "J", "D", "E", "j", "nu", "Ca", "osc", "lpS", "distLower", "pathLen", "V" )


@dataclass( frozen = True )
class EnergyReport:
    """
    Scalar functionals of one potential at one flow time. E, Ca, nu and V are raw integrals against
    omega_phi^n; I, J, D and j carry the 1 / V of their definitions
    """
    t: float
    I: float
    J: float
    D: float
    E: float
    j: float
    nu: float
    Ca: float
    osc: float
    lpS: float
    distLower: float
    pathLen: float
    V: float

    def row( self ) -> tuple[ float, ... ]:
        """
        Get the values in CSV column order

        Returns:
            tuple[ float, ... ]: one value per entry of COLUMNS
        """
        return astuple( self )

    @classmethod
    def fromRow( cls, values: dict[ str, str ] ) -> "EnergyReport":
        """
        Create a report from a parsed CSV row

        Parameters:
            values ( dict[ str, str ] ): column name to text

        Returns:
            EnergyReport: report
        """
        return cls( **{ f.name: float( values[ f.name ] ) for f in fields( cls ) } )

import configparser
import re
from dataclasses import dataclass, field, replace, asdict
from pathlib import Path
from typing import Any, Callable
from calabiflow.spectral.spectral import SpectralGrid, Mode
from calabiflow.util.errors import ConfigError

DEFAULT_SOURCE: str = "<defaults>"

_SECTION = re.compile( r"^\s*\[\s*([^\]]+?)\s*\]" )
_KEY = re.compile( r"^\s*([A-Za-z0-9_]+)\s*=" )


def parseModes( text: str ) -> tuple[ Mode, ... ]:
    """
    Parse a cosine mode list 'k1,k2[,k3,k4]:coefficient;...'

    Parameters:
        text ( str ): mode list, may be empty

    Returns:
        tuple[ Mode, ... ]: wave vector and coefficient pairs
    """
    modes = []
    for entry in text.split( ";" ):
        entry = entry.strip()
        if not entry:
            continue
        wave, separator, coefficient = entry.partition( ":" )
        if not separator:
            raise ValueError( f"mode '{ entry }' lacks ':coefficient'" )
        modes.append( ( tuple( int( k ) for k in wave.split( "," ) ), float( coefficient ) ) )
    return tuple( modes )


def _floats( text: str ) -> tuple[ float, ... ]:
    return tuple( float( item ) for item in re.split( r"[,\s]+", text.strip() ) if item )


def _integers( text: str ) -> tuple[ int, ... ]:
    return tuple( int( item ) for item in re.split( r"[,\s]+", text.strip() ) if item )


def _optionalFloat( text: str ) -> float | None:
    return float( text ) if text.strip() else None


# section, key, attribute, parser
_SCHEMA: tuple[ tuple[ str, str, str, Callable[ [ str ], Any ] ], ... ] = (
    ( "grid", "n", "n", int ),
    ( "grid", "N", "N", int ),
    ( "run", "seed", "seed", int ),
    ( "background", "amplitude", "backgroundAmplitude", float ),
    ( "background", "modes", "backgroundModes", parseModes ),
    ( "background", "maxMode", "backgroundMaxMode", int ),
    ( "perturbation", "amplitude", "amplitude", float ),
    ( "perturbation", "modes", "modes", parseModes ),
    ( "perturbation", "maxMode", "maxMode", int ),
    ( "flow", "dt0", "dt0", float ),
    ( "flow", "dtMax", "dtMax", float ),
    ( "flow", "tEnd", "tEnd", float ),
    ( "flow", "stabilization", "stabilization", float ),
    ( "flow", "safety", "safety", float ),
    ( "flow", "tolerance", "tolerance", float ),
    ( "flow", "terminalCa", "terminalCa", float ),
    ( "flow", "eigenCadence", "eigenCadence", int ),
    ( "flow", "recordCadence", "recordCadence", int ),
    ( "flow", "minimumMargin", "minimumMargin", float ),
    ( "flow", "lpExponent", "lpExponent", _optionalFloat ),
    ( "flow", "tStart", "tStart", float ),
    ( "flow", "resume", "resume", str ),
    ( "spectrum", "sigma", "sigma", float ),
    ( "spectrum", "blockSize", "blockSize", int ),
    ( "spectrum", "maxIterations", "maxIterations", int ),
    ( "spectrum", "tolerance", "eigenTolerance", float ),
    ( "verify", "potentials", "potentials", int ),
    ( "verify", "trials", "trials", int ),
    ( "verify", "resolution1", "resolution1", int ),
    ( "verify", "resolution2", "resolution2", int ),
    ( "verify", "backgroundAmplitude", "verifyBackgroundAmplitude", float ),
    ( "verify", "amplitude", "verifyAmplitude", float ),
    ( "verify", "moserExponent", "moserExponent", _optionalFloat ),
    ( "verify", "moserTrials", "moserTrials", int ),
    ( "verify", "sobolevTrials", "sobolevTrials", int ),
    ( "sweep", "amplitudes", "sweepAmplitudes", _floats ),
    ( "sweep", "resolutions", "sweepResolutions", _integers ),
    ( "sweep", "jobs", "jobs", int ),
    ( "output", "directory", "directory", str ),
    ( "output", "checkpointCadence", "checkpointCadence", int ),
)


@dataclass( frozen = True )
class FlowConfig:
    """
    Settings of a run, read from an INI file; every key has a default
    """
    n: int = 1
    N: int = 128
    seed: int = 0
    backgroundAmplitude: float = 0.
    backgroundModes: tuple[ Mode, ... ] = ()
    backgroundMaxMode: int = 2
    amplitude: float = 0.05
    modes: tuple[ Mode, ... ] = ()
    maxMode: int = 8
    dt0: float = 0.05
    dtMax: float = 1.
    tEnd: float = 200.
    stabilization: float = 1.
    safety: float = 0.9
    tolerance: float = 1e-4
    terminalCa: float = 1e-16
    eigenCadence: int = 20
    recordCadence: int = 1
    minimumMargin: float = 0.5
    lpExponent: float | None = None
    tStart: float = 0.
    resume: str = ""
    sigma: float = 1e-3
    blockSize: int = 4
    maxIterations: int = 400
    eigenTolerance: float = 1e-8
    potentials: int = 1000
    trials: int = 20
    resolution1: int = 64
    resolution2: int = 16
    verifyBackgroundAmplitude: float = 0.1
    verifyAmplitude: float = 0.05
    moserExponent: float | None = None
    moserTrials: int = 20
    sobolevTrials: int = 8
    sweepAmplitudes: tuple[ float, ... ] = ()
    sweepResolutions: tuple[ int, ... ] = ()
    jobs: int = -1
    directory: str = "out"
    checkpointCadence: int = 0
    source: str = field( default = DEFAULT_SOURCE, compare = False )
    lines: dict[ str, int ] = field( default_factory = dict, compare = False, repr = False )

    def __post_init__( self ) -> None:
        self.validate()

    @classmethod
    def fromFile( cls, path: str | Path ) -> "FlowConfig":
        """
        Create a configuration from an INI file

        Parameters:
            path ( str | Path ): configuration file

        Returns:
            FlowConfig: validated configuration
        """
        source = str( path )
        try:
            text = Path( path ).read_text( encoding = "utf-8" )
        except OSError as error:
            raise ConfigError( source, 0, f"cannot read configuration: { error.strerror }" ) from error
        return cls.fromText( text, source )

    @classmethod
    def fromText( cls, text: str, source: str = DEFAULT_SOURCE ) -> "FlowConfig":
        """
        Create a configuration from INI text

        Parameters:
            text ( str ): file content
            source ( str = "<defaults>" ): name used in error messages

        Returns:
            FlowConfig: validated configuration
        """
        parser = configparser.ConfigParser( delimiters = ( "=", ), inline_comment_prefixes = ( "#", ), interpolation = None )
        parser.optionxform = str
        try:
            parser.read_string( text, source = source )
        except configparser.Error as error:
            raise ConfigError( source, getattr( error, "lineno", 0 ) or 0, error.message.splitlines()[ 0 ] ) from error

        lines = _locate( text )
        schema = { ( section, key ): ( attribute, convert ) for section, key, attribute, convert in _SCHEMA }
        values: dict[ str, Any ] = {}
        for section in parser.sections():
            for key, raw in parser.items( section ):
                line = lines.get( f"{ section }.{ key }", 0 )
                if ( section, key ) not in schema:
                    raise ConfigError( source, line, f"unknown key '{ key }' in section [{ section }]" )
                attribute, convert = schema[ ( section, key ) ]
                try:
                    values[ attribute ] = convert( raw )
                except ValueError as error:
                    raise ConfigError( source, line, f"invalid value '{ raw }' for { section }.{ key }: { error }" ) from error
        return cls( **values, source = source, lines = lines )

    def lineOf( self, attribute: str ) -> int:
        """
        Get the line of the key that set an attribute

        Parameters:
            attribute ( str ): attribute name

        Returns:
            int: line number, 0 when the attribute has its default
        """
        for section, key, name, _ in _SCHEMA:
            if name == attribute:
                return self.lines.get( f"{ section }.{ key }", 0 )
        return 0

    def error( self, attribute: str, message: str ) -> ConfigError:
        """
        Create an error anchored at the key of an attribute

        Parameters:
            attribute ( str ): attribute name
            message ( str ): description

        Returns:
            ConfigError: error to raise
        """
        return ConfigError( self.source, self.lineOf( attribute ), message )

    def validate( self ) -> None:
        try:
            SpectralGrid( self.n, self.N )
        except ValueError as error:
            raise self.error( "N" if self.n in ( 1, 2 ) else "n", str( error ) ) from error
        positive = ( "dt0", "dtMax", "tolerance", "terminalCa", "minimumMargin", "sigma", "eigenTolerance" )
        for name in positive:
            if not getattr( self, name ) > 0.:
                raise self.error( name, f"{ name } must be positive" )
        if not self.tEnd > self.tStart:
            raise self.error( "tEnd", f"tEnd must exceed tStart = { self.tStart }" )
        if self.stabilization < 1.:
            raise self.error( "stabilization", "stabilization constant must be at least 1" )
        if not 0. < self.safety <= 1.:
            raise self.error( "safety", "safety factor must lie in ( 0, 1 ]" )
        counts = ( "eigenCadence", "recordCadence", "blockSize", "maxIterations", "potentials", "trials", "moserTrials", "sobolevTrials" )
        for name in counts:
            if getattr( self, name ) < 1:
                raise self.error( name, f"{ name } must be at least 1" )
        if self.checkpointCadence < 0:
            raise self.error( "checkpointCadence", "checkpointCadence must be nonnegative" )
        for name in ( "amplitude", "backgroundAmplitude", "verifyAmplitude", "verifyBackgroundAmplitude" ):
            if getattr( self, name ) < 0.:
                raise self.error( name, f"{ name } must be nonnegative" )
        for name in ( "modes", "backgroundModes" ):
            for wave, _ in getattr( self, name ):
                if len( wave ) != 2 * self.n:
                    raise self.error( name, f"wave vector { wave } needs { 2 * self.n } entries" )
        if self.lpExponent is not None and not self.lpExponent > self.n:
            raise self.error( "lpExponent", f"lpExponent must exceed n = { self.n }" )
        if self.moserExponent is not None and not self.moserExponent > 2 * self.n:
            raise self.error( "moserExponent", f"moserExponent must exceed 2n = { 2 * self.n }" )
        if self.minimumMargin > 1.:
            raise self.error( "minimumMargin", "minimumMargin must not exceed 1" )

    @property
    def lp( self ) -> float:
        """
        Get the exponent of ||S||_p

        Returns:
            float: configured exponent or 2n + 1
        """
        return self.lpExponent if self.lpExponent is not None else 2. * self.n + 1.

    @property
    def moser( self ) -> float:
        return self.moserExponent if self.moserExponent is not None else 4. * self.n

    @property
    def eigenSettings( self ) -> dict[ str, float ]:
        """
        Get the keyword settings of the eigen solves

        Returns:
            dict[ str, float ]: sigma, blockSize, maxIterations and tolerance
        """
        return { "sigma": self.sigma, "blockSize": self.blockSize, "maxIterations": self.maxIterations, "tolerance": self.eigenTolerance }

    def withOverrides( self, seed: int | None = None, directory: str | None = None ) -> "FlowConfig":
        """
        Create a copy with command line overrides applied

        Parameters:
            seed ( int | None = None ): replacement seed
            directory ( str | None = None ): replacement output directory

        Returns:
            FlowConfig: configuration
        """
        changes: dict[ str, Any ] = {}
        if seed is not None:
            changes[ "seed" ] = seed
        if directory is not None:
            changes[ "directory" ] = directory
        return replace( self, **changes ) if changes else self

    def withCell( self, amplitude: float, N: int ) -> "FlowConfig":
        """
        Create the configuration of one sweep cell

        Parameters:
            amplitude ( float ): perturbation amplitude
            N ( int ): resolution

        Returns:
            FlowConfig: configuration
        """
        return replace( self, amplitude = amplitude, N = N, sweepAmplitudes = (), sweepResolutions = () )

    def echo( self ) -> dict[ str, Any ]:
        """
        Get the settings as plain data for the manifest

        Returns:
            dict[ str, Any ]: attribute to value
        """
        data = asdict( self )
        data.pop( "lines" )
        return data


def _locate( text: str ) -> dict[ str, int ]:
    lines: dict[ str, int ] = {}
    section = ""
    for number, content in enumerate( text.splitlines(), start = 1 ):
        header = _SECTION.match( content )
        if header:
            section = header.group( 1 )
            continue
        key = _KEY.match( content )
        if key and section:
            lines.setdefault( f"{ section }.{ key.group( 1 ) }", number )
    return lines

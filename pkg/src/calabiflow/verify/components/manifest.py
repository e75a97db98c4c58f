import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any
from calabiflow.flow.components.checks import CheckReport


def _now() -> str:
    return datetime.now( timezone.utc ).isoformat( timespec = "seconds" )


class RunManifest:
    def __init__( self, command: str, config: dict[ str, Any ], version: str, seed: int ) -> None:
        """
        Create the manifest of one command run; the start time is taken now

        Parameters:
            command ( str ): subcommand name
            config ( dict[ str, Any ] ): configuration echo
            version ( str ): package version
            seed ( int ): random seed of the run
        """
        self._command: str = command
        self._config: dict[ str, Any ] = config
        self._version: str = version
        self._seed: int = seed
        self._started: str = _now()
        self._finished: str | None = None
        self._outputs: list[ Path ] = []
        self._checks: list[ CheckReport ] = []

    @property
    def outputs( self ) -> list[ Path ]:
        return list( self._outputs )

    @property
    def checks( self ) -> list[ CheckReport ]:
        """
        Get the check reports in insertion order

        Returns:
            list[ CheckReport ]: reports
        """
        return list( self._checks )

    def addOutput( self, path: str | Path ) -> None:
        path = Path( path )
        if path not in self._outputs:
            self._outputs.append( path )

    def addCheck( self, report: CheckReport ) -> None:
        """
        Add the result of a check; each check name may appear once

        Parameters:
            report ( CheckReport ): result
        """
        if any( check.name == report.name for check in self._checks ):
            raise ValueError( f"check '{ report.name }' is already in the manifest" )
        self._checks.append( report )

    def toDict( self ) -> dict[ str, Any ]:
        """
        Get the manifest as plain data; every output must exist and be nonempty

        Returns:
            dict[ str, Any ]: manifest
        """
        outputs = []
        for path in self._outputs:
            size = path.stat().st_size if path.exists() else 0
            if size == 0:
                raise ValueError( f"output { path } is missing or empty" )
            outputs.append( { "path": str( path ), "bytes": size } )
        return { "command": self._command,
                 "version": self._version,
                 "seed": self._seed,
                 "start": self._started,
                 "end": self._finished if self._finished is not None else _now(),
                 "config": self._config,
                 "outputs": outputs,
                 "checks": [ { "name": check.name, "result": check.status.value, "detail": check.detail }
                             for check in self._checks ] }

    def write( self, path: str | Path ) -> Path:
        """
        Stamp the end time and write the manifest as JSON

        Parameters:
            path ( str | Path ): target file

        Returns:
            Path: path of the written file
        """
        self._finished = _now()
        path = Path( path )
        path.write_text( json.dumps( self.toDict(), indent = 2, default = str ) + "\n", encoding = "utf-8" )
        return path

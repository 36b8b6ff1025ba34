from . import (geometry, flatness, quasisymmetry, families, whitney, extension,
               generators, records, suites)
